//! Ising-type Hamiltonians with up to 3-body terms, the Chimera topology,
//! and the planted / bimodal / 3-XORSAT instance generators.

mod generate;
mod graph;
mod model;

pub use generate::{
    generate_bimodal, generate_planted, generate_xorsat3, PlantedParams, DEFAULT_COUPLING_BOUND,
    DEFAULT_LOOPS_PER_SPIN, DEFAULT_LOOP_LENGTH_CAP,
};
pub use graph::{build_chimera, Graph};
pub use model::{
    energy, gauge_transform, random_gauge, ClassTag, Instance, SpinConfig, Term, MAX_COUPLING,
};
