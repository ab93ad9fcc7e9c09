//! Exhaustive-enumeration ground truth.

mod dos;
pub(crate) mod thermo;

pub use dos::{enumerate_dos, enumerate_dos_capped, naive_dos, DensityOfStates, Level, DEFAULT_MAX_SPINS};
pub use thermo::{
    beta_star_exact, entropy_and_psi, thermo_from_dos, CentralMoments, ExactThermo, PsiPoint,
    PsiProfile,
};
