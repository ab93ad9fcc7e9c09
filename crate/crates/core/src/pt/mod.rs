//! Replica-exchange (parallel tempering) Monte Carlo.

mod io;
mod ladder;
mod run;
mod sweep;

pub use io::{read_samples_csv, write_samples_csv, SamplesMeta};
pub use ladder::{geometric_ladder, Ladder};
pub use run::{pt_run, pt_run_with, swap_step, PtOptions, PtSchedule, Replica, SampleSeries, SwapRecord};
pub use sweep::{metropolis_sweep, Sweeper};
