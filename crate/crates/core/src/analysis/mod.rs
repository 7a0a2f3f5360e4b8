//! Path post-processing and quadrature on the simplex.

mod collision;
pub mod csv;
mod ergodic;
mod functions;
mod gaps;
mod local_time;
mod occupation;
mod quadrature;
mod ranked;
mod residual;

pub use collision::{collision_stats, CollisionReport, CollisionRung};
pub use ergodic::{ergodic_average, ErgodicAverage, BATCHES};
pub use functions::TestFunction;
pub use gaps::Histogram;
pub use local_time::{local_time_gap, occupation_local_time, tanaka_local_time, LocalTimeEstimate, LocalTimeMethod};
pub use occupation::{occupation_times, OccupationReport};
pub use quadrature::{
    chart_volume, integrate_simplex, integrate_simplex_seeded, mu_cell, normalizing_constant, simplex_sample,
    uniform_simplex_point, QuadratureResult,
};
pub use ranked::{ranked_path, RankedPath};
pub use residual::{rank_dynamics_residual, ResidualReport};

use crate::error::Result;
use crate::sim::PathSample;

/// Time average of `f` along the recorded states of `path`.
pub fn ergodic_average_of(path: &PathSample, f: TestFunction) -> Result<ErgodicAverage> {
    f.check_dim(path.dim())?;
    let v: Vec<f64> = path.iter_states().map(|x| f.eval(x)).collect();
    ergodic_average(&v)
}
