//! End-to-end homogenisation experiments: `v^ε` on the cover against the
//! Hopf-Lax limit on homology, with the supporting convergence checks.

mod experiment;
mod limit;
mod subcover;

pub use experiment::{
    affine_datum_check, fit_rate, function_convergence_check, match_point, run_experiment,
    AffineCheckReport, AffineRow, ConvergenceRow, Diagnostics, EvalPoint, ExperimentFlags,
    ExperimentReport, ExperimentRow, FunctionConvergenceReport, RateFit, RungError, Scenario,
    Tolerances,
};
pub use limit::{LimitModel, LimitOptions};
pub use subcover::{run_subcover_experiment, HamiltonianRow, LiftRow, SubcoverReport};
