//! Mather's α and β functions.

mod eval;
mod graph;
mod legendre;
mod matp;
mod subcover;
mod torus;

pub use eval::{half_square, Evaluator, FnEvaluator};
pub use graph::{alpha_graph, beta_graph, circulation};
pub use legendre::{fenchel_young_gap, GridSpec, GridTable, LegendreDual};
pub use torus::{
    alpha_homogeneous, alpha_torus_minimax, beta_from_alpha_1d, torus_alpha, MechanicalAlpha1d,
    MinimaxOptions, MinimaxOutcome, TorusAlphaMethod,
};
pub use matp::{matp_check, MatpOptions, MatpReport, MatpRow, MatpSample};
pub use subcover::{beta_hat, beta_hat_argmin, effective_hamiltonian_subcover, BetaHat, SubcoverAlpha};
