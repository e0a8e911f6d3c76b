//! Minimal actions on covers, the rescaled Lax-Oleinik solution `v^ε`, the
//! Hopf-Lax limit `u`, and a-priori bounds on minimisers.

mod alloc;
mod datum;
mod graph;
mod hopf;
mod lax;
mod path;

pub use alloc::{allocate, merge, Allocation, Segment};
pub use datum::{InitialDatum, LimitDatum, LinearGrowth, Perturbation};
pub use hopf::{hopf_lax, HopfLaxOutcome};
pub use lax::{
    lax_oleinik, lax_oleinik_scaled, minimal_action, search_radius, ActionOptions, ActionQuery,
    LaxOleinikOutcome, Scaling,
};
pub use path::{PathOptions, PathSolution};
