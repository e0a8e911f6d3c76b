//! `α` and `β` evaluators for a scenario's system.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mather::{
    alpha_graph, beta_from_alpha_1d, beta_graph, torus_alpha, Evaluator, FnEvaluator, GridSpec,
    LegendreDual, TorusAlphaMethod,
};
use crate::model::TonelliSystem;
use crate::topology::AbelianCover;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimitOptions {
    /// Box for tabulated transforms.
    pub grid: GridSpec,
    /// Grid points for one-dimensional `β` tables built from an exact `α`.
    pub fine_points: usize,
    pub alpha: TorusAlphaMethod,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            grid: GridSpec::default(),
            fine_points: 2049,
            alpha: TorusAlphaMethod::default(),
        }
    }
}

/// `α` on cohomology and `β` on homology of the cover.
#[derive(Clone)]
pub struct LimitModel {
    pub alpha: Arc<dyn Evaluator>,
    pub beta: Arc<dyn Evaluator>,
}

impl std::fmt::Debug for LimitModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LimitModel(dim = {})", self.alpha.dim())
    }
}

impl LimitModel {
    /// Exact formulas on graphs and homogeneous tori; one-dimensional
    /// mechanical tori use quadrature `α` and a fine dual table for `β`;
    /// other tori dualise the selected `α` on `opts.grid`.
    pub fn build(cover: &AbelianCover, system: &TonelliSystem, opts: &LimitOptions) -> Result<Self> {
        match system {
            TonelliSystem::Graph(lag) => {
                let g = cover
                    .graph()
                    .ok_or_else(|| Error::arg("graph system on a torus cover"))?
                    .clone();
                if cover.rank() != g.rank() {
                    return Err(Error::arg("limit model needs the maximal cover"));
                }
                let k = g.rank();
                let (ga, la) = (g.clone(), lag.clone());
                let (gb, lb) = (g, lag.clone());
                Ok(LimitModel {
                    alpha: Arc::new(FnEvaluator::new(k, move |p| {
                        alpha_graph(&ga, &la, p).unwrap_or(f64::NAN)
                    })),
                    beta: Arc::new(FnEvaluator::new(k, move |h| {
                        beta_graph(&gb, &lb, h).unwrap_or(f64::NAN)
                    })),
                })
            }
            TonelliSystem::Torus(h) => {
                let dim = h.dim();
                if !cover.is_torus() || cover.rank() != dim {
                    return Err(Error::arg("torus system does not match the cover"));
                }
                let alpha = torus_alpha(h, opts.alpha)?;
                let beta: Arc<dyn Evaluator> = if h.is_homogeneous() {
                    // β(v) = ½ v·A⁻¹v − c.
                    let h = h.clone();
                    Arc::new(FnEvaluator::new(dim, move |v| {
                        h.lagrangian(&vec![0.0; v.len()], v).unwrap_or(f64::NAN)
                    }))
                } else if dim == 1 && h.has_constant_kinetic() {
                    Arc::new(beta_from_alpha_1d(alpha.clone(), opts.grid.radius, opts.fine_points)?)
                } else {
                    Arc::new(LegendreDual::new(alpha.clone(), opts.grid)?)
                };
                Ok(LimitModel { alpha, beta })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GraphLagrangian, TorusHamiltonian, TrigPoly};
    use crate::topology::MetricGraph;
    use approx::assert_abs_diff_eq;

    #[test]
    fn homogeneous_torus_pair() {
        let h = TorusHamiltonian::mechanical(2, TrigPoly::constant(2, 0.5)).unwrap();
        let m = LimitModel::build(
            &AbelianCover::torus(2).unwrap(),
            &TonelliSystem::Torus(h),
            &LimitOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(m.alpha.eval(&[1.0, 2.0]), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.beta.eval(&[1.0, 2.0]), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn graph_pair_on_single_loop() {
        let c = AbelianCover::maximal(MetricGraph::single_loop(2.0).unwrap());
        let m = LimitModel::build(
            &c,
            &TonelliSystem::Graph(GraphLagrangian::uniform(1, 0.25)),
            &LimitOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(m.alpha.eval(&[2.0]), 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(m.beta.eval(&[0.5]), 0.75, epsilon = 1e-12);
    }
}
