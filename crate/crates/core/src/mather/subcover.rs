//! `β̂` and the effective Hamiltonian of an intermediate cover.

use std::sync::Arc;

use super::eval::Evaluator;
use crate::error::{Error, Result};
use crate::optim::min_affine_slice;
use crate::topology::SubcoverMap;

/// `β̂(z) = min { β(h) : f h = z }`, minimised over the slice
/// `h₀ + ker f` by exact line searches (β is convex and superlinear, so the
/// searches terminate).
pub fn beta_hat(sub: &SubcoverMap, beta: &dyn Evaluator, z: &[f64]) -> Result<f64> {
    Ok(beta_hat_argmin(sub, beta, z)?.1)
}

/// Minimiser and value of [`beta_hat`].
pub fn beta_hat_argmin(sub: &SubcoverMap, beta: &dyn Evaluator, z: &[f64]) -> Result<(Vec<f64>, f64)> {
    if z.len() != sub.ell() || beta.dim() != sub.k() {
        return Err(Error::arg(format!(
            "β̂ needs z in R^{} and β on R^{}",
            sub.ell(),
            sub.k()
        )));
    }
    let h0 = sub.right_inverse_f(z);
    Ok(min_affine_slice(&h0, &sub.kernel_dirs(), |h| beta.eval(h), 0.25, 1e-12))
}

/// `H̄(p) = α(f* p)`.
pub fn effective_hamiltonian_subcover(sub: &SubcoverMap, alpha: &dyn Evaluator, p: &[f64]) -> Result<f64> {
    if p.len() != sub.ell() || alpha.dim() != sub.k() {
        return Err(Error::arg(format!(
            "H̄ needs p in R^{} and α on R^{}",
            sub.ell(),
            sub.k()
        )));
    }
    Ok(alpha.eval(&sub.pullback(p)))
}

/// [`beta_hat`] as an evaluator on `R^ℓ`.
#[derive(Clone)]
pub struct BetaHat {
    sub: SubcoverMap,
    beta: Arc<dyn Evaluator>,
}

impl BetaHat {
    pub fn new(sub: SubcoverMap, beta: Arc<dyn Evaluator>) -> Result<Self> {
        if beta.dim() != sub.k() {
            return Err(Error::arg("β dimension does not match the subcover"));
        }
        Ok(BetaHat { sub, beta })
    }
}

impl Evaluator for BetaHat {
    fn dim(&self) -> usize {
        self.sub.ell()
    }

    fn eval(&self, z: &[f64]) -> f64 {
        beta_hat(&self.sub, &*self.beta, z).unwrap_or(f64::NAN)
    }
}

/// `p ↦ α(f* p)` as an evaluator on `R^ℓ`.
#[derive(Clone)]
pub struct SubcoverAlpha {
    sub: SubcoverMap,
    alpha: Arc<dyn Evaluator>,
}

impl SubcoverAlpha {
    pub fn new(sub: SubcoverMap, alpha: Arc<dyn Evaluator>) -> Result<Self> {
        if alpha.dim() != sub.k() {
            return Err(Error::arg("α dimension does not match the subcover"));
        }
        Ok(SubcoverAlpha { sub, alpha })
    }
}

impl Evaluator for SubcoverAlpha {
    fn dim(&self) -> usize {
        self.sub.ell()
    }

    fn eval(&self, p: &[f64]) -> f64 {
        self.alpha.eval(&self.sub.pullback(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mather::{alpha_graph, beta_graph, FnEvaluator, GridSpec, LegendreDual};
    use crate::model::GraphLagrangian;
    use crate::topology::{AbelianCover, MetricGraph};
    use approx::assert_abs_diff_eq;

    fn setup() -> (AbelianCover, GraphLagrangian) {
        (
            AbelianCover::maximal(MetricGraph::figure_eight(1.0, 1.0).unwrap()),
            GraphLagrangian::uniform(2, 0.0),
        )
    }

    fn beta_ev(lag: GraphLagrangian) -> Arc<dyn Evaluator> {
        let g = MetricGraph::figure_eight(1.0, 1.0).unwrap();
        Arc::new(FnEvaluator::new(2, move |h| beta_graph(&g, &lag, h).unwrap()))
    }

    #[test]
    fn identity_subcover_keeps_beta() {
        let (c, lag) = setup();
        let sub = SubcoverMap::identity(&c).unwrap();
        let b = beta_ev(lag);
        for h in [[0.3, -0.2], [1.0, 2.0]] {
            assert_abs_diff_eq!(beta_hat(&sub, &*b, &h).unwrap(), b.eval(&h), epsilon = 1e-14);
        }
    }

    #[test]
    fn row_sum_subcover_uses_symmetric_split() {
        let (c, lag) = setup();
        let sub = SubcoverMap::new(&c, vec![vec![1, 1]]).unwrap();
        let b = beta_ev(lag);
        for z in [-1.5, 0.0, 0.8, 2.0] {
            let bh = beta_hat(&sub, &*b, &[z]).unwrap();
            assert_abs_diff_eq!(bh, b.eval(&[z / 2.0, z / 2.0]), epsilon = 1e-9);
            // Never above any point of the slice.
            for w in [-1.0, 0.3, 2.0] {
                assert!(bh <= b.eval(&[z - w, w]) + 1e-12);
            }
        }
    }

    #[test]
    fn projection_subcover_matches_line_search() {
        let (c, _) = setup();
        let lag = GraphLagrangian::new(vec![0.0, 0.3]).unwrap();
        let sub = SubcoverMap::new(&c, vec![vec![1, 0]]).unwrap();
        let b = beta_ev(lag);
        let z = 0.7;
        let mut best = f64::INFINITY;
        for i in -400..=400 {
            best = best.min(b.eval(&[z, i as f64 / 100.0]));
        }
        let bh = beta_hat(&sub, &*b, &[z]).unwrap();
        assert!(bh <= best + 1e-12 && best - bh < 1e-3);
    }

    #[test]
    fn pulled_back_alpha_is_dual_of_beta_hat() {
        let (c, lag) = setup();
        let g = MetricGraph::figure_eight(1.0, 1.0).unwrap();
        let sub = SubcoverMap::new(&c, vec![vec![1, 1]]).unwrap();
        let lag2 = lag.clone();
        let alpha: Arc<dyn Evaluator> =
            Arc::new(FnEvaluator::new(2, move |p| alpha_graph(&g, &lag2, p).unwrap()));
        let hbar = SubcoverAlpha::new(sub.clone(), alpha.clone()).unwrap();
        let bh = BetaHat::new(sub.clone(), beta_ev(lag)).unwrap();
        let dual = LegendreDual::new(Arc::new(bh), GridSpec::default()).unwrap();
        for p in [-1.0, -0.25, 0.0, 0.5, 1.5] {
            let direct = effective_hamiltonian_subcover(&sub, &*alpha, &[p]).unwrap();
            assert_abs_diff_eq!(direct, hbar.eval(&[p]), epsilon = 1e-15);
            assert_abs_diff_eq!(direct, p * p / 2.0, epsilon = 1e-9);
            assert!((dual.eval(&[p]) - direct).abs() < 1e-3);
        }
    }
}
