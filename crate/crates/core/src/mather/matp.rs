//! Long-horizon check: `φ̃(x, y, T)/T` approaches `β((G(y) − G(x))/T)`
//! uniformly on pairs with bounded homology rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::Evaluator;
use crate::action::{minimal_action, ActionOptions, ActionQuery};
use crate::error::{Error, Result};
use crate::model::TonelliSystem;
use crate::topology::{AbelianCover, CoverPoint, Norm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatpOptions {
    /// Bound `A` on `‖(G(y) − G(x))/T‖`.
    pub rate_bound: f64,
    pub horizons: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub norm: Norm,
    pub action: ActionOptions,
}

impl Default for MatpOptions {
    fn default() -> Self {
        MatpOptions {
            rate_bound: 1.0,
            horizons: vec![4.0, 8.0, 16.0, 32.0],
            samples: 12,
            seed: 0,
            norm: Norm::L2,
            action: ActionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatpRow {
    pub horizon: f64,
    pub delta: f64,
    /// Index of the sample attaining `delta`.
    pub worst_sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatpSample {
    pub start: CoverPoint,
    pub rate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatpReport {
    pub rows: Vec<MatpRow>,
    pub samples: Vec<MatpSample>,
}

impl MatpReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].delta < w[0].delta)
    }

    /// Strictly decreasing with the last entry below `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.strictly_decreasing() && self.rows.last().is_some_and(|r| r.delta < tol)
    }
}

fn sample_start(cover: &AbelianCover, rng: &mut ChaCha8Rng) -> CoverPoint {
    match cover.graph() {
        None => CoverPoint::torus((0..cover.rank()).map(|_| rng.gen::<f64>()).collect()),
        Some(g) => {
            let e = rng.gen_range(0..g.edges().len());
            let s = g.edge(e).length * rng.gen_range(0.0..1.0);
            cover.normalize(&CoverPoint::on_edge(e, s, vec![0; cover.rank()]))
        }
    }
}

fn sample_rate(k: usize, bound: f64, norm: Norm, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dir: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = norm.norm(&dir).max(1e-12);
    let r = bound * rng.gen::<f64>();
    dir.iter().map(|d| d * r / n).collect()
}

/// End point with `(G(y) − G(x))/T` of norm at most that of `rate`.
/// On graphs the end sits over the same base location, on a sheet obtained
/// by truncating `rate · T` toward zero.
fn end_point(cover: &AbelianCover, x: &CoverPoint, rate: &[f64], t: f64) -> CoverPoint {
    match x {
        CoverPoint::Torus(v) => CoverPoint::torus(v.iter().zip(rate).map(|(a, r)| a + r * t).collect()),
        CoverPoint::Graph(_) => {
            let z: Vec<i64> = rate.iter().map(|r| (r * t).trunc() as i64).collect();
            cover.translate(x, &z)
        }
    }
}

/// Tabulates `δ(T) = max |φ̃(x, y, T)/T − β((G(y) − G(x))/T)|` over random
/// pairs with rate at most `A`.  The same pairs (up to the horizon scaling)
/// are used for every `T`.
pub fn matp_check(
    cover: &AbelianCover,
    system: &TonelliSystem,
    beta: &dyn Evaluator,
    opts: &MatpOptions,
) -> Result<MatpReport> {
    if opts.horizons.is_empty() || opts.horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("horizons must be non-empty and increasing"));
    }
    if opts.horizons[0] <= 0.0 || !(opts.rate_bound >= 0.0) || opts.samples == 0 {
        return Err(Error::arg("horizons, rate bound and sample count must be positive"));
    }
    if beta.dim() != cover.rank() {
        return Err(Error::arg("β dimension does not match the cover"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let samples: Vec<MatpSample> = (0..opts.samples)
        .map(|_| {
            let start = sample_start(cover, &mut rng);
            let rate = sample_rate(cover.rank(), opts.rate_bound, opts.norm, &mut rng);
            MatpSample { start, rate }
        })
        .collect();
    let mut rows = Vec::with_capacity(opts.horizons.len());
    for &t in &opts.horizons {
        let errs: Vec<f64> = samples
            .par_iter()
            .map(|s| -> Result<f64> {
                let end = end_point(cover, &s.start, &s.rate, t);
                let gx = cover.g_map(&s.start);
                let gy = cover.g_map(&end);
                let h: Vec<f64> = gy.iter().zip(&gx).map(|(a, b)| (a - b) / t).collect();
                let q = ActionQuery {
                    start: s.start.clone(),
                    end,
                    horizon: t,
                };
                let phi = minimal_action(cover, system, &q, &opts.action)?;
                Ok((phi / t - beta.eval(&h)).abs())
            })
            .collect::<Result<_>>()?;
        let (worst_sample, delta) = errs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &e)| if e > b.1 { (i, e) } else { b });
        rows.push(MatpRow {
            horizon: t,
            delta,
            worst_sample,
        });
    }
    Ok(MatpReport { rows, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mather::{beta_graph, half_square, FnEvaluator};
    use crate::model::{GraphLagrangian, TorusHamiltonian};
    use crate::topology::MetricGraph;

    #[test]
    fn free_torus_is_exact() {
        let c = AbelianCover::torus(2).unwrap();
        let s = TonelliSystem::Torus(TorusHamiltonian::free(2).unwrap());
        let r = matp_check(&c, &s, &half_square(2), &MatpOptions::default()).unwrap();
        for row in &r.rows {
            assert!(row.delta < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn single_loop_endpoint_effect_decays() {
        let g = MetricGraph::single_loop(1.0).unwrap();
        let lag = GraphLagrangian::uniform(1, 0.3);
        let c = AbelianCover::maximal(g.clone());
        let s = TonelliSystem::Graph(lag.clone());
        let b = FnEvaluator::new(1, move |h| beta_graph(&g, &lag, h).unwrap());
        let r = matp_check(&c, &s, &b, &MatpOptions::default()).unwrap();
        // δ(T) ≤ c/T.
        for row in &r.rows {
            assert!(row.delta * row.horizon < 2.0, "{row:?}");
        }
    }

    #[test]
    fn rejects_unsorted_horizons() {
        let c = AbelianCover::torus(1).unwrap();
        let s = TonelliSystem::Torus(TorusHamiltonian::free(1).unwrap());
        let opts = MatpOptions {
            horizons: vec![8.0, 4.0],
            ..MatpOptions::default()
        };
        assert!(matp_check(&c, &s, &half_square(1), &opts).is_err());
    }
}
