//! Empirical check that `(M̃, d_ε, F_ε)` converges to `(H₁, ‖·‖)`: the
//! quasi-isometry constants `K`, `A_ε` and the density of `F_ε`-images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cartesian, AbelianCover, Base, CoverPoint, Norm};
use crate::error::{Error, Result};

/// Sheet radius of the sampling window.
const SAMPLE_WINDOW: i64 = 3;
/// Radius of the homology ball probed for density.
const DENSITY_BALL: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceRow {
    pub eps: f64,
    /// `max(0, max K⁻¹ d_ε(x,y) − ‖F_ε x − F_ε y‖)` over the samples.
    pub a_eps: f64,
    /// Covering radius of `F_ε(sample)` in the probe ball.
    pub covering_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConvergenceReport {
    pub norm: Norm,
    pub samples: usize,
    /// Smallest `K` with `‖ΔF_ε‖ ≤ K d_ε` on every sample and
    /// `d(x₀, x₀+n) ≤ K ‖n‖` on the deck orbit.
    pub k: f64,
    /// `max ‖ΔG‖ / d` alone.
    pub k_lipschitz: f64,
    /// `A_ε / ε`, which is independent of `ε`.
    pub a_slope: f64,
    pub rows: Vec<SpaceRow>,
}

impl SpaceConvergenceReport {
    /// `A_ε` and the covering radius are nonincreasing and end below `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        let mono = self.rows.windows(2).all(|w| {
            w[1].a_eps <= w[0].a_eps + 1e-15 && w[1].covering_radius <= w[0].covering_radius + 1e-15
        });
        let last = self.rows.last();
        mono && last.is_some_and(|r| r.a_eps < tol && r.covering_radius < tol)
    }
}

fn random_point(cover: &AbelianCover, rng: &mut ChaCha8Rng) -> CoverPoint {
    let w = SAMPLE_WINDOW as f64;
    match cover.base() {
        Base::Torus { dim } => CoverPoint::Torus((0..*dim).map(|_| rng.gen_range(-w..w)).collect()),
        Base::Graph(g) => {
            let sheet: Vec<i64> = (0..cover.rank())
                .map(|_| rng.gen_range(-SAMPLE_WINDOW..=SAMPLE_WINDOW))
                .collect();
            if rng.gen_bool(0.25) {
                CoverPoint::vertex(rng.gen_range(0..g.vertex_count()), sheet)
            } else {
                let e = rng.gen_range(0..g.edges().len());
                let s = rng.gen_range(0.0..g.edge(e).length);
                CoverPoint::on_edge(e, s, sheet)
            }
        }
    }
}

/// Samples point pairs in a sheet window, fits `K`, and reports `A_ε` and the
/// covering radius of the `F_ε`-image of a base mesh for each `ε`.
pub fn estimate_space_convergence(
    cover: &AbelianCover,
    eps_list: &[f64],
    samples: usize,
    norm: Norm,
    seed: u64,
) -> Result<SpaceConvergenceReport> {
    if samples < 100 {
        return Err(Error::arg(format!("sample count {samples} below 100")));
    }
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::arg("ε list must be nonempty and positive"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::arg("ε list must be strictly decreasing"));
    }
    let k_dim = cover.rank();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(CoverPoint, CoverPoint)> = (0..samples)
        .map(|_| (random_point(cover, &mut rng), random_point(cover, &mut rng)))
        .collect();
    let x0 = cover.base_point();
    let orbit: Vec<Vec<i64>> = cartesian(k_dim, -SAMPLE_WINDOW, SAMPLE_WINDOW)
        .into_iter()
        .filter(|n| n.iter().any(|&v| v != 0))
        .collect();
    let orbit_start = pairs.len();
    for n in &orbit {
        pairs.push((x0.clone(), cover.translate(&x0, n)));
    }

    let measured: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(x, y)| -> Result<(f64, f64)> {
            let d = cover.cover_distance(x, y)?;
            let gx = cover.g_map(x);
            let gy = cover.g_map(y);
            let dg: Vec<f64> = gy.iter().zip(&gx).map(|(a, b)| a - b).collect();
            Ok((d, norm.norm(&dg)))
        })
        .collect::<Result<_>>()?;

    let k_lipschitz = measured
        .iter()
        .filter(|(d, _)| *d > 0.0)
        .map(|(d, g)| g / d)
        .fold(0.0, f64::max);
    let k_orbit = measured[orbit_start..]
        .iter()
        .map(|(d, g)| d / g)
        .fold(0.0, f64::max);
    let k = k_lipschitz.max(k_orbit);
    let a_slope = measured
        .iter()
        .map(|(d, g)| d / k - g)
        .fold(0.0, f64::max);

    let mesh = cover.base_mesh(16);
    let offsets: Vec<Vec<f64>> = mesh.iter().map(|p| cover.g_map(p)).collect();
    let probes = density_probes(k_dim, norm);
    let rows = eps_list
        .iter()
        .map(|&eps| SpaceRow {
            eps,
            a_eps: eps * a_slope,
            covering_radius: image_covering_radius(&offsets, &probes, eps, norm),
        })
        .collect();
    Ok(SpaceConvergenceReport {
        norm,
        samples,
        k,
        k_lipschitz,
        a_slope,
        rows,
    })
}

fn density_probes(k: usize, norm: Norm) -> Vec<Vec<f64>> {
    let res = if k <= 1 { 200 } else { 40 };
    cartesian(k, -(res as i64), res as i64)
        .into_iter()
        .map(|c| c.iter().map(|&v| DENSITY_BALL * v as f64 / res as f64).collect::<Vec<f64>>())
        .filter(|q| norm.norm(q) <= DENSITY_BALL + 1e-12)
        .collect()
}

/// `sup_q min_{n, g} ‖ε(n + g) − q‖`; componentwise rounding gives the
/// nearest lattice translate for every supported norm.
fn image_covering_radius(offsets: &[Vec<f64>], probes: &[Vec<f64>], eps: f64, norm: Norm) -> f64 {
    probes
        .par_iter()
        .map(|q| {
            offsets
                .iter()
                .map(|g| {
                    let r: Vec<f64> = q
                        .iter()
                        .zip(g)
                        .map(|(qi, gi)| {
                            let y = qi / eps - gi;
                            eps * (y - y.round())
                        })
                        .collect();
                    norm.norm(&r)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::MetricGraph;

    const LADDER: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];

    #[test]
    fn flat_torus_is_isometric() {
        let t = AbelianCover::torus(2).unwrap();
        let r = estimate_space_convergence(&t, &LADDER, 200, Norm::L2, 7).unwrap();
        assert_eq!(r.k, 1.0);
        assert!(r.rows.iter().all(|row| row.a_eps == 0.0));
        assert!(r.passes(0.05));
    }

    #[test]
    fn single_loop_constant_is_loop_length() {
        let c = AbelianCover::maximal(MetricGraph::single_loop(2.0).unwrap());
        let r = estimate_space_convergence(&c, &LADDER, 150, Norm::L1, 3).unwrap();
        assert!((r.k - 2.0).abs() < 1e-12);
    }

    #[test]
    fn figure_eight_defect_is_linear_in_eps() {
        let c = AbelianCover::maximal(MetricGraph::figure_eight(1.0, 1.0).unwrap());
        let r = estimate_space_convergence(&c, &LADDER, 300, Norm::L1, 11).unwrap();
        assert!((r.k - 1.0).abs() < 1e-12);
        assert!(r.a_slope <= 1.0 + 1e-12);
        for row in &r.rows {
            assert!(row.a_eps <= row.eps + 1e-12);
        }
        assert!(r.rows.last().unwrap().covering_radius < r.rows[0].covering_radius);
    }

    #[test]
    fn rejects_small_samples_and_bad_ladders() {
        let t = AbelianCover::torus(1).unwrap();
        assert!(estimate_space_convergence(&t, &LADDER, 10, Norm::L2, 0).is_err());
        assert!(estimate_space_convergence(&t, &[0.1, 0.2], 100, Norm::L2, 0).is_err());
    }
}
