//! `α` and `β` for Hamiltonians on `T¹` and `T²`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::{Evaluator, FnEvaluator};
use super::legendre::{GridSpec, GridTable, LegendreDual};
use crate::error::{Error, Result};
use crate::linalg::to_vec2;
use crate::model::{grid_points, TorusHamiltonian};
use crate::optim::{golden_max, lbfgs};

const QUADRATURE_NODES: usize = 8192;

fn check_p(h: &TorusHamiltonian, p: &[f64]) -> Result<()> {
    if p.len() != h.dim() || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg(format!(
            "cohomology vector {p:?} does not match dimension {}",
            h.dim()
        )));
    }
    Ok(())
}

/// `α(P) = ½ P·A P + c` for `H = ½ p·A p + c` with no `x` dependence.
pub fn alpha_homogeneous(h: &TorusHamiltonian, p: &[f64]) -> Result<f64> {
    check_p(h, p)?;
    if !h.is_homogeneous() {
        return Err(Error::arg("Hamiltonian depends on x"));
    }
    let x = vec![0.0; h.dim()];
    Ok(h.hamiltonian(&x, p))
}

/// Exact `α` of a one-dimensional `½ a p² + V(x)` with constant `a`.
///
/// Below the critical momentum `P_c = ∫ √(2(max V − V)/a)` the value is
/// `max V`; above it `α(P) = E` solves `∫ √(2(E − V)/a) dx = |P|`.
#[derive(Debug, Clone)]
pub struct MechanicalAlpha1d {
    a: f64,
    samples: Vec<f64>,
    vmax: f64,
    critical: f64,
}

impl MechanicalAlpha1d {
    pub fn new(h: &TorusHamiltonian) -> Result<Self> {
        if h.dim() != 1 || !h.has_constant_kinetic() {
            return Err(Error::arg(
                "quadrature α needs a one-dimensional Hamiltonian with constant kinetic term",
            ));
        }
        let a = h.kinetic_matrix(&[0.0]).a[0][0];
        let n = QUADRATURE_NODES;
        let samples: Vec<f64> = (0..n).map(|i| h.potential(&[i as f64 / n as f64])).collect();
        let (imax, _) = samples
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let x0 = imax as f64 / n as f64;
        let dx = 1.0 / n as f64;
        let xm = golden_max(|x| h.potential(&[x]), x0 - dx, x0 + dx, 1e-13);
        let vmax = h.potential(&[xm]).max(samples[imax]);
        let mut out = MechanicalAlpha1d {
            a,
            samples,
            vmax,
            critical: 0.0,
        };
        out.critical = out.momentum(vmax);
        Ok(out)
    }

    /// `∫ √(2(E − V)/a) dx`, periodic trapezoid rule.
    fn momentum(&self, e: f64) -> f64 {
        let s: f64 = self
            .samples
            .iter()
            .map(|v| (2.0 * (e - v).max(0.0) / self.a).sqrt())
            .sum();
        s / self.samples.len() as f64
    }

    pub fn critical_momentum(&self) -> f64 {
        self.critical
    }

    pub fn max_potential(&self) -> f64 {
        self.vmax
    }

    pub fn alpha(&self, p: f64) -> f64 {
        let p = p.abs();
        if p <= self.critical {
            return self.vmax;
        }
        let mut lo = self.vmax;
        let mut hi = self.vmax + 0.5 * self.a * p * p;
        for _ in 0..200 {
            if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.momentum(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl Evaluator for MechanicalAlpha1d {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.alpha(x[0])
    }
}

/// `β` in one dimension as the dual of `α` tabulated on a fine grid.
pub fn beta_from_alpha_1d(alpha: Arc<dyn Evaluator>, radius: f64, points: usize) -> Result<LegendreDual> {
    let spec = GridSpec { radius, points };
    let table = GridTable::tabulate(&*alpha, spec)?;
    LegendreDual::new(Arc::new(table), spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimaxOptions {
    /// Mesh points per dimension.
    pub mesh: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        MinimaxOptions {
            mesh: 64,
            restarts: 8,
            seed: 0,
            max_iter: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxOutcome {
    /// Best `max_x H(x, P + Du)` found.
    pub value: f64,
    /// The same at `u ≡ 0`.
    pub at_zero: f64,
    /// `max V`, and with constant `A` also `½ P·A P + mean V`.
    pub lower_bound: f64,
    pub converged: bool,
}

struct Mesh {
    n: usize,
    m: usize,
    xs: Vec<Vec<f64>>,
    v: Vec<f64>,
    a: Vec<[[f64; 2]; 2]>,
}

impl Mesh {
    fn new(h: &TorusHamiltonian, m: usize) -> Self {
        let xs = grid_points(h.dim(), m);
        let v = xs.iter().map(|x| h.potential(x)).collect();
        let a = xs.iter().map(|x| h.kinetic_matrix(x).a).collect();
        Mesh {
            n: h.dim(),
            m,
            xs,
            v,
            a,
        }
    }

    fn neighbours(&self, i: usize, axis: usize) -> (usize, usize) {
        let m = self.m;
        if self.n == 1 {
            return ((i + 1) % m, (i + m - 1) % m);
        }
        let (r, c) = (i / m, i % m);
        if axis == 0 {
            (((r + 1) % m) * m + c, ((r + m - 1) % m) * m + c)
        } else {
            (r * m + (c + 1) % m, r * m + (c + m - 1) % m)
        }
    }

    /// `H` at every node and `∂H/∂p` there.
    fn energies(&self, p: &[f64], u: &[f64]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let inv = self.m as f64 / 2.0;
        let mut hs = Vec::with_capacity(self.xs.len());
        let mut gs = Vec::with_capacity(self.xs.len());
        for i in 0..self.xs.len() {
            let mut q = [0.0; 2];
            for (d, qd) in q.iter_mut().enumerate().take(self.n) {
                let (f, b) = self.neighbours(i, d);
                *qd = p[d] + (u[f] - u[b]) * inv;
            }
            let a = &self.a[i];
            let mut g = [0.0; 2];
            let mut quad = 0.0;
            for r in 0..self.n {
                for c in 0..self.n {
                    g[r] += a[r][c] * q[c];
                }
                quad += q[r] * g[r];
            }
            hs.push(0.5 * quad + self.v[i]);
            gs.push(g);
        }
        (hs, gs)
    }

    fn exact_max(&self, p: &[f64], u: &[f64]) -> f64 {
        self.energies(p, u).0.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Log-sum-exp smoothing of the max at inverse temperature `tau`.
    fn smoothed(&self, p: &[f64], u: &[f64], tau: f64, grad: &mut [f64]) -> f64 {
        let (hs, gs) = self.energies(p, u);
        let top = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = hs.iter().map(|h| (tau * (h - top)).exp()).collect();
        let z: f64 = w.iter().sum();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let inv = self.m as f64 / 2.0;
        for i in 0..hs.len() {
            let wi = w[i] / z;
            for d in 0..self.n {
                let (f, b) = self.neighbours(i, d);
                let c = wi * gs[i][d] * inv;
                grad[f] += c;
                grad[b] -= c;
            }
        }
        top + z.ln() / tau
    }
}

/// `α(P) = min_u max_x H(x, P + ∂u)` over periodic `u` sampled on a mesh,
/// with centred differences.  Smoothed by log-sum-exp at increasing inverse
/// temperatures, minimised by L-BFGS from `u ≡ 0` and random restarts, and
/// reported at the exact mesh maximum.
pub fn alpha_torus_minimax(h: &TorusHamiltonian, p: &[f64], opts: &MinimaxOptions) -> Result<MinimaxOutcome> {
    check_p(h, p)?;
    if opts.mesh < 8 {
        return Err(Error::arg(format!("minimax mesh {} is too coarse", opts.mesh)));
    }
    let mesh = Mesh::new(h, opts.mesh);
    let nodes = mesh.xs.len();
    let zero = vec![0.0; nodes];
    let at_zero = mesh.exact_max(p, &zero);

    let vmax = mesh.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lower = vmax;
    if h.has_constant_kinetic() {
        let mean_v = mesh.v.iter().sum::<f64>() / nodes as f64;
        let a = h.kinetic_matrix(&vec![0.0; h.dim()]);
        lower = lower.max(0.5 * a.quad(&to_vec2(p)) + mean_v);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![zero];
    for _ in 0..opts.restarts {
        starts.push((0..nodes).map(|_| rng.gen_range(-0.05..0.05)).collect());
    }
    let mut best = at_zero;
    let mut converged = false;
    for u0 in starts {
        let mut u = u0;
        let mut last_ok = false;
        for tau in [10.0, 100.0, 1000.0] {
            let out = lbfgs(u, |x, g| mesh.smoothed(p, x, tau, g), opts.max_iter, 1e-10);
            u = out.x;
            last_ok = out.converged;
        }
        let v = mesh.exact_max(p, &u);
        if v < best {
            best = v;
            converged = last_ok;
        }
    }
    if best - lower <= 1e-9 {
        converged = true;
    }
    Ok(MinimaxOutcome {
        value: best,
        at_zero,
        lower_bound: lower,
        converged,
    })
}

/// How `α` is evaluated on a torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TorusAlphaMethod {
    /// Closed form when homogeneous, quadrature in one dimension with
    /// constant kinetic term, minimax otherwise.
    Auto { mesh: usize },
    Minimax(MinimaxOptions),
}

impl Default for TorusAlphaMethod {
    fn default() -> Self {
        TorusAlphaMethod::Auto { mesh: 64 }
    }
}

/// An `α` evaluator for `h` following `method`.
pub fn torus_alpha(h: &TorusHamiltonian, method: TorusAlphaMethod) -> Result<Arc<dyn Evaluator>> {
    let dim = h.dim();
    let minimax = |opts: MinimaxOptions| -> Arc<dyn Evaluator> {
        let h = h.clone();
        Arc::new(FnEvaluator::new(dim, move |p| {
            alpha_torus_minimax(&h, p, &opts).map_or(f64::NAN, |o| o.value)
        }))
    };
    Ok(match method {
        TorusAlphaMethod::Auto { mesh } => {
            if h.is_homogeneous() {
                let h = h.clone();
                Arc::new(FnEvaluator::new(dim, move |p| h.hamiltonian(&vec![0.0; p.len()], p)))
            } else if dim == 1 && h.has_constant_kinetic() {
                Arc::new(MechanicalAlpha1d::new(h)?)
            } else {
                minimax(MinimaxOptions {
                    mesh,
                    ..MinimaxOptions::default()
                })
            }
        }
        TorusAlphaMethod::Minimax(opts) => minimax(opts),
    })
}
