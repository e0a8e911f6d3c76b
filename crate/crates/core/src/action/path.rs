//! Action minimisation over piecewise-linear paths on the torus cover.
//!
//! The discrete action of nodes `q_0, …, q_N` over horizon `T` is
//! `w Σ dt L(½(q_i + q_{i+1}), s (q_{i+1} − q_i) / dt)` with `dt = T / N`,
//! weight `w` and velocity scale `s`.  It is minimised by damped Newton
//! steps on the block-tridiagonal Hessian; resolution is doubled and the
//! values Richardson-extrapolated until they settle.

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::model::TorusHamiltonian;

/// Cost charged at a free starting node.
pub(crate) type StartCost<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Finite-difference step for start costs.
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PathOptions {
    pub initial_segments: usize,
    pub max_segments: usize,
    /// Stop once successive extrapolated values differ by less than this.
    pub tolerance: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            initial_segments: 64,
            max_segments: 1 << 14,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSolution {
    /// Weighted action, extrapolated when more than one resolution was used.
    pub value: f64,
    pub segments: usize,
    pub converged: bool,
    pub nodes: Vec<Vec2>,
}

impl PathSolution {
    pub fn start(&self, n: usize) -> Vec<f64> {
        self.nodes[0][..n].to_vec()
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Start<'a> {
    Fixed(Vec2),
    Free(StartCost<'a>),
}

pub(crate) struct PathProblem<'a> {
    pub h: &'a TorusHamiltonian,
    pub end: Vec2,
    pub horizon: f64,
    pub weight: f64,
    pub vscale: f64,
    pub start: Start<'a>,
}

/// Piecewise-linear initial guess: `(time fraction, position)` knots.
pub(crate) type Knots = Vec<(f64, Vec2)>;

fn interpolate(knots: &Knots, n_seg: usize) -> Vec<Vec2> {
    (0..=n_seg)
        .map(|i| {
            let s = i as f64 / n_seg as f64;
            let k = knots
                .windows(2)
                .position(|w| s <= w[1].0)
                .unwrap_or(knots.len() - 2);
            let (t0, a) = knots[k];
            let (t1, b) = knots[k + 1];
            let r = if t1 > t0 { ((s - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 1.0 };
            [a[0] + r * (b[0] - a[0]), a[1] + r * (b[1] - a[1])]
        })
        .collect()
}

fn refine(nodes: &[Vec2]) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(2 * nodes.len() - 1);
    for w in nodes.windows(2) {
        out.push(w[0]);
        out.push([0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])]);
    }
    out.push(*nodes.last().unwrap());
    out
}

struct Derivs {
    grad: Vec<Vec2>,
    diag: Vec<Mat2>,
    off: Vec<Mat2>,
}

impl<'a> PathProblem<'a> {
    fn n(&self) -> usize {
        self.h.dim()
    }

    fn free_start(&self) -> bool {
        matches!(self.start, Start::Free(_))
    }

    fn start_cost(&self, q: &Vec2) -> f64 {
        match self.start {
            Start::Free(c) => c(&q[..self.n()]),
            Start::Fixed(_) => 0.0,
        }
    }

    fn objective(&self, q: &[Vec2]) -> Result<f64> {
        let n = self.n();
        let m = q.len() - 1;
        let dt = self.horizon / m as f64;
        let mut total = 0.0;
        for w in q.windows(2) {
            let mid = [0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])];
            let v = [
                self.vscale * (w[1][0] - w[0][0]) / dt,
                self.vscale * (w[1][1] - w[0][1]) / dt,
            ];
            total += self.h.lagrangian(&mid[..n], &v[..n])?;
        }
        Ok(self.weight * dt * total + self.start_cost(&q[0]))
    }

    /// Gradient and Hessian blocks with respect to every node; the solver
    /// only uses the free ones (`q_0` only when the start is free).
    fn derivs(&self, q: &[Vec2]) -> Result<Derivs> {
        let n = self.n();
        let m = q.len() - 1;
        let dt = self.horizon / m as f64;
        let b = self.vscale / dt;
        let wdt = self.weight * dt;
        let mut grad = vec![[0.0; 2]; m + 1];
        let mut diag = vec![Mat2::zeros(n); m + 1];
        let mut off = vec![Mat2::zeros(n); m];
        for i in 0..m {
            let (l, r) = (q[i], q[i + 1]);
            let mid = [0.5 * (l[0] + r[0]), 0.5 * (l[1] + r[1])];
            let v = [b * (r[0] - l[0]), b * (r[1] - l[1])];
            let jet = self.h.lagrangian_jet(&mid[..n], &v[..n])?;
            // Coefficients of (∂x, ∂v) for the left and right node.
            let coef = [(0.5, -b), (0.5, b)];
            for (side, &(cx, cv)) in coef.iter().enumerate() {
                for j in 0..n {
                    grad[i + side][j] += wdt * (cx * jet.lx[j] + cv * jet.lv[j]);
                }
            }
            let block = |a: (f64, f64), c: (f64, f64)| {
                let mut blk = Mat2::zeros(n);
                for j in 0..n {
                    for k in 0..n {
                        blk.a[j][k] = wdt
                            * (a.0 * c.0 * jet.lxx.a[j][k]
                                + a.0 * c.1 * jet.lxv.a[j][k]
                                + a.1 * c.0 * jet.lxv.a[k][j]
                                + a.1 * c.1 * jet.lvv.a[j][k]);
                    }
                }
                blk
            };
            diag[i] = diag[i] + block(coef[0], coef[0]);
            diag[i + 1] = diag[i + 1] + block(coef[1], coef[1]);
            off[i] = block(coef[0], coef[1]);
        }
        if self.free_start() {
            let (g, hs) = self.start_cost_derivs(&q[0]);
            for j in 0..n {
                grad[0][j] += g[j];
            }
            diag[0] = diag[0] + hs;
        }
        Ok(Derivs { grad, diag, off })
    }

    fn start_cost_derivs(&self, q: &Vec2) -> (Vec2, Mat2) {
        let n = self.n();
        let h = FD_STEP;
        let c = |p: Vec2| self.start_cost(&p);
        let mut g = [0.0; 2];
        let mut hs = Mat2::zeros(n);
        let c0 = c(*q);
        for j in 0..n {
            let mut p = *q;
            let mut mq = *q;
            p[j] += h;
            mq[j] -= h;
            g[j] = (c(p) - c(mq)) / (2.0 * h);
            hs.a[j][j] = (c(p) - 2.0 * c0 + c(mq)) / (h * h);
            for k in (j + 1)..n {
                let shift = |sj: f64, sk: f64| {
                    let mut r = *q;
                    r[j] += sj * h;
                    r[k] += sk * h;
                    c(r)
                };
                let v = (shift(1.0, 1.0) - shift(1.0, -1.0) - shift(-1.0, 1.0)
                    + shift(-1.0, -1.0))
                    / (4.0 * h * h);
                hs.a[j][k] = v;
                hs.a[k][j] = v;
            }
        }
        (g, hs)
    }

    /// Solves `(H + μI) s = −g` over the free nodes by block elimination;
    /// `None` if a pivot block is not positive definite.
    fn newton_step(&self, d: &Derivs, mu: f64) -> Option<Vec<Vec2>> {
        let n = self.n();
        let m = d.grad.len() - 1;
        let first = if self.free_start() { 0 } else { 1 };
        let idx: Vec<usize> = (first..m).collect();
        if idx.is_empty() {
            return Some(vec![[0.0; 2]; m + 1]);
        }
        let shift = Mat2::scaled_identity(n, mu);
        let mut pinv: Vec<Mat2> = Vec::with_capacity(idx.len());
        let mut y: Vec<Vec2> = Vec::with_capacity(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            let mut p = d.diag[i] + shift;
            let mut r = [-d.grad[i][0], -d.grad[i][1]];
            if k > 0 {
                let c = d.off[i - 1];
                let ct = c.transpose();
                let prev_inv = pinv[k - 1];
                p = p - ct * prev_inv * c;
                let corr = (ct * prev_inv).mul_vec(&y[k - 1]);
                for j in 0..n {
                    r[j] -= corr[j];
                }
            }
            if !(p.min_eigenvalue() > 0.0) {
                return None;
            }
            pinv.push(p.inverse()?);
            y.push(r);
        }
        let mut step = vec![[0.0; 2]; m + 1];
        for k in (0..idx.len()).rev() {
            let i = idx[k];
            let mut r = y[k];
            if k + 1 < idx.len() {
                let cs = d.off[i].mul_vec(&step[i + 1]);
                for j in 0..n {
                    r[j] -= cs[j];
                }
            }
            step[i] = pinv[k].mul_vec(&r);
        }
        Some(step)
    }

    /// Damped Newton with Armijo backtracking from `q`.
    fn minimise(&self, mut q: Vec<Vec2>) -> Result<(Vec<Vec2>, f64)> {
        let n = self.n();
        let mut f = self.objective(&q)?;
        let mut mu = 0.0f64;
        for _ in 0..300 {
            let d = self.derivs(&q)?;
            let scale = d
                .diag
                .iter()
                .map(|b| b.a[0][0].abs().max(if n > 1 { b.a[1][1].abs() } else { 0.0 }))
                .fold(0.0, f64::max)
                .max(1e-300);
            let step = loop {
                if let Some(s) = self.newton_step(&d, mu) {
                    break s;
                }
                mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
                if mu > 1e12 * scale {
                    return Err(Error::Solver("path Hessian could not be regularised".into()));
                }
            };
            let dec: f64 = step
                .iter()
                .zip(&d.grad)
                .map(|(s, g)| -(s[0] * g[0] + s[1] * g[1]))
                .sum();
            if dec <= 1e-15 * (1.0 + f.abs()) {
                return Ok((q, f));
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-12 {
                let trial: Vec<Vec2> = q
                    .iter()
                    .zip(&step)
                    .map(|(a, s)| [a[0] + alpha * s[0], a[1] + alpha * s[1]])
                    .collect();
                let ft = self.objective(&trial)?;
                if ft <= f - 1e-4 * alpha * dec {
                    let small = (f - ft).abs() <= 1e-16 * (1.0 + f.abs());
                    q = trial;
                    f = ft;
                    accepted = true;
                    if small {
                        return Ok((q, f));
                    }
                    break;
                }
                alpha *= 0.5;
            }
            if accepted {
                if alpha == 1.0 {
                    mu *= 0.1;
                }
                if mu < 1e-14 * scale {
                    mu = 0.0;
                }
            } else {
                if mu > 1e10 * scale {
                    return Ok((q, f));
                }
                mu = if mu == 0.0 { 1e-8 * scale } else { mu * 10.0 };
            }
        }
        Ok((q, f))
    }

    fn start_point(&self, guess: Vec2) -> Vec2 {
        match self.start {
            Start::Fixed(y) => y,
            Start::Free(_) => guess,
        }
    }

    /// Best local minimum at a fixed resolution over several initial guesses.
    pub(crate) fn solve_at(&self, segments: usize, inits: &[Knots]) -> Result<(Vec<Vec2>, f64)> {
        let mut best: Option<(Vec<Vec2>, f64)> = None;
        for knots in inits {
            let mut q = interpolate(knots, segments);
            q[0] = self.start_point(q[0]);
            *q.last_mut().unwrap() = self.end;
            let (q, f) = self.minimise(q)?;
            if best.as_ref().is_none_or(|b| f < b.1) {
                best = Some((q, f));
            }
        }
        best.ok_or_else(|| Error::Solver("no initial path".into()))
    }

    /// Resolution doubling with Richardson extrapolation.
    pub(crate) fn solve(&self, inits: &[Knots], opts: &PathOptions) -> Result<PathSolution> {
        if self.h.is_homogeneous() {
            let (q, f) = self.solve_at(1, inits)?;
            return Ok(PathSolution {
                value: f,
                segments: 1,
                converged: true,
                nodes: q,
            });
        }
        let mut seg = opts.initial_segments.max(2);
        let (mut q, mut s_prev) = self.solve_at(seg, inits)?;
        let mut r_prev: Option<f64> = None;
        loop {
            if seg * 2 > opts.max_segments {
                let value = r_prev.unwrap_or(s_prev);
                return Ok(PathSolution {
                    value,
                    segments: seg,
                    converged: false,
                    nodes: q,
                });
            }
            seg *= 2;
            let (q2, s) = self.minimise(refine(&q))?;
            let r = (4.0 * s - s_prev) / 3.0;
            q = q2;
            s_prev = s;
            if let Some(rp) = r_prev {
                if (r - rp).abs() < opts.tolerance {
                    return Ok(PathSolution {
                        value: r,
                        segments: seg,
                        converged: true,
                        nodes: q,
                    });
                }
            }
            r_prev = Some(r);
        }
    }
}

/// Straight line plus detours through nearby rest points (maxima of `V`,
/// i.e. minima of `L(·, 0)`) where long paths tend to linger.
pub(crate) fn initial_guesses(
    h: &TorusHamiltonian,
    y: Vec2,
    x: Vec2,
    horizon: f64,
    rest_points: &[Vec2],
) -> Vec<Knots> {
    let n = h.dim();
    let mut out = vec![vec![(0.0, y), (1.0, x)]];
    if h.is_homogeneous() {
        return out;
    }
    let dist = |a: &Vec2, b: &Vec2| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let shifts: Vec<Vec2> = if n == 1 {
        vec![[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]
    } else {
        vec![[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
    };
    let mut cands: Vec<Vec2> = Vec::new();
    for anchor in [y, x] {
        for z in rest_points {
            // Nearest lattice translate of z to the anchor.
            let mut w = *z;
            for j in 0..n {
                w[j] = z[j] + (anchor[j] - z[j]).round();
            }
            for s in &shifts {
                let c = [w[0] + s[0], w[1] + s[1]];
                if !cands.iter().any(|o| dist(o, &c) < 1e-12) {
                    cands.push(c);
                }
            }
        }
    }
    for w in cands {
        let f1 = ((dist(&y, &w) + 0.25) / horizon).min(0.45);
        let f2 = ((dist(&w, &x) + 0.25) / horizon).min(0.45);
        out.push(vec![(0.0, y), (f1, w), (1.0 - f2, w), (1.0, x)]);
    }
    out
}

/// Points of the fundamental cell where `V` is largest (grid search).
pub(crate) fn rest_points(h: &TorusHamiltonian) -> Vec<Vec2> {
    let pts = crate::model::grid_points(h.dim(), 64);
    let vals: Vec<f64> = pts.iter().map(|p| h.potential(p)).collect();
    let vmax = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    pts.iter()
        .zip(&vals)
        .filter(|(_, v)| **v >= vmax - 1e-9)
        .take(4)
        .map(|(p, _)| crate::linalg::to_vec2(p))
        .collect()
}
