//! Supported Tonelli families and their Legendre transforms.
//!
//! Two families are supported:
//! * on the flat torus `T^n` (n = 1, 2), `H(x, p) = ½ p·A(x)p + V(x)` where
//!   every entry of `A` and `V` is a finite trigonometric polynomial of
//!   period one in each coordinate;
//! * on a metric graph, the per-edge speed law `L_e(v) = ½ v² + V_e`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, to_vec2, Mat2, Vec2};

const TWO_PI: f64 = 2.0 * PI;

/// One term `c·cos(2π k·x) + s·sin(2π k·x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn constant(n: usize, c: f64) -> Self {
        TrigPoly {
            terms: vec![TrigTerm {
                freq: vec![0; n],
                cos: c,
                sin: 0.0,
            }],
        }
    }

    pub fn zero() -> Self {
        TrigPoly { terms: Vec::new() }
    }

    /// `amplitude·cos(2π k·x)`.
    pub fn cosine(freq: Vec<i32>, amplitude: f64) -> Self {
        TrigPoly {
            terms: vec![TrigTerm {
                freq,
                cos: amplitude,
                sin: 0.0,
            }],
        }
    }

    pub fn sine(freq: Vec<i32>, amplitude: f64) -> Self {
        TrigPoly {
            terms: vec![TrigTerm {
                freq,
                cos: 0.0,
                sin: amplitude,
            }],
        }
    }

    pub fn plus(mut self, other: TrigPoly) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn is_constant(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.freq.iter().all(|&k| k == 0) || (t.cos == 0.0 && t.sin == 0.0))
    }

    /// `2π k·x`, reduced mod `2π` coordinate by coordinate so that lifts to
    /// other sheets evaluate identically.
    fn phase(term: &TrigTerm, x: &[f64]) -> f64 {
        let turns: f64 = term
            .freq
            .iter()
            .zip(x)
            .map(|(&k, &xi)| (k as f64 * xi).rem_euclid(1.0))
            .sum();
        TWO_PI * turns
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let th = Self::phase(t, x);
                t.cos * th.cos() + t.sin * th.sin()
            })
            .sum()
    }

    pub fn gradient(&self, n: usize, x: &[f64]) -> Vec2 {
        let mut g = [0.0; 2];
        for t in &self.terms {
            let th = Self::phase(t, x);
            let d = -t.cos * th.sin() + t.sin * th.cos();
            for (j, gj) in g.iter_mut().enumerate().take(n) {
                *gj += TWO_PI * t.freq[j] as f64 * d;
            }
        }
        g
    }

    pub fn hessian(&self, n: usize, x: &[f64]) -> Mat2 {
        let mut h = Mat2::zeros(n);
        for t in &self.terms {
            let th = Self::phase(t, x);
            let v = t.cos * th.cos() + t.sin * th.sin();
            for j in 0..n {
                for k in 0..n {
                    h.a[j][k] -= TWO_PI * TWO_PI * (t.freq[j] * t.freq[k]) as f64 * v;
                }
            }
        }
        h
    }

    /// Upper bound on `sup |p|` from the coefficient sizes.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.cos.hypot(t.sin)).sum()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        for t in &self.terms {
            if t.freq.len() != n {
                return Err(Error::model(format!(
                    "trigonometric term has {} frequencies, expected {n}",
                    t.freq.len()
                )));
            }
            if !t.cos.is_finite() || !t.sin.is_finite() {
                return Err(Error::model("non-finite trigonometric coefficient"));
            }
        }
        Ok(())
    }
}

/// `H(x, p) = ½ p·A(x)p + V(x)` on `T^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusHamiltonian {
    dim: usize,
    /// Row-major `dim × dim`; symmetric by construction.
    kinetic: Vec<TrigPoly>,
    potential: TrigPoly,
}

/// Value and first/second derivatives of `L(x, v)`.
#[derive(Debug, Clone, Copy)]
pub struct LagrangianJet {
    pub value: f64,
    pub lx: Vec2,
    pub lv: Vec2,
    pub lxx: Mat2,
    /// `lxv.a[j][k] = ∂²L / ∂x_j ∂v_k`.
    pub lxv: Mat2,
    pub lvv: Mat2,
}

impl TorusHamiltonian {
    /// Builds from the upper triangle of `A` given row by row
    /// (`[a11]` for n = 1, `[a11, a12, a22]` for n = 2).
    pub fn new(dim: usize, kinetic_upper: Vec<TrigPoly>, potential: TrigPoly) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::model(format!("torus dimension {dim} not in {{1, 2}}")));
        }
        let expected = dim * (dim + 1) / 2;
        if kinetic_upper.len() != expected {
            return Err(Error::model(format!(
                "kinetic matrix needs {expected} upper-triangular entries, got {}",
                kinetic_upper.len()
            )));
        }
        for p in kinetic_upper.iter().chain(std::iter::once(&potential)) {
            p.check_dim(dim)?;
        }
        let kinetic = if dim == 1 {
            kinetic_upper
        } else {
            let k = kinetic_upper;
            vec![k[0].clone(), k[1].clone(), k[1].clone(), k[2].clone()]
        };
        Ok(TorusHamiltonian {
            dim,
            kinetic,
            potential,
        })
    }

    /// `½|p|² + V(x)`.
    pub fn mechanical(dim: usize, potential: TrigPoly) -> Result<Self> {
        let upper = if dim == 1 {
            vec![TrigPoly::constant(1, 1.0)]
        } else {
            vec![
                TrigPoly::constant(dim, 1.0),
                TrigPoly::zero(),
                TrigPoly::constant(dim, 1.0),
            ]
        };
        Self::new(dim, upper, potential)
    }

    pub fn free(dim: usize) -> Result<Self> {
        Self::mechanical(dim, TrigPoly::zero())
    }

    /// `½p² + cos(2πx)` on the circle.
    pub fn pendulum() -> Self {
        Self::mechanical(1, TrigPoly::cosine(vec![1], 1.0)).expect("valid pendulum")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn potential_poly(&self) -> &TrigPoly {
        &self.potential
    }

    /// Returns a copy with `V` replaced by `V + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.potential = out.potential.plus(TrigPoly::constant(self.dim, c));
        out
    }

    /// No `x` dependence at all: minimal actions have a closed form.
    pub fn is_homogeneous(&self) -> bool {
        self.potential.is_constant() && self.kinetic.iter().all(TrigPoly::is_constant)
    }

    pub fn has_constant_kinetic(&self) -> bool {
        self.kinetic.iter().all(TrigPoly::is_constant)
    }

    pub fn kinetic_matrix(&self, x: &[f64]) -> Mat2 {
        let n = self.dim;
        let mut m = Mat2::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i][j] = self.kinetic[i * n + j].eval(x);
            }
        }
        m
    }

    fn kinetic_gradient(&self, x: &[f64]) -> [Mat2; 2] {
        let n = self.dim;
        let mut out = [Mat2::zeros(n), Mat2::zeros(n)];
        for i in 0..n {
            for j in 0..n {
                let g = self.kinetic[i * n + j].gradient(n, x);
                for (d, m) in out.iter_mut().enumerate().take(n) {
                    m.a[i][j] = g[d];
                }
            }
        }
        out
    }

    fn kinetic_hessian(&self, x: &[f64]) -> [[Mat2; 2]; 2] {
        let n = self.dim;
        let mut out = [[Mat2::zeros(n); 2]; 2];
        for i in 0..n {
            for j in 0..n {
                let h = self.kinetic[i * n + j].hessian(n, x);
                for (a, row) in out.iter_mut().enumerate().take(n) {
                    for (b, m) in row.iter_mut().enumerate().take(n) {
                        m.a[i][j] = h.a[a][b];
                    }
                }
            }
        }
        out
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        self.potential.eval(x)
    }

    pub fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let a = self.kinetic_matrix(x);
        0.5 * a.quad(&to_vec2(p)) + self.potential(x)
    }

    /// `∂H/∂p = A(x)p`.
    pub fn hamiltonian_dp(&self, x: &[f64], p: &[f64]) -> Vec2 {
        self.kinetic_matrix(x).mul_vec(&to_vec2(p))
    }

    fn inverse_kinetic(&self, x: &[f64]) -> Result<Mat2> {
        let a = self.kinetic_matrix(x);
        if a.min_eigenvalue() <= 0.0 {
            return Err(Error::model(format!(
                "kinetic matrix not positive definite at x = {x:?} (min eigenvalue {})",
                a.min_eigenvalue()
            )));
        }
        a.inverse()
            .ok_or_else(|| Error::model(format!("singular kinetic matrix at x = {x:?}")))
    }

    /// `L(x, v) = max_p [p·v − H(x, p)] = ½ v·A(x)⁻¹v − V(x)`.
    pub fn lagrangian(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let b = self.inverse_kinetic(x)?;
        Ok(0.5 * b.quad(&to_vec2(v)) - self.potential(x))
    }

    /// `∂L/∂v = A(x)⁻¹ v`, the momentum conjugate to `v`.
    pub fn momentum(&self, x: &[f64], v: &[f64]) -> Result<Vec2> {
        Ok(self.inverse_kinetic(x)?.mul_vec(&to_vec2(v)))
    }

    pub fn lagrangian_jet(&self, x: &[f64], v: &[f64]) -> Result<LagrangianJet> {
        let n = self.dim;
        let b = self.inverse_kinetic(x)?;
        let v2 = to_vec2(v);
        let bv = b.mul_vec(&v2);
        let value = 0.5 * dot(n, &v2, &bv) - self.potential(x);
        let vg = self.potential.gradient(n, x);
        let vh = self.potential.hessian(n, x);

        if self.kinetic.iter().all(TrigPoly::is_constant) {
            let mut lx = [0.0; 2];
            for j in 0..n {
                lx[j] = -vg[j];
            }
            return Ok(LagrangianJet {
                value,
                lx,
                lv: bv,
                lxx: vh.scale(-1.0),
                lxv: Mat2::zeros(n),
                lvv: b,
            });
        }

        let da = self.kinetic_gradient(x);
        let dda = self.kinetic_hessian(x);
        let db: Vec<Mat2> = (0..n).map(|j| (b * da[j] * b).scale(-1.0)).collect();
        let mut lx = [0.0; 2];
        let mut lxv = Mat2::zeros(n);
        let mut lxx = Mat2::zeros(n);
        for j in 0..n {
            lx[j] = 0.5 * db[j].quad(&v2) - vg[j];
            let row = db[j].mul_vec(&v2);
            lxv.a[j][..n].copy_from_slice(&row[..n]);
            for k in 0..n {
                let inner = da[j] * b * da[k] + da[k] * b * da[j] - dda[j][k];
                let dbjk = b * inner * b;
                lxx.a[j][k] = 0.5 * dbjk.quad(&v2) - vh.a[j][k];
            }
        }
        Ok(LagrangianJet {
            value,
            lx,
            lv: bv,
            lxx,
            lxv,
            lvv: b,
        })
    }

    /// Largest eigenvalue of `A` and minimum of `L(·, 0) = −V` over a grid;
    /// used for a-priori action bounds.
    pub fn bounds(&self, resolution: usize) -> ModelBounds {
        let mut lambda_max: f64 = 0.0;
        let mut lambda_min = f64::INFINITY;
        let mut v_max = f64::NEG_INFINITY;
        let mut v_min = f64::INFINITY;
        for x in grid_points(self.dim, resolution) {
            let a = self.kinetic_matrix(&x);
            lambda_max = lambda_max.max(a.max_eigenvalue());
            lambda_min = lambda_min.min(a.min_eigenvalue());
            let v = self.potential(&x);
            v_max = v_max.max(v);
            v_min = v_min.min(v);
        }
        // Grid extremes are not certified; pad by the coefficient mass times
        // the worst-case oscillation over half a grid cell.
        let pad = |p: &TrigPoly| {
            let kmax = p
                .terms
                .iter()
                .flat_map(|t| t.freq.iter().map(|k| k.unsigned_abs() as f64))
                .fold(0.0, f64::max);
            p.sup_bound() * (PI * kmax * self.dim as f64 / resolution as f64).min(2.0)
        };
        let a_pad = self.kinetic.iter().map(pad).fold(0.0, f64::max) * self.dim as f64;
        let v_pad = pad(&self.potential);
        ModelBounds {
            lambda_max: lambda_max + a_pad,
            lambda_min: lambda_min - a_pad,
            potential_max: v_max + v_pad,
            potential_min: v_min - v_pad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelBounds {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub potential_max: f64,
    pub potential_min: f64,
}

pub(crate) fn grid_points(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / resolution as f64;
    match dim {
        1 => (0..resolution).map(|i| vec![i as f64 * h]).collect(),
        _ => (0..resolution)
            .flat_map(|i| (0..resolution).map(move |j| vec![i as f64 * h, j as f64 * h]))
            .collect(),
    }
}

/// Numerical Legendre transform of a scalar convex function:
/// `max_p [p·v − h(p)]` by bracketing and golden-section search.
pub fn legendre_numeric<F: Fn(f64) -> f64>(h: F, v: f64) -> f64 {
    let obj = |p: f64| p * v - h(p);
    // For concave objectives the maximiser lies in [-r, r] once both ends
    // are below their half-way points.
    let mut r = 1.0;
    while r < 1e12 && (obj(r) >= obj(0.5 * r) || obj(-r) >= obj(-0.5 * r)) {
        r *= 2.0;
    }
    let p = crate::optim::golden_max(obj, -r, r, 1e-13);
    obj(p)
}

/// Outcome of [`verify_tonelli`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TonelliReport {
    pub min_eigenvalue: f64,
    pub periodicity_residual: f64,
    pub superlinearity_ratio: f64,
    pub superlinear: bool,
    pub passed: bool,
}

pub const SUPERLINEAR_PROBE_RADIUS: f64 = 1e3;
pub const SUPERLINEAR_PROBE_SLOPE: f64 = 1e2;

/// Samples the convexity, periodicity and growth conditions on a grid.
/// Failures are reported in the returned value; only a too-coarse grid is an
/// error.
pub fn verify_tonelli(
    h: &TorusHamiltonian,
    resolution: usize,
    eigen_tolerance: f64,
) -> Result<TonelliReport> {
    if resolution < 8 {
        return Err(Error::arg(format!(
            "grid resolution {resolution} below the minimum of 8"
        )));
    }
    let n = h.dim();
    let mut min_eig = f64::INFINITY;
    let mut periodicity: f64 = 0.0;
    let mut ratio = f64::INFINITY;
    let directions: Vec<Vec2> = if n == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        (0..16)
            .map(|i| {
                let th = TWO_PI * i as f64 / 16.0;
                [th.cos(), th.sin()]
            })
            .collect()
    };
    for x in grid_points(n, resolution) {
        // ∂²H/∂p² = A(x), read off by central differences of H in p.
        let hess = hessian_p_fd(h, &x);
        min_eig = min_eig.min(hess.min_eigenvalue());
        for z in 0..n {
            let mut xs = x.clone();
            xs[z] += 1.0;
            for d in &directions {
                let p = [d[0], d[1]];
                periodicity =
                    periodicity.max((h.hamiltonian(&xs, &p[..n]) - h.hamiltonian(&x, &p[..n])).abs());
            }
        }
        for d in &directions {
            let p: Vec<f64> = d[..n].iter().map(|c| c * SUPERLINEAR_PROBE_RADIUS).collect();
            ratio = ratio.min(h.hamiltonian(&x, &p) / SUPERLINEAR_PROBE_RADIUS);
        }
    }
    Ok(TonelliReport {
        min_eigenvalue: min_eig,
        periodicity_residual: periodicity,
        superlinearity_ratio: ratio,
        superlinear: ratio > SUPERLINEAR_PROBE_SLOPE,
        passed: min_eig > eigen_tolerance,
    })
}

fn hessian_p_fd(h: &TorusHamiltonian, x: &[f64]) -> Mat2 {
    // Exact for quadratic-in-p Hamiltonians up to rounding; step 1 keeps the
    // rounding error at the level of |H|·1e-16.
    let n = h.dim();
    let step = 1.0;
    let mut m = Mat2::zeros(n);
    let eval = |p: Vec2| h.hamiltonian(x, &p[..n]);
    let h0 = eval([0.0, 0.0]);
    for i in 0..n {
        for j in 0..n {
            let mut pp = [0.0; 2];
            let mut pm = [0.0; 2];
            let mut mp = [0.0; 2];
            let mut mm = [0.0; 2];
            pp[i] += step;
            pp[j] += step;
            pm[i] += step;
            pm[j] -= step;
            mp[i] -= step;
            mp[j] += step;
            mm[i] -= step;
            mm[j] -= step;
            m.a[i][j] = if i == j {
                let mut p1 = [0.0; 2];
                let mut m1 = [0.0; 2];
                p1[i] = step;
                m1[i] = -step;
                (eval(p1) - 2.0 * h0 + eval(m1)) / (step * step)
            } else {
                (eval(pp) - eval(pm) - eval(mp) + eval(mm)) / (4.0 * step * step)
            };
        }
    }
    m
}

/// Per-edge speed law `L_e(v) = ½ v² + V_e` on a metric graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphLagrangian {
    potentials: Vec<f64>,
}

impl GraphLagrangian {
    pub fn new(potentials: Vec<f64>) -> Result<Self> {
        if potentials.iter().any(|v| !v.is_finite()) {
            return Err(Error::model("non-finite edge potential"));
        }
        Ok(GraphLagrangian { potentials })
    }

    pub fn uniform(edges: usize, v: f64) -> Self {
        GraphLagrangian {
            potentials: vec![v; edges],
        }
    }

    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    pub fn potential(&self, edge: usize) -> f64 {
        self.potentials[edge]
    }

    pub fn edge_lagrangian(&self, edge: usize, speed: f64) -> f64 {
        0.5 * speed * speed + self.potentials[edge]
    }

    pub fn min_potential(&self) -> f64 {
        self.potentials.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_potential(&self) -> f64 {
        self.potentials.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn shifted(&self, c: f64) -> Self {
        GraphLagrangian {
            potentials: self.potentials.iter().map(|v| v + c).collect(),
        }
    }
}

/// Helper for tests of the dual pair: the Hessian of `L` in `v` is `A⁻¹`.
pub fn fenchel_gap(h: &TorusHamiltonian, x: &[f64], v: &[f64], p: &[f64]) -> Result<f64> {
    let n = h.dim();
    Ok(h.lagrangian(x, v)? + h.hamiltonian(x, p) - dot(n, &to_vec2(p), &to_vec2(v)))
}


/// A Tonelli system on one of the supported base spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum TonelliSystem {
    Torus(TorusHamiltonian),
    Graph(GraphLagrangian),
}

/// Resolution of the grid behind the a-priori bounds of torus systems.
pub(crate) const BOUNDS_RESOLUTION: usize = 64;

impl TonelliSystem {
    /// Bounds on `L`: `L(x, v) ≥ |v|²/(2 λ_max) + min L(·, 0)` and
    /// `L(x, 0) ≤ max L(·, 0)`.
    pub fn action_bounds(&self) -> ActionBounds {
        match self {
            TonelliSystem::Torus(h) => {
                let b = h.bounds(BOUNDS_RESOLUTION);
                ActionBounds {
                    lambda_max: b.lambda_max,
                    rest_min: -b.potential_max,
                    rest_max: -b.potential_min,
                }
            }
            TonelliSystem::Graph(l) => ActionBounds {
                lambda_max: 1.0,
                rest_min: l.min_potential(),
                rest_max: l.max_potential(),
            },
        }
    }

    pub fn as_torus(&self) -> Option<&TorusHamiltonian> {
        match self {
            TonelliSystem::Torus(h) => Some(h),
            TonelliSystem::Graph(_) => None,
        }
    }

    pub fn as_graph(&self) -> Option<&GraphLagrangian> {
        match self {
            TonelliSystem::Graph(l) => Some(l),
            TonelliSystem::Torus(_) => None,
        }
    }

    /// The same system with `L` replaced by `L − c` (i.e. `V + c` on tori,
    /// `V_e − c` on graphs), which shifts `α` by `+c`.
    pub fn energy_shifted(&self, c: f64) -> Self {
        match self {
            TonelliSystem::Torus(h) => TonelliSystem::Torus(h.shifted(c)),
            TonelliSystem::Graph(l) => TonelliSystem::Graph(l.shifted(-c)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBounds {
    pub lambda_max: f64,
    pub rest_min: f64,
    pub rest_max: f64,
}
