//! Grid tables and the discrete Legendre-Fenchel transform.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::Evaluator;
use crate::error::{Error, Result};
use crate::optim::{golden_max, pattern_search};

/// Symmetric box `[-radius, radius]^k` sampled with `points` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub radius: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            radius: 4.0,
            points: 129,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) || self.points < 3 {
            return Err(Error::arg(format!(
                "grid needs a positive radius and at least 3 points, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        2.0 * self.radius / (self.points - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.step()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.coord(i)).collect()
    }
}

/// Values of a function on a [`GridSpec`] box, row-major with the first
/// coordinate varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub dim: usize,
    pub spec: GridSpec,
    pub values: Vec<f64>,
    /// Largest midpoint-convexity violation along axes and diagonals.
    pub convexity_residual: f64,
    /// Interpolation/argmax error scale: max second difference / 8.
    pub tolerance: f64,
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=2).contains(&dim) {
        Ok(())
    } else {
        Err(Error::arg(format!("grid tables support dimension 1 or 2, got {dim}")))
    }
}

impl GridTable {
    pub fn from_values(dim: usize, spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        spec.validate()?;
        if values.len() != spec.points.pow(dim as u32) {
            return Err(Error::arg("grid value count does not match the spec"));
        }
        let mut t = GridTable {
            dim,
            spec,
            values,
            convexity_residual: 0.0,
            tolerance: 0.0,
        };
        t.measure();
        Ok(t)
    }

    pub fn tabulate(f: &dyn Evaluator, spec: GridSpec) -> Result<Self> {
        let dim = f.dim();
        check_dim(dim)?;
        spec.validate()?;
        let n = spec.points;
        let values: Vec<f64> = (0..n.pow(dim as u32))
            .into_par_iter()
            .map(|idx| f.eval(&point_of(dim, &spec, idx)))
            .collect();
        Self::from_values(dim, spec, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        point_of(self.dim, &self.spec, idx)
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.convexity_residual < tol
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        if self.dim == 1 {
            self.values[i]
        } else {
            self.values[i * self.spec.points + j]
        }
    }

    fn measure(&mut self) {
        let n = self.spec.points as isize;
        let dirs: &[(isize, isize)] = if self.dim == 1 {
            &[(1, 0)]
        } else {
            &[(1, 0), (0, 1), (1, 1), (1, -1)]
        };
        let jmax = if self.dim == 1 { 1 } else { n };
        let mut resid: f64 = 0.0;
        let mut second: f64 = 0.0;
        for i in 0..n {
            for j in 0..jmax {
                for &(di, dj) in dirs {
                    let (a, b) = ((i - di, j - dj), (i + di, j + dj));
                    let inside = |(x, y): (isize, isize)| x >= 0 && x < n && y >= 0 && y < jmax;
                    if !inside(a) || !inside(b) {
                        continue;
                    }
                    let fa = self.at(a.0 as usize, a.1 as usize);
                    let fb = self.at(b.0 as usize, b.1 as usize);
                    let fm = self.at(i as usize, j as usize);
                    let d2 = fa + fb - 2.0 * fm;
                    resid = resid.max(-0.5 * d2);
                    if di == 0 || dj == 0 {
                        second = second.max(d2.abs());
                    }
                }
            }
        }
        self.convexity_residual = resid;
        self.tolerance = second / 8.0;
    }
}

fn point_of(dim: usize, spec: &GridSpec, idx: usize) -> Vec<f64> {
    if dim == 1 {
        vec![spec.coord(idx)]
    } else {
        vec![spec.coord(idx / spec.points), spec.coord(idx % spec.points)]
    }
}

/// Cell index and fractional offset, extrapolating linearly off the box.
fn locate(spec: &GridSpec, x: f64) -> (usize, f64) {
    let u = (x + spec.radius) / spec.step();
    let i = (u.floor().max(0.0) as usize).min(spec.points - 2);
    (i, u - i as f64)
}

impl Evaluator for GridTable {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Piecewise (bi)linear interpolation.
    fn eval(&self, x: &[f64]) -> f64 {
        let (i, a) = locate(&self.spec, x[0]);
        if self.dim == 1 {
            return (1.0 - a) * self.at(i, 0) + a * self.at(i + 1, 0);
        }
        let (j, b) = locate(&self.spec, x[1]);
        (1.0 - a) * ((1.0 - b) * self.at(i, j) + b * self.at(i, j + 1))
            + a * ((1.0 - b) * self.at(i + 1, j) + b * self.at(i + 1, j + 1))
    }
}

/// Discrete Legendre-Fenchel transform `f*(x) = sup_p ⟨x, p⟩ − f(p)` over a
/// box.  Values on the box grid are tabulated; `eval` locates the grid
/// maximiser and polishes it against the source function, which is exact for
/// convex sources when the maximiser is interior.
#[derive(Clone)]
pub struct LegendreDual {
    source: Arc<dyn Evaluator>,
    grid: GridTable,
    dual: GridTable,
}

impl std::fmt::Debug for LegendreDual {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LegendreDual")
            .field("grid", &self.grid.spec)
            .field("convexity_residual", &self.grid.convexity_residual)
            .finish()
    }
}

/// Maximiser of `⟨x, p⟩ − f(p)` over the grid values.
fn grid_argmax(grid: &GridTable, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (idx, fv) in grid.values.iter().enumerate() {
        let p = grid.point(idx);
        let v = p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - fv;
        if v > best.1 {
            best = (idx, v);
        }
    }
    best
}

/// Dual values on the same grid; separable in two dimensions.
fn dual_values(grid: &GridTable) -> Vec<f64> {
    let c = grid.spec.coords();
    let n = c.len();
    let line = |x: f64, vals: &dyn Fn(usize) -> f64| -> f64 {
        (0..n).map(|q| x * c[q] - vals(q)).fold(f64::NEG_INFINITY, f64::max)
    };
    if grid.dim == 1 {
        return c.par_iter().map(|&x| line(x, &|q| grid.values[q])).collect();
    }
    // g(x1, p2) = sup_{p1} x1 p1 − f(p1, p2)
    let g: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, q2) = (idx / n, idx % n);
            line(c[i], &|q1| grid.values[q1 * n + q2])
        })
        .collect();
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            line(c[j], &|q2| -g[i * n + q2])
        })
        .collect()
}

impl LegendreDual {
    pub fn new(source: Arc<dyn Evaluator>, spec: GridSpec) -> Result<Self> {
        let grid = GridTable::tabulate(&*source, spec)?;
        let dual = GridTable::from_values(grid.dim, spec, dual_values(&grid))?;
        Ok(LegendreDual { source, grid, dual })
    }

    /// Source values on the grid.
    pub fn source_table(&self) -> &GridTable {
        &self.grid
    }

    /// Transform values on the grid (before polishing).
    pub fn table(&self) -> &GridTable {
        &self.dual
    }

    /// Whether the source passed the midpoint-convexity check.
    pub fn source_is_convex(&self) -> bool {
        self.grid.is_convex(1e-6)
    }

    /// Value and maximiser; `interior` is false when the maximiser sits on
    /// the edge of the box, where truncation may bias the value low.
    pub fn sup(&self, x: &[f64]) -> (f64, Vec<f64>, bool) {
        let spec = self.grid.spec;
        let (idx, gval) = grid_argmax(&self.grid, x);
        let p0 = self.grid.point(idx);
        let r = spec.radius;
        let obj = |p: &[f64]| -> f64 {
            if p.iter().any(|v| v.abs() > r) {
                return f64::NEG_INFINITY;
            }
            p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.source.eval(p)
        };
        let h = spec.step();
        let (p, v) = if self.grid.dim == 1 {
            let lo = (p0[0] - h).max(-r);
            let hi = (p0[0] + h).min(r);
            let pm = golden_max(|q| obj(&[q]), lo, hi, 1e-12);
            (vec![pm], obj(&[pm]))
        } else {
            let (q, fq) = pattern_search(|q| -obj(q), &p0, h, 1e-11);
            (q, -fq)
        };
        let (value, arg) = if v >= gval { (v, p) } else { (gval, p0) };
        let interior = arg.iter().all(|a| a.abs() < r - 0.5 * h);
        (value, arg, interior)
    }
}

impl Evaluator for LegendreDual {
    fn dim(&self) -> usize {
        self.grid.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.sup(x).0
    }
}

/// `f(p) + f*(x) − ⟨x, p⟩`, non-negative for any function and its dual.
pub fn fenchel_young_gap(f: &dyn Evaluator, dual: &dyn Evaluator, p: &[f64], x: &[f64]) -> f64 {
    f.eval(p) + dual.eval(x) - p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mather::{half_square, FnEvaluator};
    use approx::assert_abs_diff_eq;

    #[test]
    fn half_square_is_self_dual() {
        for dim in [1, 2] {
            let d = LegendreDual::new(Arc::new(half_square(dim)), GridSpec::default()).unwrap();
            assert!(d.source_is_convex());
            let x: Vec<f64> = if dim == 1 { vec![1.3] } else { vec![1.3, -0.4] };
            let expect = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
            assert_abs_diff_eq!(d.eval(&x), expect, epsilon = 1e-9);
            // Grid values within the grid tolerance.
            let t = d.table();
            for idx in (0..t.len()).step_by(37) {
                let p = t.point(idx);
                if p.iter().all(|v| v.abs() <= 3.0) {
                    let e = 0.5 * p.iter().map(|v| v * v).sum::<f64>();
                    assert!((t.values[idx] - e).abs() <= t.tolerance + 1e-12);
                }
            }
        }
    }

    #[test]
    fn shifted_quadratic_dual() {
        // β(h) = ½ℓ²h² + V₀ has dual P²/(2ℓ²) − V₀.
        let (l, v0) = (1.5, 0.3);
        let beta = FnEvaluator::new(1, move |h| 0.5 * l * l * h[0] * h[0] + v0);
        let d = LegendreDual::new(Arc::new(beta), GridSpec::default()).unwrap();
        for p in [-2.0, -0.3, 0.0, 1.7] {
            assert_abs_diff_eq!(d.eval(&[p]), p * p / (2.0 * l * l) - v0, epsilon = 1e-9);
        }
    }

    #[test]
    fn double_transform_returns_the_function() {
        let f = FnEvaluator::new(1, |p| (p[0] - 0.2).powi(4) + 0.5 * p[0] * p[0]);
        let once = LegendreDual::new(Arc::new(f.clone()), GridSpec::default()).unwrap();
        let twice = LegendreDual::new(Arc::new(once), GridSpec::default()).unwrap();
        for p in [-0.5, 0.0, 0.4, 0.9] {
            assert_abs_diff_eq!(twice.eval(&[p]), f.eval(&[p]), epsilon = 1e-7);
        }
    }

    #[test]
    fn interpolation_and_convexity_report() {
        let spec = GridSpec {
            radius: 1.0,
            points: 5,
        };
        let t = GridTable::tabulate(&half_square(2), spec).unwrap();
        assert_eq!(t.eval(&[0.5, 0.5]), 0.25);
        assert!(t.is_convex(1e-12));
        let bumpy = FnEvaluator::new(1, |p| (3.0 * p[0]).sin());
        let t = GridTable::tabulate(&bumpy, spec).unwrap();
        assert!(!t.is_convex(1e-6));
        assert!(GridSpec { radius: 1.0, points: 2 }.validate().is_err());
    }

    #[test]
    fn fenchel_young_holds() {
        let f = half_square(2);
        let d = LegendreDual::new(Arc::new(f.clone()), GridSpec::default()).unwrap();
        for (p, x) in [([0.1, 0.2], [1.0, -1.0]), ([1.0, -1.0], [1.0, -1.0])] {
            assert!(fenchel_young_gap(&f, &d, &p, &x) >= -1e-12);
        }
    }
}
