//! Initial data: a limit datum `f` on homology and its cover version `f_ε`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{AbelianCover, CoverPoint, GraphLoc, Norm};

/// Closed-form limit data on `H₁(M, R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LimitDatum {
    /// `a + P·h`.
    Affine { a: f64, p: Vec<f64> },
    /// `c‖h‖`.
    Cone { c: f64, norm: Norm },
    /// `½ c |h|₂²` with `c ≥ 0`.
    Quadratic { c: f64 },
    /// `g(M h)` for a datum `g` on `R^ℓ` and an `ℓ×k` matrix `M`.
    Pullback {
        matrix: Vec<Vec<f64>>,
        inner: Box<LimitDatum>,
    },
}

impl LimitDatum {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            LimitDatum::Affine { a, p } => {
                if p.len() != dim {
                    return Err(Error::arg(format!(
                        "affine slope has {} entries, expected {dim}",
                        p.len()
                    )));
                }
                if !a.is_finite() || p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::arg("non-finite affine datum"));
                }
            }
            LimitDatum::Cone { c, .. } if !c.is_finite() => {
                return Err(Error::arg("non-finite cone coefficient"))
            }
            LimitDatum::Quadratic { c } if !(c.is_finite() && *c >= 0.0) => {
                return Err(Error::arg("quadratic datum needs a finite c ≥ 0"))
            }
            LimitDatum::Pullback { matrix, inner } => {
                if matrix.is_empty()
                    || matrix.iter().any(|r| r.len() != dim || r.iter().any(|v| !v.is_finite()))
                {
                    return Err(Error::arg(format!("pullback matrix must be ℓ×{dim} and finite")));
                }
                inner.validate(matrix.len())?;
            }
            _ => {}
        }
        Ok(())
    }

    fn eval(&self, h: &[f64]) -> f64 {
        match self {
            LimitDatum::Affine { a, p } => a + p.iter().zip(h).map(|(x, y)| x * y).sum::<f64>(),
            LimitDatum::Cone { c, norm } => c * norm.norm(h),
            LimitDatum::Quadratic { c } => 0.5 * c * h.iter().map(|v| v * v).sum::<f64>(),
            LimitDatum::Pullback { matrix, inner } => inner.eval(&apply(matrix, h)),
        }
    }

    fn growth(&self, norm: Norm) -> LinearGrowth {
        match self {
            LimitDatum::Affine { a, p } => LinearGrowth {
                a: norm.dual(p),
                b: (-a).max(0.0),
            },
            LimitDatum::Cone { c, norm: own } => {
                let ratio = norm_ratio(*own, norm, 2);
                LinearGrowth {
                    a: (-c).max(0.0) * ratio,
                    b: 0.0,
                }
            }
            LimitDatum::Quadratic { .. } => LinearGrowth { a: 0.0, b: 0.0 },
            LimitDatum::Pullback { matrix, inner } => {
                let g = inner.growth(norm);
                LinearGrowth {
                    a: g.a * entry_sum(matrix),
                    b: g.b,
                }
            }
        }
    }

    fn sup_ball(&self, r: f64, norm: Norm, k: usize) -> f64 {
        match self {
            LimitDatum::Affine { a, p } => a + norm.dual(p) * r,
            LimitDatum::Cone { c, norm: own } => c.max(0.0) * norm_ratio(*own, norm, k) * r,
            LimitDatum::Quadratic { c } => {
                let e = norm_ratio(Norm::L2, norm, k) * r;
                0.5 * c * e * e
            }
            LimitDatum::Pullback { matrix, inner } => {
                inner.sup_ball(entry_sum(matrix) * r, norm, matrix.len())
            }
        }
    }

    fn lower_bound_ball(&self, h: &[f64], r: f64) -> f64 {
        let e = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        match self {
            LimitDatum::Affine { p, .. } => self.eval(h) - e(p) * r,
            LimitDatum::Cone { c, norm } => {
                let k = norm.euclidean_factor(h.len());
                if *c >= 0.0 {
                    // ‖q‖ ≥ ‖h‖ − ‖q − h‖ ≥ ‖h‖ − k r.
                    c * (norm.norm(h) - k * r).max(0.0)
                } else {
                    c * (norm.norm(h) + k * r)
                }
            }
            LimitDatum::Quadratic { c } => 0.5 * c * (e(h) - r).max(0.0).powi(2),
            LimitDatum::Pullback { matrix, inner } => {
                let frob = matrix.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                inner.lower_bound_ball(&apply(matrix, h), frob * r)
            }
        }
    }
}

impl LimitDatum {
    /// Lipschitz constant with respect to `norm` on `R^k`
    /// (infinite for the quadratic family).
    pub fn lipschitz(&self, norm: Norm, k: usize) -> f64 {
        match self {
            LimitDatum::Affine { p, .. } => norm.dual(p),
            LimitDatum::Cone { c, norm: own } => c.abs() * norm_ratio(*own, norm, k),
            LimitDatum::Quadratic { c } if *c == 0.0 => 0.0,
            LimitDatum::Quadratic { .. } => f64::INFINITY,
            LimitDatum::Pullback { matrix, inner } => {
                inner.lipschitz(norm, matrix.len()) * entry_sum(matrix)
            }
        }
    }
}

fn apply(m: &[Vec<f64>], h: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(h).map(|(a, b)| a * b).sum())
        .collect()
}

/// `Σ |m_ij|` bounds every induced `ℓp` operator norm used here.
fn entry_sum(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|v| v.abs()).sum()
}

/// A bounded periodic bump `amplitude · cos(2π k·x)` on tori and
/// `amplitude · cos(2π s / ℓ_e)` along graph edges; both equal `amplitude`
/// at vertices and lattice points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    #[serde(default)]
    pub freq: Vec<i32>,
}

impl Perturbation {
    pub fn eval(&self, cover: &AbelianCover, x: &CoverPoint) -> f64 {
        match x {
            CoverPoint::Torus(p) => {
                let turns: f64 = if self.freq.is_empty() {
                    p.iter().map(|c| c.rem_euclid(1.0)).sum()
                } else {
                    self.freq
                        .iter()
                        .zip(p)
                        .map(|(&k, c)| (k as f64 * c).rem_euclid(1.0))
                        .sum()
                };
                self.amplitude * (2.0 * PI * turns).cos()
            }
            CoverPoint::Graph(gp) => match gp.loc {
                GraphLoc::Vertex(_) => self.amplitude,
                GraphLoc::Edge { edge, s } => {
                    let l = cover.graph().expect("graph cover").edge(edge).length;
                    self.amplitude * (2.0 * PI * s / l).cos()
                }
            },
        }
    }
}

/// `f` together with its cover realisation
/// `f_ε = f∘F_ε + ε·(perturbation)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDatum {
    pub limit: LimitDatum,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
}

/// Constants with `f(h) ≥ −A‖h‖ − B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGrowth {
    pub a: f64,
    pub b: f64,
}

impl InitialDatum {
    pub fn affine(a: f64, p: Vec<f64>) -> Self {
        InitialDatum {
            limit: LimitDatum::Affine { a, p },
            perturbation: None,
        }
    }

    pub fn cone(c: f64, norm: Norm) -> Self {
        InitialDatum {
            limit: LimitDatum::Cone { c, norm },
            perturbation: None,
        }
    }

    pub fn quadratic(c: f64) -> Self {
        InitialDatum {
            limit: LimitDatum::Quadratic { c },
            perturbation: None,
        }
    }

    pub fn constant(c: f64, dim: usize) -> Self {
        Self::affine(c, vec![0.0; dim])
    }

    pub fn with_perturbation(mut self, p: Perturbation) -> Self {
        self.perturbation = Some(p);
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.limit.validate(dim)?;
        if let Some(p) = &self.perturbation {
            if !p.amplitude.is_finite() {
                return Err(Error::arg("non-finite perturbation amplitude"));
            }
        }
        Ok(())
    }

    /// The same datum composed with `matrix` (`ℓ×k`), perturbation kept.
    pub fn pullback(&self, matrix: Vec<Vec<f64>>) -> Self {
        InitialDatum {
            limit: LimitDatum::Pullback {
                matrix,
                inner: Box::new(self.limit.clone()),
            },
            perturbation: self.perturbation.clone(),
        }
    }

    /// `f(h)`.
    pub fn eval(&self, h: &[f64]) -> f64 {
        self.limit.eval(h)
    }

    /// `f_ε(x)`.
    pub fn eval_cover(&self, cover: &AbelianCover, x: &CoverPoint, eps: f64) -> Result<f64> {
        let h = cover.f_eps(x, eps)?;
        Ok(self.eval(&h) + eps * self.perturbation_at(cover, x))
    }

    pub fn perturbation_at(&self, cover: &AbelianCover, x: &CoverPoint) -> f64 {
        self.perturbation.as_ref().map_or(0.0, |p| p.eval(cover, x))
    }

    /// `sup |f_ε − f∘F_ε| / ε`.
    pub fn perturbation_sup(&self) -> f64 {
        self.perturbation.as_ref().map_or(0.0, |p| p.amplitude.abs())
    }

    /// Growth constants with respect to `norm`.
    pub fn growth(&self, norm: Norm) -> LinearGrowth {
        self.limit.growth(norm)
    }

    /// `sup f` over `{‖h‖ ≤ r}` in `norm` (dimension `k`).
    pub fn sup_ball(&self, r: f64, norm: Norm, k: usize) -> f64 {
        self.limit.sup_ball(r, norm, k)
    }

    /// Lower bound of `f` on the Euclidean ball of radius `r` around `h`.
    pub fn lower_bound_ball(&self, h: &[f64], r: f64) -> f64 {
        self.limit.lower_bound_ball(h, r)
    }
}

/// Smallest `c` with `‖h‖_a ≤ c ‖h‖_b` in dimension `k` (upper estimate).
fn norm_ratio(a: Norm, b: Norm, k: usize) -> f64 {
    let k = k as f64;
    match (a, b) {
        (x, y) if x == y => 1.0,
        (Norm::L1, Norm::L2) | (Norm::L2, Norm::LInf) => k.sqrt(),
        (Norm::L1, Norm::LInf) => k,
        _ => 1.0,
    }
}
