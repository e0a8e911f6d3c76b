//! Intermediate covers obtained from a surjection `f: Z^k → Z^ℓ` of the
//! deck lattice of a maximal free abelian graph cover.

use std::collections::HashMap;

use super::lattice::{identity, mat_vec, mat_vec_f, smith, vec_mat_f, IntMatrix, Smith};
use super::{
    add, check_eps, covering_radius, dijkstra_from, linf, sub, AbelianCover, CoverPoint, GraphLoc,
    GraphPoint, Norm, MAX_WINDOW_DOUBLINGS,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SubcoverMap {
    f: IntMatrix,
    smith: Smith,
    kernel: Vec<Vec<i64>>,
    cover: AbelianCover,
    quotient: AbelianCover,
}

impl SubcoverMap {
    /// `cover` must be a maximal graph cover; `f` is `ℓ×k`.
    pub fn new(cover: &AbelianCover, f: IntMatrix) -> Result<Self> {
        let graph = cover
            .graph_arc()
            .ok_or_else(|| Error::arg("subcovers are supported on graph covers only"))?;
        let k = cover.rank();
        if *cover.deck_matrix() != identity(k) {
            return Err(Error::arg("subcover base must be the maximal cover"));
        }
        let l = f.len();
        if l == 0 || f.iter().any(|row| row.len() != k) {
            return Err(Error::arg(format!("subcover matrix must be ℓ×{k} with ℓ ≥ 1")));
        }
        let s = smith(&f);
        let diag = s.diagonal();
        let rank = diag.iter().filter(|&&d| d != 0).count();
        if diag.len() < l || diag.iter().any(|d| d.abs() != 1) {
            return Err(Error::NotSurjective {
                rank,
                detail: format!("invariant factors {diag:?}, need {l} units"),
            });
        }
        let kernel = (l..k)
            .map(|j| s.v.iter().map(|row| row[j]).collect())
            .collect();
        let quotient = AbelianCover::with_deck(graph.clone(), f.clone());
        Ok(SubcoverMap {
            f,
            smith: s,
            kernel,
            cover: cover.clone(),
            quotient,
        })
    }

    pub fn identity(cover: &AbelianCover) -> Result<Self> {
        Self::new(cover, identity(cover.rank()))
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.f
    }

    pub fn ell(&self) -> usize {
        self.f.len()
    }

    pub fn k(&self) -> usize {
        self.cover.rank()
    }

    pub fn cover(&self) -> &AbelianCover {
        &self.cover
    }

    /// The intermediate cover `M̂`.
    pub fn quotient(&self) -> &AbelianCover {
        &self.quotient
    }

    /// Basis of `ker f ∩ Z^k`.
    pub fn kernel_basis(&self) -> &[Vec<i64>] {
        &self.kernel
    }

    pub(crate) fn kernel_dirs(&self) -> Vec<Vec<f64>> {
        self.kernel
            .iter()
            .map(|b| b.iter().map(|&v| v as f64).collect())
            .collect()
    }

    /// `f` on real homology.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        mat_vec_f(&self.f, h)
    }

    pub fn apply_int(&self, z: &[i64]) -> Vec<i64> {
        mat_vec(&self.f, z)
    }

    /// Pullback `f*(p) = pᵀ f`.
    pub fn pullback(&self, p: &[f64]) -> Vec<f64> {
        vec_mat_f(p, &self.f)
    }

    /// An integer `σ` with `f σ = q`.
    pub fn right_inverse(&self, q: &[i64]) -> Vec<i64> {
        let uq = mat_vec(&self.smith.u, q);
        let d = self.smith.diagonal();
        let mut w = vec![0i64; self.k()];
        for i in 0..self.ell() {
            w[i] = uq[i] / d[i];
        }
        mat_vec(&self.smith.v, &w)
    }

    /// A real `h` with `f h = z` (the integer right inverse applied to reals).
    pub fn right_inverse_f(&self, z: &[f64]) -> Vec<f64> {
        let uz = mat_vec_f(&self.smith.u, z);
        let d = self.smith.diagonal();
        let mut w = vec![0.0; self.k()];
        for i in 0..self.ell() {
            w[i] = uz[i] / d[i] as f64;
        }
        mat_vec_f(&self.smith.v, &w)
    }

    /// Covering projection `π`.
    pub fn project(&self, x: &CoverPoint) -> CoverPoint {
        match x {
            CoverPoint::Graph(gp) => CoverPoint::Graph(GraphPoint {
                loc: gp.loc,
                sheet: self.apply_int(&gp.sheet),
            }),
            CoverPoint::Torus(_) => x.clone(),
        }
    }

    /// One preimage of a quotient point.
    pub fn lift(&self, xh: &CoverPoint) -> CoverPoint {
        match xh {
            CoverPoint::Graph(gp) => CoverPoint::Graph(GraphPoint {
                loc: gp.loc,
                sheet: self.right_inverse(&gp.sheet),
            }),
            CoverPoint::Torus(_) => xh.clone(),
        }
    }

    /// `Ĝ`, satisfying `Ĝ∘π = f∘G`.
    pub fn ghat(&self, xh: &CoverPoint) -> Vec<f64> {
        self.quotient.g_map(xh)
    }

    pub fn fhat_eps(&self, xh: &CoverPoint, eps: f64) -> Result<Vec<f64>> {
        check_eps(eps)?;
        Ok(self.ghat(xh).into_iter().map(|v| eps * v).collect())
    }

    /// Density constant `B`: every point of `ker f` lies within `B` of the
    /// lattice `ker f ∩ Z^k`.
    pub fn density_constant(&self, norm: Norm) -> f64 {
        covering_radius(&self.kernel, norm)
    }

    /// Quotient norm `‖q‖_f = min{‖h‖ : f h = q}`, by minimising over the
    /// kernel directions.
    pub fn quotient_norm(&self, q: &[f64], norm: Norm) -> f64 {
        let h0 = self.right_inverse_f(q);
        crate::optim::min_affine_slice(&h0, &self.kernel_dirs(), |h| norm.norm(h), 0.5, 1e-12).1
    }

    /// `d̂(x̂, ŷ) = min d(x, y + z)` over `z ∈ ker f ∩ Z^k`, searched on a
    /// certified sheet window around a lift of `x̂`.
    pub fn quotient_distance(&self, xh: &CoverPoint, yh: &CoverPoint) -> Result<f64> {
        self.quotient.validate(xh)?;
        self.quotient.validate(yh)?;
        let x = self.cover.normalize(&self.lift(xh));
        let yh = self.quotient.normalize(yh);
        let (x, yh) = (x.as_graph().unwrap(), yh.as_graph().unwrap());
        let g = self.cover.graph().unwrap();
        let target_near = add(
            &x.sheet,
            &self.right_inverse(&sub(&yh.sheet, &self.apply_int(&x.sheet))),
        );
        let b = self.density_constant(Norm::LInf).ceil() as i64;
        let mut radius =
            linf(&sub(&target_near, &x.sheet)) + b + self.cover.window_padding();
        for doubling in 0..=MAX_WINDOW_DOUBLINGS {
            let dist = dijkstra_from(&self.cover, x, radius, f64::INFINITY);
            // Index settled lifted vertices by their image in the quotient.
            let mut by_image: HashMap<(usize, Vec<i64>), f64> = HashMap::new();
            for ((v, sheet), d) in dist.iter() {
                let e = by_image.entry((*v, self.apply_int(sheet))).or_insert(f64::INFINITY);
                *e = e.min(*d);
            }
            let look = |v: usize, s: &[i64]| {
                by_image.get(&(v, s.to_vec())).copied().unwrap_or(f64::INFINITY)
            };
            let mut best = match yh.loc {
                GraphLoc::Vertex(v) => look(v, &yh.sheet),
                GraphLoc::Edge { edge, s } => {
                    let e = g.edge(edge);
                    let hs = add(&yh.sheet, self.quotient.jump(edge));
                    (look(e.tail, &yh.sheet) + s).min(look(e.head, &hs) + e.length - s)
                }
            };
            if let (GraphLoc::Edge { edge: a, s: sa }, GraphLoc::Edge { edge: bb, s: sb }) =
                (x.loc, yh.loc)
            {
                if a == bb && self.apply_int(&x.sheet) == yh.sheet {
                    best = best.min((sa - sb).abs());
                }
            }
            if best <= dist.escape_bound() {
                return Ok(best);
            }
            if doubling == MAX_WINDOW_DOUBLINGS {
                return Err(Error::WindowExhausted {
                    radius: radius as usize,
                    doublings: doubling,
                    detail: format!("quotient distance {best} not certified"),
                });
            }
            radius *= 2;
        }
        unreachable!()
    }
}
