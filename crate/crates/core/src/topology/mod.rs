//! Base spaces, their free abelian covers, the homology maps `G` and
//! `F_ε = ε G`, cover metrics, and subcovers.

mod graph;
mod lattice;
mod lifted;
mod spaces;
mod subcover;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use graph::{Edge, MetricGraph};
pub use lattice::{cartesian, covering_radius, mat_vec, mat_vec_f, smith, vec_mat_f, IntMatrix, Smith};
pub use lifted::{dijkstra_from, LiftedDistances, SheetKey};
pub use spaces::{estimate_space_convergence, SpaceConvergenceReport, SpaceRow};
pub use subcover::SubcoverMap;

use crate::error::{Error, Result};

/// Norm on homology `H₁ ≅ R^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    L1,
    L2,
    LInf,
}

impl Norm {
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::LInf => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
        }
    }

    pub fn dual(&self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => Norm::LInf.norm(v),
            Norm::L2 => Norm::L2.norm(v),
            Norm::LInf => Norm::L1.norm(v),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&d)
    }

    /// Smallest `c` with `‖v‖ ≤ c |v|₂` in dimension `k`.
    pub fn euclidean_factor(&self, k: usize) -> f64 {
        match self {
            Norm::L1 => (k as f64).sqrt(),
            Norm::L2 | Norm::LInf => 1.0,
        }
    }
}

/// Position on a metric graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GraphLoc {
    Vertex(usize),
    /// Arc length `s` from the tail, `0 < s < ℓ_e`.
    Edge { edge: usize, s: f64 },
}

/// A point of a graph cover: base location plus the sheet of the lifted
/// tail (for edge points) or of the lifted vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPoint {
    pub loc: GraphLoc,
    pub sheet: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoverPoint {
    /// A point of `R^n` covering `T^n`.
    Torus(Vec<f64>),
    Graph(GraphPoint),
}

impl CoverPoint {
    pub fn vertex(v: usize, sheet: Vec<i64>) -> Self {
        CoverPoint::Graph(GraphPoint {
            loc: GraphLoc::Vertex(v),
            sheet,
        })
    }

    pub fn on_edge(edge: usize, s: f64, sheet: Vec<i64>) -> Self {
        CoverPoint::Graph(GraphPoint {
            loc: GraphLoc::Edge { edge, s },
            sheet,
        })
    }

    pub fn torus(x: Vec<f64>) -> Self {
        CoverPoint::Torus(x)
    }

    pub fn as_graph(&self) -> Option<&GraphPoint> {
        match self {
            CoverPoint::Graph(g) => Some(g),
            CoverPoint::Torus(_) => None,
        }
    }

    pub fn as_torus(&self) -> Option<&[f64]> {
        match self {
            CoverPoint::Torus(x) => Some(x),
            CoverPoint::Graph(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Base {
    Torus { dim: usize },
    Graph(Arc<MetricGraph>),
}

/// A free abelian cover of a base space.  For graphs the deck lattice is the
/// image of the cocycle lattice under `deck` (the identity for the maximal
/// free abelian cover, a surjection `Z^k → Z^ℓ` for a subcover).  For tori
/// the cover is `R^n` and `G` is the coordinate lift from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct AbelianCover {
    base: Base,
    deck: IntMatrix,
    jumps: Vec<Vec<i64>>,
}

/// Doubling limit for sheet windows.
pub const MAX_WINDOW_DOUBLINGS: usize = 10;

impl AbelianCover {
    pub fn torus(dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::model(format!("torus dimension {dim} not in {{1, 2}}")));
        }
        Ok(AbelianCover {
            base: Base::Torus { dim },
            deck: lattice::identity(dim),
            jumps: Vec::new(),
        })
    }

    pub fn maximal(graph: MetricGraph) -> Self {
        let k = graph.rank();
        Self::with_deck(Arc::new(graph), lattice::identity(k))
    }

    pub(crate) fn with_deck(graph: Arc<MetricGraph>, deck: IntMatrix) -> Self {
        let jumps = (0..graph.edges().len())
            .map(|e| mat_vec(&deck, graph.cocycle(e)))
            .collect();
        AbelianCover {
            base: Base::Graph(graph),
            deck,
            jumps,
        }
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn graph(&self) -> Option<&MetricGraph> {
        match &self.base {
            Base::Graph(g) => Some(g),
            Base::Torus { .. } => None,
        }
    }

    pub(crate) fn graph_arc(&self) -> Option<&Arc<MetricGraph>> {
        match &self.base {
            Base::Graph(g) => Some(g),
            Base::Torus { .. } => None,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.base, Base::Torus { .. })
    }

    /// Rank of the deck lattice, i.e. the dimension of the limit space.
    pub fn rank(&self) -> usize {
        self.deck.len()
    }

    pub fn deck_matrix(&self) -> &IntMatrix {
        &self.deck
    }

    /// Sheet displacement when crossing edge `e` from tail to head.
    pub fn jump(&self, e: usize) -> &[i64] {
        &self.jumps[e]
    }

    pub fn base_point(&self) -> CoverPoint {
        match &self.base {
            Base::Torus { dim } => CoverPoint::Torus(vec![0.0; *dim]),
            Base::Graph(_) => CoverPoint::vertex(0, vec![0; self.rank()]),
        }
    }

    pub fn validate(&self, x: &CoverPoint) -> Result<()> {
        match (&self.base, x) {
            (Base::Torus { dim }, CoverPoint::Torus(p)) => {
                if p.len() != *dim || p.iter().any(|c| !c.is_finite()) {
                    return Err(Error::arg(format!("torus point {p:?} invalid for T^{dim}")));
                }
                Ok(())
            }
            (Base::Graph(g), CoverPoint::Graph(gp)) => {
                if gp.sheet.len() != self.rank() {
                    return Err(Error::arg(format!(
                        "sheet {:?} has wrong rank (expected {})",
                        gp.sheet,
                        self.rank()
                    )));
                }
                match gp.loc {
                    GraphLoc::Vertex(v) if v < g.vertex_count() => Ok(()),
                    GraphLoc::Edge { edge, s }
                        if edge < g.edges().len()
                            && s.is_finite()
                            && (0.0..=g.edge(edge).length).contains(&s) =>
                    {
                        Ok(())
                    }
                    _ => Err(Error::arg(format!("graph location {:?} invalid", gp.loc))),
                }
            }
            _ => Err(Error::arg("cover point does not match the base space")),
        }
    }

    /// Replaces edge endpoints by vertices.
    pub fn normalize(&self, x: &CoverPoint) -> CoverPoint {
        match (x, self.graph()) {
            (CoverPoint::Graph(gp), Some(g)) => match gp.loc {
                GraphLoc::Edge { edge, s } if s <= 0.0 => {
                    CoverPoint::vertex(g.edge(edge).tail, gp.sheet.clone())
                }
                GraphLoc::Edge { edge, s } if s >= g.edge(edge).length => {
                    let sheet = add(&gp.sheet, self.jump(edge));
                    CoverPoint::vertex(g.edge(edge).head, sheet)
                }
                _ => x.clone(),
            },
            _ => x.clone(),
        }
    }

    /// Deck translate `x + z`.
    pub fn translate(&self, x: &CoverPoint, z: &[i64]) -> CoverPoint {
        match x {
            CoverPoint::Torus(p) => {
                CoverPoint::Torus(p.iter().zip(z).map(|(a, b)| a + *b as f64).collect())
            }
            CoverPoint::Graph(gp) => CoverPoint::Graph(GraphPoint {
                loc: gp.loc,
                sheet: add(&gp.sheet, z),
            }),
        }
    }

    /// `G(x)`: integral of the cocycle basis from the base point.  Along a
    /// non-tree edge the form is spread uniformly over the arc length.
    pub fn g_map(&self, x: &CoverPoint) -> Vec<f64> {
        match x {
            CoverPoint::Torus(p) => p.clone(),
            CoverPoint::Graph(gp) => {
                let g = self.graph().expect("graph point on graph cover");
                let mut out: Vec<f64> = gp.sheet.iter().map(|&s| s as f64).collect();
                if let GraphLoc::Edge { edge, s } = gp.loc {
                    let frac = s / g.edge(edge).length;
                    for (o, j) in out.iter_mut().zip(self.jump(edge)) {
                        *o += frac * *j as f64;
                    }
                }
                out
            }
        }
    }

    /// `F_ε(x) = ε G(x)`.
    pub fn f_eps(&self, x: &CoverPoint, eps: f64) -> Result<Vec<f64>> {
        check_eps(eps)?;
        Ok(self.g_map(x).into_iter().map(|v| eps * v).collect())
    }

    /// Lipschitz constant of `G` with respect to the cover metric:
    /// `‖G(x) − G(y)‖ ≤ K₀ d(x, y)`.
    pub fn lipschitz_g(&self, norm: Norm) -> f64 {
        match &self.base {
            Base::Torus { dim } => norm.euclidean_factor(*dim),
            Base::Graph(g) => (0..g.edges().len())
                .filter(|&e| self.jump(e).iter().any(|&j| j != 0))
                .map(|e| {
                    let j: Vec<f64> = self.jump(e).iter().map(|&v| v as f64).collect();
                    norm.norm(&j) / g.edge(e).length
                })
                .fold(0.0, f64::max),
        }
    }

    /// Initial sheet-window padding: `ceil(diam · k / min cycle) + 1`.
    pub(crate) fn window_padding(&self) -> i64 {
        match self.graph() {
            None => 1,
            Some(g) => {
                let c = g.min_fundamental_cycle();
                let c = if c.is_finite() { c } else { g.min_length() };
                (g.diameter_bound() * g.rank().max(1) as f64 / c).ceil() as i64 + 1
            }
        }
    }

    /// Length of the shortest path in the cover.
    pub fn cover_distance(&self, x: &CoverPoint, y: &CoverPoint) -> Result<f64> {
        self.validate(x)?;
        self.validate(y)?;
        match (x, y) {
            (CoverPoint::Torus(a), CoverPoint::Torus(b)) => Ok(Norm::L2.distance(a, b)),
            (CoverPoint::Graph(a), CoverPoint::Graph(b)) => {
                let a = self.normalize(&CoverPoint::Graph(a.clone()));
                let b = self.normalize(&CoverPoint::Graph(b.clone()));
                let (a, b) = (a.as_graph().unwrap(), b.as_graph().unwrap());
                let diff = sub(&b.sheet, &a.sheet);
                let mut radius = linf(&diff) + self.window_padding();
                for doubling in 0..=MAX_WINDOW_DOUBLINGS {
                    let dist = dijkstra_from(self, a, radius, f64::INFINITY);
                    let d = dist.distance_to(self, a, b);
                    if d <= dist.escape_bound() {
                        return Ok(d);
                    }
                    if doubling == MAX_WINDOW_DOUBLINGS {
                        return Err(Error::WindowExhausted {
                            radius: radius as usize,
                            doublings: doubling,
                            detail: format!(
                                "best in-window distance {d}, escape bound {}",
                                dist.escape_bound()
                            ),
                        });
                    }
                    radius *= 2;
                }
                unreachable!()
            }
            _ => Err(Error::arg("mismatched cover points")),
        }
    }

    /// `d_ε = ε d`.
    pub fn cover_distance_eps(&self, x: &CoverPoint, y: &CoverPoint, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        Ok(eps * self.cover_distance(x, y)?)
    }

    /// Mesh of cover points on one fundamental domain (sheet zero):
    /// vertices plus `per_edge − 1` interior points per edge for graphs,
    /// cell centres for tori.
    pub fn base_mesh(&self, per_unit: usize) -> Vec<CoverPoint> {
        match &self.base {
            Base::Torus { dim } => crate::model::grid_points(*dim, per_unit)
                .into_iter()
                .map(|x| {
                    CoverPoint::Torus(x.into_iter().map(|c| c + 0.5 / per_unit as f64).collect())
                })
                .collect(),
            Base::Graph(g) => {
                let zero = vec![0; self.rank()];
                let mut pts: Vec<CoverPoint> = (0..g.vertex_count())
                    .map(|v| CoverPoint::vertex(v, zero.clone()))
                    .collect();
                for (e, edge) in g.edges().iter().enumerate() {
                    for i in 1..per_unit {
                        let s = edge.length * i as f64 / per_unit as f64;
                        pts.push(CoverPoint::on_edge(e, s, zero.clone()));
                    }
                }
                pts
            }
        }
    }
}

pub fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("scale ε = {eps} must be positive")))
    }
}

pub(crate) fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn linf(a: &[i64]) -> i64 {
    a.iter().map(|x| x.abs()).max().unwrap_or(0)
}
