//! Shortest paths on a finite window of sheets of a graph cover.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::{add, linf, sub, AbelianCover, GraphLoc, GraphPoint};

/// A lifted vertex: base vertex and sheet.
pub type SheetKey = (usize, Vec<i64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct MinF64(pub f64);

impl Eq for MinF64 {}

impl PartialOrd for MinF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MinF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}

/// Single-source distances to lifted vertices inside a sheet window.
#[derive(Debug, Clone)]
pub struct LiftedDistances {
    source: GraphPoint,
    dist: HashMap<SheetKey, f64>,
    escape: f64,
}

impl LiftedDistances {
    pub fn get(&self, v: usize, sheet: &[i64]) -> Option<f64> {
        self.dist.get(&(v, sheet.to_vec())).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SheetKey, &f64)> {
        self.dist.iter()
    }

    /// Every path that leaves the window (or runs past the cap) is at least
    /// this long; in-window distances not exceeding it are exact.
    pub fn escape_bound(&self) -> f64 {
        self.escape
    }

    /// Window distance to an arbitrary cover point.
    pub fn distance_to(&self, cover: &AbelianCover, _source: &GraphPoint, target: &GraphPoint) -> f64 {
        let g = cover.graph().expect("graph cover");
        let lookup = |v: usize, s: &[i64]| self.get(v, s).unwrap_or(f64::INFINITY);
        let mut best = match target.loc {
            GraphLoc::Vertex(v) => lookup(v, &target.sheet),
            GraphLoc::Edge { edge, s } => {
                let e = g.edge(edge);
                let head_sheet = add(&target.sheet, cover.jump(edge));
                (lookup(e.tail, &target.sheet) + s).min(lookup(e.head, &head_sheet) + e.length - s)
            }
        };
        if let (GraphLoc::Edge { edge: a, s: sa }, GraphLoc::Edge { edge: b, s: sb }) =
            (self.source.loc, target.loc)
        {
            if a == b && self.source.sheet == target.sheet {
                best = best.min((sa - sb).abs());
            }
        }
        best
    }
}

/// Dijkstra from `source` over lifted vertices whose sheet lies within
/// `radius` (ℓ∞) of the source sheet, stopping once distances exceed `cap`.
pub fn dijkstra_from(
    cover: &AbelianCover,
    source: &GraphPoint,
    radius: i64,
    cap: f64,
) -> LiftedDistances {
    let g = cover.graph().expect("graph cover");
    let origin = source.sheet.clone();
    let in_window = |s: &[i64]| linf(&sub(s, &origin)) <= radius;
    let mut dist: HashMap<SheetKey, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut escape = f64::INFINITY;

    type Heap = BinaryHeap<(MinF64, usize, Vec<i64>)>;
    let seed = |v: usize,
                sheet: Vec<i64>,
                d: f64,
                dist: &mut HashMap<SheetKey, f64>,
                heap: &mut Heap,
                escape: &mut f64| {
        if !in_window(&sheet) {
            *escape = escape.min(d);
            return;
        }
        let key = (v, sheet);
        if dist.get(&key).is_none_or(|&old| d < old) {
            dist.insert(key.clone(), d);
            heap.push((MinF64(d), key.0, key.1));
        }
    };

    match source.loc {
        GraphLoc::Vertex(v) => seed(v, source.sheet.clone(), 0.0, &mut dist, &mut heap, &mut escape),
        GraphLoc::Edge { edge, s } => {
            let e = g.edge(edge);
            seed(e.tail, source.sheet.clone(), s, &mut dist, &mut heap, &mut escape);
            let hs = add(&source.sheet, cover.jump(edge));
            seed(e.head, hs, e.length - s, &mut dist, &mut heap, &mut escape);
        }
    }

    let mut settled: HashMap<SheetKey, f64> = HashMap::new();
    while let Some((MinF64(d), v, sheet)) = heap.pop() {
        if d > cap {
            escape = escape.min(d);
            break;
        }
        let key = (v, sheet);
        if settled.contains_key(&key) {
            continue;
        }
        if dist.get(&key).is_some_and(|&best| d > best) {
            continue;
        }
        settled.insert(key.clone(), d);
        for &(ei, dir) in g.incidence(v) {
            let e = g.edge(ei);
            let (w, ws) = if dir > 0 {
                (e.head, add(&key.1, cover.jump(ei)))
            } else {
                (e.tail, sub(&key.1, cover.jump(ei)))
            };
            seed(w, ws, d + e.length, &mut dist, &mut heap, &mut escape);
        }
    }
    settled.retain(|_, d| *d <= cap);
    LiftedDistances {
        source: source.clone(),
        dist: settled,
        escape,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{CoverPoint, MetricGraph};

    #[test]
    fn cap_bounds_escape() {
        let c = AbelianCover::maximal(MetricGraph::single_loop(1.0).unwrap());
        let src = c.base_point();
        let d = dijkstra_from(&c, src.as_graph().unwrap(), 100, 3.5);
        assert_eq!(d.get(0, &[3]), Some(3.0));
        assert_eq!(d.get(0, &[4]), None);
        assert!(d.escape_bound() <= 4.0 + 1e-12);
    }

    #[test]
    fn window_escape_is_recorded() {
        let c = AbelianCover::maximal(MetricGraph::single_loop(1.0).unwrap());
        let src = c.base_point();
        let d = dijkstra_from(&c, src.as_graph().unwrap(), 2, f64::INFINITY);
        assert_eq!(d.escape_bound(), 3.0);
        let t = CoverPoint::vertex(0, vec![-2]);
        assert_eq!(d.distance_to(&c, src.as_graph().unwrap(), t.as_graph().unwrap()), 2.0);
    }
}
