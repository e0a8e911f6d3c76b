//! Minimal actions on graph covers by label setting over lifted vertices.
//!
//! The action of a path depends only on the length it covers at each rest
//! cost and on the cheapest place it can pause, so a label records exactly
//! those numbers and labels are compared by Pareto dominance.  With a single
//! potential this is Dijkstra's algorithm.

use std::collections::{BinaryHeap, HashMap};

use super::alloc::{allocate, Segment};
use crate::error::{Error, Result};
use crate::model::GraphLagrangian;
use crate::topology::{
    AbelianCover, GraphLoc, GraphPoint, SheetKey, MAX_WINDOW_DOUBLINGS,
};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Label {
    lengths: Vec<f64>,
    total: f64,
    rest: f64,
}

impl Label {
    fn dominates(&self, other: &Label) -> bool {
        self.rest <= other.rest
            && self.lengths.iter().zip(&other.lengths).all(|(a, b)| a <= b)
    }

    fn extended(&self, class: usize, length: f64, rest: f64) -> Label {
        let mut lengths = self.lengths.clone();
        lengths[class] += length;
        Label {
            lengths,
            total: self.total + length,
            rest: self.rest.min(rest),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Pareto labels from one source to every lifted vertex reachable within a
/// length cap and a sheet window.
#[derive(Debug, Clone)]
pub(crate) struct LabelTable {
    classes: Vec<f64>,
    class_of: Vec<usize>,
    source: GraphPoint,
    source_label: Label,
    labels: HashMap<SheetKey, Vec<Label>>,
    escape: f64,
    pub(crate) radius: i64,
}

fn classes(lag: &GraphLagrangian) -> (Vec<f64>, Vec<usize>) {
    let mut classes: Vec<f64> = Vec::new();
    let class_of = lag
        .potentials()
        .iter()
        .map(|&v| match classes.iter().position(|&c| c == v) {
            Some(i) => i,
            None => {
                classes.push(v);
                classes.len() - 1
            }
        })
        .collect();
    (classes, class_of)
}

fn vertex_rest(cover: &AbelianCover, lag: &GraphLagrangian, v: usize) -> f64 {
    let g = cover.graph().expect("graph cover");
    g.incidence(v)
        .iter()
        .map(|&(e, _)| lag.potential(e))
        .fold(f64::INFINITY, f64::min)
}

impl LabelTable {
    pub(crate) fn build(
        cover: &AbelianCover,
        lag: &GraphLagrangian,
        source: &GraphPoint,
        radius: i64,
        max_len: f64,
    ) -> LabelTable {
        let g = cover.graph().expect("graph cover");
        let (classes, class_of) = classes(lag);
        let nc = classes.len();
        let zero = Label {
            lengths: vec![0.0; nc],
            total: 0.0,
            rest: f64::INFINITY,
        };
        let in_window = |s: &[i64]| {
            s.iter()
                .zip(&source.sheet)
                .all(|(a, b)| (a - b).abs() <= radius)
        };
        let mut pool: Vec<(SheetKey, Label)> = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut escape = f64::INFINITY;
        let source_label;
        let push = |key: SheetKey,
                        label: Label,
                        pool: &mut Vec<(SheetKey, Label)>,
                        heap: &mut BinaryHeap<HeapEntry>,
                        escape: &mut f64| {
            if label.total > max_len {
                return;
            }
            if !in_window(&key.1) {
                *escape = escape.min(label.total);
                return;
            }
            heap.push(HeapEntry(label.total, pool.len()));
            pool.push((key, label));
        };
        match source.loc {
            GraphLoc::Vertex(v) => {
                source_label = Label {
                    rest: vertex_rest(cover, lag, v),
                    ..zero
                };
                push((v, source.sheet.clone()), source_label.clone(), &mut pool, &mut heap, &mut escape);
            }
            GraphLoc::Edge { edge, s } => {
                let e = g.edge(edge);
                let c = class_of[edge];
                let v_e = lag.potential(edge);
                source_label = Label { rest: v_e, ..zero };
                let tail = source_label
                    .extended(c, s, vertex_rest(cover, lag, e.tail));
                push((e.tail, source.sheet.clone()), tail, &mut pool, &mut heap, &mut escape);
                let head_sheet = add(&source.sheet, cover.jump(edge));
                let head = source_label
                    .extended(c, e.length - s, vertex_rest(cover, lag, e.head));
                push((e.head, head_sheet), head, &mut pool, &mut heap, &mut escape);
            }
        }

        let mut settled: HashMap<SheetKey, Vec<Label>> = HashMap::new();
        while let Some(HeapEntry(_, idx)) = heap.pop() {
            let (key, label) = pool[idx].clone();
            let bucket = settled.entry(key.clone()).or_default();
            if bucket.iter().any(|l| l.dominates(&label)) {
                continue;
            }
            bucket.retain(|l| !label.dominates(l));
            bucket.push(label.clone());
            let (v, sheet) = key;
            for &(ei, dir) in g.incidence(v) {
                let e = g.edge(ei);
                let (w, ws) = if dir > 0 {
                    (e.head, add(&sheet, cover.jump(ei)))
                } else {
                    (e.tail, sub(&sheet, cover.jump(ei)))
                };
                let next = label.extended(class_of[ei], e.length, vertex_rest(cover, lag, w));
                if let Some(b) = settled.get(&(w, ws.clone())) {
                    if b.iter().any(|l| l.dominates(&next)) {
                        continue;
                    }
                }
                push((w, ws), next, &mut pool, &mut heap, &mut escape);
            }
        }
        LabelTable {
            classes,
            class_of,
            source: source.clone(),
            source_label,
            labels: settled,
            escape,
            radius,
        }
    }

    /// Builds a table whose window is certified for paths up to `max_len`,
    /// doubling the sheet radius as needed.
    pub(crate) fn certified(
        cover: &AbelianCover,
        lag: &GraphLagrangian,
        source: &GraphPoint,
        initial_radius: i64,
        max_len: f64,
    ) -> Result<LabelTable> {
        let mut radius = initial_radius.max(1);
        for doubling in 0..=MAX_WINDOW_DOUBLINGS {
            let t = Self::build(cover, lag, source, radius, max_len);
            if t.escape > max_len {
                return Ok(t);
            }
            if doubling == MAX_WINDOW_DOUBLINGS {
                return Err(Error::WindowExhausted {
                    radius: radius as usize,
                    doublings: doubling,
                    detail: format!(
                        "paths of length {max_len} leave the window (escape at {})",
                        t.escape
                    ),
                });
            }
            radius *= 2;
        }
        unreachable!()
    }

    fn labels_at(&self, v: usize, sheet: &[i64]) -> &[Label] {
        self.labels
            .get(&(v, sheet.to_vec()))
            .map_or(&[], Vec::as_slice)
    }

    /// Every label that ends at `target`.
    fn labels_to(&self, cover: &AbelianCover, lag: &GraphLagrangian, target: &GraphPoint) -> Vec<Label> {
        let g = cover.graph().expect("graph cover");
        match target.loc {
            GraphLoc::Vertex(v) => self.labels_at(v, &target.sheet).to_vec(),
            GraphLoc::Edge { edge, s } => {
                let e = g.edge(edge);
                let c = self.class_of[edge];
                let v_e = lag.potential(edge);
                let mut out: Vec<Label> = self
                    .labels_at(e.tail, &target.sheet)
                    .iter()
                    .map(|l| l.extended(c, s, v_e))
                    .collect();
                let hs = add(&target.sheet, cover.jump(edge));
                out.extend(
                    self.labels_at(e.head, &hs)
                        .iter()
                        .map(|l| l.extended(c, e.length - s, v_e)),
                );
                if let GraphLoc::Edge { edge: se, s: ss } = self.source.loc {
                    if se == edge && self.source.sheet == target.sheet {
                        out.push(self.source_label.extended(c, (s - ss).abs(), v_e));
                    }
                }
                out
            }
        }
    }

    /// Shortest in-table path length to `target` (infinite if unreached).
    pub(crate) fn distance_to(&self, cover: &AbelianCover, lag: &GraphLagrangian, target: &GraphPoint) -> f64 {
        self.labels_to(cover, lag, target)
            .iter()
            .map(|l| l.total)
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimal action to `target` over horizon `t` with kinetic factor `κ`.
    pub(crate) fn action_to(
        &self,
        cover: &AbelianCover,
        lag: &GraphLagrangian,
        target: &GraphPoint,
        t: f64,
        kinetic: f64,
    ) -> f64 {
        self.labels_to(cover, lag, target)
            .iter()
            .map(|l| self.label_action(l, t, kinetic))
            .fold(f64::INFINITY, f64::min)
    }

    fn label_action(&self, l: &Label, t: f64, kinetic: f64) -> f64 {
        let segs: Vec<Segment> = self
            .classes
            .iter()
            .zip(&l.lengths)
            .map(|(&rest_cost, &length)| Segment { length, rest_cost })
            .collect();
        allocate(&segs, l.rest, t, kinetic).action
    }

    /// Lifted vertices present in the table.
    pub(crate) fn keys(&self) -> impl Iterator<Item = &SheetKey> {
        self.labels.keys()
    }
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `Λ` such that every path longer than `Λ` costs more than `upper`:
/// `κ Λ² / (2T) + min V · T ≤ upper`.
pub(crate) fn length_cap(upper: f64, vmin: f64, t: f64, kinetic: f64) -> f64 {
    let slack = (upper - vmin * t).max(0.0);
    (2.0 * t * slack / kinetic).sqrt() * (1.0 + 1e-12) + 1e-12
}

/// `φ̃(y, x, T)` on a graph cover, scaled kinetic factor `κ`.
pub(crate) fn minimal_action(
    cover: &AbelianCover,
    lag: &GraphLagrangian,
    y: &GraphPoint,
    x: &GraphPoint,
    t: f64,
    kinetic: f64,
) -> Result<f64> {
    let cy = crate::topology::CoverPoint::Graph(y.clone());
    let cx = crate::topology::CoverPoint::Graph(x.clone());
    let d = cover.cover_distance(&cy, &cx)?;
    let upper = kinetic * d * d / (2.0 * t) + lag.max_potential() * t;
    let cap = length_cap(upper, lag.min_potential(), t, kinetic);
    let radius = linf_diff(&y.sheet, &x.sheet) + cover_padding(cover);
    let table = LabelTable::certified(cover, lag, y, radius, cap)?;
    Ok(table.action_to(cover, lag, x, t, kinetic))
}

pub(crate) fn linf_diff(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0)
}

pub(crate) fn cover_padding(cover: &AbelianCover) -> i64 {
    let g = cover.graph().expect("graph cover");
    let c = g.min_fundamental_cycle();
    let c = if c.is_finite() { c } else { g.min_length() };
    (g.diameter_bound() * g.rank().max(1) as f64 / c).ceil() as i64 + 1
}
