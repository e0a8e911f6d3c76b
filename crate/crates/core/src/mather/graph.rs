//! `α` and `β` for quadratic Lagrangians `½v² + V_e` on metric graphs.

use crate::action::{allocate, Segment};
use crate::error::{Error, Result};
use crate::model::GraphLagrangian;
use crate::topology::MetricGraph;

fn check(graph: &MetricGraph, lag: &GraphLagrangian, v: &[f64], what: &str) -> Result<()> {
    if lag.potentials().len() != graph.edges().len() {
        return Err(Error::model(format!(
            "{} edge potentials for {} edges",
            lag.potentials().len(),
            graph.edges().len()
        )));
    }
    if v.len() != graph.rank() {
        return Err(Error::arg(format!(
            "{what} has {} entries, the graph has rank {}",
            v.len(),
            graph.rank()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg(format!("{what} is not finite")));
    }
    Ok(())
}

fn dot(a: &[f64], z: &[i64]) -> f64 {
    a.iter().zip(z).map(|(x, &y)| x * y as f64).sum()
}

/// True when some closed curve has negative `(L − P + k)`-action.  With the
/// time optimised out, traversing edge `e` costs `ℓ_e √(2(V_e + k)) ∓ P·z_e`.
pub(crate) fn has_negative_cycle(graph: &MetricGraph, lag: &GraphLagrangian, p: &[f64], k: f64) -> bool {
    let n = graph.vertex_count();
    let mut arcs = Vec::with_capacity(2 * graph.edges().len());
    for (i, e) in graph.edges().iter().enumerate() {
        let base = e.length * (2.0 * (lag.potential(i) + k)).max(0.0).sqrt();
        let pz = dot(p, graph.cocycle(i));
        arcs.push((e.tail, e.head, base - pz));
        arcs.push((e.head, e.tail, base + pz));
    }
    let scale = 1.0 + arcs.iter().map(|a| a.2.abs()).fold(0.0, f64::max);
    let slack = 1e-14 * scale;
    let mut d = vec![0.0f64; n];
    for _ in 0..n {
        let mut changed = false;
        for &(u, v, w) in &arcs {
            if d[u] + w < d[v] - slack {
                d[v] = d[u] + w;
                changed = true;
            }
        }
        if !changed {
            return false;
        }
    }
    true
}

/// Mather's `α(P)` as the least `k` for which every closed curve has
/// non-negative `(L − P + k)`-action, by bisection on a negative-cycle test.
pub fn alpha_graph(graph: &MetricGraph, lag: &GraphLagrangian, p: &[f64]) -> Result<f64> {
    check(graph, lag, p, "cohomology vector")?;
    let floor = -lag.min_potential();
    let mut lo = floor + 1e-12;
    if !has_negative_cycle(graph, lag, p, lo) {
        return Ok(floor);
    }
    // Each arc is non-negative once ℓ√(2(V + k)) ≥ |P·z|.
    let mut hi = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let pz = dot(p, graph.cocycle(i));
            pz * pz / (2.0 * e.length * e.length) - lag.potential(i)
        })
        .fold(lo, f64::max);
    while has_negative_cycle(graph, lag, p, hi) {
        hi += 1.0 + hi.abs();
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if has_negative_cycle(graph, lag, p, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Signed edge flow of the circulation with homology rate `h`: the
/// combination `Σ h_j c_j` of fundamental cycles.
pub fn circulation(graph: &MetricGraph, h: &[f64]) -> Vec<f64> {
    let mut flow = vec![0.0; graph.edges().len()];
    for (j, hj) in h.iter().enumerate() {
        for (f, c) in flow.iter_mut().zip(graph.fundamental_cycle(j)) {
            *f += hj * c as f64;
        }
    }
    flow
}

/// Mather's `β(h)`: least average action of circulations with homology rate
/// `h`.  Net edge flows are fixed by `h`, so the problem reduces to sharing
/// one unit of time between the traversed lengths and a pause at the
/// cheapest edge.
pub fn beta_graph(graph: &MetricGraph, lag: &GraphLagrangian, h: &[f64]) -> Result<f64> {
    check(graph, lag, h, "homology vector")?;
    let flow = circulation(graph, h);
    let segments: Vec<Segment> = flow
        .iter()
        .enumerate()
        .map(|(i, f)| Segment {
            length: graph.edge(i).length * f.abs(),
            rest_cost: lag.potential(i),
        })
        .collect();
    Ok(allocate(&segments, lag.min_potential(), 1.0, 1.0).action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_loop_closed_forms() {
        for (l, v0) in [(1.0, 0.0), (2.0, 0.5), (0.7, -1.3)] {
            let g = MetricGraph::single_loop(l).unwrap();
            let lag = GraphLagrangian::uniform(1, v0);
            for p in [-3.0, -0.4, 0.0, 1.1, 2.5] {
                let a = alpha_graph(&g, &lag, &[p]).unwrap();
                assert_abs_diff_eq!(a, p * p / (2.0 * l * l) - v0, epsilon = 1e-9);
            }
            for h in [-2.0, 0.0, 0.3, 1.0] {
                let b = beta_graph(&g, &lag, &[h]).unwrap();
                assert_abs_diff_eq!(b, 0.5 * l * l * h * h + v0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_cohomology_gives_minus_min_potential() {
        let g = MetricGraph::figure_eight(1.0, 2.0).unwrap();
        let lag = GraphLagrangian::new(vec![0.3, -0.2]).unwrap();
        assert_abs_diff_eq!(alpha_graph(&g, &lag, &[0.0, 0.0]).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn figure_eight_second_loop_unused() {
        let g = MetricGraph::figure_eight(1.0, 1.0).unwrap();
        let lag = GraphLagrangian::uniform(2, 0.0);
        for p in [0.5, 1.0, 2.0] {
            let a = alpha_graph(&g, &lag, &[p, 0.0]).unwrap();
            assert_abs_diff_eq!(a, p * p / 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn figure_eight_beta_matches_cycle_weight_grid() {
        // Brute force: spend fraction w of the time on loop 1, 1 − w on loop 2.
        let g = MetricGraph::figure_eight(1.0, 1.0).unwrap();
        let lag = GraphLagrangian::uniform(2, 0.0);
        let h = [1.0, 1.0];
        let mut best = f64::INFINITY;
        for i in 1..64 {
            let w = i as f64 / 64.0;
            best = best.min(0.5 * h[0] * h[0] / w + 0.5 * h[1] * h[1] / (1.0 - w));
        }
        let b = beta_graph(&g, &lag, &h).unwrap();
        assert!(b <= best + 1e-12);
        assert_abs_diff_eq!(b, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn beta_is_even_and_alpha_shift_covariant() {
        let g = MetricGraph::figure_eight(1.0, 1.5).unwrap();
        let lag = GraphLagrangian::new(vec![0.1, 0.4]).unwrap();
        for h in [[0.3, -0.7], [1.2, 0.5]] {
            let a = beta_graph(&g, &lag, &h).unwrap();
            let b = beta_graph(&g, &lag, &[-h[0], -h[1]]).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        let p = [0.8, -1.1];
        let a = alpha_graph(&g, &lag, &p).unwrap();
        let s = alpha_graph(&g, &lag.shifted(0.25), &p).unwrap();
        assert_abs_diff_eq!(s, a - 0.25, epsilon = 1e-10);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let g = MetricGraph::figure_eight(1.0, 1.0).unwrap();
        let lag = GraphLagrangian::uniform(2, 0.0);
        assert!(alpha_graph(&g, &lag, &[1.0]).is_err());
        assert!(beta_graph(&g, &lag, &[f64::NAN, 0.0]).is_err());
    }
}
