//! Minimal actions `φ̃(y, x, T)` on covers and the rescaled Lax-Oleinik
//! solution `v^ε(x, t) = inf_y f_ε(y) + ε φ̃(y, x, t/ε)`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::datum::InitialDatum;
use super::graph::{self as lifted, LabelTable};
use super::path::{initial_guesses, rest_points, Knots, PathOptions, PathProblem, Start};
use crate::error::{Error, Result};
use crate::linalg::{to_vec2, Vec2};
use crate::model::{GraphLagrangian, TonelliSystem, TorusHamiltonian};
use crate::optim::golden_min;
use crate::topology::{check_eps, AbelianCover, CoverPoint, GraphLoc, GraphPoint, Norm};

/// Start point, end point and horizon of a minimal-action query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionQuery {
    pub start: CoverPoint,
    pub end: CoverPoint,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActionOptions {
    pub path: PathOptions,
    /// Candidate starting points per edge (graphs).
    pub mesh: usize,
    /// Screening points per unit length (tori).
    pub screen_per_unit: usize,
    /// Screening path segments per unit of slow time (tori).
    pub screen_segments_per_time: f64,
    /// Screened candidates passed to the full free-start solve (tori).
    pub refine_candidates: usize,
}

impl Default for ActionOptions {
    fn default() -> Self {
        ActionOptions {
            path: PathOptions::default(),
            mesh: 64,
            screen_per_unit: 8,
            screen_segments_per_time: 4.0,
            refine_candidates: 2,
        }
    }
}

/// Two equivalent ways to evaluate `v^ε`: the slow-time form (weight `ε`,
/// horizon `t/ε`, Lagrangian `L`) and the fast form (horizon `t`,
/// Lagrangian `L_ε(x, v) = L(x, εv)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scaling {
    SlowTime,
    FastVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaxOleinikOutcome {
    pub value: f64,
    pub minimizer: CoverPoint,
    /// Cover distance `d(x, y)` to the minimiser (unscaled).
    pub distance: f64,
    /// Length bound used to truncate the search.
    pub length_cap: f64,
    pub candidates: usize,
    /// Final sheet-window radius (graphs) or 0.
    pub window_radius: i64,
    pub converged: bool,
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("time {t} must be positive")))
    }
}

/// `φ̃(y, x, T)`: the least action of paths from `y` to `x` in time `T`.
pub fn minimal_action(
    cover: &AbelianCover,
    system: &TonelliSystem,
    q: &ActionQuery,
    opts: &ActionOptions,
) -> Result<f64> {
    check_time(q.horizon)?;
    cover.validate(&q.start)?;
    cover.validate(&q.end)?;
    match (system, &q.start, &q.end) {
        (TonelliSystem::Graph(l), CoverPoint::Graph(y), CoverPoint::Graph(x)) => {
            check_graph_system(cover, l)?;
            lifted::minimal_action(cover, l, y, x, q.horizon, 1.0)
        }
        (TonelliSystem::Torus(h), CoverPoint::Torus(y), CoverPoint::Torus(x)) => {
            check_torus_system(cover, h)?;
            let (y, x) = (to_vec2(y), to_vec2(x));
            let p = PathProblem {
                h,
                end: x,
                horizon: q.horizon,
                weight: 1.0,
                vscale: 1.0,
                start: Start::Fixed(y),
            };
            let inits = initial_guesses(h, y, x, q.horizon, &rest_points(h));
            Ok(p.solve(&inits, &opts.path)?.value)
        }
        _ => Err(Error::arg("system, cover and points do not match")),
    }
}

fn check_graph_system(cover: &AbelianCover, l: &GraphLagrangian) -> Result<()> {
    let g = cover.graph().ok_or_else(|| Error::arg("graph system on a torus cover"))?;
    if l.potentials().len() != g.edges().len() {
        return Err(Error::model(format!(
            "{} edge potentials for {} edges",
            l.potentials().len(),
            g.edges().len()
        )));
    }
    Ok(())
}

fn check_torus_system(cover: &AbelianCover, h: &TorusHamiltonian) -> Result<()> {
    if !cover.is_torus() || cover.rank() != h.dim() {
        return Err(Error::arg("torus system does not match the cover"));
    }
    Ok(())
}

/// Radius `C` in the scaled metric `d_ε` containing every minimiser of the
/// Lax-Oleinik formula for `F_ε(x)` in the ball of radius `compact_radius`
/// and `t` in `[times.0, times.1]`.
///
/// With growth constants `f ≥ −A‖h‖ − B`, Lipschitz constant `K` of `G`,
/// `M = K A + 1` and `L(x, w) ≥ M |w| − N`, comparing a minimiser with the
/// constant path gives
/// `C = sup_𝕂 f + A R + B + 2 ε δ + t_max (N + max L(·, 0))`.
pub fn search_radius(
    datum: &InitialDatum,
    cover: &AbelianCover,
    system: &TonelliSystem,
    eps: f64,
    compact_radius: f64,
    times: (f64, f64),
    norm: Norm,
) -> Result<f64> {
    check_eps(eps)?;
    check_time(times.0)?;
    if times.1 < times.0 {
        return Err(Error::arg("time interval is reversed"));
    }
    let k = cover.lipschitz_g(norm);
    let growth = datum.growth(norm);
    let b = system.action_bounds();
    // |v|₂ ≥ |v| in the metric of the cover; the slope is taken there.
    let m = k * growth.a + 1.0;
    let n = 0.5 * b.lambda_max * m * m - b.rest_min;
    let q = datum.sup_ball(compact_radius, norm, cover.rank());
    let delta = eps * datum.perturbation_sup();
    Ok(q + growth.a * compact_radius + growth.b + 2.0 * delta + times.1 * (n + b.rest_max))
}

/// `v^ε(x, t)` in the slow-time form.
pub fn lax_oleinik(
    cover: &AbelianCover,
    system: &TonelliSystem,
    datum: &InitialDatum,
    x: &CoverPoint,
    t: f64,
    eps: f64,
    opts: &ActionOptions,
) -> Result<LaxOleinikOutcome> {
    lax_oleinik_scaled(cover, system, datum, x, t, eps, opts, Scaling::SlowTime)
}

#[allow(clippy::too_many_arguments)]
pub fn lax_oleinik_scaled(
    cover: &AbelianCover,
    system: &TonelliSystem,
    datum: &InitialDatum,
    x: &CoverPoint,
    t: f64,
    eps: f64,
    opts: &ActionOptions,
    scaling: Scaling,
) -> Result<LaxOleinikOutcome> {
    check_time(t)?;
    check_eps(eps)?;
    cover.validate(x)?;
    datum.validate(cover.rank())?;
    match (system, x) {
        (TonelliSystem::Graph(l), CoverPoint::Graph(gx)) => {
            check_graph_system(cover, l)?;
            graph_lax(cover, l, datum, gx, t, eps, opts, scaling)
        }
        (TonelliSystem::Torus(h), CoverPoint::Torus(tx)) => {
            check_torus_system(cover, h)?;
            torus_lax(cover, h, system, datum, tx, t, eps, opts, scaling)
        }
        _ => Err(Error::arg("system, cover and point do not match")),
    }
}

/// Largest cover distance `d` at which
/// `inf f_ε + ε (d²/(2 T λ) + T min L(·,0))` can still reach `upper`.
#[allow(clippy::too_many_arguments)]
fn datum_length_cap(
    datum: &InitialDatum,
    hx: &[f64],
    eps: f64,
    lip2: f64,
    horizon: f64,
    lambda: f64,
    rest_min: f64,
    upper: f64,
) -> f64 {
    let pert = eps * datum.perturbation_sup();
    let g = |d: f64| {
        datum.lower_bound_ball(hx, eps * lip2 * d) - pert
            + eps * (d * d / (2.0 * horizon * lambda) + horizon * rest_min)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut guard = 0;
    while g(hi) <= upper && guard < 200 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= upper {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi * (1.0 + 1e-9) + 1e-9
}

#[allow(clippy::too_many_arguments)]
fn graph_lax(
    cover: &AbelianCover,
    l: &GraphLagrangian,
    datum: &InitialDatum,
    x: &GraphPoint,
    t: f64,
    eps: f64,
    opts: &ActionOptions,
    scaling: Scaling,
) -> Result<LaxOleinikOutcome> {
    let g = cover.graph().expect("graph cover");
    let xn = cover.normalize(&CoverPoint::Graph(x.clone()));
    let x = xn.as_graph().unwrap().clone();
    let slow = t / eps;
    let value_of = |table: &LabelTable, y: &GraphPoint| -> f64 {
        let cy = CoverPoint::Graph(y.clone());
        let f = datum
            .eval_cover(cover, &cy, eps)
            .expect("validated scale");
        let a = match scaling {
            Scaling::SlowTime => eps * table.action_to(cover, l, y, slow, 1.0),
            Scaling::FastVelocity => table.action_to(cover, l, y, t, eps * eps),
        };
        f + a
    };
    let rest_x = match x.loc {
        GraphLoc::Vertex(v) => g
            .incidence(v)
            .iter()
            .map(|&(e, _)| l.potential(e))
            .fold(f64::INFINITY, f64::min),
        GraphLoc::Edge { edge, .. } => l.potential(edge),
    };
    let upper = datum.eval_cover(cover, &xn, eps)? + t * rest_x;
    let cap = datum_length_cap(
        datum,
        &cover.f_eps(&xn, eps)?,
        eps,
        cover.lipschitz_g(Norm::L2),
        slow,
        1.0,
        l.min_potential(),
        upper,
    );
    let radius0 = lifted::cover_padding(cover) + 1;
    let table = LabelTable::certified(cover, l, &x, radius0, cap)?;

    // Candidates: lifted vertices and interior edge points on their edges.
    let mut cands: Vec<GraphPoint> = Vec::new();
    let mut edges_seen: HashSet<(usize, Vec<i64>)> = HashSet::new();
    let mut keys: Vec<_> = table.keys().cloned().collect();
    keys.sort();
    for (v, sheet) in &keys {
        cands.push(GraphPoint {
            loc: GraphLoc::Vertex(*v),
            sheet: sheet.clone(),
        });
        for &(e, dir) in g.incidence(*v) {
            let s = if dir > 0 {
                sheet.clone()
            } else {
                sheet.iter().zip(cover.jump(e)).map(|(a, b)| a - b).collect()
            };
            edges_seen.insert((e, s));
        }
    }
    let mut edge_list: Vec<_> = edges_seen.into_iter().collect();
    edge_list.sort();
    let m = opts.mesh.max(2);
    for (e, sheet) in &edge_list {
        let len = g.edge(*e).length;
        for i in 1..m {
            cands.push(GraphPoint {
                loc: GraphLoc::Edge {
                    edge: *e,
                    s: len * i as f64 / m as f64,
                },
                sheet: sheet.clone(),
            });
        }
    }
    if let GraphLoc::Edge { .. } = x.loc {
        cands.push(x.clone());
    }

    let (best_val, best_idx) = cands
        .par_iter()
        .enumerate()
        .map(|(i, y)| (value_of(&table, y), i))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    if !best_val.is_finite() {
        return Err(Error::Solver("no finite Lax-Oleinik candidate".into()));
    }

    // Golden-section polish on the mesh intervals around the best point.
    let best = cands[best_idx].clone();
    let mut intervals: Vec<(usize, Vec<i64>, f64, f64)> = Vec::new();
    match best.loc {
        GraphLoc::Edge { edge, s } => {
            let h = g.edge(edge).length / m as f64;
            intervals.push((edge, best.sheet.clone(), (s - h).max(0.0), (s + h).min(g.edge(edge).length)));
        }
        GraphLoc::Vertex(v) => {
            for &(e, dir) in g.incidence(v) {
                let len = g.edge(e).length;
                let h = len / m as f64;
                if dir > 0 {
                    intervals.push((e, best.sheet.clone(), 0.0, h));
                } else {
                    let s: Vec<i64> = best
                        .sheet
                        .iter()
                        .zip(cover.jump(e))
                        .map(|(a, b)| a - b)
                        .collect();
                    intervals.push((e, s, len - h, len));
                }
            }
        }
    }
    let mut result = (best_val, best);
    for (e, sheet, a, b) in intervals {
        let point = |s: f64| GraphPoint {
            loc: GraphLoc::Edge { edge: e, s },
            sheet: sheet.clone(),
        };
        let s = golden_min(|s| value_of(&table, &point(s)), a, b, 1e-12);
        let v = value_of(&table, &point(s));
        if v < result.0 {
            result = (v, point(s));
        }
    }
    let (value, y) = result;
    let distance = table.distance_to(cover, l, &y);
    Ok(LaxOleinikOutcome {
        value,
        minimizer: cover.normalize(&CoverPoint::Graph(y)),
        distance,
        length_cap: cap,
        candidates: cands.len(),
        window_radius: table.radius,
        converged: true,
    })
}

fn nodes_to_knots(nodes: &[Vec2]) -> Knots {
    let m = (nodes.len() - 1) as f64;
    nodes
        .iter()
        .enumerate()
        .map(|(i, q)| (i as f64 / m, *q))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn torus_lax(
    cover: &AbelianCover,
    h: &TorusHamiltonian,
    system: &TonelliSystem,
    datum: &InitialDatum,
    x: &[f64],
    t: f64,
    eps: f64,
    opts: &ActionOptions,
    scaling: Scaling,
) -> Result<LaxOleinikOutcome> {
    let n = h.dim();
    let slow = t / eps;
    let (horizon, weight, vscale) = match scaling {
        Scaling::SlowTime => (slow, eps, 1.0),
        Scaling::FastVelocity => (t, 1.0, eps),
    };
    let cost = |y: &[f64]| -> f64 {
        let hy: Vec<f64> = y.iter().map(|v| eps * v).collect();
        let bump = datum.perturbation_at(cover, &CoverPoint::Torus(y.to_vec()));
        datum.eval(&hy) + eps * bump
    };
    let xv = to_vec2(x);
    let b = system.action_bounds();
    let upper = cost(x) - t * h.potential(x);
    let cap = datum_length_cap(
        datum,
        &cover.f_eps(&CoverPoint::Torus(x.to_vec()), eps)?,
        eps,
        1.0,
        slow,
        b.lambda_max,
        b.rest_min,
        upper,
    );
    fn problem<'a>(
        h: &'a TorusHamiltonian,
        end: Vec2,
        (horizon, weight, vscale): (f64, f64, f64),
        start: Start<'a>,
    ) -> PathProblem<'a> {
        PathProblem {
            h,
            end,
            horizon,
            weight,
            vscale,
            start,
        }
    }
    let scales = (horizon, weight, vscale);
    let rests = rest_points(h);

    // Screening grid around x.
    let step = 1.0 / opts.screen_per_unit.max(1) as f64;
    let reach = (cap / step).ceil() as i64;
    let mut cands: Vec<(f64, Vec2)> = Vec::new();
    let range: Vec<i64> = (-reach..=reach).collect();
    let offsets: Vec<Vec2> = if n == 1 {
        range.iter().map(|&i| [i as f64 * step, 0.0]).collect()
    } else {
        range
            .iter()
            .flat_map(|&i| range.iter().map(move |&j| [i as f64 * step, j as f64 * step]))
            .collect()
    };
    for o in offsets {
        let r2 = o[0] * o[0] + o[1] * o[1];
        if r2.sqrt() > cap {
            continue;
        }
        let y = [xv[0] + o[0], xv[1] + o[1]];
        let lb = cost(&y[..n]) + eps * (r2 / (2.0 * slow * b.lambda_max) + slow * b.rest_min);
        cands.push((lb, y));
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));

    let screen_segments = if h.is_homogeneous() {
        1
    } else {
        ((opts.screen_segments_per_time * slow).ceil() as usize)
            .next_power_of_two()
            .clamp(16, 1024)
    };
    let mut screened: Vec<(f64, Vec<Vec2>)> = Vec::new();
    let mut best = f64::INFINITY;
    for (lb, y) in &cands {
        if *lb >= best {
            break;
        }
        let p = problem(h, xv, scales, Start::Fixed(*y));
        let inits = initial_guesses(h, *y, xv, slow, &rests);
        let (nodes, a) = p.solve_at(screen_segments, &inits)?;
        let v = cost(&y[..n]) + a;
        best = best.min(v);
        screened.push((v, nodes));
    }
    let screened_count = screened.len();
    screened.sort_by(|a, b| a.0.total_cmp(&b.0));
    screened.truncate(opts.refine_candidates.max(1));

    let cost_dyn: &(dyn Fn(&[f64]) -> f64 + Sync) = &cost;
    let mut out: Option<(f64, Vec2, bool)> = None;
    for (_, nodes) in &screened {
        let p = problem(h, xv, scales, Start::Free(cost_dyn));
        let sol = p.solve(&[nodes_to_knots(nodes)], &opts.path)?;
        if out.as_ref().is_none_or(|o| sol.value < o.0) {
            out = Some((sol.value, sol.nodes[0], sol.converged));
        }
    }
    let (value, y, converged) = out.ok_or_else(|| Error::Solver("no screened candidate".into()))?;
    let dist = ((y[0] - xv[0]).powi(2) + (y[1] - xv[1]).powi(2)).sqrt();
    Ok(LaxOleinikOutcome {
        value,
        minimizer: CoverPoint::Torus(y[..n].to_vec()),
        distance: dist,
        length_cap: cap,
        candidates: screened_count,
        window_radius: 0,
        converged,
    })
}
