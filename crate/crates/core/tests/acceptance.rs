//! Acceptance suite.  Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or overruns its time budget.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use homog_core::action::{
    lax_oleinik, lax_oleinik_scaled, minimal_action, ActionOptions, ActionQuery, InitialDatum, Scaling,
};
use homog_core::homogenize::{
    run_experiment, run_subcover_experiment, EvalPoint, LimitModel, LimitOptions, Scenario,
};
use homog_core::mather::{
    alpha_graph, alpha_torus_minimax, beta_from_alpha_1d, beta_graph, fenchel_young_gap, matp_check, Evaluator,
    FnEvaluator, GridSpec, GridTable, LegendreDual, MatpOptions, MechanicalAlpha1d, MinimaxOptions,
    TorusAlphaMethod,
};
use homog_core::model::{GraphLagrangian, TonelliSystem, TorusHamiltonian};
use homog_core::topology::{estimate_space_convergence, AbelianCover, CoverPoint, MetricGraph, Norm, SubcoverMap};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|j| 0.5f64.powi(j)).collect()
}

fn figure_eight(v: [f64; 2]) -> (MetricGraph, GraphLagrangian, AbelianCover) {
    let g = MetricGraph::figure_eight(1.0, 1.0).unwrap();
    let lag = GraphLagrangian::new(v.to_vec()).unwrap();
    let c = AbelianCover::maximal(g.clone());
    (g, lag, c)
}

fn graph_alpha(g: &MetricGraph, lag: &GraphLagrangian) -> Arc<dyn Evaluator> {
    let (g, lag) = (g.clone(), lag.clone());
    Arc::new(FnEvaluator::new(g.rank(), move |p| alpha_graph(&g, &lag, p).unwrap()))
}

fn graph_beta(g: &MetricGraph, lag: &GraphLagrangian) -> Arc<dyn Evaluator> {
    let (g, lag) = (g.clone(), lag.clone());
    Arc::new(FnEvaluator::new(g.rank(), move |h| beta_graph(&g, &lag, h).unwrap()))
}

fn grid_points(k: usize, radius: f64, n: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..n).map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64).collect();
    if k == 1 {
        axis.iter().map(|&a| vec![a]).collect()
    } else {
        axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect()
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// 1. Free particle: exact affine solutions and a first-order rate coming
///    only from the matching error.
fn free_exactness() -> Check {
    let mut worst_exact: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut rates = Vec::new();
    for n in [1usize, 2] {
        let cover = AbelianCover::torus(n).map_err(e)?;
        let system = TonelliSystem::Torus(TorusHamiltonian::free(n).map_err(e)?);
        let (p, points) = if n == 1 {
            (
                vec![0.75],
                vec![EvalPoint { h: vec![1.0 / 3.0], t: 0.5 }, EvalPoint { h: vec![-2.0 / 3.0], t: 1.0 }],
            )
        } else {
            (
                vec![0.75, -0.5],
                vec![
                    EvalPoint { h: vec![1.0 / 3.0, -1.0 / 3.0], t: 0.5 },
                    EvalPoint { h: vec![2.0 / 3.0, 1.0 / 3.0], t: 1.0 },
                ],
            )
        };
        let a = 0.25;
        let datum = InitialDatum::affine(a, p.clone());
        let sc = Scenario::new(format!("free-T{n}"), cover.clone(), system, datum, dyadic(0, 6), points);
        let r = run_experiment(&sc).map_err(e)?;
        let p2: f64 = p.iter().map(|v| v * v).sum();
        for row in &r.rows {
            let fx = cover.f_eps(&row.x, row.eps).map_err(e)?;
            let pf: f64 = p.iter().zip(&fx).map(|(u, w)| u * w).sum();
            worst_exact = worst_exact.max((row.v_eps - (a + pf - 0.5 * p2 * row.t)).abs());
            let matching: f64 = p.iter().zip(fx.iter().zip(&row.h)).map(|(u, (w, h))| u * (w - h)).sum();
            worst_gap = worst_gap.max((row.abs_error - matching.abs()).abs());
        }
        ensure(r.flags.pass, format!("T{n} experiment flags {:?}", r.flags))?;
        rates.push(r.rate.exponent);
    }
    ensure(worst_exact <= 1e-6, format!("affine formula deviation {worst_exact:.2e}"))?;
    ensure(worst_gap <= 1e-6, format!("error differs from matching error by {worst_gap:.2e}"))?;
    ensure(
        rates.iter().all(|r| (0.9..=1.1).contains(r)),
        format!("rates {rates:?} outside [0.9, 1.1]"),
    )?;
    Ok(format!(
        "max |v - affine| = {worst_exact:.1e}, |error - matching| = {worst_gap:.1e}, rates T1 {:.4} T2 {:.4}",
        rates[0], rates[1]
    ))
}

/// 2. Pendulum: `α(0) = max V = 1` by minimax, `β(0) = −1` by duality.
fn pendulum_alpha() -> Check {
    let h = TorusHamiltonian::pendulum();
    let opts = MinimaxOptions::default();
    let m = alpha_torus_minimax(&h, &[0.0], &opts).map_err(e)?;
    ensure((m.value - 1.0).abs() < 1e-3, format!("α(0) = {}", m.value))?;
    ensure(m.lower_bound <= m.value + 1e-12, format!("lower bound {} above value", m.lower_bound))?;
    let alpha = homog_core::mather::torus_alpha(&h, TorusAlphaMethod::Minimax(opts)).map_err(e)?;
    let dual = LegendreDual::new(alpha, GridSpec { radius: 2.0, points: 33 }).map_err(e)?;
    let beta0 = dual.eval(&[0.0]);
    ensure((beta0 + 1.0).abs() < 1e-3, format!("β(0) = {beta0}"))?;
    Ok(format!(
        "α(0) = {:.6} (lower bound {:.6}, u = 0 bound {:.6}), β(0) = {beta0:.6}",
        m.value, m.lower_bound, m.at_zero
    ))
}

/// 3. Graph α against the single-loop formula and the dual of β.
fn graph_alpha_cross() -> Check {
    let mut closed: f64 = 0.0;
    for len in [1.0, 2.5] {
        let g = MetricGraph::single_loop(len).map_err(e)?;
        for v0 in [0.0, 0.3, -0.2] {
            let lag = GraphLagrangian::uniform(1, v0);
            for p in grid_points(1, 2.0, 33) {
                let a = alpha_graph(&g, &lag, &p).map_err(e)?;
                closed = closed.max((a - (p[0] * p[0] / (2.0 * len * len) - v0)).abs());
            }
        }
    }
    ensure(closed <= 1e-9, format!("closed form deviation {closed:.2e}"))?;

    let mut report = vec![format!("closed form {closed:.1e}")];
    let cases = [
        ("loop", MetricGraph::single_loop(2.5).map_err(e)?, GraphLagrangian::uniform(1, 0.3)),
        (
            "figure-eight",
            MetricGraph::figure_eight(1.0, 1.5).map_err(e)?,
            GraphLagrangian::new(vec![0.0, 0.3]).map_err(e)?,
        ),
    ];
    for (name, g, lag) in cases {
        let dual = LegendreDual::new(graph_beta(&g, &lag), GridSpec::default()).map_err(e)?;
        let tol = (2.0 * dual.table().tolerance).min(1e-3);
        let mut worst: f64 = 0.0;
        for p in grid_points(g.rank(), 2.0, 33) {
            let a = alpha_graph(&g, &lag, &p).map_err(e)?;
            worst = worst.max((a - dual.eval(&p)).abs());
        }
        ensure(worst <= 1e-3, format!("{name}: |α − β*| = {worst:.2e} (grid tolerance {tol:.1e})"))?;
        report.push(format!("{name} |α − β*| {worst:.1e}"));
    }
    Ok(report.join(", "))
}

/// 4. Long-horizon action converges to `β`.
fn matp() -> Check {
    let mut out = Vec::new();
    let pend_cover = AbelianCover::torus(1).map_err(e)?;
    let pend = TonelliSystem::Torus(TorusHamiltonian::pendulum());
    let (_, lag, f8_cover) = figure_eight([0.0, 0.3]);
    let f8 = TonelliSystem::Graph(lag);
    for (name, cover, system) in [("pendulum", &pend_cover, &pend), ("figure-eight", &f8_cover, &f8)] {
        let model = LimitModel::build(cover, system, &LimitOptions::default()).map_err(e)?;
        let r = matp_check(cover, system, &*model.beta, &MatpOptions::default()).map_err(e)?;
        let deltas: Vec<String> = r.rows.iter().map(|row| format!("{:.4}", row.delta)).collect();
        ensure(r.passes(0.05), format!("{name} δ = [{}]", deltas.join(", ")))?;
        out.push(format!("{name} δ = [{}]", deltas.join(", ")));
    }
    Ok(out.join("; "))
}

/// 5. Homogenisation end to end on the pendulum and the figure-eight.
fn end_to_end() -> Check {
    let mut out = Vec::new();
    let pend = Scenario::new(
        "pendulum-affine",
        AbelianCover::torus(1).map_err(e)?,
        TonelliSystem::Torus(TorusHamiltonian::pendulum()),
        InitialDatum::affine(0.0, vec![0.5]),
        dyadic(0, 6),
        vec![EvalPoint { h: vec![0.5], t: 0.5 }, EvalPoint { h: vec![-1.0], t: 1.0 }],
    );
    let (_, lag, cover) = figure_eight([0.0, 0.3]);
    let f8 = Scenario::new(
        "figure-eight-cone",
        cover,
        TonelliSystem::Graph(lag),
        InitialDatum::cone(1.0, Norm::L1),
        dyadic(0, 6),
        vec![
            EvalPoint { h: vec![1.0 / 3.0, -1.0 / 3.0], t: 0.5 },
            EvalPoint { h: vec![2.0 / 3.0, 1.0 / 3.0], t: 1.0 },
        ],
    );
    for sc in [pend, f8] {
        let r = run_experiment(&sc).map_err(e)?;
        let last = r.rung_errors.last().expect("rungs");
        ensure(
            r.flags.pass && r.flags.monotone && last.max_error < r.tolerance,
            format!("{}: flags {:?}, final error {:.2e}", sc.name, r.flags, last.max_error),
        )?;
        out.push(format!(
            "{} final error {:.2e} at ε = 2^-6, rate {:.3}",
            sc.name, last.max_error, r.rate.exponent
        ));
    }
    Ok(out.join("; "))
}

/// 6. The intermediate cover of the figure-eight given by `f = (1 1)`.
fn subcover() -> Check {
    let (g, lag, cover) = figure_eight([0.0, 0.3]);
    let sub = SubcoverMap::new(&cover, vec![vec![1, 1]]).map_err(e)?;
    let mut sc = Scenario::new(
        "figure-eight-sum",
        cover,
        TonelliSystem::Graph(lag.clone()),
        InitialDatum::affine(0.0, vec![0.5]),
        dyadic(1, 5),
        vec![EvalPoint { h: vec![0.5], t: 0.5 }, EvalPoint { h: vec![-1.0], t: 1.0 }],
    );
    sc.subcover = Some(sub);
    let r = run_subcover_experiment(&sc).map_err(e)?;
    let lift = r.lift.iter().map(|l| l.difference).fold(0.0, f64::max);
    let ham = r.hamiltonian.iter().map(|h| h.difference).fold(0.0, f64::max);
    // H̄(p) is α at (p, p).
    let diag = r
        .hamiltonian
        .iter()
        .map(|h| (h.pulled_back_alpha - alpha_graph(&g, &lag, &[h.p[0], h.p[0]]).unwrap()).abs())
        .fold(0.0, f64::max);
    ensure(r.lift_ok, format!("lift difference {lift:.2e}"))?;
    ensure(r.hamiltonian_ok && diag == 0.0, format!("|H̄ − (β̂)*| = {ham:.2e}, |H̄ − α(p,p)| = {diag:.2e}"))?;
    ensure(r.kernel_ok, format!("kernel deviation {:.2e}, limit gap {:.2e}", r.kernel_deviation, r.limit_gap))?;
    ensure(r.pass, format!("quotient ladder flags {:?}", r.experiment.flags))?;
    Ok(format!(
        "lift {lift:.1e}, |H̄ − (β̂)*| {ham:.1e}, ker f deviation {:.1e}, final quotient error {:.2e}",
        r.kernel_deviation,
        r.experiment.rung_errors.last().map_or(f64::NAN, |x| x.max_error)
    ))
}

/// 7. Convergence of the rescaled covers to homology.
fn spaces() -> Check {
    let ladder = dyadic(0, 6);
    let flat = estimate_space_convergence(&AbelianCover::torus(2).map_err(e)?, &ladder, 256, Norm::L2, 7).map_err(e)?;
    ensure(flat.k == 1.0, format!("flat torus K = {}", flat.k))?;
    ensure(flat.rows.iter().all(|r| r.a_eps == 0.0), "flat torus A_ε ≠ 0".into())?;

    // ℓ¹ is the stable norm of the figure-eight, so the orbit gives K = 1.
    let (_, _, cover) = figure_eight([0.0, 0.0]);
    let r = estimate_space_convergence(&cover, &ladder, 256, Norm::L1, 7).map_err(e)?;
    let slopes: Vec<f64> = r.rows.iter().map(|row| row.a_eps / row.eps).collect();
    let (lo, hi) = slopes.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    ensure(lo > 0.0 && (hi - lo) <= 1e-9 * hi, format!("A_ε/ε ranges over [{lo}, {hi}]"))?;
    ensure(r.rows.iter().all(|row| row.a_eps <= r.a_slope * row.eps * (1.0 + 1e-9)), "A_ε above c ε".into())?;
    let radii: Vec<f64> = r.rows.iter().map(|row| row.covering_radius).collect();
    ensure(
        radii.windows(2).all(|w| w[1] < w[0]) && radii[radii.len() - 1] < 0.05,
        format!("covering radii {radii:?}"),
    )?;
    Ok(format!(
        "flat K = 1, A_ε = 0; figure-eight K = {:.4}, c = A_ε/ε = {:.6}, covering radius {:.3} -> {:.4}",
        r.k,
        r.a_slope,
        radii[0],
        radii[radii.len() - 1]
    ))
}

/// 8. Invariant suites.
fn invariants() -> Check {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // Fenchel-Young and convexity on the pendulum and the figure-eight.
    let pend = TorusHamiltonian::pendulum();
    let pa: Arc<dyn Evaluator> = Arc::new(MechanicalAlpha1d::new(&pend).map_err(e)?);
    let pb = beta_from_alpha_1d(pa.clone(), 4.0, 2049).map_err(e)?;
    let (g, lag, _) = figure_eight([0.0, 0.3]);
    let (ga, gb) = (graph_alpha(&g, &lag), graph_beta(&g, &lag));
    let mut fy_min = f64::INFINITY;
    for _ in 0..200 {
        let (p, h) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        fy_min = fy_min.min(fenchel_young_gap(&*pa, &pb, &[p], &[h]));
        let p2 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let h2 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        fy_min = fy_min.min(fenchel_young_gap(&*ga, &*gb, &p2, &h2));
    }
    ensure(fy_min >= -1e-9, format!("Fenchel-Young gap {fy_min:.2e}"))?;
    out.push(format!("FY min gap {fy_min:.1e}"));

    let mut conv: f64 = 0.0;
    let spec = GridSpec { radius: 2.0, points: 65 };
    for f in [pa.clone(), Arc::new(pb.clone()) as Arc<dyn Evaluator>, ga.clone(), gb.clone()] {
        conv = conv.max(GridTable::tabulate(&*f, spec).map_err(e)?.convexity_residual);
    }
    ensure(conv < 1e-6, format!("convexity residual {conv:.2e}"))?;
    out.push(format!("convexity {conv:.1e}"));

    // Double transform: (α*)* = α on the pendulum and the single loop.
    let lp = graph_alpha(&MetricGraph::single_loop(1.5).map_err(e)?, &GraphLagrangian::uniform(1, 0.2));
    let mut dbl: f64 = 0.0;
    for f in [pa.clone(), lp] {
        let once: Arc<dyn Evaluator> = Arc::new(LegendreDual::new(f.clone(), GridSpec::default()).map_err(e)?);
        let twice = LegendreDual::new(once, GridSpec::default()).map_err(e)?;
        for p in [-1.0, -0.4, 0.0, 0.3, 1.1] {
            dbl = dbl.max((twice.eval(&[p]) - f.eval(&[p])).abs());
        }
    }
    ensure(dbl < 1e-3, format!("double transform {dbl:.2e}"))?;
    out.push(format!("double Legendre {dbl:.1e}"));

    // Lax-Oleinik monotonicity: P·h ≤ |P| |h| gives v_affine ≤ v_cone.
    let opts = ActionOptions::default();
    let (_, f8_lag, f8) = figure_eight([0.0, 0.3]);
    let f8_sys = TonelliSystem::Graph(f8_lag);
    let pc = AbelianCover::torus(1).map_err(e)?;
    let pend_sys = TonelliSystem::Torus(pend.clone());
    let mut mono = f64::NEG_INFINITY;
    let cases: [(&AbelianCover, &TonelliSystem, Vec<f64>, CoverPoint); 2] = [
        (&f8, &f8_sys, vec![0.6, -0.3], CoverPoint::on_edge(0, 0.4, vec![1, -2])),
        (&pc, &pend_sys, vec![0.5], CoverPoint::torus(vec![2.3])),
    ];
    for (cover, sys, p, x) in &cases {
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lo = InitialDatum::affine(0.0, p.clone());
        let hi = InitialDatum::cone(norm, Norm::L2);
        for eps in [0.5, 0.25] {
            let a = lax_oleinik(cover, sys, &lo, x, 0.5, eps, &opts).map_err(e)?.value;
            let b = lax_oleinik(cover, sys, &hi, x, 0.5, eps, &opts).map_err(e)?.value;
            mono = mono.max(a - b);
        }
    }
    ensure(mono <= 1e-9, format!("monotonicity violated by {mono:.2e}"))?;
    out.push("LO monotone".into());

    // Semigroup on the figure-eight cover: v(x, t + s) = min_z v(z, t) + ε φ(z, x, s/ε).
    let eps = 0.5;
    let datum = InitialDatum::cone(1.0, Norm::L1);
    let x = CoverPoint::on_edge(1, 0.3, vec![1, 0]);
    let whole = lax_oleinik(&f8, &f8_sys, &datum, &x, 1.0, eps, &opts).map_err(e)?.value;
    let mut zs = Vec::new();
    for a in -1i64..=3 {
        for b in -2i64..=2 {
            zs.push(CoverPoint::vertex(0, vec![a, b]));
            for edge in 0..2 {
                for i in 1..32 {
                    zs.push(CoverPoint::on_edge(edge, i as f64 / 32.0, vec![a, b]));
                }
            }
        }
    }
    let mut split = f64::INFINITY;
    for z in &zs {
        let first = lax_oleinik(&f8, &f8_sys, &datum, z, 0.5, eps, &opts).map_err(e)?.value;
        let q = ActionQuery {
            start: z.clone(),
            end: x.clone(),
            horizon: 0.5 / eps,
        };
        split = split.min(first + eps * minimal_action(&f8, &f8_sys, &q, &opts).map_err(e)?);
    }
    ensure(
        whole <= split + 1e-9 && split - whole < 1e-3,
        format!("semigroup: v(t+s) = {whole}, split minimum {split}"),
    )?;
    out.push(format!("semigroup gap {:.1e}", split - whole));

    // Deck equivariance with an affine datum: v(x + z) = v(x) + ε P·z.
    let mut deck: f64 = 0.0;
    let p = vec![0.5, -0.25];
    let aff = InitialDatum::affine(0.1, p.clone());
    let base = CoverPoint::on_edge(0, 0.7, vec![0, 0]);
    let v0 = lax_oleinik(&f8, &f8_sys, &aff, &base, 0.5, 0.25, &opts).map_err(e)?.value;
    for z in [[1i64, 0], [0, -2], [3, 1]] {
        let xz = f8.translate(&base, &z);
        let v = lax_oleinik(&f8, &f8_sys, &aff, &xz, 0.5, 0.25, &opts).map_err(e)?.value;
        deck = deck.max((v - v0 - 0.25 * (p[0] * z[0] as f64 + p[1] * z[1] as f64)).abs());
        let q = ActionQuery { start: base.clone(), end: f8.translate(&base, &[1, 1]), horizon: 2.0 };
        let qz = ActionQuery {
            start: xz.clone(),
            end: f8.translate(&xz, &[1, 1]),
            horizon: 2.0,
        };
        let (a, b) = (
            minimal_action(&f8, &f8_sys, &q, &opts).map_err(e)?,
            minimal_action(&f8, &f8_sys, &qz, &opts).map_err(e)?,
        );
        deck = deck.max((a - b).abs());
    }
    ensure(deck <= 1e-9, format!("deck equivariance {deck:.2e}"))?;
    out.push(format!("deck {deck:.1e}"));

    // Rescaling identity: slow-time and fast-velocity forms agree.
    let mut resc: f64 = 0.0;
    let pend_aff = InitialDatum::affine(0.0, vec![0.5]);
    for (cover, sys, d, x) in [
        (&f8, &f8_sys, &datum, CoverPoint::on_edge(1, 0.3, vec![2, -1])),
        (&pc, &pend_sys, &pend_aff, CoverPoint::torus(vec![1.3])),
    ] {
        let a = lax_oleinik_scaled(cover, sys, d, &x, 0.5, 0.25, &opts, Scaling::SlowTime).map_err(e)?;
        let b = lax_oleinik_scaled(cover, sys, d, &x, 0.5, 0.25, &opts, Scaling::FastVelocity).map_err(e)?;
        resc = resc.max((a.value - b.value).abs());
    }
    ensure(resc < 1e-9, format!("rescaling paths differ by {resc:.2e}"))?;
    out.push(format!("rescaling {resc:.1e}"));

    // Byte-identical reruns, including under a single worker thread.
    let sc = Scenario::new(
        "rerun",
        f8.clone(),
        f8_sys.clone(),
        InitialDatum::cone(1.0, Norm::L1),
        dyadic(1, 3),
        vec![EvalPoint { h: vec![0.3, -0.2], t: 0.5 }],
    );
    let first = serde_json::to_string(&run_experiment(&sc).map_err(e)?).map_err(e)?;
    let second = serde_json::to_string(&run_experiment(&sc).map_err(e)?).map_err(e)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(e)?;
    let serial = pool.install(|| run_experiment(&sc)).map_err(e)?;
    let third = serde_json::to_string(&serial).map_err(e)?;
    ensure(first == second && first == third, "reruns differ".into())?;
    out.push("reruns identical".into());

    Ok(out.join(", "))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Check); 8] = [
        ("free-system exactness", 10, free_exactness),
        ("pendulum effective Hamiltonian", 60, pendulum_alpha),
        ("graph α cross-validation", 30, graph_alpha_cross),
        ("long-horizon action convergence", 300, matp),
        ("homogenisation end to end", 600, end_to_end),
        ("subcover homogenisation", 300, subcover),
        ("convergence of spaces", 30, spaces),
        ("invariant suites", 600, invariants),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let over = took > Duration::from_secs(*budget);
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over the {budget} s budget; {d}")),
            (Err(m), _) => ("FAIL", m.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "{status} criterion {} ({name}) [{:.1} s / {budget} s]: {detail}",
            i + 1,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
