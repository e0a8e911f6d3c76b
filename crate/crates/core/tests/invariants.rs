//! Property tests for the structural identities the solvers must respect.

use proptest::prelude::*;

use homog_core::action::{
    lax_oleinik, lax_oleinik_scaled, minimal_action, ActionOptions, ActionQuery, InitialDatum, Scaling,
};
use homog_core::mather::{alpha_graph, beta_graph, fenchel_young_gap, FnEvaluator, GridSpec, GridTable};
use homog_core::model::{GraphLagrangian, TonelliSystem};
use homog_core::topology::{AbelianCover, CoverPoint, MetricGraph, Norm, SubcoverMap};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn eight(a: f64, b: f64) -> MetricGraph {
    MetricGraph::figure_eight(a, b).unwrap()
}

fn point(edge: usize, s: f64, sheet: [i64; 2]) -> CoverPoint {
    CoverPoint::on_edge(edge, s, sheet.to_vec())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn graph_fenchel_young(
        v in prop::array::uniform2(-0.5f64..0.5),
        lens in prop::array::uniform2(0.5f64..2.0),
        p in prop::array::uniform2(-2.0f64..2.0),
        h in prop::array::uniform2(-2.0f64..2.0),
    ) {
        let g = eight(lens[0], lens[1]);
        let lag = GraphLagrangian::new(v.to_vec()).unwrap();
        let a = alpha_graph(&g, &lag, &p).unwrap();
        let b = beta_graph(&g, &lag, &h).unwrap();
        prop_assert!(a + b >= dot(&p, &h) - 1e-9, "α + β − p·h = {}", a + b - dot(&p, &h));
    }

    #[test]
    fn graph_alpha_and_beta_are_convex(
        v in prop::array::uniform2(-0.5f64..0.5),
        x in prop::array::uniform2(-2.0f64..2.0),
        y in prop::array::uniform2(-2.0f64..2.0),
        s in 0.0f64..1.0,
    ) {
        let g = eight(1.0, 1.3);
        let lag = GraphLagrangian::new(v.to_vec()).unwrap();
        let z = [x[0] + s * (y[0] - x[0]), x[1] + s * (y[1] - x[1])];
        for f in [
            |g: &MetricGraph, l: &GraphLagrangian, q: &[f64]| alpha_graph(g, l, q).unwrap(),
            |g: &MetricGraph, l: &GraphLagrangian, q: &[f64]| beta_graph(g, l, q).unwrap(),
        ] {
            let chord = (1.0 - s) * f(&g, &lag, &x) + s * f(&g, &lag, &y);
            prop_assert!(f(&g, &lag, &z) <= chord + 1e-9);
        }
    }

    #[test]
    fn quadratic_tables_have_no_convexity_residual(c in 0.1f64..3.0, shift in -1.0f64..1.0) {
        let f = FnEvaluator::new(2, move |p: &[f64]| 0.5 * c * (p[0] * p[0] + p[1] * p[1]) + shift * p[0]);
        let t = GridTable::tabulate(&f, GridSpec { radius: 2.0, points: 17 }).unwrap();
        prop_assert!(t.convexity_residual < 1e-6);
    }

    #[test]
    fn quadratic_fenchel_young_equality(c in 0.2f64..3.0, p in -2.0f64..2.0) {
        let f = FnEvaluator::new(1, move |q: &[f64]| 0.5 * c * q[0] * q[0]);
        let d = FnEvaluator::new(1, move |h: &[f64]| 0.5 * h[0] * h[0] / c);
        prop_assert!(fenchel_young_gap(&f, &d, &[p], &[c * p]).abs() < 1e-12);
    }

    #[test]
    fn subcover_maps_are_consistent(
        row in prop::array::uniform2(-3i64..=3),
        z in -3.0f64..3.0,
        q in prop::array::uniform2(-2.0f64..2.0),
        p in -2.0f64..2.0,
    ) {
        let c = AbelianCover::maximal(eight(1.0, 1.0));
        prop_assume!(row[0].abs() == 1 || row[1].abs() == 1);
        let sub = SubcoverMap::new(&c, vec![row.to_vec()]).unwrap();
        let h = sub.right_inverse_f(&[z]);
        prop_assert!((sub.apply(&h)[0] - z).abs() < 1e-12);
        // f* is the adjoint of f.
        prop_assert!((p * sub.apply(&q)[0] - dot(&sub.pullback(&[p]), &q)).abs() < 1e-12);
        for b in sub.kernel_basis() {
            let bf: Vec<f64> = b.iter().map(|&v| v as f64).collect();
            prop_assert!(sub.apply(&bf)[0].abs() < 1e-12);
        }
    }

    #[test]
    fn cover_distance_is_a_deck_invariant_metric(
        e in prop::array::uniform3(0usize..2),
        s in prop::array::uniform3(0.0f64..1.0),
        sheets in prop::array::uniform3(prop::array::uniform2(-2i64..=2)),
        z in prop::array::uniform2(-3i64..=3),
    ) {
        let c = AbelianCover::maximal(eight(1.0, 1.5));
        let len = [1.0, 1.5];
        let pts: Vec<CoverPoint> = (0..3).map(|i| point(e[i], s[i] * len[e[i]], sheets[i])).collect();
        let d = |a: &CoverPoint, b: &CoverPoint| c.cover_distance(a, b).unwrap();
        let (x, y, w) = (&pts[0], &pts[1], &pts[2]);
        prop_assert!((d(x, y) - d(y, x)).abs() < 1e-12);
        prop_assert!(d(x, w) <= d(x, y) + d(y, w) + 1e-12);
        let (xz, yz) = (c.translate(x, &z), c.translate(y, &z));
        prop_assert!((d(x, y) - d(&xz, &yz)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn minimal_action_is_deck_equivariant(
        s in prop::array::uniform2(0.0f64..1.0),
        sheet in prop::array::uniform2(-2i64..=2),
        z in prop::array::uniform2(-3i64..=3),
        horizon in 0.5f64..3.0,
    ) {
        let c = AbelianCover::maximal(eight(1.0, 1.0));
        let sys = TonelliSystem::Graph(GraphLagrangian::new(vec![0.1, -0.2]).unwrap());
        let opts = ActionOptions::default();
        let (x, y) = (point(0, s[0], [0, 0]), point(1, s[1], sheet));
        let q = ActionQuery { start: x.clone(), end: y.clone(), horizon };
        let qz = ActionQuery { start: c.translate(&x, &z), end: c.translate(&y, &z), horizon };
        let a = minimal_action(&c, &sys, &q, &opts).unwrap();
        let b = minimal_action(&c, &sys, &qz, &opts).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn lax_oleinik_is_monotone_and_shift_covariant(
        s in 0.0f64..1.0,
        sheet in prop::array::uniform2(-2i64..=2),
        p in prop::array::uniform2(-1.0f64..1.0),
        shift in -1.0f64..1.0,
        eps in prop::sample::select(vec![0.5, 0.25]),
    ) {
        let c = AbelianCover::maximal(eight(1.0, 1.0));
        let sys = TonelliSystem::Graph(GraphLagrangian::new(vec![0.0, 0.3]).unwrap());
        let opts = ActionOptions::default();
        let x = point(1, s, sheet);
        let norm = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let v = |d: &InitialDatum| lax_oleinik(&c, &sys, d, &x, 0.5, eps, &opts).unwrap().value;
        let lo = v(&InitialDatum::affine(0.0, p.to_vec()));
        let hi = v(&InitialDatum::cone(norm, Norm::L2));
        prop_assert!(lo <= hi + 1e-9, "{lo} > {hi}");
        let shifted = v(&InitialDatum::affine(shift, p.to_vec()));
        prop_assert!((shifted - lo - shift).abs() < 1e-9);
    }

    #[test]
    fn affine_solutions_are_deck_equivariant(
        s in 0.0f64..1.0,
        z in prop::array::uniform2(-3i64..=3),
        p in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let c = AbelianCover::maximal(eight(1.0, 1.0));
        let sys = TonelliSystem::Graph(GraphLagrangian::new(vec![0.2, 0.0]).unwrap());
        let opts = ActionOptions::default();
        let d = InitialDatum::affine(0.0, p.to_vec());
        let eps = 0.25;
        let x = point(0, s, [0, 0]);
        let v0 = lax_oleinik(&c, &sys, &d, &x, 0.5, eps, &opts).unwrap().value;
        let v1 = lax_oleinik(&c, &sys, &d, &c.translate(&x, &z), 0.5, eps, &opts).unwrap().value;
        let expect = eps * (p[0] * z[0] as f64 + p[1] * z[1] as f64);
        prop_assert!((v1 - v0 - expect).abs() < 1e-9);
    }

    #[test]
    fn rescaling_forms_agree_on_graphs(
        s in 0.0f64..1.0,
        sheet in prop::array::uniform2(-2i64..=2),
        t in 0.25f64..1.0,
        eps in prop::sample::select(vec![0.5, 0.25, 0.125]),
    ) {
        let c = AbelianCover::maximal(eight(1.0, 1.0));
        let sys = TonelliSystem::Graph(GraphLagrangian::new(vec![0.2, -0.1]).unwrap());
        let d = InitialDatum::cone(1.0, Norm::L1);
        let x = point(1, s, sheet);
        let o = ActionOptions::default();
        let a = lax_oleinik_scaled(&c, &sys, &d, &x, t, eps, &o, Scaling::SlowTime).unwrap();
        let b = lax_oleinik_scaled(&c, &sys, &d, &x, t, eps, &o, Scaling::FastVelocity).unwrap();
        prop_assert!((a.value - b.value).abs() < 1e-9);
    }

    #[test]
    fn lax_oleinik_is_deterministic(s in 0.0f64..1.0, sheet in prop::array::uniform2(-2i64..=2)) {
        let c = AbelianCover::maximal(eight(1.0, 1.0));
        let sys = TonelliSystem::Graph(GraphLagrangian::new(vec![0.0, 0.3]).unwrap());
        let d = InitialDatum::cone(1.0, Norm::L1);
        let x = point(0, s, sheet);
        let o = ActionOptions::default();
        let a = lax_oleinik(&c, &sys, &d, &x, 0.5, 0.25, &o).unwrap();
        let b = lax_oleinik(&c, &sys, &d, &x, 0.5, 0.25, &o).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a, b);
    }
}

/// `v(x, t + s) = min_z v(z, t) + ε φ(z, x, s/ε)` on the single-loop cover,
/// where the minimum over a fine mesh of `z` must match from above.
#[test]
fn lax_oleinik_semigroup_on_single_loop() {
    let c = AbelianCover::maximal(MetricGraph::single_loop(1.0).unwrap());
    let sys = TonelliSystem::Graph(GraphLagrangian::uniform(1, 0.1));
    let d = InitialDatum::cone(1.0, Norm::L1);
    let o = ActionOptions::default();
    let eps = 0.5;
    let (t, s) = (0.3, 0.4);
    for x in [CoverPoint::on_edge(0, 0.25, vec![2]), CoverPoint::vertex(0, vec![-1])] {
        let whole = lax_oleinik(&c, &sys, &d, &x, t + s, eps, &o).unwrap().value;
        let mut best = f64::INFINITY;
        for n in -4i64..=4 {
            for i in 0..64 {
                let z = if i == 0 {
                    CoverPoint::vertex(0, vec![n])
                } else {
                    CoverPoint::on_edge(0, i as f64 / 64.0, vec![n])
                };
                let first = lax_oleinik(&c, &sys, &d, &z, t, eps, &o).unwrap().value;
                let q = ActionQuery {
                    start: z,
                    end: x.clone(),
                    horizon: s / eps,
                };
                best = best.min(first + eps * minimal_action(&c, &sys, &q, &o).unwrap());
            }
        }
        assert!(whole <= best + 1e-9, "{whole} > {best}");
        assert!(best - whole < 1e-3, "{whole} vs {best}");
    }
}

mod torus {
    use super::*;
    use homog_core::mather::{Evaluator, MechanicalAlpha1d};
    use homog_core::model::{TorusHamiltonian, TrigPoly};

    proptest! {
        #![proptest_config(config(24))]

        #[test]
        fn mechanical_alpha_is_even_convex_and_above_max_potential(
            amp in 0.1f64..2.0,
            p in -3.0f64..3.0,
            q in -3.0f64..3.0,
        ) {
            let h = TorusHamiltonian::mechanical(1, TrigPoly::cosine(vec![1], amp)).unwrap();
            let a = MechanicalAlpha1d::new(&h).unwrap();
            prop_assert!((a.eval(&[p]) - a.eval(&[-p])).abs() < 1e-12);
            prop_assert!(a.eval(&[p]) >= amp - 1e-12);
            let mid = a.eval(&[0.5 * (p + q)]);
            prop_assert!(mid <= 0.5 * (a.eval(&[p]) + a.eval(&[q])) + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(config(6))]

        #[test]
        fn free_affine_solution_is_exact(
            x in prop::array::uniform2(-3.0f64..3.0),
            p in prop::array::uniform2(-1.0f64..1.0),
            eps in prop::sample::select(vec![0.5, 0.125]),
        ) {
            let c = AbelianCover::torus(2).unwrap();
            let sys = TonelliSystem::Torus(TorusHamiltonian::free(2).unwrap());
            let d = InitialDatum::affine(0.1, p.to_vec());
            let t = 0.5;
            let v = lax_oleinik(&c, &sys, &d, &CoverPoint::torus(x.to_vec()), t, eps, &ActionOptions::default())
                .unwrap()
                .value;
            let expect = 0.1 + eps * dot(&p, &x) - 0.5 * dot(&p, &p) * t;
            prop_assert!((v - expect).abs() < 1e-6, "{v} vs {expect}");
        }

        #[test]
        fn pendulum_rescaling_forms_agree(x in -2.0f64..2.0, p in -0.8f64..0.8) {
            let c = AbelianCover::torus(1).unwrap();
            let sys = TonelliSystem::Torus(TorusHamiltonian::pendulum());
            let d = InitialDatum::affine(0.0, vec![p]);
            let o = ActionOptions::default();
            let pt = CoverPoint::torus(vec![x]);
            let a = lax_oleinik_scaled(&c, &sys, &d, &pt, 0.5, 0.25, &o, Scaling::SlowTime).unwrap();
            let b = lax_oleinik_scaled(&c, &sys, &d, &pt, 0.5, 0.25, &o, Scaling::FastVelocity).unwrap();
            prop_assert!((a.value - b.value).abs() < 1e-9);
        }

        #[test]
        fn pendulum_solution_is_deck_equivariant(x in 0.0f64..1.0, n in -3i64..=3) {
            let c = AbelianCover::torus(1).unwrap();
            let sys = TonelliSystem::Torus(TorusHamiltonian::pendulum());
            let d = InitialDatum::affine(0.0, vec![0.5]);
            let o = ActionOptions::default();
            let eps = 0.25;
            let v0 = lax_oleinik(&c, &sys, &d, &CoverPoint::torus(vec![x]), 0.5, eps, &o).unwrap().value;
            let v1 = lax_oleinik(&c, &sys, &d, &CoverPoint::torus(vec![x + n as f64]), 0.5, eps, &o)
                .unwrap()
                .value;
            // The mesh and screening are translated with x, so the match is
            // up to the path tolerance only.
            prop_assert!((v1 - v0 - eps * 0.5 * n as f64).abs() < 1e-6, "{v0} {v1}");
        }
    }
}
