//! Ladders of `v^ε` against the Hopf-Lax limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::limit::{LimitModel, LimitOptions};
use crate::action::{hopf_lax, lax_oleinik, ActionOptions, InitialDatum, LimitDatum};
use crate::error::{Error, Result};
use crate::model::TonelliSystem;
use crate::topology::{
    estimate_space_convergence, AbelianCover, CoverPoint, Norm, SpaceConvergenceReport, SubcoverMap,
};

/// A point `(h, t)` of `H₁ × (0, ∞)` where `v^ε` is compared with `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub h: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Floor of the pass threshold at the smallest `ε`.
    pub homogenization: f64,
    /// The threshold is `max(homogenization, mesh_factor × mesh tolerance)`.
    pub mesh_factor: f64,
    /// Allowed relative increase between consecutive rungs.
    pub monotone_slack: f64,
    /// Subcover lift identity, added to the mesh tolerance.
    pub lift: f64,
    /// `H̄` against the dual of `β̂`.
    pub duality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            homogenization: 1e-2,
            mesh_factor: 10.0,
            monotone_slack: 0.05,
            lift: 1e-9,
            duality: 1e-3,
        }
    }
}

/// Everything needed to run a homogenisation experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub cover: AbelianCover,
    pub system: TonelliSystem,
    pub datum: InitialDatum,
    /// Strictly decreasing scales.
    pub ladder: Vec<f64>,
    pub points: Vec<EvalPoint>,
    pub norm: Norm,
    /// Matching mesh: points per unit (tori) or per edge (graphs).
    pub match_mesh: usize,
    pub action: ActionOptions,
    pub limit: LimitOptions,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// Pair samples for the space-convergence summary (0 skips it).
    pub space_samples: usize,
    pub subcover: Option<SubcoverMap>,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        cover: AbelianCover,
        system: TonelliSystem,
        datum: InitialDatum,
        ladder: Vec<f64>,
        points: Vec<EvalPoint>,
    ) -> Self {
        Scenario {
            name: name.into(),
            cover,
            system,
            datum,
            ladder,
            points,
            norm: Norm::default(),
            match_mesh: 8,
            action: ActionOptions::default(),
            limit: LimitOptions::default(),
            tolerances: Tolerances::default(),
            seed: 0,
            space_samples: 128,
            subcover: None,
        }
    }

    /// Dimension of the homology space the evaluation points live in.
    pub fn homology_dim(&self) -> usize {
        self.subcover.as_ref().map_or(self.cover.rank(), SubcoverMap::ell)
    }

    pub fn validate(&self) -> Result<()> {
        validate_ladder(&self.ladder)?;
        if self.points.is_empty() {
            return Err(Error::arg("scenario has no evaluation points"));
        }
        let k = self.homology_dim();
        for (i, p) in self.points.iter().enumerate() {
            if p.h.len() != k || p.h.iter().any(|v| !v.is_finite()) {
                return Err(Error::arg(format!("evaluation point {i} is not a finite {k}-vector")));
            }
            if !(p.t > 0.0 && p.t.is_finite()) {
                return Err(Error::arg(format!("evaluation point {i} has t = {} ≤ 0", p.t)));
            }
        }
        if self.match_mesh == 0 {
            return Err(Error::arg("matching mesh must be positive"));
        }
        self.datum.validate(k)
    }
}

pub(crate) fn validate_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::arg("empty ε ladder"));
    }
    if ladder.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::arg("ε ladder entries must be positive"));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::arg("ε ladder must be strictly decreasing"));
    }
    Ok(())
}

/// Mesh point whose `F_ε`-image is nearest to `h`: base mesh points shifted
/// by the nearest deck translate, ties broken by lexicographic sheet order.
pub fn match_point(
    cover: &AbelianCover,
    h: &[f64],
    eps: f64,
    mesh: &[CoverPoint],
    norm: Norm,
) -> Result<(CoverPoint, f64)> {
    crate::topology::check_eps(eps)?;
    let mut best: Option<(f64, Vec<i64>, CoverPoint)> = None;
    for b in mesh {
        let g = cover.g_map(b);
        let sigma: Vec<i64> = h.iter().zip(&g).map(|(hi, gi)| (hi / eps - gi).round() as i64).collect();
        let x = cover.translate(b, &sigma);
        let fx = cover.f_eps(&x, eps)?;
        let d = norm.distance(&fx, h);
        let better = match &best {
            None => true,
            Some((bd, bs, _)) => d < *bd || (d == *bd && sigma < *bs),
        };
        if better {
            best = Some((d, sigma, x));
        }
    }
    let (d, _, x) = best.ok_or_else(|| Error::arg("empty matching mesh"))?;
    Ok((x, d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub point: usize,
    pub h: Vec<f64>,
    pub t: f64,
    pub eps: f64,
    pub x: CoverPoint,
    /// `‖F_ε(x_ε) − h‖`.
    pub match_error: f64,
    pub v_eps: f64,
    pub u_limit: f64,
    pub abs_error: f64,
    pub candidates: usize,
    pub window_radius: i64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RungError {
    pub eps: f64,
    pub max_error: f64,
}

/// Least-squares fit `log error = log C + r log ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub constant: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub rungs: usize,
}

/// Fit over the last `last` pairs with positive error; `NaN` exponent when
/// fewer than two remain.
pub fn fit_rate(eps: &[f64], err: &[f64], last: usize) -> RateFit {
    let start = eps.len().saturating_sub(last);
    let pts: Vec<(f64, f64)> = eps[start..]
        .iter()
        .zip(&err[start..])
        .filter(|(_, e)| **e > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return RateFit {
            exponent: f64::NAN,
            constant: f64::NAN,
            residual: f64::NAN,
            rungs: n,
        };
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let r = sxy / sxx;
    let c = my - r * mx;
    let residual = (pts.iter().map(|p| (p.1 - c - r * p.0).powi(2)).sum::<f64>() / nf).sqrt();
    RateFit {
        exponent: r,
        constant: c.exp(),
        residual,
        rungs: n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub tolerance: f64,
    pub pass: bool,
}

fn sample_preimage(cover: &AbelianCover, h: &[f64], eps: f64, rng: &mut ChaCha8Rng) -> CoverPoint {
    let base = match cover.graph() {
        None => CoverPoint::torus((0..cover.rank()).map(|_| rng.gen::<f64>()).collect()),
        Some(g) => {
            let e = rng.gen_range(0..g.edges().len());
            let s = g.edge(e).length * rng.gen::<f64>();
            cover.normalize(&CoverPoint::on_edge(e, s, vec![0; cover.rank()]))
        }
    };
    let gb = cover.g_map(&base);
    let sigma: Vec<i64> = h.iter().zip(&gb).map(|(a, b)| (a / eps - b).round() as i64).collect();
    cover.translate(&base, &sigma)
}

/// `sup |f_ε(x) − f(F_ε(x))|` over samples with `F_ε(x)` near the ball of
/// radius `radius`, per `ε`.  Passes when nonincreasing and below
/// `tolerance` at the last rung.
pub fn function_convergence_check(
    datum: &InitialDatum,
    cover: &AbelianCover,
    ladder: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<FunctionConvergenceReport> {
    validate_ladder(ladder)?;
    datum.validate(cover.rank())?;
    let k = cover.rank();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..k).map(|_| rng.gen_range(-radius..=radius)).collect())
        .collect();
    let mut rows = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let mut sup: f64 = 0.0;
        for h in &targets {
            let x = sample_preimage(cover, h, eps, &mut rng);
            let fe = datum.eval_cover(cover, &x, eps)?;
            let f = datum.eval(&cover.f_eps(&x, eps)?);
            sup = sup.max((fe - f).abs());
        }
        rows.push(ConvergenceRow { eps, residual: sup });
    }
    let mono = rows.windows(2).all(|w| w[1].residual <= w[0].residual);
    let pass = mono && rows.last().is_some_and(|r| r.residual < tolerance);
    Ok(FunctionConvergenceReport {
        rows,
        tolerance,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFlags {
    pub final_ok: bool,
    pub rate_ok: bool,
    pub monotone: bool,
    /// `min_ε v^ε ≥ u − slack` at every point.
    pub sandwich: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_window_radius: i64,
    pub max_candidates: usize,
    pub all_converged: bool,
    pub mesh_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: String,
    pub rows: Vec<ExperimentRow>,
    pub rung_errors: Vec<RungError>,
    pub rate: RateFit,
    pub tolerance: f64,
    pub datum_convergence: FunctionConvergenceReport,
    pub spaces: Option<SpaceConvergenceReport>,
    pub flags: ExperimentFlags,
    pub diagnostics: Diagnostics,
}

/// The ladder of `v^ε` values against `u`, without building limit models.
pub(crate) fn run_ladder(
    sc: &Scenario,
    cover: &AbelianCover,
    datum: &InitialDatum,
    beta: &dyn crate::mather::Evaluator,
) -> Result<ExperimentReport> {
    let mesh = cover.base_mesh(sc.match_mesh);
    let limits: Vec<f64> = sc
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            hopf_lax(beta, datum, &p.h, p.t)
                .map(|o| o.value)
                .map_err(|e| e.context(&format!("{} point {i}", sc.name)))
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, f64)> = (0..sc.points.len())
        .flat_map(|i| sc.ladder.iter().map(move |&e| (i, e)))
        .collect();
    let rows: Vec<ExperimentRow> = jobs
        .par_iter()
        .map(|&(i, eps)| -> Result<ExperimentRow> {
            let p = &sc.points[i];
            let ctx = || format!("{} point {i} (h = {:?}, t = {}), ε = {eps}", sc.name, p.h, p.t);
            let (x, match_error) = match_point(cover, &p.h, eps, &mesh, sc.norm).map_err(|e| e.context(&ctx()))?;
            let o = lax_oleinik(cover, &sc.system, datum, &x, p.t, eps, &sc.action)
                .map_err(|e| e.context(&ctx()))?;
            Ok(ExperimentRow {
                point: i,
                h: p.h.clone(),
                t: p.t,
                eps,
                x,
                match_error,
                v_eps: o.value,
                u_limit: limits[i],
                abs_error: (o.value - limits[i]).abs(),
                candidates: o.candidates,
                window_radius: o.window_radius,
                converged: o.converged,
            })
        })
        .collect::<Result<_>>()?;

    let rung_errors: Vec<RungError> = sc
        .ladder
        .iter()
        .map(|&eps| RungError {
            eps,
            max_error: rows
                .iter()
                .filter(|r| r.eps == eps)
                .map(|r| r.abs_error)
                .fold(0.0, f64::max),
        })
        .collect();
    let eps: Vec<f64> = rung_errors.iter().map(|r| r.eps).collect();
    let errs: Vec<f64> = rung_errors.iter().map(|r| r.max_error).collect();
    let rate = fit_rate(&eps, &errs, 4);

    let mesh_tolerance = sc.action.path.tolerance;
    let tolerance = sc
        .tolerances
        .homogenization
        .max(sc.tolerances.mesh_factor * mesh_tolerance);
    let last = *errs.last().expect("non-empty ladder");
    let exact = last <= 1e-12;
    let final_ok = last < tolerance;
    let rate_ok = exact || rate.exponent > 0.0;
    let slack = 1.0 + sc.tolerances.monotone_slack;
    let monotone = errs.windows(2).skip(1).all(|w| w[1] <= slack * w[0] + 1e-12);
    let lip = datum.limit.lipschitz(sc.norm, sc.homology_dim());
    let sandwich = (0..sc.points.len()).all(|i| {
        let mine = rows.iter().filter(|r| r.point == i);
        let (vmin, merr) = mine.fold((f64::INFINITY, 0.0f64), |(v, m), r| {
            (v.min(r.v_eps), m.max(r.match_error))
        });
        let slack = mesh_tolerance + lip * merr;
        !(vmin < limits[i] - slack)
    });

    let space_ladder_ok = sc.space_samples >= 100;
    let spaces = if space_ladder_ok {
        Some(estimate_space_convergence(cover, &sc.ladder, sc.space_samples, sc.norm, sc.seed)?)
    } else {
        None
    };
    let radius = sc
        .points
        .iter()
        .map(|p| p.h.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(1.0, f64::max);
    let datum_convergence =
        function_convergence_check(datum, cover, &sc.ladder, radius, 64, sc.seed, tolerance)?;

    let diagnostics = Diagnostics {
        max_window_radius: rows.iter().map(|r| r.window_radius).max().unwrap_or(0),
        max_candidates: rows.iter().map(|r| r.candidates).max().unwrap_or(0),
        all_converged: rows.iter().all(|r| r.converged),
        mesh_tolerance,
    };
    Ok(ExperimentReport {
        scenario: sc.name.clone(),
        rows,
        rung_errors,
        rate,
        tolerance,
        datum_convergence,
        spaces,
        flags: ExperimentFlags {
            final_ok,
            rate_ok,
            monotone,
            sandwich,
            pass: final_ok && rate_ok && monotone && sandwich,
        },
        diagnostics,
    })
}

/// Runs `v^ε(x_ε, t)` along the ladder at every evaluation point, matched
/// to `h` through `F_ε`, and compares with `u(h, t)` from the Hopf-Lax
/// formula with `β` of the system.
pub fn run_experiment(sc: &Scenario) -> Result<ExperimentReport> {
    sc.validate()?;
    if sc.subcover.is_some() {
        return Err(Error::arg("scenario has a subcover; use run_subcover_experiment"));
    }
    let model = LimitModel::build(&sc.cover, &sc.system, &sc.limit)
        .map_err(|e| e.context(&sc.name))?;
    run_ladder(sc, &sc.cover, &sc.datum, &*model.beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineRow {
    pub eps: f64,
    /// Largest `|v^ε(x_ε, t) − (a + P·F_ε(x_ε) − α(P) t)|` on the rung.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineCheckReport {
    pub alpha: f64,
    pub rows: Vec<AffineRow>,
    /// `max deviation / ε` over the first half of the ladder.
    pub fitted_c: f64,
    pub mesh_tolerance: f64,
    pub pass: bool,
}

/// Checks `v^ε ≈ a + P·F_ε(x) − α(P) t` up to `C ε`.  `C` is fitted on the
/// first half of the ladder; the check passes when every later rung obeys
/// `deviation ≤ 1.05 C ε + 10 × mesh tolerance`.
pub fn affine_datum_check(sc: &Scenario, alpha: f64) -> Result<AffineCheckReport> {
    sc.validate()?;
    let (a, p) = match &sc.datum.limit {
        LimitDatum::Affine { a, p } => (*a, p.clone()),
        _ => return Err(Error::arg("affine check needs an affine datum")),
    };
    let mesh = sc.cover.base_mesh(sc.match_mesh);
    let jobs: Vec<(usize, f64)> = (0..sc.points.len())
        .flat_map(|i| sc.ladder.iter().map(move |&e| (i, e)))
        .collect();
    let devs: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(i, eps)| -> Result<(f64, f64)> {
            let pt = &sc.points[i];
            let (x, _) = match_point(&sc.cover, &pt.h, eps, &mesh, sc.norm)?;
            let v = lax_oleinik(&sc.cover, &sc.system, &sc.datum, &x, pt.t, eps, &sc.action)?.value;
            let fx = sc.cover.f_eps(&x, eps)?;
            let lin = a + p.iter().zip(&fx).map(|(u, w)| u * w).sum::<f64>() - alpha * pt.t;
            Ok((eps, (v - lin).abs()))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<AffineRow> = sc
        .ladder
        .iter()
        .map(|&eps| AffineRow {
            eps,
            deviation: devs.iter().filter(|d| d.0 == eps).map(|d| d.1).fold(0.0, f64::max),
        })
        .collect();
    let half = rows.len().div_ceil(2);
    let fitted_c = rows[..half].iter().map(|r| r.deviation / r.eps).fold(0.0, f64::max);
    let mesh_tolerance = sc.action.path.tolerance;
    let pass = rows[half..]
        .iter()
        .all(|r| r.deviation <= 1.05 * fitted_c * r.eps + 10.0 * mesh_tolerance);
    Ok(AffineCheckReport {
        alpha,
        rows,
        fitted_c,
        mesh_tolerance,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::Perturbation;
    use crate::model::{GraphLagrangian, TorusHamiltonian};
    use crate::topology::MetricGraph;
    use approx::assert_abs_diff_eq;

    fn ladder(n: usize) -> Vec<f64> {
        (0..n).map(|j| 0.5f64.powi(j as i32)).collect()
    }

    #[test]
    fn rate_fit_recovers_exponent() {
        let eps = ladder(6);
        let err: Vec<f64> = eps.iter().map(|e| 3.0 * e * e).collect();
        let r = fit_rate(&eps, &err, 4);
        assert_abs_diff_eq!(r.exponent, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.constant, 3.0, epsilon = 1e-10);
        assert_eq!(r.rungs, 4);
        assert!(fit_rate(&eps, &[0.0; 6], 4).exponent.is_nan());
    }

    #[test]
    fn matching_on_the_torus() {
        let c = AbelianCover::torus(1).unwrap();
        let mesh = c.base_mesh(1);
        let (x, d) = match_point(&c, &[1.0 / 3.0], 0.25, &mesh, Norm::L2).unwrap();
        // h/ε = 4/3: nearest cell centre is 1.5, so the gap is ε/6.
        assert_eq!(x, CoverPoint::torus(vec![1.5]));
        assert_abs_diff_eq!(d, 0.25 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn datum_convergence_examples() {
        let c = AbelianCover::torus(2).unwrap();
        let plain = InitialDatum::cone(1.0, Norm::L1);
        let r = function_convergence_check(&plain, &c, &ladder(4), 2.0, 32, 1, 1e-12).unwrap();
        assert!(r.pass && r.rows.iter().all(|x| x.residual == 0.0));
        let bumped = plain.with_perturbation(Perturbation {
            amplitude: 1.0,
            freq: vec![],
        });
        let r = function_convergence_check(&bumped, &c, &ladder(4), 2.0, 32, 1, 1.0).unwrap();
        for row in &r.rows {
            assert!(row.residual <= row.eps + 1e-15 && row.residual > 0.5 * row.eps);
        }
    }

    #[test]
    fn free_torus_experiment_error_is_matching_error() {
        let c = AbelianCover::torus(1).unwrap();
        let s = TonelliSystem::Torus(TorusHamiltonian::free(1).unwrap());
        let d = InitialDatum::affine(0.5, vec![0.75]);
        let pts = vec![EvalPoint { h: vec![1.0 / 3.0], t: 1.0 }];
        let mut sc = Scenario::new("free-1d", c, s, d, ladder(5), pts);
        sc.match_mesh = 1;
        sc.norm = Norm::L2;
        let r = run_experiment(&sc).unwrap();
        for row in &r.rows {
            assert_abs_diff_eq!(row.abs_error, 0.75 * row.match_error, epsilon = 1e-9);
        }
        assert!(r.flags.pass, "{:?}", r.flags);
        assert!((r.rate.exponent - 1.0).abs() < 0.1);
    }

    #[test]
    fn single_loop_cone_experiment_passes() {
        let c = AbelianCover::maximal(MetricGraph::single_loop(1.0).unwrap());
        let s = TonelliSystem::Graph(GraphLagrangian::uniform(1, 0.0));
        let d = InitialDatum::cone(1.0, Norm::L1);
        let pts = vec![EvalPoint { h: vec![0.5], t: 0.5 }, EvalPoint { h: vec![-1.0], t: 1.0 }];
        let sc = Scenario::new("loop", c, s, d, ladder(5), pts);
        let r = run_experiment(&sc).unwrap();
        assert!(r.flags.pass, "{:?} {:?}", r.flags, r.rung_errors);
    }

    #[test]
    fn scenario_validation() {
        let c = AbelianCover::torus(1).unwrap();
        let s = TonelliSystem::Torus(TorusHamiltonian::free(1).unwrap());
        let d = InitialDatum::affine(0.0, vec![1.0]);
        let pts = vec![EvalPoint { h: vec![0.0], t: 1.0 }];
        let mut sc = Scenario::new("bad", c, s, d, vec![0.5, 1.0], pts);
        assert!(sc.validate().is_err());
        sc.ladder = vec![1.0, 0.5];
        sc.points[0].t = 0.0;
        assert!(sc.validate().is_err());
    }
}
