//! Homogenisation on an intermediate cover.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{run_ladder, ExperimentReport, Scenario};
use super::limit::LimitModel;
use crate::action::{hopf_lax, lax_oleinik};
use crate::error::{Error, Result};
use crate::mather::{BetaHat, Evaluator, GridSpec, LegendreDual};
use crate::topology::cartesian;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftRow {
    pub point: usize,
    pub eps: f64,
    /// `v̂^ε(π x, t)` on the quotient cover.
    pub quotient_value: f64,
    /// `ṽ^ε(x, t)` on the maximal cover with the pulled-back datum.
    pub lifted_value: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianRow {
    pub p: Vec<f64>,
    /// `α(f* p)`.
    pub pulled_back_alpha: f64,
    /// `(β̂)*(p)`.
    pub dual_beta_hat: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcoverReport {
    pub experiment: ExperimentReport,
    pub lift: Vec<LiftRow>,
    pub lift_ok: bool,
    /// `max |ũ(q + z, t) − ũ(q, t)|` over sampled kernel translates `z`.
    pub kernel_deviation: f64,
    /// `max |ũ(q, t) − û(f q, t)|`: the limit on `H₁` against the one
    /// computed with `β̂`.
    pub limit_gap: f64,
    pub kernel_ok: bool,
    pub hamiltonian: Vec<HamiltonianRow>,
    pub hamiltonian_ok: bool,
    pub pass: bool,
}

/// Tolerance for comparing two independent Hopf-Lax minimisations.
const LIMIT_TOL: f64 = 1e-6;

/// The quotient pipeline (`v̂^ε` against the Hopf-Lax limit with `β̂`),
/// plus the lift identity `v̂^ε(π x) = ṽ^ε(x)`, invariance of the lifted
/// limit under `ker f`, and `H̄ = α∘f* = (β̂)*` on a momentum grid.
pub fn run_subcover_experiment(sc: &Scenario) -> Result<SubcoverReport> {
    sc.validate()?;
    let sub = sc
        .subcover
        .as_ref()
        .ok_or_else(|| Error::arg("scenario has no subcover map"))?;
    let model = LimitModel::build(&sc.cover, &sc.system, &sc.limit).map_err(|e| e.context(&sc.name))?;
    let bhat = BetaHat::new(sub.clone(), model.beta.clone())?;
    let experiment = run_ladder(sc, sub.quotient(), &sc.datum, &bhat)?;

    let fmat: Vec<Vec<f64>> = sub
        .matrix()
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    let lifted_datum = sc.datum.pullback(fmat);
    let mesh_tol = experiment.diagnostics.mesh_tolerance;

    let lift: Vec<LiftRow> = experiment
        .rows
        .par_iter()
        .map(|row| -> Result<LiftRow> {
            let x = sub.lift(&row.x);
            let v = lax_oleinik(&sc.cover, &sc.system, &lifted_datum, &x, row.t, row.eps, &sc.action)
                .map_err(|e| e.context(&format!("{} lift at point {}", sc.name, row.point)))?
                .value;
            Ok(LiftRow {
                point: row.point,
                eps: row.eps,
                quotient_value: row.v_eps,
                lifted_value: v,
                difference: (v - row.v_eps).abs(),
            })
        })
        .collect::<Result<_>>()?;
    let lift_ok = lift
        .iter()
        .all(|r| r.difference <= sc.tolerances.lift + mesh_tol);

    // Kernel translates z = Σ c_i b_i with c_i ∈ {−1, 0, 1, 2}.
    let kernel = sub.kernel_basis();
    let shifts: Vec<Vec<f64>> = cartesian(kernel.len(), -1, 2)
        .into_iter()
        .map(|c| {
            let mut z = vec![0.0; sub.k()];
            for (ci, b) in c.iter().zip(kernel) {
                for (zj, bj) in z.iter_mut().zip(b) {
                    *zj += (*ci * *bj) as f64;
                }
            }
            z
        })
        .collect();
    let mut kernel_deviation: f64 = 0.0;
    let mut limit_gap: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for p in &sc.points {
        let q = sub.right_inverse_f(&p.h);
        let base = hopf_lax(&*model.beta, &lifted_datum, &q, p.t)?.value;
        let quotient = hopf_lax(&bhat, &sc.datum, &p.h, p.t)?.value;
        scale = scale.max(base.abs());
        limit_gap = limit_gap.max((base - quotient).abs());
        for z in &shifts {
            let qz: Vec<f64> = q.iter().zip(z).map(|(a, b)| a + b).collect();
            let v = hopf_lax(&*model.beta, &lifted_datum, &qz, p.t)?.value;
            kernel_deviation = kernel_deviation.max((v - base).abs());
        }
    }
    let kernel_ok = kernel_deviation <= LIMIT_TOL * scale && limit_gap <= LIMIT_TOL * scale;

    let dual = LegendreDual::new(Arc::new(bhat.clone()), GridSpec::default())?;
    let axis: Vec<f64> = (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect();
    let ps: Vec<Vec<f64>> = if sub.ell() == 1 {
        axis.iter().map(|&v| vec![v]).collect()
    } else {
        axis.iter()
            .step_by(2)
            .flat_map(|&a| axis.iter().step_by(2).map(move |&b| vec![a, b]))
            .collect()
    };
    let hamiltonian: Vec<HamiltonianRow> = ps
        .into_par_iter()
        .map(|p| {
            let a = model.alpha.eval(&sub.pullback(&p));
            let d = dual.eval(&p);
            HamiltonianRow {
                p,
                pulled_back_alpha: a,
                dual_beta_hat: d,
                difference: (a - d).abs(),
            }
        })
        .collect();
    let hamiltonian_ok = hamiltonian
        .iter()
        .all(|r| r.difference <= sc.tolerances.duality);
    let pass = experiment.flags.pass && lift_ok && kernel_ok && hamiltonian_ok;
    Ok(SubcoverReport {
        experiment,
        lift,
        lift_ok,
        kernel_deviation,
        limit_gap,
        kernel_ok,
        hamiltonian,
        hamiltonian_ok,
        pass,
    })
}
