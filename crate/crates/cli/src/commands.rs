//! One function per subcommand.  Each returns the artifacts to write and
//! never touches the file system itself.

use std::sync::Arc;

use serde_json::json;

use homog_core::homogenize::{run_experiment, run_subcover_experiment, ExperimentReport, LimitModel};
use homog_core::mather::{BetaHat, Evaluator, GridTable, SubcoverAlpha};
use homog_core::model::{verify_tonelli, TonelliSystem};
use homog_core::topology::{estimate_space_convergence, SpaceConvergenceReport};

use crate::config::{ConfigError, ScenarioConfig};
use crate::output::{coords, Artifacts, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Alpha,
    Beta,
    Homogenize,
    Subcover,
    Spaces,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Alpha => "alpha",
            Command::Beta => "beta",
            Command::Homogenize => "homogenize",
            Command::Subcover => "subcover",
            Command::Spaces => "spaces",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Exit status 2.
    Schema(ConfigError),
    /// Exit status 3.
    Solver(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Schema(e)
    }
}

impl From<homog_core::Error> for CliError {
    fn from(e: homog_core::Error) -> Self {
        use homog_core::Error as E;
        match e {
            E::InvalidModel(_) | E::InvalidArgument(_) | E::NotSurjective { .. } => {
                CliError::Schema(ConfigError {
                    path: String::new(),
                    message: e.to_string(),
                })
            }
            E::WindowExhausted { .. } | E::Solver(_) => CliError::Solver(e.to_string()),
        }
    }
}

pub fn run(cfg: &ScenarioConfig, cmd: Command) -> Result<Artifacts, CliError> {
    match cmd {
        Command::Alpha => table_command(cfg, true),
        Command::Beta => table_command(cfg, false),
        Command::Homogenize => homogenize(cfg),
        Command::Subcover => subcover(cfg),
        Command::Spaces => spaces(cfg),
        Command::Validate => validate(cfg),
    }
}

fn grid_table(name: &str, var: &str, value: &str, f: &dyn Evaluator, cfg: &ScenarioConfig) -> Result<(Table, GridTable), CliError> {
    let grid = GridTable::tabulate(f, cfg.compute.table)?;
    let mut header = coords(var, grid.dim);
    header.push(value.to_string());
    let mut t = Table::new(name, header);
    for (i, v) in grid.values.iter().enumerate() {
        let mut row = grid.point(i);
        row.push(*v);
        t.push_floats(&[], &row);
    }
    Ok((t, grid))
}

fn grid_summary(g: &GridTable, tol: f64) -> (serde_json::Value, bool) {
    let finite = g.values.iter().all(|v| v.is_finite());
    let convex = finite && g.is_convex(tol);
    (
        json!({
            "dim": g.dim,
            "grid": g.spec,
            "convexity_residual": g.convexity_residual,
            "interpolation_tolerance": g.tolerance,
            "finite": finite,
            "convex": convex,
        }),
        convex,
    )
}

/// `alpha` tabulates `α` on cohomology; `beta` tabulates `β` on homology.
/// With a subcover, `H̄ = α∘f*` or `β̂` is tabulated as well.
fn table_command(cfg: &ScenarioConfig, alpha: bool) -> Result<Artifacts, CliError> {
    let (cover, system) = cfg.build_system()?;
    let sub = cfg.build_subcover(&cover)?;
    let model = LimitModel::build(&cover, &system, &cfg.compute.limit)?;
    let tol = cfg.compute.convexity_tolerance;
    let (name, var) = if alpha { ("alpha", "p") } else { ("beta", "h") };
    let f = if alpha { model.alpha.clone() } else { model.beta.clone() };
    let (table, grid) = grid_table(name, var, name, &*f, cfg)?;
    let (summary, mut pass) = grid_summary(&grid, tol);
    let mut tables = vec![table];
    let mut report = json!({ "scenario": cfg.name, "command": name, name: summary });
    let mut failures = Vec::new();
    if !pass {
        failures.push(format!("{name}_convexity"));
    }
    if let Some(sub) = sub {
        let (sname, sf): (&str, Arc<dyn Evaluator>) = if alpha {
            ("alpha_subcover", Arc::new(SubcoverAlpha::new(sub, model.alpha.clone())?))
        } else {
            ("beta_hat", Arc::new(BetaHat::new(sub, model.beta.clone())?))
        };
        let (t, g) = grid_table(sname, var, sname, &*sf, cfg)?;
        let (s, ok) = grid_summary(&g, tol);
        if !ok {
            failures.push(format!("{sname}_convexity"));
        }
        pass &= ok;
        tables.push(t);
        report[sname] = s;
    }
    report["pass"] = json!(pass);
    Ok(Artifacts {
        tables,
        report,
        pass,
        failures,
    })
}

/// The fixed-column ladder table `(h…, t, epsilon, v_eps, u_limit, abs_error)`.
fn ladder_table(name: &str, r: &ExperimentReport, k: usize) -> Table {
    let mut header = coords("h", k);
    header.extend(["t", "epsilon", "v_eps", "u_limit", "abs_error"].map(String::from));
    let mut t = Table::new(name, header);
    for row in &r.rows {
        let mut v = row.h.clone();
        v.extend([row.t, row.eps, row.v_eps, row.u_limit, row.abs_error]);
        t.push_floats(&[], &v);
    }
    t
}

fn flag_failures(r: &ExperimentReport) -> Vec<String> {
    let f = r.flags;
    [
        ("final_error", f.final_ok),
        ("rate", f.rate_ok),
        ("monotone", f.monotone),
        ("sandwich", f.sandwich),
    ]
    .into_iter()
    .filter(|(_, ok)| !ok)
    .map(|(n, _)| n.to_string())
    .collect()
}

fn homogenize(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let sc = cfg.build_scenario()?;
    if sc.subcover.is_some() {
        return Err(CliError::Schema(ConfigError {
            path: "cover.subcover".into(),
            message: "use the subcover command for scenarios with a subcover".into(),
        }));
    }
    let r = run_experiment(&sc)?;
    let table = ladder_table("homogenize", &r, sc.homology_dim());
    let failures = flag_failures(&r);
    Ok(Artifacts {
        tables: vec![table],
        pass: r.flags.pass,
        report: serde_json::to_value(&r).expect("serialisable report"),
        failures,
    })
}

fn subcover(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let sc = cfg.build_scenario()?;
    if sc.subcover.is_none() {
        return Err(CliError::Schema(ConfigError {
            path: "cover.subcover".into(),
            message: "the subcover command needs a subcover matrix".into(),
        }));
    }
    let r = run_subcover_experiment(&sc)?;
    let ell = sc.homology_dim();
    let ladder = ladder_table("subcover", &r.experiment, ell);
    let mut lift = Table::new(
        "lift",
        ["point", "epsilon", "quotient_value", "lifted_value", "difference"].map(String::from).to_vec(),
    );
    for row in &r.lift {
        lift.push_floats(
            &[row.point.to_string()],
            &[row.eps, row.quotient_value, row.lifted_value, row.difference],
        );
    }
    let mut header = coords("p", ell);
    header.extend(["pulled_back_alpha", "dual_beta_hat", "difference"].map(String::from));
    let mut ham = Table::new("hamiltonian", header);
    for row in &r.hamiltonian {
        let mut v = row.p.clone();
        v.extend([row.pulled_back_alpha, row.dual_beta_hat, row.difference]);
        ham.push_floats(&[], &v);
    }
    let mut failures = flag_failures(&r.experiment);
    for (n, ok) in [("lift", r.lift_ok), ("kernel", r.kernel_ok), ("hamiltonian", r.hamiltonian_ok)] {
        if !ok {
            failures.push(n.to_string());
        }
    }
    Ok(Artifacts {
        tables: vec![ladder, lift, ham],
        pass: r.pass,
        report: serde_json::to_value(&r).expect("serialisable report"),
        failures,
    })
}

fn spaces(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let (cover, _) = cfg.build_system()?;
    let sub = cfg.build_subcover(&cover)?;
    let samples = cfg.compute.space_samples.max(100);
    let ladder = &cfg.experiment.ladder;
    let seed = cfg.experiment.seed;
    let norm = cfg.cover.norm;
    let tol = cfg.experiment.spaces_tolerance;
    let mut reports: Vec<(&str, SpaceConvergenceReport)> =
        vec![("cover", estimate_space_convergence(&cover, ladder, samples, norm, seed)?)];
    let mut density = None;
    if let Some(s) = &sub {
        reports.push(("quotient", estimate_space_convergence(s.quotient(), ladder, samples, norm, seed)?));
        density = Some(s.density_constant(norm));
    }
    let mut t = Table::new(
        "spaces",
        ["space", "epsilon", "k", "a_eps", "covering_radius"].map(String::from).to_vec(),
    );
    let mut failures = Vec::new();
    let mut report = json!({ "scenario": cfg.name, "command": "spaces", "tolerance": tol });
    for (name, r) in &reports {
        for row in &r.rows {
            t.push_floats(&[name.to_string()], &[row.eps, r.k, row.a_eps, row.covering_radius]);
        }
        let ok = r.passes(tol);
        if !ok {
            failures.push(format!("{name}_convergence"));
        }
        report[*name] = json!({ "report": r, "pass": ok });
    }
    if let Some(b) = density {
        report["kernel_density_constant"] = json!(b);
    }
    let pass = failures.is_empty();
    report["pass"] = json!(pass);
    Ok(Artifacts {
        tables: vec![t],
        report,
        pass,
        failures,
    })
}

/// Schema checks (already done by loading) plus the Tonelli conditions.
fn validate(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let sc = cfg.build_scenario()?;
    let (tonelli, pass) = match &sc.system {
        TonelliSystem::Torus(h) => {
            let r = verify_tonelli(h, cfg.compute.tonelli_resolution, cfg.compute.eigen_tolerance)?;
            let ok = r.passed;
            (serde_json::to_value(&r).expect("serialisable report"), ok)
        }
        // Edge Lagrangians ½v² + V_e are Tonelli by construction.
        TonelliSystem::Graph(_) => (json!({ "passed": true, "min_eigenvalue": 1.0 }), true),
    };
    Ok(Artifacts {
        tables: Vec::new(),
        report: json!({
            "scenario": cfg.name,
            "command": "validate",
            "homology_dim": sc.homology_dim(),
            "tonelli": tonelli,
            "pass": pass,
        }),
        pass,
        failures: if pass { Vec::new() } else { vec!["tonelli".into()] },
    })
}
