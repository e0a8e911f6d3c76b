//! Scenario files: TOML schema, field-level validation and translation into
//! library types.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use homog_core::action::{ActionOptions, InitialDatum, LimitDatum, Perturbation};
use homog_core::homogenize::{EvalPoint, LimitOptions, Scenario, Tolerances};
use homog_core::mather::{GridSpec, TorusAlphaMethod};
use homog_core::model::{GraphLagrangian, TonelliSystem, TorusHamiltonian, TrigPoly};
use homog_core::topology::{AbelianCover, Edge, MetricGraph, Norm, SubcoverMap};

/// A schema violation located by its dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub system: SystemConfig,
    #[serde(default)]
    pub cover: CoverConfig,
    pub datum: DatumConfig,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub compute: ComputeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemConfig {
    /// `H(x, p) = ½ p·A(x)p + V(x)` on `T^dim`.  `kinetic` lists the upper
    /// triangle of `A` row by row and defaults to the identity.
    Torus {
        dim: usize,
        #[serde(default)]
        kinetic: Option<Vec<TrigPoly>>,
        #[serde(default)]
        potential: TrigPoly,
    },
    /// `L_e(v) = ½ v² + V_e` on a metric graph.
    Graph {
        vertices: usize,
        edges: Vec<Edge>,
        potentials: Vec<f64>,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverConfig {
    #[serde(default)]
    pub norm: Norm,
    /// Integer matrix of a surjection `Z^k → Z^ℓ`, one row per target
    /// coordinate.
    #[serde(default)]
    pub subcover: Option<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct DatumConfig {
    #[serde(flatten)]
    pub limit: LimitDatum,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ladder: Vec<f64>,
    pub points: Vec<EvalPoint>,
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Final `A_ε` and covering radius bound for `spaces`.
    #[serde(default = "default_spaces_tolerance")]
    pub spaces_tolerance: f64,
}

fn default_spaces_tolerance() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComputeConfig {
    pub match_mesh: usize,
    pub space_samples: usize,
    pub action: ActionOptions,
    pub limit: LimitOptions,
    /// Grid for the `alpha` and `beta` tables.
    pub table: GridSpec,
    pub tonelli_resolution: usize,
    pub eigen_tolerance: f64,
    /// Convexity residual allowed in `alpha`/`beta` tables.
    pub convexity_tolerance: f64,
    pub threads: Option<usize>,
}

impl Default for ComputeConfig {
    fn default() -> Self {
        ComputeConfig {
            match_mesh: 8,
            space_samples: 128,
            action: ActionOptions::default(),
            limit: LimitOptions::default(),
            table: GridSpec {
                radius: 2.0,
                points: 33,
            },
            tonelli_resolution: 32,
            eigen_tolerance: 1e-9,
            convexity_tolerance: 1e-6,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            csv: true,
            json: true,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("", e.message()))?;
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            ConfigError::new(path, e.into_inner().message())
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Field-level checks beyond what the types enforce.
    fn check(&self) -> Result<(), ConfigError> {
        let finite = |path: String, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(path, "must be finite"))
            }
        };
        match &self.system {
            SystemConfig::Torus { dim, kinetic, .. } => {
                if !(1..=2).contains(dim) {
                    return Err(ConfigError::new("system.dim", "must be 1 or 2"));
                }
                if let Some(k) = kinetic {
                    let want = dim * (dim + 1) / 2;
                    if k.len() != want {
                        return Err(ConfigError::new(
                            "system.kinetic",
                            format!("needs {want} upper-triangular entries, got {}", k.len()),
                        ));
                    }
                }
            }
            SystemConfig::Graph {
                vertices,
                edges,
                potentials,
            } => {
                if *vertices == 0 {
                    return Err(ConfigError::new("system.vertices", "must be positive"));
                }
                if edges.is_empty() {
                    return Err(ConfigError::new("system.edges", "graph has no edges"));
                }
                for (i, e) in edges.iter().enumerate() {
                    if !(e.length > 0.0 && e.length.is_finite()) {
                        return Err(ConfigError::new(
                            format!("system.edges[{i}].length"),
                            format!("edge length must be positive and finite, got {}", e.length),
                        ));
                    }
                    for (field, v) in [("tail", e.tail), ("head", e.head)] {
                        if v >= *vertices {
                            return Err(ConfigError::new(
                                format!("system.edges[{i}].{field}"),
                                format!("vertex {v} out of range 0..{vertices}"),
                            ));
                        }
                    }
                }
                if potentials.len() != edges.len() {
                    return Err(ConfigError::new(
                        "system.potentials",
                        format!("expected {} entries, got {}", edges.len(), potentials.len()),
                    ));
                }
                for (i, v) in potentials.iter().enumerate() {
                    finite(format!("system.potentials[{i}]"), *v)?;
                }
            }
        }

        let ex = &self.experiment;
        if ex.ladder.is_empty() {
            return Err(ConfigError::new("experiment.ladder", "must not be empty"));
        }
        for (i, e) in ex.ladder.iter().enumerate() {
            if !(*e > 0.0 && e.is_finite()) {
                return Err(ConfigError::new(format!("experiment.ladder[{i}]"), "must be positive"));
            }
        }
        if ex.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError::new("experiment.ladder", "must be strictly decreasing"));
        }
        if ex.points.is_empty() {
            return Err(ConfigError::new("experiment.points", "must not be empty"));
        }
        for (i, p) in ex.points.iter().enumerate() {
            for (j, v) in p.h.iter().enumerate() {
                finite(format!("experiment.points[{i}].h[{j}]"), *v)?;
            }
            if !(p.t > 0.0 && p.t.is_finite()) {
                return Err(ConfigError::new(format!("experiment.points[{i}].t"), "must be positive"));
            }
        }
        if !(ex.spaces_tolerance > 0.0) {
            return Err(ConfigError::new("experiment.spaces_tolerance", "must be positive"));
        }
        let c = &self.compute;
        if c.match_mesh == 0 {
            return Err(ConfigError::new("compute.match_mesh", "must be positive"));
        }
        if c.space_samples != 0 && c.space_samples < 100 {
            return Err(ConfigError::new("compute.space_samples", "must be 0 or at least 100"));
        }
        if c.tonelli_resolution < 8 {
            return Err(ConfigError::new("compute.tonelli_resolution", "must be at least 8"));
        }
        if c.threads == Some(0) {
            return Err(ConfigError::new("compute.threads", "must be positive"));
        }
        if !(c.table.radius > 0.0) || c.table.points < 3 || c.table.points % 2 == 0 {
            return Err(ConfigError::new("compute.table", "needs radius > 0 and an odd point count ≥ 3"));
        }
        Ok(())
    }

    /// Replaces every seed in the file.
    pub fn override_seed(&mut self, seed: u64) {
        self.experiment.seed = seed;
        if let TorusAlphaMethod::Minimax(o) = &mut self.compute.limit.alpha {
            o.seed = seed;
        }
    }

    pub fn build_system(&self) -> Result<(AbelianCover, TonelliSystem), ConfigError> {
        let err = |e: homog_core::Error| ConfigError::new("system", e.to_string());
        match &self.system {
            SystemConfig::Torus {
                dim,
                kinetic,
                potential,
            } => {
                let h = match kinetic {
                    Some(k) => TorusHamiltonian::new(*dim, k.clone(), potential.clone()),
                    None => TorusHamiltonian::mechanical(*dim, potential.clone()),
                }
                .map_err(err)?;
                Ok((AbelianCover::torus(*dim).map_err(err)?, TonelliSystem::Torus(h)))
            }
            SystemConfig::Graph {
                vertices,
                edges,
                potentials,
            } => {
                let g = MetricGraph::new(*vertices, edges.clone()).map_err(err)?;
                let lag = GraphLagrangian::new(potentials.clone()).map_err(err)?;
                Ok((AbelianCover::maximal(g), TonelliSystem::Graph(lag)))
            }
        }
    }

    pub fn build_subcover(&self, cover: &AbelianCover) -> Result<Option<SubcoverMap>, ConfigError> {
        self.cover
            .subcover
            .as_ref()
            .map(|m| SubcoverMap::new(cover, m.clone()).map_err(|e| ConfigError::new("cover.subcover", e.to_string())))
            .transpose()
    }

    pub fn build_scenario(&self) -> Result<Scenario, ConfigError> {
        let (cover, system) = self.build_system()?;
        let subcover = self.build_subcover(&cover)?;
        let mut datum = InitialDatum {
            limit: self.datum.limit.clone(),
            perturbation: None,
        };
        if let Some(p) = &self.datum.perturbation {
            datum = datum.with_perturbation(p.clone());
        }
        let mut sc = Scenario::new(
            self.name.clone(),
            cover,
            system,
            datum,
            self.experiment.ladder.clone(),
            self.experiment.points.clone(),
        );
        sc.norm = self.cover.norm;
        sc.match_mesh = self.compute.match_mesh;
        sc.action = self.compute.action;
        sc.limit = self.compute.limit;
        sc.tolerances = self.experiment.tolerances;
        sc.seed = self.experiment.seed;
        sc.space_samples = self.compute.space_samples;
        sc.subcover = subcover;
        let k = sc.homology_dim();
        for (i, p) in sc.points.iter().enumerate() {
            if p.h.len() != k {
                return Err(ConfigError::new(
                    format!("experiment.points[{i}].h"),
                    format!("expected {k} coordinates, got {}", p.h.len()),
                ));
            }
        }
        sc.datum
            .validate(k)
            .map_err(|e| ConfigError::new("datum", e.to_string()))?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOOP: &str = r#"
name = "loop"
[system]
family = "graph"
vertices = 1
edges = [{ tail = 0, head = 0, length = 1.0 }]
potentials = [0.0]
[datum]
family = "affine"
a = 0.0
p = [0.5]
[experiment]
ladder = [0.5, 0.25]
points = [{ h = [0.5], t = 0.5 }]
seed = 3
"#;

    #[test]
    fn parses_minimal_graph_file() {
        let cfg = ScenarioConfig::from_toml(LOOP).unwrap();
        let sc = cfg.build_scenario().unwrap();
        assert_eq!(sc.cover.rank(), 1);
        assert_eq!(sc.seed, 3);
        assert_eq!(cfg.compute.table.points, 33);
    }

    #[test]
    fn negative_length_reports_field_path() {
        let text = LOOP.replace("length = 1.0", "length = -1.0");
        let e = ScenarioConfig::from_toml(&text).unwrap_err();
        assert_eq!(e.path, "system.edges[0].length");
    }

    #[test]
    fn unknown_field_is_rejected_with_path() {
        let text = LOOP.replace("seed = 3", "seed = 3\nbogus = 1");
        let e = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(e.message.contains("bogus"), "{e}");
        assert_eq!(e.path, "experiment.bogus");
    }

    #[test]
    fn missing_seed_is_a_schema_error() {
        let text = LOOP.replace("seed = 3", "");
        let e = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(e.message.contains("seed"), "{e}");
    }

    #[test]
    fn increasing_ladder_is_rejected() {
        let text = LOOP.replace("[0.5, 0.25]", "[0.25, 0.5]");
        assert_eq!(ScenarioConfig::from_toml(&text).unwrap_err().path, "experiment.ladder");
    }

    #[test]
    fn wrong_point_dimension_is_located() {
        let text = LOOP.replace("h = [0.5]", "h = [0.5, 1.0]");
        let e = ScenarioConfig::from_toml(&text).unwrap().build_scenario().unwrap_err();
        assert_eq!(e.path, "experiment.points[0].h");
    }

    #[test]
    fn seed_override_reaches_minimax() {
        let text = format!("{LOOP}\n[compute.limit.alpha]\nmethod = \"minimax\"\nseed = 1\n");
        let mut cfg = ScenarioConfig::from_toml(&text).unwrap();
        cfg.override_seed(9);
        assert_eq!(cfg.experiment.seed, 9);
        assert!(matches!(cfg.compute.limit.alpha, TorusAlphaMethod::Minimax(o) if o.seed == 9));
    }
}
