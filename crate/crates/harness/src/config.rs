//! Experiment configuration and the figure presets.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dynepi_core::epidemic::{DistSpec, EpidemicParams, DEFAULT_GRID_POINTS};
use dynepi_core::generators::{DerConfig, GroupSizePmf, ModelConfig, RigConfig, WeightLaw};
use dynepi_core::limits::{Dynamics, LimitModel};
use serde::{Deserialize, Serialize};

/// Epidemic engine used on finite graphs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Backward process over the time-marked union graph, optionally
    /// restricted to paths of at most `radius` edges.
    #[default]
    Backward,
    /// Event-driven forward simulation (ignores `radius`).
    Forward,
}

/// What `compare` puts side by side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Finite graph against its local limit.
    #[default]
    GraphVsLimit,
    /// Static against dynamic version of the same side (graph if present,
    /// otherwise limit).
    StaticVsDynamic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitModel>,
    #[serde(default)]
    pub dynamics: Dynamics,
    pub epidemic: EpidemicParams,
    /// Backward radius on graphs and depth of limit trees; `None` runs the
    /// exact backward process on graphs and is invalid for limits.
    #[serde(default)]
    pub radius: Option<u32>,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub comparison: Comparison,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Independent limit trees per run; the limit curve averages
    /// `runs * limit_roots_per_run` root samples.
    #[serde(default = "default_roots_per_run")]
    pub limit_roots_per_run: usize,
    /// Budget of explored paths per vertex in the backward process.
    #[serde(default = "default_path_cap")]
    pub path_cap: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}
fn default_runs() -> usize {
    200
}
fn default_roots_per_run() -> usize {
    100
}
fn default_path_cap() -> u64 {
    dynepi_core::epidemic::DEFAULT_PATH_CAP
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("runs must be >= 1");
        }
        if self.grid_points < 2 {
            bail!("grid_points must be >= 2");
        }
        if self.limit_roots_per_run == 0 {
            bail!("limit_roots_per_run must be >= 1");
        }
        if self.graph.is_none() && self.limit.is_none() {
            bail!("config needs a graph model, a limit model, or both");
        }
        self.epidemic.validate()?;
        if let Some(l) = &self.limit {
            l.validate()?;
            if self.radius.is_none() {
                bail!("limit experiments need a depth (radius)");
            }
        }
        if let (Some(g), Some(l)) = (&self.graph, &self.limit) {
            if g.horizon() != l.horizon() {
                bail!("graph horizon {} differs from limit horizon {}", g.horizon(), l.horizon());
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        match (&self.graph, &self.limit) {
            (Some(g), _) => g.horizon(),
            (None, Some(l)) => l.horizon(),
            (None, None) => 0.0,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        dynepi_core::epidemic::uniform_grid(self.horizon(), self.grid_points)
    }

    pub fn with_dynamics(&self, dynamics: Dynamics) -> Self {
        ExperimentConfig { dynamics, ..self.clone() }
    }
}

pub const PRESETS: &[&str] = &["fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c"];

fn exp_laws(i: f64, r: f64) -> (DistSpec, DistSpec) {
    (DistSpec::Exp { rate: i }, DistSpec::Exp { rate: r })
}

/// Group sizes 2 and 3 with `E[D] = sum_k k(k-1) p_k = 2.052` under unit
/// weights. The original weight law and group-size law are not published;
/// this is one choice with the stated mean degree.
pub fn rig_pmf() -> GroupSizePmf {
    GroupSizePmf(vec![0.0, 0.0, 0.987, 0.013])
}

/// Figure presets at desk scale (`n = 5000`, 200 runs) or, with
/// `full_scale`, at the published scale (`n = 25000`, 500 runs).
pub fn preset(name: &str, full_scale: bool) -> Result<ExperimentConfig> {
    let (n, runs) = if full_scale { (25_000, 500) } else { (5_000, 200) };
    let base = |graph, limit, rho, (d_i, d_r), radius, engine, comparison| ExperimentConfig {
        name: name.to_string(),
        graph,
        limit,
        dynamics: Dynamics::Dynamic,
        epidemic: EpidemicParams { rho, d_i, d_r },
        radius,
        engine,
        comparison,
        grid_points: DEFAULT_GRID_POINTS,
        runs,
        limit_roots_per_run: default_roots_per_run(),
        path_cap: default_path_cap(),
        seed: 1,
        output_dir: None,
    };
    let der = |horizon| ModelConfig::Der(DerConfig { n, gamma: 3.0, horizon });
    let der_limit = |horizon| LimitModel::Der { gamma: 3.0, horizon };
    let rig_limit = LimitModel::Rig { weights: WeightLaw::Constant { w: 1.0 }, group_size_pmf: rig_pmf(), horizon: 5.0 };
    let cfg = match name {
        "fig1a" | "fig1b" | "fig1c" => {
            let (rho, laws) = match name {
                "fig1a" => (0.5, exp_laws(2.0, 3.0)),
                "fig1b" => (0.2, exp_laws(2.0, 3.0)),
                _ => (0.1, exp_laws(5.0, 4.0)),
            };
            base(Some(der(5.0)), Some(der_limit(5.0)), rho, laws, Some(5), Engine::Backward, Comparison::GraphVsLimit)
        }
        "fig2a" | "fig2b" | "fig2c" => {
            let laws = match name {
                "fig2a" => exp_laws(0.5, 3.0),
                "fig2b" => exp_laws(2.0, 3.0),
                _ => exp_laws(4.0, 5.0),
            };
            base(Some(der(10.0)), None, 0.01, laws, None, Engine::Forward, Comparison::StaticVsDynamic)
        }
        "fig3a" | "fig3b" | "fig3c" => {
            let laws = match name {
                "fig3a" => exp_laws(0.5, 3.0),
                "fig3b" => exp_laws(2.0, 3.0),
                _ => exp_laws(5.0, 4.0),
            };
            base(None, Some(rig_limit), 0.1, laws, Some(4), Engine::Backward, Comparison::StaticVsDynamic)
        }
        _ => bail!("unknown preset {name:?}; available: {}", PRESETS.join(", ")),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Finite RIG matching the figure-3 limit, for `generate` and `diagnose`.
pub fn rig_graph(n: u32, horizon: f64) -> ModelConfig {
    ModelConfig::Rig(RigConfig { n, weights: None, group_size_pmf: rig_pmf(), horizon })
}
