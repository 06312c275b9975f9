//! Seeded Monte Carlo runs on finite graphs and on limit trees.
//!
//! Run `k` draws its graph from `derive_seed(seed, RUN_GRAPH, k)` and its
//! epidemic marks from `derive_seed(seed, RUN_EPIDEMIC, k)`. Runs execute on
//! the rayon pool and are merged in run order, so results do not depend on
//! the number of threads.

use anyhow::{bail, Context, Result};
use dynepi_core::epidemic::{
    backward_infection_times, forward_infection_times, sample_marks, EpidemicCurve, EpidemicMarks,
};
use dynepi_core::graph::TimeMarkedUnionGraph;
use dynepi_core::limits::{root_samples, Dynamics};
use dynepi_core::rng::{derive_seed, tag};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Engine, ExperimentConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunSeeds {
    pub run: u64,
    pub graph: u64,
    pub epidemic: u64,
}

impl RunSeeds {
    pub fn derive(master: u64, run: u64) -> Self {
        RunSeeds {
            run,
            graph: derive_seed(master, tag::RUN_GRAPH, run),
            epidemic: derive_seed(master, tag::RUN_EPIDEMIC, run),
        }
    }
}

pub fn run_seeds(cfg: &ExperimentConfig) -> Vec<RunSeeds> {
    (0..cfg.runs as u64).map(|k| RunSeeds::derive(cfg.seed, k)).collect()
}

/// Union graph and epidemic marks of run `run`. The static counterpart
/// freezes the time-0 snapshot over the whole horizon.
pub fn realization(cfg: &ExperimentConfig, run: u64) -> Result<(TimeMarkedUnionGraph, EpidemicMarks)> {
    let model = cfg.graph.as_ref().context("config has no graph model")?;
    let seeds = RunSeeds::derive(cfg.seed, run);
    let mut g = model.generate(seeds.graph)?.graph;
    if cfg.dynamics == Dynamics::Static {
        g = g.frozen_snapshot(0.0)?;
    }
    let u = g.union_graph();
    let e = &cfg.epidemic;
    let m = sample_marks(&u, e.rho, &e.d_i, &e.d_r, seeds.epidemic)?;
    Ok((u, m))
}

/// Per-vertex infection times of run `run` under the configured engine.
pub fn infection_times(cfg: &ExperimentConfig, run: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (u, m) = realization(cfg, run)?;
    let t = match cfg.engine {
        Engine::Backward => backward_infection_times(&u, &m, cfg.radius, cfg.path_cap)?,
        Engine::Forward => forward_infection_times(&u, &m)?,
    };
    Ok((t, m.recovery))
}

/// Average epidemic curve over `cfg.runs` graph realizations.
pub fn run_graph_experiment(cfg: &ExperimentConfig) -> Result<EpidemicCurve> {
    cfg.validate()?;
    if cfg.graph.is_none() {
        bail!("config has no graph model");
    }
    let grid = cfg.grid();
    let curves: Vec<EpidemicCurve> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let (t, r) = infection_times(cfg, run).with_context(|| format!("graph run {run}"))?;
            Ok(EpidemicCurve::from_times(&grid, &t, &r))
        })
        .collect::<Result<_>>()?;
    Ok(EpidemicCurve::mean_of(&curves)?)
}

/// Limit curve from `runs * limit_roots_per_run` independent trees of depth
/// `radius`.
pub fn run_limit_experiment(cfg: &ExperimentConfig) -> Result<EpidemicCurve> {
    cfg.validate()?;
    let model = cfg.limit.as_ref().context("config has no limit model")?;
    let depth = cfg.radius.context("limit experiments need a depth")?;
    let samples = cfg.runs * cfg.limit_roots_per_run;
    let per_depth = root_samples(model, &cfg.epidemic, &[depth], samples, cfg.seed, cfg.dynamics)
        .with_context(|| format!("sampling {} limit", model.name()))?;
    Ok(EpidemicCurve::from_root_samples(&cfg.grid(), &per_depth[0]))
}
