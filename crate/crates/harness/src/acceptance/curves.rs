//! Criteria on epidemic curves: limit accuracy, the radius and depth
//! truncation bounds, and vanishing variance.

use anyhow::Result;
use dynepi_core::epidemic::{backward_infection_times, DistSpec, EpidemicCurve, EpidemicParams, DEFAULT_PATH_CAP};
use dynepi_core::generators::{DerConfig, ModelConfig};
use dynepi_core::limits::{root_samples, Dynamics, LimitModel};
use dynepi_core::util::{mean_se, sample_variance};
use rayon::prelude::*;

use super::Outcome;
use crate::compare::compare;
use crate::config::{Comparison, Engine, ExperimentConfig};
use crate::experiments::{realization, run_graph_experiment, run_limit_experiment};

fn der_config(name: &str, n: u32, horizon: f64, rho: f64, radius: Option<u32>, runs: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        graph: Some(ModelConfig::Der(DerConfig { n, gamma: 3.0, horizon })),
        limit: Some(LimitModel::Der { gamma: 3.0, horizon }),
        dynamics: Dynamics::Dynamic,
        epidemic: EpidemicParams { rho, d_i: DistSpec::Exp { rate: 2.0 }, d_r: DistSpec::Exp { rate: 3.0 } },
        radius,
        engine: Engine::Backward,
        comparison: Comparison::GraphVsLimit,
        grid_points: 200,
        runs,
        limit_roots_per_run: 100,
        path_cap: DEFAULT_PATH_CAP,
        seed,
        output_dir: None,
    }
}

/// Sup-norm gap between the graph and limit curves, per compartment.
const C1_TOLERANCE: f64 = 0.03;

pub fn limit_approximation() -> Result<Outcome> {
    // 200 graph runs; the limit side averages 200 x 100 independent roots
    let cfg = der_config("c1", 5000, 5.0, 0.5, Some(5), 200, 0xC1);
    let graph = run_graph_experiment(&cfg)?;
    let limit = run_limit_experiment(&cfg)?;
    let rep = compare(&graph, &limit, C1_TOLERANCE)?;
    let [s, i, r] = rep.sup_gaps;
    let se = rep.pooled_se.iter().copied().fold(0.0, f64::max);
    Ok(Outcome::new(
        rep.pass,
        format!("sup gaps s={s:.4} i={i:.4} r={r:.4} <= {C1_TOLERANCE} (max pooled SE {se:.4})"),
    ))
}

fn sup_gap(a: &EpidemicCurve, b: &EpidemicCurve) -> Result<f64> {
    Ok(a.sup_gaps(b)?.into_iter().fold(0.0, f64::max))
}

/// Standard errors of slack above each bound.
const C2_SIGMAS: f64 = 4.0;
const C2_RADII: [u32; 3] = [2, 4, 6];

pub fn first_moment_bound() -> Result<Outcome> {
    let cfg = der_config("c2", 2000, 1.0, 0.2, None, 100, 0xC2);
    let grid = cfg.grid();
    let per_run: Vec<[f64; 3]> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let (u, m) = realization(&cfg, run)?;
            let exact = backward_infection_times(&u, &m, None, cfg.path_cap)?;
            let full = EpidemicCurve::from_times(&grid, &exact, &m.recovery);
            let mut gaps = [0.0; 3];
            for (g, &r) in gaps.iter_mut().zip(&C2_RADII) {
                let local = backward_infection_times(&u, &m, Some(r), cfg.path_cap)?;
                *g = sup_gap(&full, &EpidemicCurve::from_times(&grid, &local, &m.recovery))?;
            }
            Ok(gaps)
        })
        .collect::<Result<_>>()?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &r) in C2_RADII.iter().enumerate() {
        let xs: Vec<f64> = per_run.iter().map(|g| g[k]).collect();
        let (mean, se) = mean_se(&xs);
        let bound = (1.0 - cfg.epidemic.rho).powi(r as i32);
        pass &= mean <= bound + C2_SIGMAS * se;
        parts.push(format!("r={r}: {mean:.4} (se {se:.4}) vs {bound:.4}"));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

const C3_SIGMAS: f64 = 4.0;
const C3_SAMPLES: usize = 20_000;

pub fn limit_truncation() -> Result<Outcome> {
    let model = LimitModel::Der { gamma: 3.0, horizon: 1.0 };
    let epi = EpidemicParams { rho: 0.3, d_i: DistSpec::Exp { rate: 2.0 }, d_r: DistSpec::Exp { rate: 3.0 } };
    // both depths on the same trees
    let samples = root_samples(&model, &epi, &[3, 6], C3_SAMPLES, 0xC3, Dynamics::Dynamic)?;
    let grid = dynepi_core::epidemic::uniform_grid(1.0, 200);
    let n = C3_SAMPLES as f64;
    let (mut worst, mut worst_se) = (0.0f64, 0.0f64);
    let mut pass = true;
    let bound = 0.7f64.powi(3);
    for &t in &grid {
        let d: Vec<f64> = samples[0]
            .iter()
            .zip(&samples[1])
            .map(|(a, b)| (t < a.0) as u8 as f64 - (t < b.0) as u8 as f64)
            .collect();
        let mean = d.iter().sum::<f64>() / n;
        let se = (sample_variance(&d) / n).sqrt();
        pass &= mean.abs() <= bound + C3_SIGMAS * se;
        if mean.abs() > worst {
            (worst, worst_se) = (mean.abs(), se);
        }
    }
    Ok(Outcome::new(pass, format!("sup |s_3 - s_6| = {worst:.4} (se {worst_se:.4}) vs {bound:.3}")))
}

const C4_SIGMAS: f64 = 4.0;
const C4_SIZES: [u32; 3] = [500, 2000, 8000];
const C4_TIMES: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

/// Unbiased variance and its standard error
/// `sqrt((m4 - (N-3)/(N-1) s^4) / N)`.
fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = sample_variance(xs);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (var, ((m4 - (n - 3.0) / (n - 1.0) * var * var).max(0.0) / n).sqrt())
}

pub fn variance_vanishing() -> Result<Outcome> {
    let mut stats = Vec::new();
    for &n in &C4_SIZES {
        let cfg = der_config("c4", n, 1.0, 0.2, Some(3), 200, 0xC4);
        let fractions: Vec<Vec<f64>> = (0..cfg.runs as u64)
            .into_par_iter()
            .map(|run| {
                let (u, m) = realization(&cfg, run)?;
                let t = backward_infection_times(&u, &m, cfg.radius, cfg.path_cap)?;
                Ok(EpidemicCurve::from_times(&C4_TIMES, &t, &m.recovery).s)
            })
            .collect::<Result<_>>()?;
        let per_time: Vec<(f64, f64)> = (0..C4_TIMES.len())
            .map(|k| variance_with_se(&fractions.iter().map(|f| f[k]).collect::<Vec<_>>()))
            .collect();
        stats.push(per_time);
    }
    let mut pass = true;
    let mut min_z = f64::INFINITY;
    for w in stats.windows(2) {
        for k in 0..C4_TIMES.len() {
            let ((v1, e1), (v2, e2)) = (w[0][k], w[1][k]);
            let z = (v1 - v2) / (e1 * e1 + e2 * e2).sqrt();
            min_z = min_z.min(z);
            pass &= z > C4_SIGMAS;
        }
    }
    let last = C4_TIMES.len() - 1;
    let vars: Vec<String> = C4_SIZES.iter().zip(&stats).map(|(n, s)| format!("n={n}: {:.2e}", s[last].0)).collect();
    Ok(Outcome::new(
        pass,
        format!("Var S(1): {}; smallest decrease {min_z:.1} sigma (need > {C4_SIGMAS})", vars.join(", ")),
    ))
}
