//! Criteria on sampled laws: limit edge marks, DER union degrees and CM
//! rewiring counts.

use anyhow::Result;
use dynepi_core::generators::{gen_dynamic_cm, gen_dynamic_er, CmConfig, DerConfig, RewiringClock};
use dynepi_core::limits::OnOffMarkLaw;
use dynepi_core::rng::{derive_seed, stream, tag};
use dynepi_core::util::{mean_se, poisson_pmf, tv_distance};
use rayon::prelude::*;

use super::Outcome;

const C5_SAMPLES: usize = 1_000_000;
const C5_GRID: usize = 50;
const C5_MAX_DEVIATION: f64 = 0.005;
const C5_SIGMAS: f64 = 4.0;

/// Index of the first grid point `T*a/50` at or above `t`.
fn grid_index(t: f64, horizon: f64) -> usize {
    let at = |a: usize| horizon * a as f64 / C5_GRID as f64;
    let mut a = ((t / horizon * C5_GRID as f64).ceil() as usize).min(C5_GRID);
    while a > 0 && t <= at(a - 1) {
        a -= 1;
    }
    while a < C5_GRID && t > at(a) {
        a += 1;
    }
    a
}

pub fn mark_law() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for horizon in [1.0, 5.0] {
        let law = OnOffMarkLaw::new(horizon)?;
        let mut rng = stream(0xC5, tag::LIMIT, horizon as u64);
        // counts[a][b]: marks whose on and off times first fit under grid points a and b
        let mut counts = vec![vec![0u64; C5_GRID + 1]; C5_GRID + 1];
        let mut at_zero = 0u64;
        for _ in 0..C5_SAMPLES {
            let (on, off) = law.sample(&mut rng);
            at_zero += (on == 0.0) as u64;
            counts[grid_index(on, horizon)][grid_index(off, horizon)] += 1;
        }
        for a in 0..=C5_GRID {
            for b in 0..=C5_GRID {
                let left = if a > 0 { counts[a - 1][b] } else { 0 };
                let up = if b > 0 { counts[a][b - 1] } else { 0 };
                let diag = if a > 0 && b > 0 { counts[a - 1][b - 1] } else { 0 };
                counts[a][b] += left + up - diag;
            }
        }
        let n = C5_SAMPLES as f64;
        let mut dev = 0.0f64;
        for a in 1..=C5_GRID {
            for b in 1..=C5_GRID {
                let (s1, s2) = (horizon * a as f64 / C5_GRID as f64, horizon * b as f64 / C5_GRID as f64);
                dev = dev.max((counts[a][b] as f64 / n - law.cdf(s1, s2)).abs());
            }
        }
        let p = 1.0 / (1.0 + horizon);
        let p_hat = at_zero as f64 / n;
        let sigma = (p * (1.0 - p) / n).sqrt();
        pass &= dev < C5_MAX_DEVIATION && (p_hat - p).abs() <= C5_SIGMAS * sigma;
        parts.push(format!("T={horizon}: max CDF deviation {dev:.4}, P(t_on=0) {p_hat:.4} vs {p:.4} ({:.1} sigma)", (p_hat - p).abs() / sigma));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

const C6_SEEDS: u64 = 200;
const C6_MAX_TV: f64 = 0.02;

pub fn der_union_degree() -> Result<Outcome> {
    let cfg = DerConfig { n: 5000, gamma: 3.0, horizon: 1.0 };
    let hists: Vec<Vec<u64>> = (0..C6_SEEDS)
        .into_par_iter()
        .map(|k| {
            let u = gen_dynamic_er(&cfg, derive_seed(0xC6, tag::RUN_GRAPH, k))?.graph.union_graph();
            let mut h = Vec::new();
            for v in 0..u.n() {
                let d = u.degree(v);
                if d >= h.len() {
                    h.resize(d + 1, 0);
                }
                h[d] += 1;
            }
            Ok(h)
        })
        .collect::<Result<_>>()?;
    let len = hists.iter().map(Vec::len).max().unwrap_or(0);
    let mut pooled = vec![0u64; len];
    for h in &hists {
        for (p, c) in pooled.iter_mut().zip(h) {
            *p += c;
        }
    }
    let total: u64 = pooled.iter().sum();
    let empirical: Vec<f64> = pooled.iter().map(|&c| c as f64 / total as f64).collect();
    let mean: f64 = empirical.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let lambda = cfg.gamma * (1.0 + cfg.horizon);
    let tv = tv_distance(&empirical, &poisson_pmf(lambda, len + 40));
    Ok(Outcome::new(
        tv < C6_MAX_TV,
        format!("TV {tv:.4} < {C6_MAX_TV} over {total} vertices (mean degree {mean:.3} vs {lambda})"),
    ))
}

const C7_SEEDS: u64 = 10;
const C7_SIGMAS: f64 = 4.0;
const C7_DEGREES: [u32; 3] = [2, 4, 8];

pub fn cm_rewiring() -> Result<Outcome> {
    let n = 4000usize;
    let degrees: Vec<u32> = (0..n).map(|v| C7_DEGREES[v * 3 / n]).collect();
    let cfg = CmConfig { degrees, alpha: 0.5, horizon: 1.0, clock: RewiringClock::PerEdge };
    let counts: Vec<Vec<u32>> = (0..C7_SEEDS)
        .into_par_iter()
        .map(|k| {
            let out = gen_dynamic_cm(&cfg, derive_seed(0xC7, tag::RUN_GRAPH, k))?;
            Ok(out.new_connections.unwrap_or_default())
        })
        .collect::<Result<_>>()?;
    let mut pass = true;
    let mut parts = Vec::new();
    for &k in &C7_DEGREES {
        let xs: Vec<f64> = counts
            .iter()
            .flat_map(|c| c.iter().zip(&cfg.degrees).filter(|(_, &d)| d == k).map(|(&x, _)| x as f64))
            .collect();
        let (mean, se) = mean_se(&xs);
        let expected = 4.0 * cfg.alpha * k as f64 * cfg.horizon / 3.0;
        pass &= (mean - expected).abs() <= C7_SIGMAS * se;
        parts.push(format!("k={k}: {mean:.4} vs {expected:.4} ({:.1} sigma)", (mean - expected).abs() / se));
    }
    if counts.iter().any(|c| c.len() != n) {
        anyhow::bail!("generator did not report new connections");
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}
