use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::{random_pair, GenMeta, GenOutput};
use crate::error::{config, Result};
use crate::graph::{DynamicGraph, MarkSeq};
use crate::rng::{exp_inv, stream, tag};
use crate::util::OrdF64;

/// Dynamic Erdős–Rényi parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerConfig {
    pub n: u32,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl DerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(config(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.gamma >= 0.0 && self.gamma < self.n as f64) {
            return Err(config(format!("gamma must satisfy 0 <= gamma < n, got {}", self.gamma)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(config(format!("T must be finite and >= 0, got {}", self.horizon)));
        }
        Ok(())
    }

    /// OFF->ON rate of a single pair.
    pub fn activation_rate(&self) -> f64 {
        self.gamma / (self.n as f64 - self.gamma)
    }

    fn pair_count(&self) -> u64 {
        let n = self.n as u64;
        n * (n - 1) / 2
    }
}

/// Static ER(γ/n) edge set: Binomial count, then distinct uniform pairs.
fn initial_edges<R: Rng>(c: &DerConfig, rng: &mut R) -> Vec<(u32, u32)> {
    let p = c.gamma / c.n as f64;
    if p <= 0.0 {
        return Vec::new();
    }
    let k = Binomial::new(c.pair_count(), p).expect("valid binomial").sample(rng);
    let mut seen = HashSet::with_capacity(k as usize);
    let mut out = Vec::with_capacity(k as usize);
    while (out.len() as u64) < k {
        let e = random_pair(rng, c.n);
        if seen.insert(e) {
            out.push(e);
        }
    }
    out.sort_unstable();
    out
}

/// Dynamic ER: stationary start, per-pair OFF->ON rate γ/(n−γ), ON->OFF rate 1.
///
/// OFF->ON clocks of all pairs are simulated as one Poisson process of rate
/// `(n choose 2)·γ/(n−γ)` whose points pick a uniform pair; points landing on a
/// pair that is already ON are discarded. This thinning is exact.
pub fn gen_dynamic_er(c: &DerConfig, seed: u64) -> Result<GenOutput> {
    c.validate()?;
    let horizon = c.horizon;
    let mut init_rng = stream(seed, tag::DER, 0);
    let mut act_rng = stream(seed, tag::DER, 1);
    let mut life_rng = stream(seed, tag::DER, 2);

    let mut open: HashMap<(u32, u32), f64> = HashMap::new();
    let mut closed: HashMap<(u32, u32), Vec<(f64, f64)>> = HashMap::new();
    let mut off_clock: BinaryHeap<Reverse<(OrdF64, (u32, u32))>> = BinaryHeap::new();

    let initial = initial_edges(c, &mut init_rng);
    for &e in &initial {
        open.insert(e, 0.0);
        off_clock.push(Reverse((OrdF64(exp_inv(&mut life_rng, 1.0)), e)));
    }

    let total_rate = c.pair_count() as f64 * c.activation_rate();
    let mut next_act = if total_rate > 0.0 { exp_inv(&mut act_rng, total_rate) } else { f64::INFINITY };
    let (mut activations, mut rejected) = (0u64, 0u64);
    loop {
        let next_off = off_clock.peek().map_or(f64::INFINITY, |Reverse((t, _))| t.0);
        let now = next_act.min(next_off);
        if now > horizon {
            break;
        }
        if next_off <= next_act {
            let Reverse((_, e)) = off_clock.pop().unwrap();
            let start = open.remove(&e).expect("off event for an ON pair");
            closed.entry(e).or_default().push((start, now));
        } else {
            let e = random_pair(&mut act_rng, c.n);
            if open.contains_key(&e) {
                rejected += 1;
            } else {
                activations += 1;
                open.insert(e, now);
                off_clock.push(Reverse((OrdF64(now + exp_inv(&mut life_rng, 1.0)), e)));
            }
            next_act = now + exp_inv(&mut act_rng, total_rate);
        }
    }
    for (e, start) in open {
        closed.entry(e).or_default().push((start, horizon));
    }

    let mut graph = DynamicGraph::new(c.n, horizon)?;
    for ((u, v), intervals) in closed {
        // chronological per pair, and a pair cannot re-activate while ON
        graph.insert_unchecked(u, v, MarkSeq::union_of(intervals).unwrap());
    }
    Ok(GenOutput {
        graph,
        meta: GenMeta {
            model: "der".into(),
            n: c.n,
            horizon,
            seed,
            initial_on: initial.len() as u64,
            activations,
            rejected,
            ..Default::default()
        },
        groups: None,
        new_connections: None,
    })
}

/// Alternative dynamic ER: the time-0 edges alternate ON/OFF with Exp(1)
/// holding times; no other pair ever switches ON.
pub fn gen_alt_dynamic_er(c: &DerConfig, seed: u64) -> Result<GenOutput> {
    c.validate()?;
    let horizon = c.horizon;
    let mut init_rng = stream(seed, tag::ALT_DER, 0);
    let initial = initial_edges(c, &mut init_rng);
    let mut graph = DynamicGraph::new(c.n, horizon)?;
    let mut activations = 0;
    for &(u, v) in &initial {
        let mut rng = stream(seed, tag::ALT_DER, 1 + ((u as u64) << 32 | v as u64));
        let mut intervals = Vec::new();
        let mut on = 0.0;
        loop {
            let off = on + exp_inv(&mut rng, 1.0);
            if off >= horizon {
                intervals.push((on, horizon));
                break;
            }
            intervals.push((on, off));
            on = off + exp_inv(&mut rng, 1.0);
            if on > horizon {
                break;
            }
            activations += 1;
        }
        graph.insert_unchecked(u, v, MarkSeq::union_of(intervals).unwrap());
    }
    Ok(GenOutput {
        graph,
        meta: GenMeta {
            model: "alt_der".into(),
            n: c.n,
            horizon,
            seed,
            initial_on: initial.len() as u64,
            activations,
            ..Default::default()
        },
        groups: None,
        new_connections: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u32, gamma: f64, horizon: f64) -> DerConfig {
        DerConfig { n, gamma, horizon }
    }

    #[test]
    fn rejects_gamma_at_least_n() {
        assert!(gen_dynamic_er(&cfg(10, 10.0, 1.0), 1).is_err());
        assert!(gen_alt_dynamic_er(&cfg(10, 12.0, 1.0), 1).is_err());
    }

    #[test]
    fn stationary_on_probability() {
        // two-state chain: (γ/(n−γ)) / (γ/(n−γ) + 1) = γ/n
        let c = cfg(50, 3.0, 1.0);
        let a = c.activation_rate();
        assert!((a / (a + 1.0) - 3.0 / 50.0).abs() < 1e-15);
    }

    #[test]
    fn initial_mean_degree() {
        let c = cfg(25_000, 3.0, 0.0);
        let g = gen_dynamic_er(&c, 11).unwrap().graph;
        let mean = 2.0 * g.edge_count() as f64 / c.n as f64;
        // Binomial(M, γ/n): sd of 2K/n ≈ 2·sqrt(nγ/2)/n
        let sd = 2.0 * (c.n as f64 * 3.0 / 2.0).sqrt() / c.n as f64;
        assert!((mean - 3.0).abs() < 4.0 * sd, "mean degree {mean}");
    }

    #[test]
    fn alt_union_equals_initial_graph() {
        let c = cfg(400, 3.0, 4.0);
        let out = gen_alt_dynamic_er(&c, 5).unwrap();
        let at_zero = out.graph.snapshot(0.0).unwrap();
        assert_eq!(at_zero.len(), out.graph.edge_count());
        assert_eq!(out.meta.initial_on as usize, out.graph.edge_count());

        let empty = gen_alt_dynamic_er(&cfg(100, 0.0, 5.0), 1).unwrap();
        assert_eq!(empty.graph.edge_count(), 0);
    }

    #[test]
    fn alt_first_off_time_is_truncated_exp() {
        // P(first OFF > t) = e^{-t} for t < T
        let c = cfg(2000, 3.0, 2.0);
        let mut first_off = Vec::new();
        for seed in 0..10 {
            let g = gen_alt_dynamic_er(&c, seed).unwrap().graph;
            first_off.extend(g.edges().map(|(_, m)| m.intervals()[0].1));
        }
        let n = first_off.len() as f64;
        let frac = first_off.iter().filter(|&&t| t > 0.5).count() as f64 / n;
        let p = (-0.5f64).exp();
        assert!((frac - p).abs() < 4.0 * (p * (1.0 - p) / n).sqrt(), "{frac} vs {p}");
        let at_horizon = first_off.iter().filter(|&&t| t == 2.0).count() as f64 / n;
        let q = (-2.0f64).exp();
        assert!((at_horizon - q).abs() < 4.0 * (q * (1.0 - q) / n).sqrt());
    }

    #[test]
    fn deterministic_under_seed() {
        let c = cfg(300, 2.0, 3.0);
        assert_eq!(gen_dynamic_er(&c, 9).unwrap().graph, gen_dynamic_er(&c, 9).unwrap().graph);
        assert_ne!(gen_dynamic_er(&c, 9).unwrap().graph, gen_dynamic_er(&c, 10).unwrap().graph);
        assert_eq!(gen_alt_dynamic_er(&c, 9).unwrap().graph, gen_alt_dynamic_er(&c, 9).unwrap().graph);
    }
}
