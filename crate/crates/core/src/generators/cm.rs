use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GenMeta, GenOutput};
use crate::error::{config, Result};
use crate::graph::{pair, DynamicGraph, MarkSeq};
use crate::rng::{exp_inv, stream, tag, StreamRng};

/// How the global rewiring rate scales with the number of half-edges `ℓ_n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewiringClock {
    /// Global rate `α ℓ_n / 2`: every edge is selected at rate `2α`, so a
    /// degree-`k` vertex forms new connections at rate `4αk/3`.
    #[default]
    PerEdge,
    /// Global rate `α ℓ_n`: every edge is selected at rate `4α`.
    PerHalfEdge,
}

/// Configuration model with rewiring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmConfig {
    pub degrees: Vec<u32>,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub clock: RewiringClock,
}

impl CmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degrees.len() > u32::MAX as usize {
            return Err(config("too many vertices"));
        }
        if self.half_edges() % 2 != 0 {
            return Err(config(format!("degree sum {} is odd", self.half_edges())));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(config(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(config(format!("T must be finite and >= 0, got {}", self.horizon)));
        }
        Ok(())
    }

    /// ℓ_n.
    pub fn half_edges(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum()
    }

    pub fn event_rate(&self) -> f64 {
        let l = self.half_edges() as f64;
        match self.clock {
            RewiringClock::PerEdge => self.alpha * l / 2.0,
            RewiringClock::PerHalfEdge => self.alpha * l,
        }
    }
}

/// Half-edge state machine of a rewired configuration model.
///
/// Edge slot `i` holds half-edges `slots[i]`; half-edge `h` belongs to vertex
/// `owner[h]`. Self-loops and parallel edges live here and are collapsed only
/// when the pair intervals are exported.
pub struct CmProcess {
    n: u32,
    horizon: f64,
    rate: f64,
    owner: Vec<u32>,
    slots: Vec<(u32, u32)>,
    rng: StreamRng,
    now: f64,
    events: u64,
    selections: Vec<u32>,
    new_connections: Vec<u32>,
    /// Multiplicity and current-run start of each non-loop pair.
    live: HashMap<(u32, u32), (u32, f64)>,
    closed: HashMap<(u32, u32), Vec<(f64, f64)>>,
}

impl CmProcess {
    pub fn new(c: &CmConfig, seed: u64) -> Result<Self> {
        c.validate()?;
        let mut owner: Vec<u32> = Vec::with_capacity(c.half_edges() as usize);
        for (v, &d) in c.degrees.iter().enumerate() {
            owner.extend(std::iter::repeat_n(v as u32, d as usize));
        }
        let mut order: Vec<u32> = (0..owner.len() as u32).collect();
        order.shuffle(&mut stream(seed, tag::CM, 0));
        let slots: Vec<(u32, u32)> = order.chunks(2).map(|h| (h[0], h[1])).collect();
        let mut p = CmProcess {
            n: c.degrees.len() as u32,
            horizon: c.horizon,
            rate: if slots.len() >= 2 { c.event_rate() } else { 0.0 },
            owner,
            selections: vec![0; slots.len()],
            slots,
            rng: stream(seed, tag::CM, 1),
            now: 0.0,
            events: 0,
            new_connections: vec![0; c.degrees.len()],
            live: HashMap::new(),
            closed: HashMap::new(),
        };
        for i in 0..p.slots.len() {
            let (a, b) = p.slots[i];
            p.add(a, b);
        }
        Ok(p)
    }

    pub fn time(&self) -> f64 {
        self.now
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Number of rewiring events that picked each edge slot.
    pub fn selections(&self) -> &[u32] {
        &self.selections
    }

    pub fn new_connections(&self) -> &[u32] {
        &self.new_connections
    }

    /// Current multigraph as vertex pairs, loops included.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.slots.iter().map(|&(a, b)| (self.owner[a as usize], self.owner[b as usize]))
    }

    /// Current degrees, a loop counting twice.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d = vec![0; self.n as usize];
        for (u, v) in self.edges() {
            d[u as usize] += 1;
            d[v as usize] += 1;
        }
        d
    }

    fn add(&mut self, a: u32, b: u32) {
        let (u, v) = (self.owner[a as usize], self.owner[b as usize]);
        if u != v {
            let now = self.now;
            let entry = self.live.entry(pair(u, v)).or_insert((0, now));
            if entry.0 == 0 {
                entry.1 = now;
            }
            entry.0 += 1;
        }
    }

    fn remove(&mut self, a: u32, b: u32) {
        let (u, v) = (self.owner[a as usize], self.owner[b as usize]);
        if u != v {
            let key = pair(u, v);
            let entry = self.live.get_mut(&key).expect("removing a live pair");
            entry.0 -= 1;
            if entry.0 == 0 {
                let start = entry.1;
                self.live.remove(&key);
                self.closed.entry(key).or_default().push((start, self.now));
            }
        }
    }

    /// Performs the next rewiring event if it falls in `(now, T]` and returns
    /// its time.
    pub fn step(&mut self) -> Option<f64> {
        if self.rate <= 0.0 {
            return None;
        }
        let t = self.now + exp_inv(&mut self.rng, self.rate);
        if t > self.horizon {
            self.now = self.horizon;
            self.rate = 0.0;
            return None;
        }
        self.now = t;
        self.events += 1;
        let m = self.slots.len();
        let i = self.rng.random_range(0..m);
        let mut j = self.rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        self.selections[i] += 1;
        self.selections[j] += 1;
        let ((a, b), (c, d)) = (self.slots[i], self.slots[j]);
        let new = match self.rng.random_range(0..3u8) {
            0 => return Some(t),
            1 => ((a, c), (b, d)),
            _ => ((a, d), (b, c)),
        };
        for h in [a, b, c, d] {
            self.new_connections[self.owner[h as usize] as usize] += 1;
        }
        // additions first so a pair kept alive by the new edges never closes
        self.add(new.0 .0, new.0 .1);
        self.add(new.1 .0, new.1 .1);
        self.remove(a, b);
        self.remove(c, d);
        self.slots[i] = new.0;
        self.slots[j] = new.1;
        Some(t)
    }

    /// Runs to the horizon and exports the collapsed dynamic graph.
    pub fn finish(mut self, seed: u64) -> Result<GenOutput> {
        while self.step().is_some() {}
        let horizon = self.horizon;
        for (key, (_, start)) in std::mem::take(&mut self.live) {
            self.closed.entry(key).or_default().push((start, horizon));
        }
        let mut graph = DynamicGraph::new(self.n, horizon)?;
        for ((u, v), intervals) in self.closed {
            graph.insert_unchecked(u, v, MarkSeq::union_of(intervals).unwrap());
        }
        Ok(GenOutput {
            graph,
            meta: GenMeta {
                model: "cm".into(),
                n: self.n,
                horizon,
                seed,
                initial_on: self.slots.len() as u64,
                activations: self.events,
                ..Default::default()
            },
            groups: None,
            new_connections: Some(self.new_connections),
        })
    }
}

/// Configuration model with rewiring over `[0, T]`: a uniform half-edge
/// pairing at time 0, then at each event two distinct uniform edges are
/// broken and their four half-edges re-paired in one of the three ways.
pub fn gen_dynamic_cm(c: &CmConfig, seed: u64) -> Result<GenOutput> {
    CmProcess::new(c, seed)?.finish(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(degrees: Vec<u32>, alpha: f64, horizon: f64) -> CmConfig {
        CmConfig { degrees, alpha, horizon, clock: RewiringClock::PerEdge }
    }

    #[test]
    fn odd_degree_sum_is_an_error() {
        assert!(gen_dynamic_cm(&cfg(vec![1, 2, 2], 0.5, 1.0), 0).is_err());
    }

    #[test]
    fn degrees_invariant_at_every_event() {
        let degrees: Vec<u32> = (0..200).map(|i| 1 + i % 5).collect();
        let c = cfg(degrees.clone(), 2.0, 3.0);
        let mut p = CmProcess::new(&c, 8).unwrap();
        assert_eq!(p.degrees(), degrees);
        let mut steps = 0;
        while p.step().is_some() {
            assert_eq!(p.degrees(), degrees);
            steps += 1;
        }
        assert!(steps > 100);
    }

    #[test]
    fn event_count_matches_clock() {
        let degrees = vec![3u32; 1000];
        for (clock, factor) in [(RewiringClock::PerHalfEdge, 1.0), (RewiringClock::PerEdge, 0.5)] {
            let c = CmConfig { degrees: degrees.clone(), alpha: 0.5, horizon: 2.0, clock };
            let events = gen_dynamic_cm(&c, 3).unwrap().meta.activations as f64;
            let expect = factor * 0.5 * 3000.0 * 2.0;
            assert!((events - expect).abs() < 4.0 * expect.sqrt(), "{clock:?}: {events} vs {expect}");
        }
    }

    #[test]
    fn each_edge_selected_at_rate_two_alpha() {
        let c = cfg(vec![2; 2000], 0.5, 4.0);
        let mut p = CmProcess::new(&c, 21).unwrap();
        while p.step().is_some() {}
        let sel = p.selections();
        let mean = sel.iter().map(|&x| x as f64).sum::<f64>() / sel.len() as f64;
        let expect = 2.0 * 0.5 * 4.0;
        // selections of one slot are Poisson(2αT); pooled over ℓ/2 slots
        assert!((mean - expect).abs() < 4.0 * (expect / sel.len() as f64).sqrt() * 1.5, "{mean}");
    }

    #[test]
    fn new_connection_rate() {
        let degrees: Vec<u32> = (0..3000).map(|i| [2, 4, 8][i % 3]).collect();
        let c = cfg(degrees.clone(), 0.5, 1.0);
        let nc = gen_dynamic_cm(&c, 5).unwrap().new_connections.unwrap();
        for k in [2u32, 4, 8] {
            let xs: Vec<f64> = nc.iter().zip(&degrees).filter(|(_, &d)| d == k).map(|(&x, _)| x as f64).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let expect = 4.0 * 0.5 * k as f64 / 3.0;
            assert!((mean - expect).abs() < 4.0 * (expect / xs.len() as f64).sqrt() * 1.5, "k={k}: {mean}");
        }
    }

    #[test]
    fn static_when_alpha_zero() {
        let c = cfg(vec![2; 100], 0.0, 5.0);
        let out = gen_dynamic_cm(&c, 1).unwrap();
        assert_eq!(out.meta.activations, 0);
        assert!(out.graph.edges().all(|(_, m)| m.intervals() == [(0.0, 5.0)]));
    }

    #[test]
    fn exported_snapshots_match_state() {
        let degrees: Vec<u32> = (0..60).map(|i| 1 + i % 3).collect();
        let c = cfg(degrees, 1.0, 2.0);
        let mut p = CmProcess::new(&c, 2).unwrap();
        let current = |p: &CmProcess| {
            let mut e: Vec<(u32, u32)> = p.edges().filter(|(u, v)| u != v).map(|(u, v)| pair(u, v)).collect();
            e.sort_unstable();
            e.dedup();
            e
        };
        // at an event instant both the old and new edges are ON; probe midway
        let mut checkpoints = Vec::new();
        let (mut prev_t, mut prev_e) = (0.0, current(&p));
        while let Some(t) = p.step() {
            checkpoints.push(((prev_t + t) / 2.0, prev_e));
            (prev_t, prev_e) = (t, current(&p));
        }
        let g = gen_dynamic_cm(&c, 2).unwrap().graph;
        assert!(!checkpoints.is_empty());
        for (t, e) in checkpoints {
            assert_eq!(g.snapshot(t).unwrap(), e);
        }
    }

    #[test]
    fn deterministic() {
        let c = cfg(vec![3; 50], 1.0, 1.0);
        assert_eq!(gen_dynamic_cm(&c, 4).unwrap().graph, gen_dynamic_cm(&c, 4).unwrap().graph);
    }
}
