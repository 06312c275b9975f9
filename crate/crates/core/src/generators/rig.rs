use std::collections::HashMap;

use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use super::{GenMeta, GenOutput, Group};
use crate::error::{config, Result};
use crate::graph::{pair, DynamicGraph, MarkSeq};
use crate::rng::{exp_inv, stream, tag};

/// Largest group size ever materialized.
pub const MAX_GROUP_SIZE: usize = 50;

/// Group-size pmf indexed directly by size: entry `k` is `p_k`, so entries 0
/// and 1 must be zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupSizePmf(pub Vec<f64>);

impl GroupSizePmf {
    pub fn validate(&self) -> Result<()> {
        let p = &self.0;
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(config("p_k entries must be finite and non-negative"));
        }
        if p.iter().take(2).any(|&x| x != 0.0) {
            return Err(config("p_0 and p_1 must be zero (groups have size >= 2)"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(config(format!("p_k must sum to 1, sums to {total}")));
        }
        Ok(())
    }

    pub fn max_size(&self) -> usize {
        self.0.iter().rposition(|&x| x > 0.0).unwrap_or(0)
    }

    /// ζ = Σ k p_k.
    pub fn mean(&self) -> f64 {
        self.0.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// ζ₂ = Σ k² p_k.
    pub fn second_moment(&self) -> f64 {
        self.0.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum()
    }

    /// Restriction to sizes `<= k_max`, renormalized.
    pub fn truncated(&self, k_max: usize) -> GroupSizePmf {
        let mut p: Vec<f64> = self.0.iter().take(k_max + 1).copied().collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        GroupSizePmf(p)
    }

    /// Shifted size-biased law: `P(X̃ = j) = (j+1) p_{j+1} / ζ`, i.e. the number
    /// of other members of the group containing a size-biased vertex.
    pub fn shifted_size_biased(&self) -> Vec<f64> {
        let zeta = self.mean();
        (1..self.0.len()).map(|k| k as f64 * self.0[k] / zeta).collect()
    }
}

/// Law of a vertex weight `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum WeightLaw {
    Constant { w: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    Gamma { shape: f64, scale: f64 },
}

impl WeightLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightLaw::Constant { w } if !(*w > 0.0 && w.is_finite()) => Err(config("constant weight must be > 0")),
            WeightLaw::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(config("discrete weight law needs matching non-empty values/probs"));
                }
                if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) || probs.iter().any(|p| !(*p >= 0.0)) {
                    return Err(config("discrete weight law needs positive values and non-negative probs"));
                }
                if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(config("discrete weight probs must sum to 1"));
                }
                Ok(())
            }
            WeightLaw::Gamma { shape, scale } if !(*shape > 0.0 && *scale > 0.0) => {
                Err(config("gamma weight law needs shape, scale > 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            WeightLaw::Constant { w } => *w,
            WeightLaw::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
            WeightLaw::Gamma { shape, scale } => shape * scale,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WeightLaw::Constant { w } => *w,
            WeightLaw::Discrete { values, probs } => {
                values[WeightedAliasIndex::new(probs.clone()).expect("validated").sample(rng)]
            }
            WeightLaw::Gamma { shape, scale } => Gamma::new(*shape, *scale).expect("validated").sample(rng),
        }
    }

    /// Draw from the size-biased law `W★` with density `x dF(x) / E[W]`.
    pub fn sample_size_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WeightLaw::Constant { w } => *w,
            WeightLaw::Discrete { values, probs } => {
                let biased: Vec<f64> = values.iter().zip(probs).map(|(v, p)| v * p).collect();
                values[WeightedAliasIndex::new(biased).expect("validated").sample(rng)]
            }
            WeightLaw::Gamma { shape, scale } => Gamma::new(shape + 1.0, *scale).expect("validated").sample(rng),
        }
    }
}

/// Per-vertex weights: an explicit list or i.i.d. draws from a law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Values(Vec<f64>),
    Law(WeightLaw),
}

/// Dynamic random intersection graph parameters. Missing weights mean all
/// `w_i = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigConfig {
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightSpec>,
    #[serde(rename = "p_k")]
    pub group_size_pmf: GroupSizePmf,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl RigConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(config("n must be >= 2"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(config("T must be finite and >= 0"));
        }
        self.group_size_pmf.validate()?;
        if self.group_size_pmf.max_size() > self.n as usize {
            return Err(config(format!(
                "group sizes up to {} exceed n = {}",
                self.group_size_pmf.max_size(),
                self.n
            )));
        }
        match &self.weights {
            Some(WeightSpec::Values(w)) => {
                if w.len() != self.n as usize {
                    return Err(config(format!("{} weights for n = {}", w.len(), self.n)));
                }
                if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(config("weights must be positive and finite"));
                }
            }
            Some(WeightSpec::Law(l)) => l.validate()?,
            None => {}
        }
        Ok(())
    }

    pub fn resolve_weights(&self, seed: u64) -> Vec<f64> {
        match &self.weights {
            None => vec![1.0; self.n as usize],
            Some(WeightSpec::Values(w)) => w.clone(),
            Some(WeightSpec::Law(l)) => {
                let mut rng = stream(seed, tag::WEIGHTS, 0);
                (0..self.n).map(|_| l.sample(&mut rng)).collect()
            }
        }
    }
}

/// Elementary symmetric polynomials `e_0..=e_kmax` of `x`.
pub fn elementary_symmetric(x: &[f64], k_max: usize) -> Vec<f64> {
    let mut e = vec![0.0; k_max + 1];
    e[0] = 1.0;
    for (i, &xi) in x.iter().enumerate() {
        for j in (1..=(i + 1).min(k_max)).rev() {
            e[j] += xi * e[j - 1];
        }
    }
    e
}

/// Total OFF->ON rate over all groups of size `k`:
/// `Σ_{|a|=k} k! p_k Π_{i∈a} w_i / ℓ^{k−1} = k! p_k ℓ e_k(w/ℓ)`.
pub fn group_activation_rate(weights: &[f64], pmf: &GroupSizePmf, k: usize) -> f64 {
    let p = pmf.0.get(k).copied().unwrap_or(0.0);
    if p == 0.0 {
        return 0.0;
    }
    let total: f64 = weights.iter().sum();
    let x: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let e = elementary_symmetric(&x, k);
    let factorial: f64 = (2..=k).map(|i| i as f64).product();
    factorial * p * total * e[k]
}

/// `k` distinct vertices, each draw proportional to weight among the rest.
fn sample_members<R: Rng>(rng: &mut R, k: usize, n: u32, alias: Option<&WeightedAliasIndex<f64>>) -> Vec<u32> {
    let mut members: Vec<u32> = Vec::with_capacity(k);
    while members.len() < k {
        let v = match alias {
            Some(a) => a.sample(rng) as u32,
            None => rng.random_range(0..n),
        };
        if !members.contains(&v) {
            members.push(v);
        }
    }
    members.sort_unstable();
    members
}

/// Dynamic RIG by thinning: only groups that are ever ON are materialized.
///
/// Per size `k`, the time-0 ON groups are Poisson(λ_k) and fresh activations on
/// `(0, T]` form a Poisson process of rate λ_k, with λ_k from
/// [`group_activation_rate`]. Every group stays ON for an Exp(1) time. A pair
/// is ON whenever some group containing both is ON.
pub fn gen_dynamic_rig(c: &RigConfig, seed: u64) -> Result<GenOutput> {
    c.validate()?;
    let horizon = c.horizon;
    let mut meta = GenMeta { model: "rig".into(), n: c.n, horizon, seed, ..Default::default() };

    let mut pmf = c.group_size_pmf.clone();
    let k_max = (c.n as usize).min(MAX_GROUP_SIZE);
    if pmf.max_size() > k_max {
        let dropped: f64 = pmf.0.iter().skip(k_max + 1).sum();
        pmf = pmf.truncated(k_max);
        meta.truncations.push(format!("group sizes truncated at {k_max}; dropped mass {dropped:e} renormalized"));
    }

    let weights = c.resolve_weights(seed);
    let uniform = weights.windows(2).all(|w| w[0] == w[1]);
    let alias = if uniform { None } else { Some(WeightedAliasIndex::new(weights.clone()).map_err(|e| config(e.to_string()))?) };

    let mut groups = Vec::new();
    for k in 2..=pmf.max_size() {
        let rate = group_activation_rate(&weights, &pmf, k);
        if rate <= 0.0 {
            continue;
        }
        meta.notes.push(format!("k={k}: activation rate {rate}"));
        let mut rng = stream(seed, tag::RIG, k as u64);
        let initial = Poisson::new(rate).map_err(|e| config(e.to_string()))?.sample(&mut rng) as u64;
        let arrivals = if horizon > 0.0 {
            Poisson::new(rate * horizon).map_err(|e| config(e.to_string()))?.sample(&mut rng) as u64
        } else {
            0
        };
        meta.initial_on += initial;
        meta.activations += arrivals;
        let mut starts: Vec<f64> = vec![0.0; initial as usize];
        let mut fresh: Vec<f64> = (0..arrivals).map(|_| horizon * (1.0 - rng.random::<f64>())).collect();
        fresh.sort_by(f64::total_cmp);
        starts.extend(fresh);
        for on in starts {
            let members = sample_members(&mut rng, k, c.n, alias.as_ref());
            let off = (on + exp_inv(&mut rng, 1.0)).min(horizon);
            groups.push(Group { members, on, off });
        }
    }

    let mut per_pair: HashMap<(u32, u32), Vec<(f64, f64)>> = HashMap::new();
    for g in &groups {
        for (i, &a) in g.members.iter().enumerate() {
            for &b in &g.members[i + 1..] {
                per_pair.entry(pair(a, b)).or_default().push((g.on, g.off));
            }
        }
    }
    let mut graph = DynamicGraph::new(c.n, horizon)?;
    for ((u, v), intervals) in per_pair {
        graph.insert_unchecked(u, v, MarkSeq::union_of(intervals).unwrap());
    }
    Ok(GenOutput { graph, meta, groups: Some(groups), new_connections: None })
}
