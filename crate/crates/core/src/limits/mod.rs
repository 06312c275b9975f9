//! Local limit objects of the dynamic graph models and Monte Carlo estimates
//! of the limiting epidemic curve.

mod tree;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epidemic::{check_grid, Backward, EpidemicCurve, EpidemicParams, DEFAULT_PATH_CAP};
use crate::error::{config, Result};
use crate::generators::{GroupSizePmf, WeightLaw};
use crate::rng::{derive_seed, exp_inv, stream, tag};

pub use tree::{materialize, LimitEdge, LimitGroup, LimitTree, LimitVertex};

/// Joint law of the single ON interval of a limit edge over `[0, T]`:
/// `t_on = 0` with probability `1/(1+T)`, otherwise uniform on `(0, T]`, and
/// `t_off = min(t_on + Exp(1), T)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnOffMarkLaw {
    horizon: f64,
}

impl OnOffMarkLaw {
    pub fn new(horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(config(format!("mark law needs a finite horizon >= 0, got {horizon}")));
        }
        Ok(OnOffMarkLaw { horizon })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `P(t_on <= s1, t_off <= s2)`. Below the horizon this is
    /// `(1 + s1 − e^{−(s2−s1)}) / (1 + T)` for `s1 <= s2`; `t_off` has an atom
    /// at `T`, so for `s2 >= T` only the `t_on` constraint remains.
    pub fn cdf(&self, s1: f64, s2: f64) -> f64 {
        let t = self.horizon;
        if s1 < 0.0 || s2 < 0.0 {
            return 0.0;
        }
        let s1 = s1.min(t);
        if s2 >= t {
            return (1.0 + s1) / (1.0 + t);
        }
        let a = s1.min(s2);
        (1.0 + a - (-(s2 - a)).exp()) / (1.0 + t)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let t = self.horizon;
        let on = if rng.random::<f64>() * (1.0 + t) < 1.0 { 0.0 } else { t * (1.0 - rng.random::<f64>()) };
        let off = (on + exp_inv(rng, 1.0)).min(t);
        (on, off)
    }
}

pub fn sample_on_off_mark(law: &OnOffMarkLaw, seed: u64) -> (f64, f64) {
    law.sample(&mut stream(seed, tag::LIMIT, 0))
}

/// Marks of the time-0 edges of the rewired configuration-model limit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginalEdgeMarks {
    /// Original edges ON on all of `[0, T]`, rewired edges from creation to `T`.
    #[default]
    Persistent,
    /// Every edge lives an Exp(4α/3) time from its creation, cut at `T`.
    Exponential,
}

/// Which limit object to sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitModel {
    /// Poisson(γ(1+T)) branching tree with i.i.d. single-interval marks.
    Der {
        gamma: f64,
        #[serde(rename = "T")]
        horizon: f64,
    },
    /// Community projection of the bipartite vertex/group branching tree.
    Rig {
        #[serde(default = "unit_weight")]
        weights: WeightLaw,
        #[serde(rename = "p_k")]
        group_size_pmf: GroupSizePmf,
        #[serde(rename = "T")]
        horizon: f64,
    },
    /// Galton–Watson tree with degree law `q` (indexed by degree), augmented
    /// by Poisson(4αkT/3) rewired edges at a vertex of base degree `k`.
    Cm {
        q_k: Vec<f64>,
        alpha: f64,
        #[serde(rename = "T")]
        horizon: f64,
        #[serde(default)]
        original_edges: OriginalEdgeMarks,
    },
}

fn unit_weight() -> WeightLaw {
    WeightLaw::Constant { w: 1.0 }
}

fn check_pmf(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(config(format!("{what} entries must be finite and >= 0")));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(config(format!("{what} must sum to 1")));
    }
    Ok(())
}

/// `q̃_k = (k+1) q_{k+1} / E[D]`.
pub fn shifted_size_biased(q: &[f64]) -> Vec<f64> {
    let mean: f64 = q.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    (1..q.len()).map(|k| k as f64 * q[k] / mean).collect()
}

impl LimitModel {
    pub fn horizon(&self) -> f64 {
        match self {
            LimitModel::Der { horizon, .. } | LimitModel::Rig { horizon, .. } | LimitModel::Cm { horizon, .. } => {
                *horizon
            }
        }
    }

    /// The same model observed over `[0, horizon]`.
    pub fn with_horizon(&self, horizon: f64) -> LimitModel {
        let mut m = self.clone();
        match &mut m {
            LimitModel::Der { horizon: h, .. } | LimitModel::Rig { horizon: h, .. } | LimitModel::Cm { horizon: h, .. } => {
                *h = horizon
            }
        }
        m
    }

    pub fn name(&self) -> &'static str {
        match self {
            LimitModel::Der { .. } => "der",
            LimitModel::Rig { .. } => "rig",
            LimitModel::Cm { .. } => "cm",
        }
    }

    pub fn validate(&self) -> Result<()> {
        OnOffMarkLaw::new(self.horizon())?;
        match self {
            LimitModel::Der { gamma, .. } => {
                if !(*gamma >= 0.0 && gamma.is_finite()) {
                    return Err(config(format!("gamma must be finite and >= 0, got {gamma}")));
                }
            }
            LimitModel::Rig { weights, group_size_pmf, .. } => {
                weights.validate()?;
                group_size_pmf.validate()?;
            }
            LimitModel::Cm { q_k, alpha, .. } => {
                check_pmf(q_k, "q_k")?;
                if q_k.iter().enumerate().all(|(k, p)| k == 0 || *p == 0.0) {
                    return Err(config("q_k must put mass on some degree >= 1"));
                }
                if !(*alpha >= 0.0 && alpha.is_finite()) {
                    return Err(config(format!("alpha must be finite and >= 0, got {alpha}")));
                }
            }
        }
        Ok(())
    }
}

/// Poisson draw that accepts a zero mean.
pub(crate) fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
    }
}

pub fn sample_der_limit(gamma: f64, horizon: f64, depth: u32, seed: u64) -> Result<LimitTree> {
    materialize(&LimitModel::Der { gamma, horizon }, None, depth, seed, false)
}

pub fn sample_rig_limit(weights: &WeightLaw, pmf: &GroupSizePmf, horizon: f64, depth: u32, seed: u64) -> Result<LimitTree> {
    let model = LimitModel::Rig { weights: weights.clone(), group_size_pmf: pmf.clone(), horizon };
    materialize(&model, None, depth, seed, false)
}

pub fn sample_cm_union_limit(q_k: &[f64], alpha: f64, horizon: f64, depth: u32, seed: u64) -> Result<LimitTree> {
    let model = LimitModel::Cm { q_k: q_k.to_vec(), alpha, horizon, original_edges: OriginalEdgeMarks::Persistent };
    materialize(&model, None, depth, seed, false)
}

/// Root infection and recovery time of one limit realization.
pub fn root_times(tree: &LimitTree, radius: u32) -> Result<(f64, f64)> {
    let (u, m) = tree.union_graph_with_marks()?;
    let t = Backward::new(&u, &m, Some(radius), DEFAULT_PATH_CAP)?.infection_time(0)?;
    Ok((t, m.recovery[0]))
}

/// Whether limit edges keep their time marks or are ON throughout.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    #[default]
    Dynamic,
    /// The limit of the static graph: the tree of the time-0 snapshot with
    /// every edge ON on all of `[0, T]`.
    Static,
}

/// Per-run `(T(o), R_o)` for every depth in `depths`, all computed on one
/// tree per run sampled to the largest depth, so the depths are coupled.
pub fn limit_root_samples(
    model: &LimitModel,
    epi: &EpidemicParams,
    depths: &[u32],
    runs: usize,
    seed: u64,
) -> Result<Vec<Vec<(f64, f64)>>> {
    root_samples(model, epi, depths, runs, seed, Dynamics::Dynamic)
}

/// As [`limit_root_samples`], with a choice of [`Dynamics`].
pub fn root_samples(
    model: &LimitModel,
    epi: &EpidemicParams,
    depths: &[u32],
    runs: usize,
    seed: u64,
    dynamics: Dynamics,
) -> Result<Vec<Vec<(f64, f64)>>> {
    model.validate()?;
    epi.validate()?;
    let horizon = model.horizon();
    let sampled = match dynamics {
        Dynamics::Dynamic => model.clone(),
        Dynamics::Static => model.with_horizon(0.0),
    };
    let max_depth = depths.iter().copied().max().unwrap_or(0);
    let per_run: Vec<Vec<(f64, f64)>> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut tree = materialize(&sampled, Some(epi), max_depth, derive_seed(seed, tag::RUN_LIMIT, run), true)?;
            if dynamics == Dynamics::Static {
                tree = tree.frozen(horizon);
            }
            depths.iter().map(|&d| root_times(&tree, d)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..depths.len()).map(|k| per_run.iter().map(|r| r[k]).collect()).collect())
}

/// Monte Carlo estimate of the limit curve `(s_l, i_l, r_l)` on `grid`.
pub fn limit_epidemic_estimate(
    model: &LimitModel,
    epi: &EpidemicParams,
    depth: u32,
    grid: &[f64],
    runs: usize,
    seed: u64,
) -> Result<EpidemicCurve> {
    if runs == 0 {
        return Err(config("runs must be >= 1"));
    }
    check_grid(grid, model.horizon())?;
    let samples = limit_root_samples(model, epi, &[depth], runs, seed)?;
    Ok(EpidemicCurve::from_root_samples(grid, &samples[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::DistSpec;

    #[test]
    fn cdf_closed_form_values() {
        let law = OnOffMarkLaw::new(1.0).unwrap();
        assert!((law.cdf(0.0, f64::INFINITY) - 0.5).abs() < 1e-15);
        assert!((law.cdf(1.0, f64::INFINITY) - 1.0).abs() < 1e-15);
        assert_eq!(law.cdf(0.0, 0.0), 0.0);
        let (s1, s2) = (0.3f64, 0.7f64);
        assert!((law.cdf(s1, s2) - (1.0 - (-s2 + s1).exp() + s1) / 2.0).abs() < 1e-15);
        // t_off <= t_on is impossible unless equal
        assert!((law.cdf(0.9, 0.4) - law.cdf(0.4, 0.4)).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_numerical_integration() {
        // independent route: integrate the mixture density directly
        let t = 2.0f64;
        let law = OnOffMarkLaw::new(t).unwrap();
        for &(s1, s2) in &[(0.0f64, 0.5f64), (0.4, 1.1), (1.0, 1.9), (0.2, 0.2), (1.5, 3.0)] {
            let steps = 20_000;
            let off_cdf = |on: f64| if s2 >= t { 1.0 } else if s2 < on { 0.0 } else { 1.0 - (-(s2 - on)).exp() };
            let mut integral = off_cdf(0.0) / (1.0 + t);
            let h = s1.min(t) / steps as f64;
            for k in 0..steps {
                let on = (k as f64 + 0.5) * h;
                integral += h * off_cdf(on) / (1.0 + t);
            }
            assert!((integral - law.cdf(s1, s2)).abs() < 1e-7, "({s1},{s2}): {integral} vs {}", law.cdf(s1, s2));
        }
    }

    #[test]
    fn marks_lie_in_horizon() {
        let law = OnOffMarkLaw::new(1.5).unwrap();
        let mut rng = stream(3, 0, 0);
        for _ in 0..10_000 {
            let (on, off) = law.sample(&mut rng);
            assert!(0.0 <= on && on <= off && off <= 1.5);
        }
        assert!(OnOffMarkLaw::new(-1.0).is_err());
        let a = sample_on_off_mark(&law, 4);
        assert_eq!(a, sample_on_off_mark(&law, 4));
    }

    #[test]
    fn cm_shifted_pmf_example() {
        let q = shifted_size_biased(&[0.0, 0.5, 0.5]);
        assert!((q[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((q[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn model_json_shapes() {
        let m: LimitModel = serde_json::from_str(r#"{"kind":"der","gamma":3,"T":1}"#).unwrap();
        assert_eq!(m, LimitModel::Der { gamma: 3.0, horizon: 1.0 });
        let m: LimitModel = serde_json::from_str(r#"{"kind":"rig","p_k":[0,0,1],"T":1}"#).unwrap();
        assert!(m.validate().is_ok());
        let m: LimitModel = serde_json::from_str(r#"{"kind":"cm","q_k":[0,0.5,0.5],"alpha":0.5,"T":1}"#).unwrap();
        assert!(m.validate().is_ok());
        let bad = LimitModel::Cm { q_k: vec![1.0], alpha: 0.5, horizon: 1.0, original_edges: Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn estimate_basics() {
        let model = LimitModel::Der { gamma: 2.0, horizon: 1.0 };
        let e = DistSpec::Exp { rate: 1.0 };
        let grid = crate::epidemic::uniform_grid(1.0, 11);
        let all = EpidemicParams { rho: 1.0, d_i: e, d_r: e };
        let c = limit_epidemic_estimate(&model, &all, 3, &grid, 50, 1).unwrap();
        assert!(c.s.iter().all(|&s| s == 0.0));
        let half = EpidemicParams { rho: 0.5, d_i: e, d_r: e };
        let c = limit_epidemic_estimate(&model, &half, 0, &grid, 400, 2).unwrap();
        // depth 0: only the root's own status matters
        assert!((c.s[0] - 0.5).abs() < 4.0 * 0.025);
        assert!(c.s.windows(2).all(|w| w[0] == w[1]));
        assert!(limit_epidemic_estimate(&model, &half, 2, &grid, 0, 2).is_err());
        let zero = EpidemicParams { rho: 0.0, d_i: e, d_r: e };
        assert!(limit_epidemic_estimate(&model, &zero, 2, &grid, 10, 2).is_err());
    }

    #[test]
    fn estimate_is_deterministic_and_monotone() {
        let model = LimitModel::Der { gamma: 3.0, horizon: 2.0 };
        let epi = EpidemicParams { rho: 0.3, d_i: DistSpec::Exp { rate: 2.0 }, d_r: DistSpec::Exp { rate: 3.0 } };
        let grid = crate::epidemic::uniform_grid(2.0, 21);
        let a = limit_epidemic_estimate(&model, &epi, 4, &grid, 200, 9).unwrap();
        assert_eq!(a, limit_epidemic_estimate(&model, &epi, 4, &grid, 200, 9).unwrap());
        assert!(a.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(a.r.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..grid.len() {
            assert!((a.s[k] + a.i[k] + a.r[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn static_dynamics_freezes_the_time_zero_tree() {
        let model = LimitModel::Der { gamma: 3.0, horizon: 2.0 };
        let tree = materialize(&model.with_horizon(0.0), None, 3, 5, false).unwrap().frozen(2.0);
        assert_eq!(tree.horizon, 2.0);
        assert!(tree.edges.iter().all(|e| e.marks.intervals() == [(0.0, 2.0)]));
        // offspring mean is gamma, not gamma (1 + T)
        let degrees: Vec<f64> = (0..2000)
            .map(|s| materialize(&model.with_horizon(0.0), None, 1, s, false).unwrap().root_degree() as f64)
            .collect();
        let (mean, se) = crate::util::mean_se(&degrees);
        assert!((mean - 3.0).abs() < 4.0 * se, "{mean}");
        let epi = EpidemicParams { rho: 0.3, d_i: DistSpec::Exp { rate: 2.0 }, d_r: DistSpec::Exp { rate: 3.0 } };
        let a = root_samples(&model, &epi, &[2, 3], 100, 4, Dynamics::Static).unwrap();
        assert_eq!(a, root_samples(&model, &epi, &[2, 3], 100, 4, Dynamics::Static).unwrap());
        assert_eq!(a.len(), 2);
    }
}
