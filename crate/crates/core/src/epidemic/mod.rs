//! SIR epidemic marks, forward simulation and the backward infection-time
//! process on time-marked union graphs.

mod backward;
mod forward;
mod reference;

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TimeMarkedUnionGraph;
use crate::rng::{exp_inv, stream, tag};

pub use backward::{backward_curve, backward_infection_time, backward_infection_times, Backward, DEFAULT_PATH_CAP};
pub use forward::{forward_infection_times, forward_simulate};
pub use reference::{exhaustive_infection_time, EXHAUSTIVE_MAX_N};

/// Law of a transmission or recovery time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum DistSpec {
    Exp { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { low: f64, high: f64 },
    Const { value: f64 },
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistSpec::Exp { rate } => rate > 0.0 && rate.is_finite(),
            DistSpec::Gamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
            DistSpec::Uniform { low, high } => low >= 0.0 && high > low && high.is_finite(),
            DistSpec::Const { value } => value >= 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedDistribution(format!("invalid parameters in {self}")))
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, DistSpec::Const { .. })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistSpec::Exp { rate } => 1.0 / rate,
            DistSpec::Gamma { shape, scale } => shape * scale,
            DistSpec::Uniform { low, high } => (low + high) / 2.0,
            DistSpec::Const { value } => value,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistSpec::Exp { rate } => exp_inv(rng, rate),
            DistSpec::Gamma { shape, scale } => Gamma::new(shape, scale).expect("validated").sample(rng),
            DistSpec::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            DistSpec::Const { value } => value,
        }
    }
}

impl std::fmt::Display for DistSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistSpec::Exp { rate } => write!(f, "exp:{rate}"),
            DistSpec::Gamma { shape, scale } => write!(f, "gamma:{shape},{scale}"),
            DistSpec::Uniform { low, high } => write!(f, "uniform:{low},{high}"),
            DistSpec::Const { value } => write!(f, "const:{value}"),
        }
    }
}

/// `exp:2`, `gamma:2,0.5`, `uniform:0,1`, `const:1`.
impl FromStr for DistSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnsupportedDistribution(s.to_string());
        let (name, args) = s.split_once(':').ok_or_else(bad)?;
        let args: Vec<f64> = args.split(',').map(|a| a.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let d = match (name.trim(), args.as_slice()) {
            ("exp", &[rate]) => DistSpec::Exp { rate },
            ("gamma", &[shape, scale]) => DistSpec::Gamma { shape, scale },
            ("uniform", &[low, high]) => DistSpec::Uniform { low, high },
            ("const", &[value]) => DistSpec::Const { value },
            _ => return Err(bad()),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Initial infection probability and the transmission and recovery laws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    pub rho: f64,
    pub d_i: DistSpec,
    pub d_r: DistSpec,
}

impl EpidemicParams {
    pub fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        check_laws(&self.d_i, &self.d_r)
    }
}

/// Epidemic marks of one realization: per-vertex recovery time and initial
/// status, per-union-edge transmission time (indexed by union edge id).
#[derive(Clone, Debug, PartialEq)]
pub struct EpidemicMarks {
    pub recovery: Vec<f64>,
    pub initially_infected: Vec<bool>,
    pub transmission: Vec<f64>,
}

impl EpidemicMarks {
    pub fn check_covers(&self, u: &TimeMarkedUnionGraph) -> Result<()> {
        let n = u.n() as usize;
        if self.recovery.len() != n || self.initially_infected.len() != n || self.transmission.len() != u.edges().len() {
            return Err(Error::InvalidConfig(format!(
                "epidemic marks sized ({} vertices, {} edges) for a graph with ({n}, {})",
                self.recovery.len(),
                self.transmission.len(),
                u.edges().len()
            )));
        }
        Ok(())
    }

    pub fn infected_fraction(&self) -> f64 {
        self.initially_infected.iter().filter(|&&b| b).count() as f64 / self.initially_infected.len().max(1) as f64
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("rho must lie in (0, 1], got {rho}")))
    }
}

pub(crate) fn check_laws(d_i: &DistSpec, d_r: &DistSpec) -> Result<()> {
    d_i.validate()?;
    d_r.validate()?;
    if !d_i.is_continuous() {
        return Err(Error::UnsupportedDistribution(format!("transmission law {d_i} must be continuous")));
    }
    Ok(())
}

/// Draws all epidemic marks. Vertex marks come from a stream keyed by the
/// vertex, edge marks from a stream keyed by the vertex pair, so the marks of
/// an entity do not depend on the rest of the graph.
pub fn sample_marks(u: &TimeMarkedUnionGraph, rho: f64, d_i: &DistSpec, d_r: &DistSpec, seed: u64) -> Result<EpidemicMarks> {
    check_rho(rho)?;
    check_laws(d_i, d_r)?;
    let n = u.n() as usize;
    let mut recovery = Vec::with_capacity(n);
    let mut initially_infected = Vec::with_capacity(n);
    for v in 0..n as u64 {
        let mut rng = stream(seed, tag::MARKS_VERTEX, v);
        initially_infected.push(rng.random::<f64>() < rho);
        recovery.push(d_r.sample(&mut rng));
    }
    let transmission = u
        .edges()
        .iter()
        .map(|e| d_i.sample(&mut stream(seed, tag::MARKS_EDGE, (e.u as u64) << 32 | e.v as u64)))
        .collect();
    Ok(EpidemicMarks { recovery, initially_infected, transmission })
}

/// Susceptible/infected/recovered proportions on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpidemicCurve {
    pub grid: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
    pub runs: usize,
    pub s_se: Vec<f64>,
    pub i_se: Vec<f64>,
    pub r_se: Vec<f64>,
}

/// `points` equally spaced times from 0 to `horizon` inclusive.
pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|k| horizon * k as f64 / (points - 1) as f64).collect(),
    }
}

pub const DEFAULT_GRID_POINTS: usize = 200;

pub(crate) fn check_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if let Some(&t) = grid.iter().find(|&&t| !(0.0..=horizon).contains(&t)) {
        return Err(Error::TimeOutOfRange { time: t, horizon });
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::GridMismatch("grid must be non-decreasing".into()));
    }
    Ok(())
}

/// Status of a vertex with infection time `inf` and recovery `rec` at `t`:
/// susceptible while `t < inf`, recovered from `inf + rec` on.
fn status(t: f64, inf: f64, rec: f64) -> usize {
    if t < inf {
        0
    } else if t >= inf + rec {
        2
    } else {
        1
    }
}

impl EpidemicCurve {
    /// Curve of one realization from per-vertex infection and recovery times.
    pub fn from_times(grid: &[f64], infection: &[f64], recovery: &[f64]) -> Self {
        let n = infection.len().max(1) as f64;
        let mut counts = vec![[0usize; 3]; grid.len()];
        for (&inf, &rec) in infection.iter().zip(recovery) {
            for (c, &t) in counts.iter_mut().zip(grid) {
                c[status(t, inf, rec)] += 1;
            }
        }
        let frac = |k: usize| counts.iter().map(|c| c[k] as f64 / n).collect::<Vec<_>>();
        let (s, r) = (frac(0), frac(2));
        let i = s.iter().zip(&r).map(|(s, r)| 1.0 - s - r).collect();
        let zeros = vec![0.0; grid.len()];
        EpidemicCurve { grid: grid.to_vec(), s, i, r, runs: 1, s_se: zeros.clone(), i_se: zeros.clone(), r_se: zeros }
    }

    /// Pointwise mean of per-run curves with standard errors across runs.
    pub fn mean_of(curves: &[EpidemicCurve]) -> Result<Self> {
        let first = curves.first().ok_or_else(|| Error::InvalidConfig("no curves to average".into()))?;
        for c in curves {
            if c.grid != first.grid {
                return Err(Error::GridMismatch("curves on different grids".into()));
            }
        }
        let m = first.grid.len();
        let stat = |pick: fn(&EpidemicCurve) -> &Vec<f64>| {
            let mut mean = Vec::with_capacity(m);
            let mut se = Vec::with_capacity(m);
            for k in 0..m {
                let xs: Vec<f64> = curves.iter().map(|c| pick(c)[k]).collect();
                let (a, b) = crate::util::mean_se(&xs);
                mean.push(a);
                se.push(b);
            }
            (mean, se)
        };
        let (s, s_se) = stat(|c| &c.s);
        let (r, r_se) = stat(|c| &c.r);
        let (_, i_se) = stat(|c| &c.i);
        let i = s.iter().zip(&r).map(|(s, r)| 1.0 - s - r).collect();
        Ok(EpidemicCurve { grid: first.grid.clone(), s, i, r, runs: curves.len(), s_se, i_se, r_se })
    }

    /// Curve of per-run root indicators: fraction of runs in each state.
    pub fn from_root_samples(grid: &[f64], samples: &[(f64, f64)]) -> Self {
        let infection: Vec<f64> = samples.iter().map(|x| x.0).collect();
        let recovery: Vec<f64> = samples.iter().map(|x| x.1).collect();
        let mut c = Self::from_times(grid, &infection, &recovery);
        let runs = samples.len();
        let se = |p: &Vec<f64>| -> Vec<f64> {
            p.iter().map(|&p| if runs > 1 { (p * (1.0 - p) / (runs - 1) as f64).sqrt() } else { 0.0 }).collect()
        };
        c.s_se = se(&c.s);
        c.i_se = se(&c.i);
        c.r_se = se(&c.r);
        c.runs = runs;
        c
    }

    /// Maximum of `|self − other|` over the grid for each of s, i, r.
    pub fn sup_gaps(&self, other: &EpidemicCurve) -> Result<[f64; 3]> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{} vs {} grid points", self.grid.len(), other.grid.len())));
        }
        let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        Ok([sup(&self.s, &other.s), sup(&self.i, &other.i), sup(&self.r, &other.r)])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,s,i,r,s_se,i_se,r_se\n");
        for k in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.grid[k], self.s[k], self.i[k], self.r[k], self.s_se[k], self.i_se[k], self.r_se[k]
            );
        }
        out
    }
}

fn fmt_time(t: f64) -> String {
    if t.is_infinite() {
        "inf".into()
    } else {
        t.to_string()
    }
}

/// `v,T,R` rows with `inf` for never-infected vertices.
pub fn infection_times_csv(infection: &[f64], recovery: &[f64]) -> String {
    let mut out = String::from("v,T,R\n");
    for (v, (&t, &r)) in infection.iter().zip(recovery).enumerate() {
        let _ = writeln!(out, "{v},{},{}", fmt_time(t), fmt_time(r));
    }
    out
}
