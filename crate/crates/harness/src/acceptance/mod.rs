//! The acceptance suite: ten fixed-seed checks of the toolkit against the
//! theory it implements. Every tolerance is pinned next to its criterion.

mod curves;
mod exact;
mod laws;

use std::time::Instant;

use anyhow::Result;

pub use exact::{brute_force_rooted_isomorphic, random_oracle_instance};

/// Result of one criterion that ran to completion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub run: fn() -> Result<Outcome>,
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, name: "limit approximation (DER n=5000 vs limit)", run: curves::limit_approximation },
        Criterion { id: 2, name: "first-moment bound (1-rho)^r", run: curves::first_moment_bound },
        Criterion { id: 3, name: "limit truncation bound (1-rho)^3", run: curves::limit_truncation },
        Criterion { id: 4, name: "variance vanishes with n", run: curves::variance_vanishing },
        Criterion { id: 5, name: "ON/OFF mark law", run: laws::mark_law },
        Criterion { id: 6, name: "DER union degree vs Poisson(6)", run: laws::der_union_degree },
        Criterion { id: 7, name: "CM rewiring law 4akT/3", run: laws::cm_rewiring },
        Criterion { id: 8, name: "backward process vs path oracle", run: exact::backward_oracle },
        Criterion { id: 9, name: "static forward/backward identity", run: exact::static_identity },
        Criterion { id: 10, name: "metric properties and isomorphism", run: exact::metric_properties },
    ]
}

/// One printed line of the suite.
#[derive(Debug)]
pub struct Line {
    pub id: u8,
    pub name: &'static str,
    /// `Err` when the criterion could not be evaluated.
    pub outcome: Result<Outcome, String>,
    pub elapsed_secs: f64,
}

impl Line {
    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(o) if o.pass)
    }

    pub fn render(&self) -> String {
        let (status, detail) = match &self.outcome {
            Ok(o) => (if o.pass { "PASS" } else { "FAIL" }, o.detail.as_str()),
            Err(e) => ("ERROR", e.as_str()),
        };
        format!("criterion {:>2} {status:<5} {} ({:.1}s): {detail}", self.id, self.name, self.elapsed_secs)
    }
}

/// Runs the selected criteria (all when `only` is empty), calling `on_line`
/// as each finishes.
pub fn run(only: &[u8], mut on_line: impl FnMut(&Line)) -> Vec<Line> {
    let mut lines = Vec::new();
    for c in criteria().into_iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)().map_err(|e| format!("{e:#}"));
        let line = Line { id: c.id, name: c.name, outcome, elapsed_secs: start.elapsed().as_secs_f64() };
        on_line(&line);
        lines.push(line);
    }
    lines
}

/// 0 if everything passed, 1 if a criterion failed, 2 if one could not run.
pub fn exit_code(lines: &[Line]) -> i32 {
    if lines.iter().any(|l| l.outcome.is_err()) {
        2
    } else if lines.iter().all(Line::passed) {
        0
    } else {
        1
    }
}
