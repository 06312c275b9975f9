//! Sup-norm comparison of two epidemic curves.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use dynepi_core::epidemic::EpidemicCurve;
use serde::Serialize;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunMeta {
    /// Wall-clock seconds spent producing each curve.
    pub elapsed_secs: [f64; 2],
    pub threads: usize,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub labels: [String; 2],
    pub a: EpidemicCurve,
    pub b: EpidemicCurve,
    /// `|a − b|` per grid point for s, i, r.
    pub gaps: Vec<[f64; 3]>,
    /// Maximum of `gaps` over the grid, per compartment.
    pub sup_gaps: [f64; 3],
    /// Largest `sqrt(se_a² + se_b²)` over the grid, per compartment.
    pub pooled_se: [f64; 3],
    pub tolerance: f64,
    pub pass: bool,
    pub meta: RunMeta,
}

/// Compares two curves on the same grid; passes iff every compartment's
/// sup gap is at most `tolerance`.
pub fn compare(a: &EpidemicCurve, b: &EpidemicCurve, tolerance: f64) -> Result<ComparisonReport> {
    if a.grid != b.grid {
        bail!("grid mismatch: {} vs {} points", a.grid.len(), b.grid.len());
    }
    if !(tolerance >= 0.0) {
        bail!("tolerance must be >= 0, got {tolerance}");
    }
    let m = a.grid.len();
    let gaps: Vec<[f64; 3]> =
        (0..m).map(|k| [(a.s[k] - b.s[k]).abs(), (a.i[k] - b.i[k]).abs(), (a.r[k] - b.r[k]).abs()]).collect();
    let mut sup_gaps = [0.0f64; 3];
    for g in &gaps {
        for c in 0..3 {
            sup_gaps[c] = sup_gaps[c].max(g[c]);
        }
    }
    let pooled = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p * p + q * q).sqrt()).fold(0.0, f64::max);
    let pooled_se = [pooled(&a.s_se, &b.s_se), pooled(&a.i_se, &b.i_se), pooled(&a.r_se, &b.r_se)];
    Ok(ComparisonReport {
        labels: ["a".into(), "b".into()],
        a: a.clone(),
        b: b.clone(),
        gaps,
        sup_gaps,
        pooled_se,
        tolerance,
        pass: sup_gaps.iter().all(|&g| g <= tolerance),
        meta: RunMeta { threads: rayon::current_num_threads(), version: crate::VERSION.into(), ..Default::default() },
    })
}

impl ComparisonReport {
    pub fn with_labels(mut self, a: &str, b: &str) -> Self {
        self.labels = [a.into(), b.into()];
        self
    }

    pub fn sup_gap(&self) -> f64 {
        self.sup_gaps.iter().copied().fold(0.0, f64::max)
    }

    /// CSV `t,gap_s,gap_i,gap_r`.
    pub fn gaps_csv(&self) -> String {
        let mut out = String::from("t,gap_s,gap_i,gap_r\n");
        for (t, g) in self.a.grid.iter().zip(&self.gaps) {
            let _ = writeln!(out, "{t},{},{},{}", g[0], g[1], g[2]);
        }
        out
    }

    pub fn summary(&self) -> String {
        let [s, i, r] = self.sup_gaps;
        format!(
            "{} vs {}: sup gaps s={s:.4} i={i:.4} r={r:.4}, tolerance {} -> {}",
            self.labels[0],
            self.labels[1],
            self.tolerance,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Parses a curve written by `EpidemicCurve::to_csv`.
pub fn read_curve_csv(text: &str) -> Result<EpidemicCurve> {
    let mut lines = text.lines();
    let header = lines.next().context("empty curve file")?;
    if header.trim() != "t,s,i,r,s_se,i_se,r_se" {
        bail!("unexpected curve header {header:?}");
    }
    let mut cols: [Vec<f64>; 7] = Default::default();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            bail!("line {}: expected 7 fields, got {}", k + 2, fields.len());
        }
        for (col, f) in cols.iter_mut().zip(fields) {
            col.push(f.trim().parse().with_context(|| format!("line {}: bad number {f:?}", k + 2))?);
        }
    }
    let [grid, s, i, r, s_se, i_se, r_se] = cols;
    Ok(EpidemicCurve { grid, s, i, r, runs: 0, s_se, i_se, r_se })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(shift: f64) -> EpidemicCurve {
        let grid = vec![0.0, 0.5, 1.0];
        let s: Vec<f64> = vec![0.9 - shift, 0.6 - shift, 0.3 - shift];
        let r = vec![0.0, 0.1, 0.3];
        let i = s.iter().zip(&r).map(|(s, r)| 1.0 - s - r).collect();
        EpidemicCurve { grid, s, i, r, runs: 1, s_se: vec![0.0; 3], i_se: vec![0.0; 3], r_se: vec![0.0; 3] }
    }

    #[test]
    fn curve_against_itself() {
        let rep = compare(&curve(0.0), &curve(0.0), 0.0).unwrap();
        assert_eq!(rep.sup_gaps, [0.0; 3]);
        assert!(rep.pass);
    }

    #[test]
    fn shifted_curve_fails() {
        let rep = compare(&curve(0.0), &curve(0.05), 0.03).unwrap();
        assert!(!rep.pass);
        assert!((rep.sup_gaps[0] - 0.05).abs() < 1e-12);
        assert!((rep.sup_gap() - 0.05).abs() < 1e-12);
        let max_point = rep.gaps.iter().map(|g| g[0]).fold(0.0, f64::max);
        assert_eq!(max_point, rep.sup_gaps[0]);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let mut b = curve(0.0);
        b.grid[1] = 0.4;
        assert!(compare(&curve(0.0), &b, 0.1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = curve(0.01);
        let back = read_curve_csv(&c.to_csv()).unwrap();
        assert_eq!(back.grid, c.grid);
        assert_eq!(back.s, c.s);
        assert_eq!(back.i, c.i);
        assert!(read_curve_csv("t,s\n1,2\n").is_err());
    }
}
