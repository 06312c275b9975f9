//! Empirical distributions of rooted balls and convergence diagnostics.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::canon::{canonical_form, quantize, CanonicalForm};
use super::iso::{isomorphic_with, Compat, ISO_VERTEX_CAP};
use crate::error::{Error, Result};
use crate::graph::{rooted_ball_capped, DynamicGraph, MarkSeq, RootedBall, TimeMarkedUnionGraph};

/// Largest tolerated fraction of balls over the size cap.
pub const OVERSIZE_FRACTION: f64 = 0.01;
const CHUNK: usize = 512;

/// One isomorphism class of balls.
#[derive(Clone, Debug)]
pub struct BallClass {
    pub form: CanonicalForm,
    pub count: usize,
    /// First ball seen in the class; `None` for the oversize class.
    pub example: Option<RootedBall>,
}

/// Normalized histogram of ball isomorphism classes.
///
/// Classes are kept in order of first appearance. With `quantization`, edge
/// marks are rounded to that step and enter the class key.
#[derive(Clone, Debug)]
pub struct BallHistogram {
    pub radius: u32,
    pub quantization: Option<f64>,
    pub total: usize,
    pub classes: Vec<BallClass>,
}

impl BallHistogram {
    fn empty(radius: u32, quantization: Option<f64>) -> Self {
        BallHistogram { radius, quantization, total: 0, classes: Vec::new() }
    }

    pub fn frequency(&self, class: usize) -> f64 {
        self.classes[class].count as f64 / self.total as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.classes.len()).map(|k| self.frequency(k)).collect()
    }

    /// Adds a ball (or an oversize ball, `None`) to its class.
    fn add(&mut self, ball: Option<RootedBall>, count: usize, index: &mut HashMap<CanonicalForm, Vec<usize>>) -> Result<()> {
        self.total += count;
        let Some(ball) = ball else {
            let form = oversize_form();
            match index.get(&form) {
                Some(ks) => self.classes[ks[0]].count += count,
                None => {
                    index.insert(form.clone(), vec![self.classes.len()]);
                    self.classes.push(BallClass { form, count, example: None });
                }
            }
            return Ok(());
        };
        let form = canonical_form(&ball, self.quantization);
        let slot = index.entry(form.clone()).or_default();
        for &k in slot.iter() {
            if form.exact || same_class(self.classes[k].example.as_ref().unwrap(), &ball, self.quantization)? {
                self.classes[k].count += count;
                return Ok(());
            }
        }
        slot.push(self.classes.len());
        self.classes.push(BallClass { form, count, example: Some(ball) });
        Ok(())
    }

    fn index(&self) -> HashMap<CanonicalForm, Vec<usize>> {
        let mut index: HashMap<CanonicalForm, Vec<usize>> = HashMap::new();
        for (k, c) in self.classes.iter().enumerate() {
            index.entry(c.form.clone()).or_default().push(k);
        }
        index
    }

    /// Total-variation distance between two histograms of the same radius.
    pub fn tv_distance(&self, other: &BallHistogram) -> Result<f64> {
        if self.radius != other.radius || self.quantization != other.quantization {
            return Err(Error::InvalidConfig("histograms differ in radius or quantization".into()));
        }
        let index = self.index();
        let mut matched = vec![0.0; self.classes.len()];
        let mut unmatched = 0.0;
        for (j, c) in other.classes.iter().enumerate() {
            let q = other.frequency(j);
            let mut hit = None;
            if let Some(ks) = index.get(&c.form) {
                for &k in ks {
                    let same = match (&self.classes[k].example, &c.example) {
                        (Some(a), Some(b)) => c.form.exact || same_class(a, b, self.quantization)?,
                        (None, None) => true,
                        _ => false,
                    };
                    if same {
                        hit = Some(k);
                        break;
                    }
                }
            }
            match hit {
                Some(k) => matched[k] += q,
                None => unmatched += q,
            }
        }
        let diff: f64 = (0..self.classes.len()).map(|k| (self.frequency(k) - matched[k]).abs()).sum();
        Ok(0.5 * (diff + unmatched))
    }

    /// CSV `canonical_hash,frequency,example_ball_file`; example files are
    /// named `{prefix}{class index}.txt`, and the column is empty without a
    /// prefix.
    pub fn to_csv(&self, example_prefix: Option<&str>) -> String {
        let mut s = String::from("canonical_hash,frequency,example_ball_file\n");
        for (k, c) in self.classes.iter().enumerate() {
            let file = match (example_prefix, &c.example) {
                (Some(prefix), Some(_)) => format!("{prefix}{k}.txt"),
                _ => String::new(),
            };
            let _ = writeln!(s, "{:016x},{},{}", c.form.hash64(), self.frequency(k), file);
        }
        s
    }
}

fn oversize_form() -> CanonicalForm {
    CanonicalForm { bytes: b"oversize".to_vec(), exact: true }
}

struct QuantizedMarks<'a> {
    a: &'a RootedBall,
    b: &'a RootedBall,
    step: f64,
}

impl Compat for QuantizedMarks<'_> {
    fn edge_ok(&self, ea: u32, eb: u32) -> bool {
        match (&self.a.edges[ea as usize].marks, &self.b.edges[eb as usize].marks) {
            (Some(x), Some(y)) => quantize(x, self.step) == quantize(y, self.step),
            (None, None) => true,
            _ => false,
        }
    }
}

fn same_class(a: &RootedBall, b: &RootedBall, quantization: Option<f64>) -> Result<bool> {
    match quantization {
        None => isomorphic_with(a, b, &super::iso::Structural, ISO_VERTEX_CAP),
        Some(step) => isomorphic_with(a, b, &QuantizedMarks { a, b, step }, ISO_VERTEX_CAP),
    }
}

/// Histogram of the `r`-balls around every vertex. Balls above the size cap
/// are pooled into one class; more than 1% of them is an error.
pub fn empirical_ball_distribution(u: &TimeMarkedUnionGraph, r: u32, quantization: Option<f64>) -> Result<BallHistogram> {
    let n = u.n() as usize;
    let with_marks = quantization.is_some();
    let mut hist = BallHistogram::empty(r, quantization);
    let mut index = HashMap::new();
    let mut oversize = 0usize;
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let balls: Vec<Option<RootedBall>> = (start..end)
            .into_par_iter()
            .map(|v| rooted_ball_capped(u, v as u32, r, with_marks, ISO_VERTEX_CAP))
            .collect::<Result<_>>()?;
        for b in balls {
            oversize += b.is_none() as usize;
            hist.add(b, 1, &mut index)?;
        }
    }
    if oversize as f64 > OVERSIZE_FRACTION * n as f64 {
        return Err(Error::ResourceLimit {
            what: format!("{oversize} of {n} balls above the size cap"),
            limit: ISO_VERTEX_CAP as u64,
        });
    }
    Ok(hist)
}

/// Histogram of an explicit list of balls, e.g. balls drawn from a limit.
pub fn histogram_from_balls(balls: Vec<RootedBall>, r: u32, quantization: Option<f64>) -> Result<BallHistogram> {
    let mut hist = BallHistogram::empty(r, quantization);
    let mut index = HashMap::new();
    for b in balls {
        let b = if b.radius > r { super::sub_ball(&b, r) } else { b };
        hist.add(Some(b), 1, &mut index)?;
    }
    Ok(hist)
}

/// One line of a convergence diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub n: u32,
    pub r: u32,
    pub tv_distance: f64,
    pub se: f64,
}

/// TV distance between each graph's empirical ball histogram and a Monte
/// Carlo histogram of `samples` limit balls drawn by `limit_ball(seed)`.
///
/// The reported standard error is the delta-method value
/// `0.5 * sqrt(sum_k p_k(1-p_k)/N + q_k(1-q_k)/M)` over the union of classes.
pub fn convergence_diagnostic<F>(
    graphs: &[TimeMarkedUnionGraph],
    limit_ball: F,
    r: u32,
    samples: usize,
    seed: u64,
    quantization: Option<f64>,
) -> Result<Vec<DiagnosticRow>>
where
    F: Fn(u64) -> Result<RootedBall> + Sync,
{
    if graphs.len() < 2 {
        return Err(Error::InvalidConfig("convergence diagnostic needs at least two graphs".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("convergence diagnostic needs at least one limit sample".into()));
    }
    let balls: Vec<RootedBall> = (0..samples as u64)
        .into_par_iter()
        .map(|i| limit_ball(crate::rng::derive_seed(seed, crate::rng::tag::LIMIT, i)))
        .collect::<Result<_>>()?;
    let limit = histogram_from_balls(balls, r, quantization)?;
    graphs
        .iter()
        .map(|g| {
            let h = empirical_ball_distribution(g, r, quantization)?;
            let tv = h.tv_distance(&limit)?;
            let var = |hist: &BallHistogram| {
                hist.frequencies().iter().map(|p| p * (1.0 - p)).sum::<f64>() / hist.total as f64
            };
            Ok(DiagnosticRow { n: g.n(), r, tv_distance: tv, se: 0.5 * (var(&h) + var(&limit)).sqrt() })
        })
        .collect()
}

/// CSV `n,r,tv_distance,se`.
pub fn diagnostic_csv(rows: &[DiagnosticRow]) -> String {
    let mut s = String::from("n,r,tv_distance,se\n");
    for row in rows {
        let _ = writeln!(s, "{},{},{},{}", row.n, row.r, row.tv_distance, row.se);
    }
    s
}

/// A ball in the dynamic-graph text format, local ids, root 0. Edges without
/// marks are written as always ON.
pub fn ball_to_text(ball: &RootedBall) -> Result<String> {
    let mut g = DynamicGraph::new(ball.vertex_count() as u32, ball.horizon)?;
    for e in &ball.edges {
        let m = e.marks.clone().unwrap_or_else(|| MarkSeq::always_on(ball.horizon));
        g.insert(e.a, e.b, m)?;
    }
    Ok(crate::io::encode_graph(&g, &[format!("root: 0"), format!("radius: {}", ball.radius)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::rooted_ball;

    fn graph(n: u32, edges: &[(u32, u32)]) -> TimeMarkedUnionGraph {
        TimeMarkedUnionGraph::from_edges(n, 1.0, edges.iter().map(|&(u, v)| (u, v, MarkSeq::always_on(1.0))))
    }

    #[test]
    fn trivial_graphs() {
        let h = empirical_ball_distribution(&graph(10, &[]), 3, None).unwrap();
        assert_eq!(h.classes.len(), 1);
        assert_eq!(h.frequency(0), 1.0);
        let m: Vec<(u32, u32)> = (0..5).map(|i| (2 * i, 2 * i + 1)).collect();
        let h = empirical_ball_distribution(&graph(10, &m), 1, None).unwrap();
        assert_eq!(h.classes.len(), 1);
        assert_eq!(h.classes[0].example.as_ref().unwrap().edge_count(), 1);
    }

    #[test]
    fn cycle_collisions_are_resolved() {
        // both 2-regular on six vertices
        let c6 = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let tt = graph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        let a = empirical_ball_distribution(&c6, 3, None).unwrap();
        let b = empirical_ball_distribution(&tt, 3, None).unwrap();
        assert_eq!(a.classes.len(), 1);
        assert_eq!(a.tv_distance(&b).unwrap(), 1.0);
        assert_eq!(a.tv_distance(&a).unwrap(), 0.0);
    }

    #[test]
    fn frequencies_and_relabeling() {
        let g = graph(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6)]);
        let perm = [3u32, 6, 0, 5, 1, 4, 2];
        let edges: Vec<(u32, u32)> =
            g.edges().iter().map(|e| (perm[e.u as usize], perm[e.v as usize])).collect();
        let h = graph(7, &edges);
        for r in 0..4 {
            let a = empirical_ball_distribution(&g, r, None).unwrap();
            let b = empirical_ball_distribution(&h, r, None).unwrap();
            assert!((a.frequencies().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(a.tv_distance(&b).unwrap(), 0.0);
        }
    }

    #[test]
    fn quantized_marks_split_classes() {
        let g = TimeMarkedUnionGraph::from_edges(
            4,
            1.0,
            [(0, 1, MarkSeq::single(0.0, 0.5)), (2, 3, MarkSeq::single(0.5, 1.0))],
        );
        assert_eq!(empirical_ball_distribution(&g, 1, None).unwrap().classes.len(), 1);
        assert_eq!(empirical_ball_distribution(&g, 1, Some(1.0 / 64.0)).unwrap().classes.len(), 2);
    }

    #[test]
    fn csv_and_text_export() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let h = empirical_ball_distribution(&g, 1, None).unwrap();
        let csv = h.to_csv(Some("ball_"));
        assert!(csv.starts_with("canonical_hash,frequency,example_ball_file\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().ends_with(".txt"));
        assert!(h.to_csv(None).lines().skip(1).all(|l| l.ends_with(',')));
        let text = ball_to_text(&rooted_ball(&g, 1, 1, true).unwrap()).unwrap();
        let back = crate::io::decode_graph(&text).unwrap();
        assert_eq!(back.n(), 3);
        assert_eq!(back.edge_count(), 2);
    }

    #[test]
    fn diagnostic_needs_two_graphs() {
        let g = graph(3, &[(0, 1)]);
        let f = |_s: u64| rooted_ball(&graph(2, &[(0, 1)]), 0, 1, false);
        assert!(convergence_diagnostic(std::slice::from_ref(&g), f, 1, 10, 0, None).is_err());
        let rows = convergence_diagnostic(&[g.clone(), g], f, 1, 10, 0, None).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].tv_distance - 1.0 / 3.0).abs() < 1e-12);
    }
}
