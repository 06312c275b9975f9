//! Rooted-graph isomorphism, the rooted and marked metrics, and empirical
//! neighborhood distributions.

pub mod canon;
mod histogram;
mod iso;

pub use canon::{canonical_form, quantize, CanonicalForm};
pub use histogram::{
    ball_to_text, convergence_diagnostic, diagnostic_csv, empirical_ball_distribution, histogram_from_balls, BallClass,
    BallHistogram, DiagnosticRow, OVERSIZE_FRACTION,
};
pub use iso::{isomorphic_with, rooted_isomorphic, Compat, Structural, ISO_VERTEX_CAP, MARKED_VERTEX_CAP};

use crate::epidemic::EpidemicMarks;
use crate::error::{Error, Result};
use crate::graph::{rooted_ball, BallEpidemicMarks, MarkSeq, RootedBall, TimeMarkedUnionGraph, Vertex};

/// Default largest radius examined by the rooted metrics.
pub const R_MAX: u32 = 16;

/// Distance between two mark sequences: the difference in interval counts
/// plus the summed ON and OFF time differences over the common prefix.
pub fn mark_seq_distance(m1: &MarkSeq, m2: &MarkSeq) -> f64 {
    let (a, b) = (m1.intervals(), m2.intervals());
    let count = (a.len() as f64 - b.len() as f64).abs();
    count + a.iter().zip(b).map(|(x, y)| (x.0 - y.0).abs() + (x.1 - y.1).abs()).sum::<f64>()
}

/// Anything that yields the rooted ball of a requested radius.
pub trait BallSource {
    fn ball(&self, radius: u32, with_marks: bool) -> Result<RootedBall>;
}

/// A rooted union graph, optionally carrying epidemic marks.
#[derive(Clone, Copy)]
pub struct Rooted<'a> {
    pub graph: &'a TimeMarkedUnionGraph,
    pub root: Vertex,
    pub epidemic: Option<&'a EpidemicMarks>,
}

impl<'a> Rooted<'a> {
    pub fn new(graph: &'a TimeMarkedUnionGraph, root: Vertex) -> Self {
        Rooted { graph, root, epidemic: None }
    }

    pub fn with_epidemic(mut self, marks: &'a EpidemicMarks) -> Self {
        self.epidemic = Some(marks);
        self
    }
}

impl BallSource for Rooted<'_> {
    fn ball(&self, radius: u32, with_marks: bool) -> Result<RootedBall> {
        let mut b = rooted_ball(self.graph, self.root, radius, with_marks)?;
        if let Some(m) = self.epidemic {
            m.check_covers(self.graph)?;
            b.attach_epidemic(m);
        }
        Ok(b)
    }
}

/// A ball is its own source: smaller radii give sub-balls, larger radii the
/// whole ball.
impl BallSource for RootedBall {
    fn ball(&self, radius: u32, with_marks: bool) -> Result<RootedBall> {
        let mut b = sub_ball(self, radius);
        if !with_marks {
            b.edges.iter_mut().for_each(|e| e.marks = None);
        }
        Ok(b)
    }
}

/// Restriction of a ball to the vertices within `radius` of its root.
pub fn sub_ball(ball: &RootedBall, radius: u32) -> RootedBall {
    if radius >= ball.radius {
        return ball.clone();
    }
    let mut new_id = vec![u32::MAX; ball.vertices.len()];
    let mut vertices = Vec::new();
    for (i, v) in ball.vertices.iter().enumerate() {
        if v.dist <= radius {
            new_id[i] = vertices.len() as u32;
            vertices.push(v.clone());
        }
    }
    let kept: Vec<usize> = (0..ball.edges.len())
        .filter(|&k| new_id[ball.edges[k].a as usize] != u32::MAX && new_id[ball.edges[k].b as usize] != u32::MAX)
        .collect();
    let edges = kept
        .iter()
        .map(|&k| {
            let e = &ball.edges[k];
            crate::graph::BallEdge { a: new_id[e.a as usize], b: new_id[e.b as usize], ..e.clone() }
        })
        .collect();
    let epidemic = ball.epidemic.as_ref().map(|m| BallEpidemicMarks {
        recovery: (0..ball.vertices.len()).filter(|&i| new_id[i] != u32::MAX).map(|i| m.recovery[i]).collect(),
        initially_infected: (0..ball.vertices.len())
            .filter(|&i| new_id[i] != u32::MAX)
            .map(|i| m.initially_infected[i])
            .collect(),
        transmission: kept.iter().map(|&k| m.transmission[k]).collect(),
    });
    canon::relabel_canonical(RootedBall { radius, horizon: ball.horizon, vertices, edges, epidemic })
}

/// Rooted distance `1/(R★+1)`, where `R★` is the largest radius up to `r_max`
/// at which the balls are rooted-isomorphic; 0 when they agree through
/// `r_max` or both are exhausted while still isomorphic.
pub fn dist_rooted(a: &dyn BallSource, b: &dyn BallSource, r_max: u32) -> Result<f64> {
    let mut prev = (1, 1);
    for r in 1..=r_max {
        let (ba, bb) = (a.ball(r, false)?, b.ball(r, false)?);
        if !rooted_isomorphic(&ba, &bb)? {
            return Ok(1.0 / r as f64);
        }
        let sizes = (ba.vertex_count(), bb.vertex_count());
        if sizes == prev {
            return Ok(0.0);
        }
        prev = sizes;
    }
    Ok(0.0)
}

/// Which marks enter the marked distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarkVariant {
    /// Edge time marks only.
    Time,
    /// Time marks plus epidemic marks on vertices and edges.
    TimeAndEpidemic,
}

/// Vertex epidemic-mark distance: recovery time difference, or 1 if the
/// initial statuses differ.
pub fn vertex_epidemic_distance(r1: f64, s1: bool, r2: f64, s2: bool) -> f64 {
    let dr = if r1 == r2 { 0.0 } else { (r1 - r2).abs() };
    dr.max(if s1 != s2 { 1.0 } else { 0.0 })
}

// Absorbs rounding in differences of nearby times.
const MARK_SLACK: f64 = 1e-12;

struct MarkTolerance<'a> {
    a: &'a RootedBall,
    b: &'a RootedBall,
    tol: f64,
    variant: MarkVariant,
}

impl Compat for MarkTolerance<'_> {
    fn vertex_ok(&self, x: u32, y: u32) -> bool {
        match (self.variant, &self.a.epidemic, &self.b.epidemic) {
            (MarkVariant::TimeAndEpidemic, Some(ma), Some(mb)) => {
                let (x, y) = (x as usize, y as usize);
                vertex_epidemic_distance(ma.recovery[x], ma.initially_infected[x], mb.recovery[y], mb.initially_infected[y])
                    <= self.tol
            }
            _ => true,
        }
    }

    fn edge_ok(&self, ea: u32, eb: u32) -> bool {
        let (ea, eb) = (ea as usize, eb as usize);
        let mut d = match (&self.a.edges[ea].marks, &self.b.edges[eb].marks) {
            (Some(m1), Some(m2)) => mark_seq_distance(m1, m2),
            _ => 0.0,
        };
        if let (MarkVariant::TimeAndEpidemic, Some(ma), Some(mb)) = (self.variant, &self.a.epidemic, &self.b.epidemic) {
            d = d.max((ma.transmission[ea] - mb.transmission[eb]).abs());
        }
        d <= self.tol
    }
}

/// Marked distance `1/(R★+1)`, where `R★` is the largest radius `r` up to
/// `r_max` admitting a rooted isomorphism of the `r`-balls under which every
/// corresponding mark pair is within `1/r`.
pub fn marked_dist(a: &dyn BallSource, b: &dyn BallSource, variant: MarkVariant, r_max: u32) -> Result<f64> {
    for r in 1..=r_max {
        let (ba, bb) = (a.ball(r, true)?, b.ball(r, true)?);
        if !ba.has_marks() || !bb.has_marks() {
            return Err(Error::InvalidMarks("marked distance needs balls with time marks".into()));
        }
        if variant == MarkVariant::TimeAndEpidemic && (ba.epidemic.is_none() || bb.epidemic.is_none()) {
            return Err(Error::InvalidMarks("epidemic variant needs balls with epidemic marks".into()));
        }
        let compat = MarkTolerance { a: &ba, b: &bb, tol: 1.0 / r as f64 + MARK_SLACK, variant };
        if !isomorphic_with(&ba, &bb, &compat, MARKED_VERTEX_CAP)? {
            return Ok(1.0 / r as f64);
        }
    }
    Ok(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(n: u32, edges: &[(u32, u32)]) -> TimeMarkedUnionGraph {
        TimeMarkedUnionGraph::from_edges(n, 3.0, edges.iter().map(|&(u, v)| (u, v, MarkSeq::always_on(3.0))))
    }

    fn marked(n: u32, edges: &[(u32, u32, f64, f64)]) -> TimeMarkedUnionGraph {
        TimeMarkedUnionGraph::from_edges(n, 3.0, edges.iter().map(|&(u, v, s, e)| (u, v, MarkSeq::single(s, e))))
    }

    fn path(len: u32) -> TimeMarkedUnionGraph {
        graph(len + 1, &(0..len).map(|i| (i, i + 1)).collect::<Vec<_>>())
    }

    #[test]
    fn mark_seq_distance_examples() {
        let a = MarkSeq::new(vec![(0.0, 1.0)], 3.0).unwrap();
        let b = MarkSeq::new(vec![(0.0, 1.0), (2.0, 3.0)], 3.0).unwrap();
        assert_eq!(mark_seq_distance(&a, &a), 0.0);
        assert_eq!(mark_seq_distance(&a, &b), 1.0);
        let c = MarkSeq::new(vec![(0.5, 1.0)], 3.0).unwrap();
        let d = MarkSeq::new(vec![(0.6, 1.2)], 3.0).unwrap();
        assert!((mark_seq_distance(&c, &d) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn mark_seq_distance_triangle_needs_short_horizon() {
        // with T = 3 a one-interval sequence is closer to both two-interval
        // sequences than they are to each other
        let a = MarkSeq::new(vec![(0.0, 0.0), (0.5, 1.0)], 3.0).unwrap();
        let b = MarkSeq::new(vec![(0.0, 0.0)], 3.0).unwrap();
        let c = MarkSeq::new(vec![(0.0, 0.0), (2.5, 3.0)], 3.0).unwrap();
        assert_eq!(mark_seq_distance(&a, &b) + mark_seq_distance(&b, &c), 2.0);
        assert_eq!(mark_seq_distance(&a, &c), 4.0);
    }

    #[test]
    fn dist_rooted_examples() {
        let g = path(5);
        assert_eq!(dist_rooted(&Rooted::new(&g, 0), &Rooted::new(&g, 0), R_MAX).unwrap(), 0.0);
        // degree 1 vs degree 2 root
        assert_eq!(dist_rooted(&Rooted::new(&g, 0), &Rooted::new(&g, 2), R_MAX).unwrap(), 1.0);
        let (p3, p2) = (path(3), path(2));
        assert_eq!(dist_rooted(&Rooted::new(&p3, 0), &Rooted::new(&p2, 0), R_MAX).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn dist_rooted_reports_zero_through_r_max() {
        let (a, b) = (path(40), path(41));
        assert_eq!(dist_rooted(&Rooted::new(&a, 0), &Rooted::new(&b, 0), R_MAX).unwrap(), 0.0);
        assert_eq!(dist_rooted(&Rooted::new(&a, 0), &Rooted::new(&b, 0), 50).unwrap(), 1.0 / 41.0);
    }

    #[test]
    fn balls_are_sources() {
        let g = path(6);
        let big = rooted_ball(&g, 0, 6, true).unwrap();
        assert_eq!(sub_ball(&big, 2), rooted_ball(&g, 0, 2, true).unwrap());
        assert_eq!(dist_rooted(&big, &Rooted::new(&g, 0), 6).unwrap(), 0.0);
    }

    #[test]
    fn marked_dist_examples() {
        let base = [(0, 1, 0.5, 1.0), (1, 2, 0.2, 2.0), (0, 3, 0.0, 3.0)];
        let g = marked(4, &base);
        assert_eq!(marked_dist(&Rooted::new(&g, 0), &Rooted::new(&g, 0), MarkVariant::Time, R_MAX).unwrap(), 0.0);

        let mut far = base;
        far[0].3 = 3.0; // off time moved by 2
        let h = marked(4, &far);
        assert_eq!(marked_dist(&Rooted::new(&g, 0), &Rooted::new(&h, 0), MarkVariant::Time, R_MAX).unwrap(), 1.0);

        // a long path with every ON time shifted by 1/10
        let n = 30;
        let edges: Vec<(u32, u32, f64, f64)> = (0..n).map(|i| (i, i + 1, 0.5, 2.0)).collect();
        let shifted: Vec<(u32, u32, f64, f64)> = edges.iter().map(|&(u, v, s, e)| (u, v, s + 0.1, e)).collect();
        let (p, q) = (marked(n + 1, &edges), marked(n + 1, &shifted));
        let d = marked_dist(&Rooted::new(&p, 0), &Rooted::new(&q, 0), MarkVariant::Time, R_MAX).unwrap();
        assert!(d <= 1.0 / 11.0, "{d}");
        assert_eq!(d, 1.0 / 11.0);
    }

    #[test]
    fn marked_dist_searches_over_isomorphisms() {
        // root with two leaves; the leaf marks are swapped between the graphs
        let a = marked(3, &[(0, 1, 0.0, 1.0), (0, 2, 1.0, 2.0)]);
        let b = marked(3, &[(0, 1, 1.0, 2.0), (0, 2, 0.0, 1.0)]);
        assert_eq!(marked_dist(&Rooted::new(&a, 0), &Rooted::new(&b, 0), MarkVariant::Time, R_MAX).unwrap(), 0.0);
    }

    #[test]
    fn epidemic_variant_uses_vertex_and_edge_marks() {
        let g = marked(2, &[(0, 1, 0.0, 3.0)]);
        let m1 = EpidemicMarks { recovery: vec![1.0, 1.0], initially_infected: vec![false, true], transmission: vec![0.5] };
        let mut m2 = m1.clone();
        m2.transmission[0] = 0.75;
        let (a, b) = (Rooted::new(&g, 0).with_epidemic(&m1), Rooted::new(&g, 0).with_epidemic(&m2));
        assert_eq!(marked_dist(&a, &b, MarkVariant::Time, R_MAX).unwrap(), 0.0);
        // |0.5 - 0.75| = 1/4: fine at r <= 4, fails at r = 5
        assert_eq!(marked_dist(&a, &b, MarkVariant::TimeAndEpidemic, R_MAX).unwrap(), 0.2);
        let mut m3 = m1.clone();
        m3.initially_infected[1] = false;
        let c = Rooted::new(&g, 0).with_epidemic(&m3);
        assert_eq!(marked_dist(&a, &c, MarkVariant::TimeAndEpidemic, R_MAX).unwrap(), 0.5);
        assert!(marked_dist(&Rooted::new(&g, 0), &a, MarkVariant::TimeAndEpidemic, R_MAX).is_err());
    }

    fn brute_force_iso(a: &RootedBall, b: &RootedBall) -> bool {
        let n = a.vertex_count();
        if n != b.vertex_count() || a.edge_count() != b.edge_count() {
            return false;
        }
        let eb: std::collections::HashSet<(u32, u32)> = b.edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
        let mut perm: Vec<u32> = (1..n as u32).collect();
        permutations(&mut perm, 0, &mut |p| {
            let map = |x: u32| if x == 0 { 0 } else { p[x as usize - 1] };
            a.edges.iter().all(|e| {
                let (x, y) = (map(e.a), map(e.b));
                eb.contains(&(x.min(y), x.max(y)))
            })
        })
    }

    fn permutations(p: &mut Vec<u32>, k: usize, f: &mut dyn FnMut(&[u32]) -> bool) -> bool {
        if k == p.len() {
            return f(p);
        }
        for i in k..p.len() {
            p.swap(k, i);
            if permutations(p, k + 1, f) {
                p.swap(k, i);
                return true;
            }
            p.swap(k, i);
        }
        false
    }

    fn small_graph() -> impl Strategy<Value = (u32, Vec<(u32, u32)>)> {
        (2u32..=8).prop_flat_map(|n| {
            let pairs: Vec<(u32, u32)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            let m = pairs.len();
            (Just(n), proptest::sample::subsequence(pairs, 0..=m))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn isomorphism_matches_brute_force(
            (n, e1) in small_graph(),
            e2 in proptest::collection::vec((0u32..8, 0u32..8), 0..20),
            shuffle in any::<u64>(),
            relabel in any::<bool>(),
            r in 1u32..4,
        ) {
            let g1 = graph(n, &e1);
            let e2: Vec<(u32, u32)> = if relabel {
                // same graph under a random permutation
                let mut p: Vec<u32> = (0..n).collect();
                let mut s = shuffle;
                for i in (1..n as usize).rev() {
                    s = crate::rng::mix64(s);
                    p.swap(i, (s % (i as u64 + 1)) as usize);
                }
                e1.iter().map(|&(u, v)| (p[u as usize], p[v as usize])).collect()
            } else {
                let mut e: Vec<(u32, u32)> =
                    e2.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v).map(|(u, v)| (u.min(v), u.max(v))).collect();
                e.sort_unstable();
                e.dedup();
                e
            };
            let g2 = graph(n, &e2);
            for (ra, rb) in [(0, 0), (0, n - 1), (n / 2, 0)] {
                let a = rooted_ball(&g1, ra, r, false).unwrap();
                let b = rooted_ball(&g2, rb, r, false).unwrap();
                prop_assert_eq!(rooted_isomorphic(&a, &b).unwrap(), brute_force_iso(&a, &b));
            }
        }

        #[test]
        fn dist_rooted_is_ultrametric(
            (n1, e1) in small_graph(),
            (n2, e2) in small_graph(),
            (n3, e3) in small_graph(),
        ) {
            let (g1, g2, g3) = (graph(n1, &e1), graph(n2, &e2), graph(n3, &e3));
            let (a, b, c) = (Rooted::new(&g1, 0), Rooted::new(&g2, 0), Rooted::new(&g3, 0));
            let d = |x: &Rooted, y: &Rooted| dist_rooted(x, y, 8).unwrap();
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b).max(d(&b, &c)));
        }

        // Marks within a horizon of at most 1: each unmatched interval pair then
        // costs at most 2, which the count term always covers.
        #[test]
        fn mark_seq_distance_is_a_metric(
            x in proptest::collection::vec(0.0f64..=1.0, 1..8),
            y in proptest::collection::vec(0.0f64..=1.0, 1..8),
            z in proptest::collection::vec(0.0f64..=1.0, 1..8),
        ) {
            let seq = |v: &[f64]| {
                let mut t = v.to_vec();
                t.sort_by(f64::total_cmp);
                MarkSeq::union_of(t.chunks(2).map(|c| (c[0], *c.last().unwrap())).collect()).unwrap()
            };
            let (a, b, c) = (seq(&x), seq(&y), seq(&z));
            prop_assert_eq!(mark_seq_distance(&a, &a), 0.0);
            prop_assert_eq!(mark_seq_distance(&a, &b), mark_seq_distance(&b, &a));
            if a != b {
                prop_assert!(mark_seq_distance(&a, &b) > 0.0);
            }
            prop_assert!(mark_seq_distance(&a, &c) <= mark_seq_distance(&a, &b) + mark_seq_distance(&b, &c) + 1e-12);
        }
    }
}
