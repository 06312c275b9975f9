//! Dynamic graphs, time-marked union graphs and rooted balls.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = u32;

/// Normalized unordered vertex pair, `a < b`.
pub fn pair(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// ON/OFF status of an edge at an instant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeStatus {
    On,
    Off,
}

/// Sequence of closed ON intervals `[on_i, off_i]` of one edge.
///
/// Strictly interleaved: `on_1 <= off_1 < on_2 <= off_2 < ...`, never empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkSeq {
    intervals: Vec<(f64, f64)>,
}

impl MarkSeq {
    /// Validated constructor; all times must lie in `[0, horizon]`.
    pub fn new(intervals: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        let m = MarkSeq { intervals };
        m.validate(horizon)?;
        Ok(m)
    }

    /// The static mark `((0, T))`.
    pub fn always_on(horizon: f64) -> Self {
        MarkSeq { intervals: vec![(0.0, horizon)] }
    }

    /// Single interval, no validation beyond `on <= off`.
    pub fn single(on: f64, off: f64) -> Self {
        debug_assert!(on <= off);
        MarkSeq { intervals: vec![(on, off)] }
    }

    /// Union of arbitrary closed intervals. Overlapping or touching intervals are
    /// merged. Returns `None` for an empty input.
    pub fn union_of(mut intervals: Vec<(f64, f64)>) -> Option<Self> {
        if intervals.is_empty() {
            return None;
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (on, off) in intervals {
            match merged.last_mut() {
                Some(last) if on <= last.1 => last.1 = last.1.max(off),
                _ => merged.push((on, off)),
            }
        }
        Some(MarkSeq { intervals: merged })
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(Error::InvalidMarks("empty mark sequence".into()));
        }
        let mut prev_off = f64::NEG_INFINITY;
        for (i, &(on, off)) in self.intervals.iter().enumerate() {
            if !(on.is_finite() && off.is_finite()) {
                return Err(Error::InvalidMarks(format!("non-finite time in interval {i}")));
            }
            if on < 0.0 || off > horizon {
                return Err(Error::InvalidMarks(format!(
                    "interval {i} = [{on}, {off}] outside [0, {horizon}]"
                )));
            }
            if on > off {
                return Err(Error::InvalidMarks(format!("interval {i} has on {on} > off {off}")));
            }
            if i > 0 && on <= prev_off {
                return Err(Error::InvalidMarks(format!(
                    "interval {i} starts at {on}, not after previous off {prev_off}"
                )));
            }
            prev_off = off;
        }
        Ok(())
    }

    /// N(e), the number of ON switches.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Closed-interval membership.
    pub fn contains(&self, s: f64) -> bool {
        let idx = self.intervals.partition_point(|&(on, _)| on <= s);
        idx > 0 && s <= self.intervals[idx - 1].1
    }

    /// Smallest ON time strictly after `s`.
    pub fn next_activation_after(&self, s: f64) -> Option<f64> {
        let idx = self.intervals.partition_point(|&(on, _)| on <= s);
        self.intervals.get(idx).map(|&(on, _)| on)
    }

    /// Clock start for a transmission attempt by a vertex infected at `s`:
    /// `s` itself when the edge is ON then, else the next activation.
    pub fn transmission_start(&self, s: f64) -> Option<f64> {
        if self.contains(s) {
            Some(s)
        } else {
            self.next_activation_after(s)
        }
    }
}

/// Fixed vertex set `[0, n)` with per-pair ON intervals over `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicGraph {
    n: u32,
    horizon: f64,
    edges: BTreeMap<(Vertex, Vertex), MarkSeq>,
}

impl DynamicGraph {
    pub fn new(n: u32, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(crate::error::config(format!("horizon must be finite and >= 0, got {horizon}")));
        }
        Ok(DynamicGraph { n, horizon, edges: BTreeMap::new() })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = ((Vertex, Vertex), &MarkSeq)> {
        self.edges.iter().map(|(k, m)| (*k, m))
    }

    pub fn marks(&self, u: Vertex, v: Vertex) -> Option<&MarkSeq> {
        self.edges.get(&pair(u, v))
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v >= self.n {
            Err(Error::InvalidVertex { vertex: v as u64, n: self.n })
        } else {
            Ok(())
        }
    }

    fn check_time(&self, s: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&s) {
            Err(Error::TimeOutOfRange { time: s, horizon: self.horizon })
        } else {
            Ok(())
        }
    }

    /// Static counterpart: the snapshot at `s`, every edge ON on all of
    /// `[0, T]`.
    pub fn frozen_snapshot(&self, s: f64) -> Result<DynamicGraph> {
        let edges = self.snapshot(s)?.into_iter().map(|e| (e, MarkSeq::always_on(self.horizon))).collect();
        Ok(DynamicGraph { n: self.n, horizon: self.horizon, edges })
    }

    /// Stores the marks of pair `{u, v}`, replacing any previous entry.
    pub fn insert(&mut self, u: Vertex, v: Vertex, marks: MarkSeq) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::InvalidMarks(format!("self-loop at {u}")));
        }
        marks.validate(self.horizon)?;
        self.edges.insert(pair(u, v), marks);
        Ok(())
    }

    /// Inserts without validation; used by generators that construct
    /// well-formed sequences directly.
    pub(crate) fn insert_unchecked(&mut self, u: Vertex, v: Vertex, marks: MarkSeq) {
        debug_assert!(u != v && u < self.n && v < self.n);
        debug_assert!(marks.validate(self.horizon).is_ok(), "{marks:?}");
        self.edges.insert(pair(u, v), marks);
    }

    pub fn edge_status(&self, u: Vertex, v: Vertex, s: f64) -> Result<EdgeStatus> {
        self.check_time(s)?;
        Ok(match self.edges.get(&pair(u, v)) {
            Some(m) if m.contains(s) => EdgeStatus::On,
            _ => EdgeStatus::Off,
        })
    }

    /// Edge set at time `s`.
    pub fn snapshot(&self, s: f64) -> Result<Vec<(Vertex, Vertex)>> {
        self.check_time(s)?;
        Ok(self.edges.iter().filter(|(_, m)| m.contains(s)).map(|(k, _)| *k).collect())
    }

    pub fn union_graph(&self) -> TimeMarkedUnionGraph {
        TimeMarkedUnionGraph::from_edges(
            self.n,
            self.horizon,
            self.edges.iter().map(|(&(u, v), m)| (u, v, m.clone())),
        )
    }
}

/// One edge of a union graph.
#[derive(Clone, Debug, PartialEq)]
pub struct UnionEdge {
    pub u: Vertex,
    pub v: Vertex,
    pub marks: MarkSeq,
}

/// Static graph of every ever-ON edge, each with its mark sequence, plus CSR
/// adjacency. Edge ids index [`Self::edges`] and are sorted by pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeMarkedUnionGraph {
    n: u32,
    horizon: f64,
    edges: Vec<UnionEdge>,
    offsets: Vec<usize>,
    adjacency: Vec<(Vertex, u32)>,
}

impl TimeMarkedUnionGraph {
    /// Builds from `(u, v, marks)` triples. Pairs must be distinct and valid;
    /// callers are the graph types of this crate.
    pub fn from_edges<I>(n: u32, horizon: f64, edges: I) -> Self
    where
        I: IntoIterator<Item = (Vertex, Vertex, MarkSeq)>,
    {
        let mut edges: Vec<UnionEdge> = edges
            .into_iter()
            .map(|(u, v, marks)| {
                let (u, v) = pair(u, v);
                UnionEdge { u, v, marks }
            })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));
        debug_assert!(edges.windows(2).all(|w| (w[0].u, w[0].v) != (w[1].u, w[1].v)));

        let mut degree = vec![0usize; n as usize];
        for e in &edges {
            degree[e.u as usize] += 1;
            degree[e.v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n as usize + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut adjacency = vec![(0, 0); *offsets.last().unwrap()];
        for (id, e) in edges.iter().enumerate() {
            adjacency[fill[e.u as usize]] = (e.v, id as u32);
            fill[e.u as usize] += 1;
            adjacency[fill[e.v as usize]] = (e.u, id as u32);
            fill[e.v as usize] += 1;
        }
        TimeMarkedUnionGraph { n, horizon, edges, offsets, adjacency }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn edges(&self) -> &[UnionEdge] {
        &self.edges
    }

    pub fn edge(&self, id: u32) -> &UnionEdge {
        &self.edges[id as usize]
    }

    /// `(neighbor, edge id)` pairs of `v`.
    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, u32)] {
        &self.adjacency[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<u32> {
        let key = pair(u, v);
        self.edges.binary_search_by_key(&key, |e| (e.u, e.v)).ok().map(|i| i as u32)
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v >= self.n {
            Err(Error::InvalidVertex { vertex: v as u64, n: self.n })
        } else {
            Ok(())
        }
    }

    /// The dynamic graph this union graph records.
    pub fn to_dynamic(&self) -> DynamicGraph {
        DynamicGraph {
            n: self.n,
            horizon: self.horizon,
            edges: self.edges.iter().map(|e| ((e.u, e.v), e.marks.clone())).collect(),
        }
    }

    /// Hop distances from `v`, truncated at `radius` (`u32::MAX` = unreached).
    pub fn bfs_distances(&self, v: Vertex, radius: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n as usize];
        dist[v as usize] = 0;
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u as usize];
            if d == radius {
                continue;
            }
            for &(w, _) in self.neighbors(u) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallVertex {
    /// Id in the source graph.
    pub original: Vertex,
    pub dist: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallEdge {
    pub a: u32,
    pub b: u32,
    /// Edge id in the source union graph.
    pub source_edge: u32,
    pub marks: Option<MarkSeq>,
}

/// Per-vertex and per-edge epidemic marks carried by a ball, in local ids.
#[derive(Clone, Debug, PartialEq)]
pub struct BallEpidemicMarks {
    pub recovery: Vec<f64>,
    pub initially_infected: Vec<bool>,
    pub transmission: Vec<f64>,
}

/// Induced subgraph on the vertices within hop distance `radius` of a root.
///
/// Local ids are BFS-canonical: the root is 0 and vertices are ordered by
/// distance, then by refined structural color, then by discovery order.
#[derive(Clone, Debug, PartialEq)]
pub struct RootedBall {
    pub radius: u32,
    pub horizon: f64,
    pub vertices: Vec<BallVertex>,
    pub edges: Vec<BallEdge>,
    pub epidemic: Option<BallEpidemicMarks>,
}

impl RootedBall {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_marks(&self) -> bool {
        self.edges.iter().all(|e| e.marks.is_some())
    }

    /// Local adjacency lists `(neighbor, ball edge index)`.
    pub fn adjacency(&self) -> Vec<Vec<(u32, u32)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.a as usize].push((e.b, i as u32));
            adj[e.b as usize].push((e.a, i as u32));
        }
        adj
    }

    /// Attaches epidemic marks from the source graph's marks.
    pub fn attach_epidemic(&mut self, marks: &crate::epidemic::EpidemicMarks) {
        self.epidemic = Some(BallEpidemicMarks {
            recovery: self.vertices.iter().map(|v| marks.recovery[v.original as usize]).collect(),
            initially_infected: self
                .vertices
                .iter()
                .map(|v| marks.initially_infected[v.original as usize])
                .collect(),
            transmission: self.edges.iter().map(|e| marks.transmission[e.source_edge as usize]).collect(),
        });
    }
}

/// Ball of radius `radius` around `v` in `u`.
pub fn rooted_ball(u: &TimeMarkedUnionGraph, v: Vertex, radius: u32, with_marks: bool) -> Result<RootedBall> {
    Ok(rooted_ball_capped(u, v, radius, with_marks, usize::MAX)?.expect("uncapped"))
}

/// Like [`rooted_ball`], but gives up with `None` once the ball has more than
/// `cap` vertices.
pub fn rooted_ball_capped(
    u: &TimeMarkedUnionGraph,
    v: Vertex,
    radius: u32,
    with_marks: bool,
    cap: usize,
) -> Result<Option<RootedBall>> {
    u.check_vertex(v)?;
    // BFS with a local map instead of an n-sized distance vector
    let mut local: std::collections::HashMap<Vertex, u32> = std::collections::HashMap::new();
    let mut order: Vec<BallVertex> = vec![BallVertex { original: v, dist: 0 }];
    local.insert(v, 0);
    let mut head = 0;
    while head < order.len() {
        let BallVertex { original: x, dist: d } = order[head];
        head += 1;
        if d == radius {
            continue;
        }
        for &(w, _) in u.neighbors(x) {
            if let std::collections::hash_map::Entry::Vacant(slot) = local.entry(w) {
                slot.insert(order.len() as u32);
                order.push(BallVertex { original: w, dist: d + 1 });
                if order.len() > cap {
                    return Ok(None);
                }
            }
        }
    }
    let mut edges = Vec::new();
    for (i, bv) in order.iter().enumerate() {
        for &(w, eid) in u.neighbors(bv.original) {
            if let Some(&j) = local.get(&w) {
                if (i as u32) < j {
                    edges.push(BallEdge {
                        a: i as u32,
                        b: j,
                        source_edge: eid,
                        marks: with_marks.then(|| u.edge(eid).marks.clone()),
                    });
                }
            }
        }
    }
    let ball = RootedBall { radius, horizon: u.horizon(), vertices: order, edges, epidemic: None };
    Ok(Some(crate::metrics::canon::relabel_canonical(ball)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn marks(iv: &[(f64, f64)]) -> MarkSeq {
        MarkSeq::new(iv.to_vec(), 3.0).unwrap()
    }

    #[test]
    fn markseq_validation() {
        assert!(MarkSeq::new(vec![], 1.0).is_err());
        assert!(MarkSeq::new(vec![(0.5, 0.4)], 1.0).is_err());
        assert!(MarkSeq::new(vec![(0.0, 0.5), (0.5, 0.7)], 1.0).is_err());
        assert!(MarkSeq::new(vec![(0.0, 1.5)], 1.0).is_err());
        assert!(MarkSeq::new(vec![(0.2, 0.2), (0.3, 1.0)], 1.0).is_ok());
    }

    #[test]
    fn union_of_merges_overlaps() {
        let m = MarkSeq::union_of(vec![(0.5, 1.0), (0.0, 0.2), (0.8, 1.5), (1.5, 2.0)]).unwrap();
        assert_eq!(m.intervals(), &[(0.0, 0.2), (0.5, 2.0)]);
        assert!(MarkSeq::union_of(vec![]).is_none());
    }

    #[test]
    fn contains_and_next_activation() {
        let m = marks(&[(0.5, 1.0), (2.0, 3.0)]);
        assert!(m.contains(0.5));
        assert!(m.contains(1.0));
        assert!(!m.contains(1.5));
        assert!(!m.contains(0.1));
        assert_eq!(m.next_activation_after(0.1), Some(0.5));
        assert_eq!(m.next_activation_after(0.5), Some(2.0));
        assert_eq!(m.next_activation_after(2.0), None);
        assert_eq!(m.transmission_start(1.2), Some(2.0));
        assert_eq!(m.transmission_start(0.7), Some(0.7));
    }

    #[test]
    fn frozen_snapshot_keeps_time_s_edges() {
        let mut g = DynamicGraph::new(3, 3.0).unwrap();
        g.insert(0, 1, marks(&[(0.5, 1.0)])).unwrap();
        g.insert(1, 2, marks(&[(0.0, 2.0)])).unwrap();
        let f = g.frozen_snapshot(0.0).unwrap();
        assert_eq!(f.edge_count(), 1);
        assert_eq!(f.marks(1, 2).unwrap().intervals(), &[(0.0, 3.0)]);
        assert!(g.frozen_snapshot(4.0).is_err());
    }

    #[test]
    fn union_graph_examples() {
        // all-ON edges map to ((0,T))
        let mut g = DynamicGraph::new(3, 3.0).unwrap();
        g.insert(0, 1, MarkSeq::always_on(3.0)).unwrap();
        g.insert(2, 1, MarkSeq::always_on(3.0)).unwrap();
        let u = g.union_graph();
        assert_eq!(u.edges().len(), 2);
        assert!(u.edges().iter().all(|e| e.marks.intervals() == [(0.0, 3.0)]));

        let mut g = DynamicGraph::new(3, 3.0).unwrap();
        g.insert(1, 2, marks(&[(0.5, 1.0), (2.0, 3.0)])).unwrap();
        let u = g.union_graph();
        assert_eq!(u.edges().len(), 1);
        assert_eq!(u.edge(0).marks.len(), 2);
        assert_eq!(u.edge(0).marks.intervals(), &[(0.5, 1.0), (2.0, 3.0)]);

        let g = DynamicGraph::new(4, 1.0).unwrap();
        let u = g.union_graph();
        assert_eq!(u.n(), 4);
        assert!(u.edges().is_empty());
        assert!((0..4).all(|v| u.degree(v) == 0));
    }

    #[test]
    fn edge_status_and_snapshot() {
        let mut g = DynamicGraph::new(4, 3.0).unwrap();
        g.insert(0, 1, marks(&[(0.5, 1.0)])).unwrap();
        g.insert(2, 3, MarkSeq::always_on(3.0)).unwrap();
        assert_eq!(g.edge_status(0, 1, 0.75).unwrap(), EdgeStatus::On);
        assert_eq!(g.edge_status(1, 0, 1.5).unwrap(), EdgeStatus::Off);
        assert_eq!(g.edge_status(0, 2, 1.0).unwrap(), EdgeStatus::Off);
        assert!(g.edge_status(0, 1, 3.5).is_err());
        assert!(g.edge_status(0, 1, -0.1).is_err());
        assert_eq!(g.snapshot(0.0).unwrap(), vec![(2, 3)]);
        assert_eq!(g.snapshot(3.0).unwrap(), vec![(2, 3)]);
        assert_eq!(g.snapshot(0.6).unwrap(), vec![(0, 1), (2, 3)]);
        assert!(g.snapshot(4.0).is_err());
    }

    #[test]
    fn insert_rejects_bad_input() {
        let mut g = DynamicGraph::new(3, 1.0).unwrap();
        assert!(g.insert(0, 3, MarkSeq::always_on(1.0)).is_err());
        assert!(g.insert(1, 1, MarkSeq::always_on(1.0)).is_err());
        assert!(g.insert(0, 1, MarkSeq::always_on(2.0)).is_err());
    }

    fn static_graph(n: u32, edges: &[(u32, u32)]) -> TimeMarkedUnionGraph {
        TimeMarkedUnionGraph::from_edges(n, 1.0, edges.iter().map(|&(u, v)| (u, v, MarkSeq::always_on(1.0))))
    }

    #[test]
    fn ball_examples() {
        let path = static_graph(3, &[(0, 1), (1, 2)]);
        let b0 = rooted_ball(&path, 0, 0, false).unwrap();
        assert_eq!((b0.vertex_count(), b0.edge_count()), (1, 0));
        let b1 = rooted_ball(&path, 0, 1, false).unwrap();
        assert_eq!((b1.vertex_count(), b1.edge_count()), (2, 1));

        let star = static_graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let b = rooted_ball(&star, 0, 1, true).unwrap();
        assert_eq!((b.vertex_count(), b.edge_count()), (6, 5));
        assert!(b.has_marks());
        assert!(rooted_ball(&star, 6, 1, false).is_err());
    }

    #[test]
    fn ball_is_induced() {
        // triangle plus pendant: radius-1 ball of 0 includes edge 1-2
        let g = static_graph(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]);
        let b = rooted_ball(&g, 0, 1, false).unwrap();
        assert_eq!((b.vertex_count(), b.edge_count()), (3, 3));
        assert_eq!(b.vertices[0].original, 0);
    }
}
