use rayon::prelude::*;

use super::{check_grid, EpidemicCurve, EpidemicMarks};
use crate::error::{Error, Result};
use crate::graph::{TimeMarkedUnionGraph, Vertex};

/// Default limit on path extensions explored for one vertex.
pub const DEFAULT_PATH_CAP: u64 = 1_000_000;

/// Backward infection-time engine with reusable scratch space.
///
/// For a target `v`, the candidate paths are the self-avoiding paths with at
/// most `radius` edges that start at an initially infected vertex, avoid other
/// initially infected vertices, and use only edges `{x, y}` whose transmission
/// time is below the recovery time of the transmitting endpoint `x`. Along a
/// path, a vertex infected at `I` starts the clock of the next edge at `I` if
/// the edge is ON then and at its next activation otherwise; the next vertex
/// is infected `C(e)` later, provided that is no later than `I + R_x` and the
/// edge is ON at that instant. The infection time of `v` is the minimum over
/// paths.
///
/// Infection times only grow along a path, so partial paths that already fail
/// or cannot beat the best complete path are abandoned. Paths are grown from
/// the sources toward `v`, and a feasible-hop BFS from `v` bounds how many
/// edges are still needed.
pub struct Backward<'a> {
    u: &'a TimeMarkedUnionGraph,
    m: &'a EpidemicMarks,
    radius: u32,
    cap: u64,
    dist: Vec<u32>,
    touched: Vec<Vertex>,
    on_path: Vec<bool>,
}

struct Frame {
    x: Vertex,
    time: f64,
    hops: u32,
    next: usize,
}

impl<'a> Backward<'a> {
    /// `radius = None` means unbounded path length.
    pub fn new(u: &'a TimeMarkedUnionGraph, m: &'a EpidemicMarks, radius: Option<u32>, cap: u64) -> Result<Self> {
        m.check_covers(u)?;
        let n = u.n() as usize;
        Ok(Backward {
            u,
            m,
            radius: radius.unwrap_or(u32::MAX),
            cap,
            dist: vec![u32::MAX; n],
            touched: Vec::new(),
            on_path: vec![false; n],
        })
    }

    /// Whether `x` can transmit over edge `eid` at all.
    fn feasible(&self, x: Vertex, eid: u32) -> bool {
        self.m.recovery[x as usize] > self.m.transmission[eid as usize]
    }

    /// Feasible-hop distances to `v` within the radius; returns the sources.
    fn explore(&mut self, v: Vertex) -> Vec<Vertex> {
        let mut sources = Vec::new();
        self.dist[v as usize] = 0;
        self.touched.push(v);
        let mut head = 0;
        while head < self.touched.len() {
            let y = self.touched[head];
            head += 1;
            let d = self.dist[y as usize];
            if d >= self.radius || (y != v && self.m.initially_infected[y as usize]) {
                continue;
            }
            for &(x, eid) in self.u.neighbors(y) {
                if self.dist[x as usize] == u32::MAX && self.feasible(x, eid) {
                    self.dist[x as usize] = d + 1;
                    self.touched.push(x);
                    if self.m.initially_infected[x as usize] {
                        sources.push(x);
                    }
                }
            }
        }
        sources
    }

    fn reset(&mut self) {
        for &x in &self.touched {
            self.dist[x as usize] = u32::MAX;
        }
        self.touched.clear();
    }

    pub fn infection_time(&mut self, v: Vertex) -> Result<f64> {
        self.u.check_vertex(v)?;
        if self.m.initially_infected[v as usize] {
            return Ok(0.0);
        }
        let sources = self.explore(v);
        let result = self.search(v, &sources);
        self.reset();
        result
    }

    fn search(&mut self, v: Vertex, sources: &[Vertex]) -> Result<f64> {
        let (u, m) = (self.u, self.m);
        let mut best = f64::INFINITY;
        let mut extensions = 0u64;
        let mut stack: Vec<Frame> = Vec::new();
        for &s in sources {
            self.on_path[s as usize] = true;
            stack.push(Frame { x: s, time: 0.0, hops: 0, next: 0 });
            while let Some(top) = stack.last_mut() {
                let (x, time, hops) = (top.x, top.time, top.hops);
                let adj = u.neighbors(x);
                let Some(&(y, eid)) = adj.get(top.next) else {
                    self.on_path[x as usize] = false;
                    stack.pop();
                    continue;
                };
                top.next += 1;
                let dy = self.dist[y as usize];
                if dy == u32::MAX
                    || self.on_path[y as usize]
                    || (hops + 1).saturating_add(dy) > self.radius
                    || (y != v && m.initially_infected[y as usize])
                    || !self.feasible(x, eid)
                {
                    continue;
                }
                let marks = &u.edge(eid).marks;
                let Some(start) = marks.transmission_start(time) else { continue };
                let next = start + m.transmission[eid as usize];
                if next > time + m.recovery[x as usize] || !marks.contains(next) || next >= best {
                    continue;
                }
                extensions += 1;
                if extensions > self.cap {
                    for f in stack.drain(..) {
                        self.on_path[f.x as usize] = false;
                    }
                    return Err(Error::ResourceLimit {
                        what: format!("backward path extensions for vertex {v}"),
                        limit: self.cap,
                    });
                }
                if y == v {
                    best = next;
                } else {
                    self.on_path[y as usize] = true;
                    stack.push(Frame { x: y, time: next, hops: hops + 1, next: 0 });
                }
            }
        }
        Ok(best)
    }
}

/// Infection time of `v` from paths of at most `radius` edges (`None` for no
/// limit), with the default path cap.
pub fn backward_infection_time(u: &TimeMarkedUnionGraph, m: &EpidemicMarks, v: Vertex, radius: Option<u32>) -> Result<f64> {
    Backward::new(u, m, radius, DEFAULT_PATH_CAP)?.infection_time(v)
}

/// Infection times of all vertices, in parallel over vertices.
pub fn backward_infection_times(u: &TimeMarkedUnionGraph, m: &EpidemicMarks, radius: Option<u32>, cap: u64) -> Result<Vec<f64>> {
    m.check_covers(u)?;
    (0..u.n())
        .into_par_iter()
        .map_init(|| Backward::new(u, m, radius, cap).expect("marks checked"), |b, v| b.infection_time(v))
        .collect()
}

pub fn backward_curve(u: &TimeMarkedUnionGraph, m: &EpidemicMarks, radius: Option<u32>, grid: &[f64]) -> Result<EpidemicCurve> {
    check_grid(grid, u.horizon())?;
    let times = backward_infection_times(u, m, radius, DEFAULT_PATH_CAP)?;
    Ok(EpidemicCurve::from_times(grid, &times, &m.recovery))
}
