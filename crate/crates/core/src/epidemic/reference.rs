//! Exhaustive reference for the backward infection time on tiny graphs.

use super::EpidemicMarks;
use crate::error::{Error, Result};
use crate::graph::{TimeMarkedUnionGraph, Vertex};

/// Largest graph accepted by [`exhaustive_infection_time`].
pub const EXHAUSTIVE_MAX_N: u32 = 12;

/// Infection time of `v` by listing every self-avoiding path from an
/// initially infected vertex to `v` (through vertices that are not initially
/// infected, with at most `max_hops` edges) and timing each path from scratch.
/// No pruning; meant as a cross-check of [`super::Backward`].
pub fn exhaustive_infection_time(u: &TimeMarkedUnionGraph, m: &EpidemicMarks, v: Vertex, max_hops: Option<u32>) -> Result<f64> {
    if u.n() > EXHAUSTIVE_MAX_N {
        return Err(Error::ResourceLimit { what: format!("exhaustive search on {} vertices", u.n()), limit: EXHAUSTIVE_MAX_N as u64 });
    }
    u.check_vertex(v)?;
    m.check_covers(u)?;
    if m.initially_infected[v as usize] {
        return Ok(0.0);
    }
    let max_hops = max_hops.unwrap_or(u32::MAX) as usize;
    let mut paths: Vec<Vec<(Vertex, u32)>> = Vec::new();
    for s in 0..u.n() {
        if m.initially_infected[s as usize] {
            let mut path = vec![(s, u32::MAX)];
            enumerate(u, m, v, max_hops, &mut path, &mut paths);
        }
    }
    Ok(paths.iter().filter_map(|p| path_time(u, m, p)).fold(f64::INFINITY, f64::min))
}

fn enumerate(
    u: &TimeMarkedUnionGraph,
    m: &EpidemicMarks,
    v: Vertex,
    max_hops: usize,
    path: &mut Vec<(Vertex, u32)>,
    out: &mut Vec<Vec<(Vertex, u32)>>,
) {
    let (x, _) = *path.last().unwrap();
    if x == v {
        out.push(path.clone());
        return;
    }
    if path.len() > max_hops {
        return;
    }
    for &(y, eid) in u.neighbors(x) {
        if path.iter().any(|&(w, _)| w == y) || (y != v && m.initially_infected[y as usize]) {
            continue;
        }
        path.push((y, eid));
        enumerate(u, m, v, max_hops, path, out);
        path.pop();
    }
}

/// Arrival time at the end of `path`, or `None` if some hop fails.
fn path_time(u: &TimeMarkedUnionGraph, m: &EpidemicMarks, path: &[(Vertex, u32)]) -> Option<f64> {
    let mut time = 0.0;
    for w in path.windows(2) {
        let (x, (_, eid)) = (w[0].0 as usize, w[1]);
        let c = m.transmission[eid as usize];
        let rec = m.recovery[x];
        if rec <= c {
            return None;
        }
        let iv = u.edge(eid).marks.intervals();
        let start = if iv.iter().any(|&(on, off)| on <= time && time <= off) {
            time
        } else {
            iv.iter().map(|&(on, _)| on).find(|&on| on > time)?
        };
        let arrival = start + c;
        if arrival > time + rec || !iv.iter().any(|&(on, off)| on <= arrival && arrival <= off) {
            return None;
        }
        time = arrival;
    }
    Some(time)
}
