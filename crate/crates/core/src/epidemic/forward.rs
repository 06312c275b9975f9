use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{check_grid, EpidemicCurve, EpidemicMarks};
use crate::error::Result;
use crate::graph::{DynamicGraph, TimeMarkedUnionGraph};
use crate::util::OrdF64;

/// Event-driven SIR on a dynamic graph. Returns per-vertex infection times
/// (`inf` if never infected) and the curve on `grid`.
pub fn forward_simulate(g: &DynamicGraph, m: &EpidemicMarks, grid: &[f64]) -> Result<(Vec<f64>, EpidemicCurve)> {
    check_grid(grid, g.horizon())?;
    let u = g.union_graph();
    let times = forward_infection_times(&u, m)?;
    let curve = EpidemicCurve::from_times(grid, &times, &m.recovery);
    Ok((times, curve))
}

/// Causal infection times on a time-marked union graph.
///
/// When `w` is infected at `τ`, each incident edge `e` gets one transmission
/// attempt: its clock starts at `τ` if `e` is ON then, otherwise at the next
/// activation of `e`, and fires `C(e)` later. The attempt succeeds iff
/// `C(e) < R_w`, the firing time is at most `τ + R_w` and `e` is ON at that
/// instant. Candidate
/// infections are processed in `(time, vertex, edge)` order.
pub fn forward_infection_times(u: &TimeMarkedUnionGraph, m: &EpidemicMarks) -> Result<Vec<f64>> {
    m.check_covers(u)?;
    let n = u.n() as usize;
    let mut infection = vec![f64::INFINITY; n];
    let mut queue: BinaryHeap<Reverse<(OrdF64, u32, u32)>> = BinaryHeap::new();
    for v in 0..n {
        if m.initially_infected[v] {
            queue.push(Reverse((OrdF64(0.0), v as u32, u32::MAX)));
        }
    }
    while let Some(Reverse((OrdF64(tau), w, _))) = queue.pop() {
        if infection[w as usize].is_finite() {
            continue;
        }
        infection[w as usize] = tau;
        let deadline = tau + m.recovery[w as usize];
        for &(x, eid) in u.neighbors(w) {
            if infection[x as usize].is_finite() {
                continue;
            }
            let marks = &u.edge(eid).marks;
            let c = m.transmission[eid as usize];
            if c >= m.recovery[w as usize] {
                continue;
            }
            let Some(start) = marks.transmission_start(tau) else { continue };
            let hit = start + c;
            if hit <= deadline && marks.contains(hit) {
                queue.push(Reverse((OrdF64(hit), x, eid)));
            }
        }
    }
    Ok(infection)
}
