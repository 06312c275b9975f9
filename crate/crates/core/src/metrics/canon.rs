//! Structural colors, canonical vertex order and canonical forms of balls.

use crate::graph::{BallEdge, BallEpidemicMarks, BallVertex, MarkSeq, RootedBall};
use crate::rng::mix64;

pub(crate) fn hash_seq<I: IntoIterator<Item = u64>>(seed: u64, items: I) -> u64 {
    items.into_iter().fold(mix64(seed), |acc, x| mix64(acc ^ mix64(x)))
}

/// Stable color refinement started from `(distance to root, degree)`.
///
/// Returns the colors and the number of rounds until the partition stopped
/// splitting. Both are isomorphism invariants, so colors of two balls are
/// comparable when their round counts agree.
pub fn refine_colors(ball: &RootedBall, adj: &[Vec<(u32, u32)>]) -> (Vec<u64>, u32) {
    let n = ball.vertices.len();
    let mut colors: Vec<u64> =
        (0..n).map(|i| hash_seq(1, [ball.vertices[i].dist as u64, adj[i].len() as u64])).collect();
    let mut classes = count_classes(&colors);
    let mut rounds = 0;
    let mut scratch = Vec::new();
    loop {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                scratch.clear();
                scratch.extend(adj[i].iter().map(|&(j, _)| colors[j as usize]));
                scratch.sort_unstable();
                hash_seq(colors[i], scratch.iter().copied())
            })
            .collect();
        let next_classes = count_classes(&next);
        rounds += 1;
        colors = next;
        if next_classes == classes {
            return (colors, rounds);
        }
        classes = next_classes;
    }
}

fn count_classes(colors: &[u64]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Reorders the ball's local ids by (distance, structural color, discovery
/// order), keeping the root at 0.
pub fn relabel_canonical(ball: RootedBall) -> RootedBall {
    let adj = ball.adjacency();
    let (colors, _) = refine_colors(&ball, &adj);
    let mut order: Vec<u32> = (0..ball.vertices.len() as u32).collect();
    order.sort_by_key(|&i| (ball.vertices[i as usize].dist, colors[i as usize], i));
    let mut new_id = vec![0u32; order.len()];
    for (k, &old) in order.iter().enumerate() {
        new_id[old as usize] = k as u32;
    }
    let vertices: Vec<BallVertex> = order.iter().map(|&i| ball.vertices[i as usize].clone()).collect();
    let mut edges: Vec<(BallEdge, usize)> = ball
        .edges
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            let (a, b) = (new_id[e.a as usize], new_id[e.b as usize]);
            (BallEdge { a: a.min(b), b: a.max(b), ..e }, k)
        })
        .collect();
    edges.sort_by_key(|(e, _)| (e.a, e.b));
    let epidemic = ball.epidemic.map(|m| BallEpidemicMarks {
        recovery: order.iter().map(|&i| m.recovery[i as usize]).collect(),
        initially_infected: order.iter().map(|&i| m.initially_infected[i as usize]).collect(),
        transmission: edges.iter().map(|(_, k)| m.transmission[*k]).collect(),
    });
    RootedBall {
        radius: ball.radius,
        horizon: ball.horizon,
        vertices,
        edges: edges.into_iter().map(|(e, _)| e).collect(),
        epidemic,
    }
}

/// Hashable form of a ball. Exact forms (trees) are equal iff the balls are
/// isomorphic; other forms are invariants whose collisions must be resolved
/// by an explicit isomorphism check.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm {
    pub bytes: Vec<u8>,
    pub exact: bool,
}

impl CanonicalForm {
    pub fn hash64(&self) -> u64 {
        hash_seq(7, self.bytes.chunks(8).map(|c| c.iter().fold(0u64, |a, &b| a << 8 | b as u64)))
    }
}

/// Mark sequence rounded to multiples of `step`.
pub fn quantize(m: &MarkSeq, step: f64) -> Vec<i64> {
    m.intervals().iter().flat_map(|&(on, off)| [(on / step).round() as i64, (off / step).round() as i64]).collect()
}

fn mark_key(e: &BallEdge, step: Option<f64>) -> String {
    match (step, &e.marks) {
        (Some(step), Some(m)) => {
            let q = quantize(m, step);
            let parts: Vec<String> = q.iter().map(|x| x.to_string()).collect();
            format!("[{}]", parts.join(","))
        }
        _ => String::new(),
    }
}

pub fn is_tree(ball: &RootedBall) -> bool {
    ball.edges.len() + 1 == ball.vertices.len()
}

/// Canonical form of a ball; with `step`, edge marks enter quantized.
pub fn canonical_form(ball: &RootedBall, step: Option<f64>) -> CanonicalForm {
    let adj = ball.adjacency();
    if is_tree(ball) {
        // AHU encoding, children before parents
        let n = ball.vertices.len();
        let mut code: Vec<String> = vec![String::new(); n];
        let mut by_depth: Vec<u32> = (0..n as u32).collect();
        by_depth.sort_by_key(|&i| std::cmp::Reverse(ball.vertices[i as usize].dist));
        for &v in &by_depth {
            let d = ball.vertices[v as usize].dist;
            let mut parent_edge = None;
            let mut children: Vec<String> = Vec::new();
            for &(w, e) in &adj[v as usize] {
                if ball.vertices[w as usize].dist == d + 1 {
                    children.push(std::mem::take(&mut code[w as usize]));
                } else {
                    parent_edge = Some(e);
                }
            }
            children.sort_unstable();
            let mark = parent_edge.map(|e| mark_key(&ball.edges[e as usize], step)).unwrap_or_default();
            code[v as usize] = format!("({mark}{})", children.concat());
        }
        return CanonicalForm { bytes: std::mem::take(&mut code[0]).into_bytes(), exact: true };
    }
    let (colors, rounds) = refine_colors(ball, &adj);
    let mut vc = colors.clone();
    vc.sort_unstable();
    let mut ec: Vec<(u64, u64, String)> = ball
        .edges
        .iter()
        .map(|e| {
            let (x, y) = (colors[e.a as usize], colors[e.b as usize]);
            (x.min(y), x.max(y), mark_key(e, step))
        })
        .collect();
    ec.sort_unstable();
    let mut bytes = format!("G{rounds};{};{};", ball.vertices.len(), ball.edges.len()).into_bytes();
    for c in vc {
        bytes.extend_from_slice(&c.to_le_bytes());
    }
    for (x, y, m) in ec {
        bytes.extend_from_slice(&x.to_le_bytes());
        bytes.extend_from_slice(&y.to_le_bytes());
        bytes.extend_from_slice(m.as_bytes());
        bytes.push(b';');
    }
    CanonicalForm { bytes, exact: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{rooted_ball, TimeMarkedUnionGraph};

    fn graph(n: u32, edges: &[(u32, u32)]) -> TimeMarkedUnionGraph {
        TimeMarkedUnionGraph::from_edges(n, 1.0, edges.iter().map(|&(u, v)| (u, v, MarkSeq::always_on(1.0))))
    }

    #[test]
    fn relabeling_is_label_invariant_for_trees() {
        let a = graph(5, &[(0, 1), (0, 2), (2, 3), (2, 4)]);
        let b = graph(5, &[(4, 3), (4, 0), (0, 1), (0, 2)]);
        let ba = rooted_ball(&a, 0, 3, false).unwrap();
        let bb = rooted_ball(&b, 4, 3, false).unwrap();
        assert_eq!(canonical_form(&ba, None), canonical_form(&bb, None));
        let c = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_ne!(canonical_form(&ba, None), canonical_form(&rooted_ball(&c, 0, 3, false).unwrap(), None));
    }

    #[test]
    fn marks_enter_quantized() {
        let mk = |on: f64| {
            TimeMarkedUnionGraph::from_edges(2, 1.0, [(0, 1, MarkSeq::new(vec![(on, 1.0)], 1.0).unwrap())])
        };
        let a = rooted_ball(&mk(0.11), 0, 1, true).unwrap();
        let b = rooted_ball(&mk(0.115), 0, 1, true).unwrap();
        let c = rooted_ball(&mk(0.5), 0, 1, true).unwrap();
        assert_eq!(canonical_form(&a, Some(1.0 / 64.0)), canonical_form(&b, Some(1.0 / 64.0)));
        assert_ne!(canonical_form(&a, Some(1.0 / 64.0)), canonical_form(&c, Some(1.0 / 64.0)));
        assert_eq!(canonical_form(&a, None), canonical_form(&c, None));
    }

    #[test]
    fn cycles_get_invariant_forms() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let b = rooted_ball(&tri, 0, 1, false).unwrap();
        let f = canonical_form(&b, None);
        assert!(!f.exact);
        let b2 = rooted_ball(&tri, 2, 1, false).unwrap();
        assert_eq!(f, canonical_form(&b2, None));
    }
}
