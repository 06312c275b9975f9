//! Root-preserving isomorphism search between balls.

use std::collections::HashMap;

use super::canon::{canonical_form, is_tree, refine_colors};
use crate::error::{Error, Result};
use crate::graph::RootedBall;

/// Default vertex cap for isomorphism tests.
pub const ISO_VERTEX_CAP: usize = 10_000;
/// Default vertex cap when mark constraints are involved.
pub const MARKED_VERTEX_CAP: usize = 1_000;
const STEP_CAP: u64 = 50_000_000;

/// Extra constraints on a candidate isomorphism: which vertex pairs and which
/// edge pairs (by ball edge index) may correspond.
pub trait Compat {
    fn vertex_ok(&self, _a: u32, _b: u32) -> bool {
        true
    }
    fn edge_ok(&self, _ea: u32, _eb: u32) -> bool {
        true
    }
}

/// No constraints beyond structure.
pub struct Structural;
impl Compat for Structural {}

fn check_cap(ball: &RootedBall, cap: usize) -> Result<()> {
    if ball.vertices.len() > cap {
        Err(Error::ResourceLimit { what: format!("ball with {} vertices", ball.vertices.len()), limit: cap as u64 })
    } else {
        Ok(())
    }
}

/// Whether a root-preserving graph isomorphism exists.
pub fn rooted_isomorphic(a: &RootedBall, b: &RootedBall) -> Result<bool> {
    check_cap(a, ISO_VERTEX_CAP)?;
    check_cap(b, ISO_VERTEX_CAP)?;
    if a.vertices.len() != b.vertices.len() || a.edges.len() != b.edges.len() {
        return Ok(false);
    }
    let (fa, fb) = (canonical_form(a, None), canonical_form(b, None));
    if fa != fb {
        return Ok(false);
    }
    if fa.exact {
        return Ok(true);
    }
    isomorphic_with(a, b, &Structural, ISO_VERTEX_CAP)
}

/// Isomorphism search under `compat`. Trees are matched level by level with
/// bipartite matching of children; other balls by backtracking over
/// color-compatible candidates.
pub fn isomorphic_with(a: &RootedBall, b: &RootedBall, compat: &dyn Compat, cap: usize) -> Result<bool> {
    check_cap(a, cap)?;
    check_cap(b, cap)?;
    if a.vertices.len() != b.vertices.len() || a.edges.len() != b.edges.len() {
        return Ok(false);
    }
    let (adj_a, adj_b) = (a.adjacency(), b.adjacency());
    let (ca, ra) = refine_colors(a, &adj_a);
    let (cb, rb) = refine_colors(b, &adj_b);
    if ra != rb {
        return Ok(false);
    }
    let (mut sa, mut sb) = (ca.clone(), cb.clone());
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb {
        return Ok(false);
    }
    let s = Search { a, b, adj_a: &adj_a, adj_b: &adj_b, ca: &ca, cb: &cb, compat };
    if is_tree(a) {
        let mut memo = HashMap::new();
        return Ok(s.tree_match(0, 0, None, None, &mut memo));
    }
    s.backtrack()
}

struct Search<'a> {
    a: &'a RootedBall,
    b: &'a RootedBall,
    adj_a: &'a [Vec<(u32, u32)>],
    adj_b: &'a [Vec<(u32, u32)>],
    ca: &'a [u64],
    cb: &'a [u64],
    compat: &'a dyn Compat,
}

impl Search<'_> {
    fn children<'b>(&self, adj: &'b [Vec<(u32, u32)>], ball: &RootedBall, v: u32) -> Vec<(u32, u32)> {
        let d = ball.vertices[v as usize].dist;
        adj[v as usize].iter().copied().filter(|&(w, _)| ball.vertices[w as usize].dist == d + 1).collect()
    }

    /// Whether subtree `x` of a maps onto subtree `y` of b, given the edges
    /// that attach them to their parents.
    fn tree_match(&self, x: u32, y: u32, ex: Option<u32>, ey: Option<u32>, memo: &mut HashMap<(u32, u32), bool>) -> bool {
        if self.ca[x as usize] != self.cb[y as usize] || !self.compat.vertex_ok(x, y) {
            return false;
        }
        if let (Some(ex), Some(ey)) = (ex, ey) {
            if !self.compat.edge_ok(ex, ey) {
                return false;
            }
        }
        if let Some(&r) = memo.get(&(x, y)) {
            return r;
        }
        let kx = self.children(self.adj_a, self.a, x);
        let ky = self.children(self.adj_b, self.b, y);
        let ok = kx.len() == ky.len() && {
            // compatibility matrix, then Kuhn's augmenting paths
            let m = kx.len();
            let mut edges: Vec<Vec<usize>> = vec![Vec::new(); m];
            for (i, &(cx, ecx)) in kx.iter().enumerate() {
                for (j, &(cy, ecy)) in ky.iter().enumerate() {
                    if self.tree_match(cx, cy, Some(ecx), Some(ecy), memo) {
                        edges[i].push(j);
                    }
                }
            }
            perfect_matching(&edges, m)
        };
        memo.insert((x, y), ok);
        ok
    }

    fn backtrack(&self) -> Result<bool> {
        let n = self.a.vertices.len();
        let mut edge_b: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.b.edges.len());
        for (k, e) in self.b.edges.iter().enumerate() {
            edge_b.insert((e.a.min(e.b), e.a.max(e.b)), k as u32);
        }
        // a's ids are sorted by distance, so earlier vertices are closer to the root
        let mut map = vec![u32::MAX; n];
        let mut inv = vec![u32::MAX; n];
        let mut steps = 0u64;
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        while let Some(&mut (x, ref mut next)) = stack.last_mut() {
            if map[x] != u32::MAX {
                inv[map[x] as usize] = u32::MAX;
                map[x] = u32::MAX;
            }
            let mut found = None;
            while *next < n {
                let y = *next;
                *next += 1;
                steps += 1;
                if steps > STEP_CAP {
                    return Err(Error::ResourceLimit { what: "isomorphism search steps".into(), limit: STEP_CAP });
                }
                if inv[y] == u32::MAX && self.fits(x, y, &map, &inv, &edge_b) {
                    found = Some(y);
                    break;
                }
            }
            match found {
                Some(y) => {
                    map[x] = y as u32;
                    inv[y] = x as u32;
                    if x + 1 == n {
                        return Ok(true);
                    }
                    stack.push((x + 1, 0));
                }
                None => {
                    stack.pop();
                }
            }
        }
        Ok(false)
    }

    fn fits(&self, x: usize, y: usize, map: &[u32], inv: &[u32], edge_b: &HashMap<(u32, u32), u32>) -> bool {
        if self.ca[x] != self.cb[y] || !self.compat.vertex_ok(x as u32, y as u32) {
            return false;
        }
        let mut mapped_x = 0;
        for &(w, ea) in &self.adj_a[x] {
            let fw = map[w as usize];
            if fw == u32::MAX {
                continue;
            }
            mapped_x += 1;
            match edge_b.get(&(fw.min(y as u32), fw.max(y as u32))) {
                Some(&eb) if self.compat.edge_ok(ea, eb) => {}
                _ => return false,
            }
        }
        // no edge of b between y and an image whose preimage is not adjacent to x
        let mapped_y = self.adj_b[y].iter().filter(|&&(w, _)| inv[w as usize] != u32::MAX).count();
        mapped_x == mapped_y
    }
}

fn perfect_matching(adj: &[Vec<usize>], m: usize) -> bool {
    let mut owner = vec![usize::MAX; m];
    fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [usize], seen: &mut [bool]) -> bool {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                if owner[j] == usize::MAX || augment(owner[j], adj, owner, seen) {
                    owner[j] = i;
                    return true;
                }
            }
        }
        false
    }
    (0..m).all(|i| augment(i, adj, &mut owner, &mut vec![false; m]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{rooted_ball, MarkSeq, TimeMarkedUnionGraph};

    fn graph(n: u32, edges: &[(u32, u32)]) -> TimeMarkedUnionGraph {
        TimeMarkedUnionGraph::from_edges(n, 1.0, edges.iter().map(|&(u, v)| (u, v, MarkSeq::always_on(1.0))))
    }

    fn ball(n: u32, edges: &[(u32, u32)], root: u32) -> RootedBall {
        rooted_ball(&graph(n, edges), root, n, false).unwrap()
    }

    #[test]
    fn star_vs_path() {
        let star = ball(4, &[(0, 1), (0, 2), (0, 3)], 0);
        let path = ball(4, &[(0, 1), (1, 2), (2, 3)], 0);
        assert!(!rooted_isomorphic(&star, &path).unwrap());
        assert!(rooted_isomorphic(&star, &star).unwrap());
    }

    #[test]
    fn root_matters() {
        let p = ball(3, &[(0, 1), (1, 2)], 0);
        let q = ball(3, &[(0, 1), (1, 2)], 1);
        assert!(!rooted_isomorphic(&p, &q).unwrap());
    }

    #[test]
    fn cyclic_balls() {
        // 6-cycle vs two triangles joined at the root: same degrees, different structure
        let c6 = ball(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)], 0);
        let c6b = ball(6, &[(3, 1), (1, 5), (5, 0), (0, 2), (2, 4), (4, 3)], 2);
        assert!(rooted_isomorphic(&c6, &c6b).unwrap());
        let bowtie = ball(5, &[(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)], 0);
        assert!(!rooted_isomorphic(&c6, &bowtie).unwrap());
    }

    #[test]
    fn regular_graphs_refinement_cannot_split() {
        // prism vs K_{3,3}: both 3-regular on 6 vertices; rooted balls differ
        let prism = ball(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)], 0);
        let k33 = ball(6, &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)], 0);
        assert!(!rooted_isomorphic(&prism, &k33).unwrap());
        assert!(rooted_isomorphic(&prism, &ball(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)], 4)).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        let n = 10_001u32;
        let edges: Vec<(u32, u32)> = (1..n).map(|v| (0, v)).collect();
        let b = ball(n, &edges, 0);
        assert!(matches!(rooted_isomorphic(&b, &b), Err(Error::ResourceLimit { .. })));
    }
}
