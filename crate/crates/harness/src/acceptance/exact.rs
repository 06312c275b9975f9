//! Exact criteria: oracle equivalence of the backward process, static
//! forward/backward identity, and metric and isomorphism properties.

use anyhow::Result;
use dynepi_core::epidemic::{
    backward_infection_time, backward_infection_times, exhaustive_infection_time, forward_infection_times,
    sample_marks, DistSpec, EpidemicMarks, DEFAULT_PATH_CAP,
};
use dynepi_core::graph::{rooted_ball, MarkSeq, RootedBall, TimeMarkedUnionGraph};
use dynepi_core::metrics::{dist_rooted, mark_seq_distance, rooted_isomorphic, Rooted, R_MAX};
use dynepi_core::rng::{stream, tag, StreamRng};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::Outcome;

const ORACLE_HORIZON: f64 = 4.0;

/// Times land on a quarter grid for half of the instances, so that ties
/// (clock hitting an ON or OFF time exactly, C equal to R) occur.
fn time(rng: &mut StreamRng, high: f64, snap: bool) -> f64 {
    let t = rng.random::<f64>() * high;
    if snap {
        (t * 4.0).round() / 4.0
    } else {
        t
    }
}

/// Random instance for the path oracle: up to 7 vertices, each pair an
/// edge with probability 1/2 carrying one to three ON intervals in `[0, 4]`,
/// transmission times in `[0, 2)`, recovery times in `[0, 3)`, and each
/// vertex initially infected with probability 0.3.
pub fn random_oracle_instance(seed: u64) -> (TimeMarkedUnionGraph, EpidemicMarks) {
    let mut rng = stream(seed, tag::RUN_GRAPH, 0);
    let n = rng.random_range(2..=7u32);
    let snap = rng.random::<bool>();
    let mut edges = Vec::new();
    let mut transmission_by_pair = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<bool>() {
                let k = rng.random_range(1..=3);
                let mut pts: Vec<f64> = (0..2 * k).map(|_| time(&mut rng, ORACLE_HORIZON, snap)).collect();
                pts.sort_by(f64::total_cmp);
                let marks = MarkSeq::union_of(pts.chunks(2).map(|c| (c[0], c[1])).collect()).expect("non-empty");
                edges.push((u, v, marks));
                transmission_by_pair.push(((u, v), time(&mut rng, 2.0, snap)));
            }
        }
    }
    let u = TimeMarkedUnionGraph::from_edges(n, ORACLE_HORIZON, edges);
    let mut transmission = vec![0.0; u.edges().len()];
    for ((a, b), c) in transmission_by_pair {
        transmission[u.edge_id(a, b).expect("inserted") as usize] = c;
    }
    let recovery = (0..n).map(|_| time(&mut rng, 3.0, snap)).collect();
    let initially_infected = (0..n).map(|_| rng.random_bool(0.3)).collect();
    (u, EpidemicMarks { recovery, initially_infected, transmission })
}

const C8_INSTANCES: u64 = 500;

pub fn backward_oracle() -> Result<Outcome> {
    let results: Vec<(u64, u64)> = (0..C8_INSTANCES)
        .into_par_iter()
        .map(|k| {
            let (u, m) = random_oracle_instance(0xC8_0000 + k);
            let radius = stream(k, tag::RUN_EPIDEMIC, 0).random_range(1..=5u32);
            let (mut checks, mut bad) = (0, 0);
            for v in 0..u.n() {
                for r in [None, Some(radius)] {
                    let fast = backward_infection_time(&u, &m, v, r)?;
                    let slow = exhaustive_infection_time(&u, &m, v, r)?;
                    checks += 1;
                    bad += (fast.to_bits() != slow.to_bits()) as u64;
                }
            }
            Ok((checks, bad))
        })
        .collect::<Result<_>>()?;
    let checks: u64 = results.iter().map(|r| r.0).sum();
    let bad: u64 = results.iter().map(|r| r.1).sum();
    Ok(Outcome::new(bad == 0, format!("{bad} mismatches in {checks} vertex checks over {C8_INSTANCES} instances")))
}

const C9_SEEDS: u64 = 100;

pub fn static_identity() -> Result<Outcome> {
    let d_i = DistSpec::Exp { rate: 2.0 };
    let d_r = DistSpec::Exp { rate: 1.0 };
    let mut bad = 0;
    let mut vertices = 0;
    for seed in 0..C9_SEEDS {
        let n = 5 + (seed % 46) as u32;
        let mut rng = stream(0xC9, tag::RUN_GRAPH, seed);
        let p = 3.0 / n as f64;
        let edges: Vec<(u32, u32, MarkSeq)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|_| rng.random::<f64>() < p)
            .map(|(u, v)| (u, v, MarkSeq::always_on(5.0)))
            .collect();
        let u = TimeMarkedUnionGraph::from_edges(n, 5.0, edges);
        let m = sample_marks(&u, 0.15, &d_i, &d_r, seed)?;
        let fwd = forward_infection_times(&u, &m)?;
        let bwd = backward_infection_times(&u, &m, None, DEFAULT_PATH_CAP)?;
        vertices += n as usize;
        bad += fwd.iter().zip(&bwd).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    }
    Ok(Outcome::new(bad == 0, format!("{bad} differing vertices out of {vertices} over {C9_SEEDS} graphs")))
}

const C10_TRIPLES: usize = 10_000;
/// Float rounding allowance in the triangle inequality for `d_Ξ`.
const C10_SLACK: f64 = 1e-12;
const C10_EXHAUSTIVE_MAX_N: u32 = 6;
const C10_RANDOM_PAIRS: usize = 10_000;

pub fn metric_properties() -> Result<Outcome> {
    let ultra = ultrametric_violations()?;
    let marks = mark_metric_violations();
    let (exhaustive_checks, exhaustive_bad) = isomorphism_exhaustive()?;
    let (random_bad, random_iso) = isomorphism_random()?;
    let pass = ultra == 0 && marks == 0 && exhaustive_bad == 0 && random_bad == 0;
    Ok(Outcome::new(
        pass,
        format!(
            "ultrametric violations {ultra}/{C10_TRIPLES}; mark-metric violations {marks}/{C10_TRIPLES}; \
             isomorphism mismatches {exhaustive_bad}/{exhaustive_checks} exhaustive (n <= {C10_EXHAUSTIVE_MAX_N}) \
             and {random_bad}/{C10_RANDOM_PAIRS} random (n = 7, 8; {random_iso} isomorphic)"
        ),
    ))
}

fn toggle_edges(rng: &mut StreamRng, n: u32, edges: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut out = edges.to_vec();
    for _ in 0..rng.random_range(1..=2) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        match out.iter().position(|&x| x == e) {
            Some(i) => {
                out.swap_remove(i);
            }
            None => out.push(e),
        }
    }
    out
}

fn static_graph(n: u32, edges: &[(u32, u32)]) -> TimeMarkedUnionGraph {
    TimeMarkedUnionGraph::from_edges(n, 1.0, edges.iter().map(|&(u, v)| (u, v, MarkSeq::always_on(1.0))))
}

/// `d(a,c) <= max(d(a,b), d(b,c))` on triples related by a few edge toggles.
fn ultrametric_violations() -> Result<usize> {
    let bad: Vec<usize> = (0..C10_TRIPLES as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(0xC10A, tag::RUN_GRAPH, k);
            let n = rng.random_range(4..=20u32);
            let p = 2.5 / n as f64;
            let a: Vec<(u32, u32)> =
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|_| rng.random::<f64>() < p).collect();
            let b = toggle_edges(&mut rng, n, &a);
            let c = toggle_edges(&mut rng, n, &b);
            let gs = [static_graph(n, &a), static_graph(n, &b), static_graph(n, &c)];
            let r = |x: usize| Rooted::new(&gs[x], 0);
            let d = |x: usize, y: usize| dist_rooted(&r(x), &r(y), R_MAX);
            let (ab, bc, ac, ba) = (d(0, 1)?, d(1, 2)?, d(0, 2)?, d(1, 0)?);
            Ok((ac > ab.max(bc) || ab != ba || d(0, 0)? != 0.0) as usize)
        })
        .collect::<Result<_>>()?;
    Ok(bad.iter().sum())
}

fn random_marks(rng: &mut StreamRng) -> MarkSeq {
    let snap = rng.random::<bool>();
    let k = rng.random_range(1..=3);
    let mut pts: Vec<f64> = (0..2 * k)
        .map(|_| {
            let t: f64 = rng.random();
            if snap {
                (t * 8.0).round() / 8.0
            } else {
                t
            }
        })
        .collect();
    pts.sort_by(f64::total_cmp);
    MarkSeq::union_of(pts.chunks(2).map(|c| (c[0], c[1])).collect()).expect("non-empty")
}

/// Identity, symmetry and the triangle inequality for `d_Ξ` on marks in
/// `[0, 1]`, the range on which it is a metric.
fn mark_metric_violations() -> usize {
    let mut rng = stream(0xC10B, tag::LIMIT, 0);
    let mut bad = 0;
    for _ in 0..C10_TRIPLES {
        let (x, y, z) = (random_marks(&mut rng), random_marks(&mut rng), random_marks(&mut rng));
        let (xy, yz, xz) = (mark_seq_distance(&x, &y), mark_seq_distance(&y, &z), mark_seq_distance(&x, &z));
        let ok = mark_seq_distance(&x, &x) == 0.0
            && xy == mark_seq_distance(&y, &x)
            && (xy == 0.0) == (x == y)
            && xz <= xy + yz + C10_SLACK;
        bad += !ok as usize;
    }
    bad
}

/// Edge bitmask of a graph on at most 8 vertices: bit `8u + v` for `u < v`.
fn mask_of(edges: &[(u32, u32)]) -> u64 {
    edges.iter().fold(0, |m, &(u, v)| m | 1 << (8 * u.min(v) + u.max(v)))
}

fn edges_of(mask: u64, n: u32) -> Vec<(u32, u32)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|&(u, v)| mask >> (8 * u + v) & 1 == 1).collect()
}

fn permuted(mask: u64, n: u32, p: &[u32]) -> u64 {
    edges_of(mask, n).iter().fold(0, |m, &(u, v)| {
        let (a, b) = (p[u as usize], p[v as usize]);
        m | 1 << (8 * a.min(b) + a.max(b))
    })
}

/// Calls `f` on every permutation of `0..n` that fixes vertex 0, stopping
/// early when `f` returns true.
fn for_root_fixing_perms(n: u32, mut f: impl FnMut(&[u32]) -> bool) -> bool {
    let mut p: Vec<u32> = (0..n).collect();
    let k = p.len().saturating_sub(1);
    // Heap's algorithm on positions 1..n
    let mut c = vec![0usize; k];
    if f(&p) {
        return true;
    }
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(1, 1 + i);
            } else {
                p.swap(1 + c[i], 1 + i);
            }
            if f(&p) {
                return true;
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    false
}

/// Whether some relabeling fixing vertex 0 maps edge set `a` onto `b`
/// (graphs on `n <= 8` vertices).
pub fn brute_force_rooted_isomorphic(n: u32, a: &[(u32, u32)], b: &[(u32, u32)]) -> bool {
    let (ma, mb) = (mask_of(a), mask_of(b));
    ma.count_ones() == mb.count_ones() && for_root_fixing_perms(n, |p| permuted(ma, n, p) == mb)
}

fn connected(n: u32, mask: u64) -> bool {
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let mut next = 0;
        for u in 0..n {
            if frontier >> u & 1 == 1 {
                for v in 0..n {
                    let (a, b) = (u.min(v), u.max(v));
                    if a != b && mask >> (8 * a + b) & 1 == 1 {
                        next |= 1 << v;
                    }
                }
            }
        }
        frontier = next & !seen;
        seen |= next;
    }
    seen == (1 << n) - 1
}

fn ball_of(n: u32, mask: u64) -> Result<RootedBall> {
    Ok(rooted_ball(&static_graph(n, &edges_of(mask, n)), 0, n, false)?)
}

/// Every connected graph on `n <= 6` labelled vertices, rooted at 0, is
/// checked against the representative of its own class (must be isomorphic)
/// and against every other class with the same edge count and degree
/// multiset (must not be).
fn isomorphism_exhaustive() -> Result<(u64, u64)> {
    let (mut checks, mut bad) = (0u64, 0u64);
    for n in 1..=C10_EXHAUSTIVE_MAX_N {
        let pairs: Vec<(u32, u32)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let graphs: Vec<u64> = (0u64..1 << pairs.len())
            .map(|bits| (0..pairs.len()).filter(|&i| bits >> i & 1 == 1).fold(0u64, |m, i| m | 1 << (8 * pairs[i].0 + pairs[i].1)))
            .filter(|&m| connected(n, m))
            .collect();
        // brute-force class key: smallest image over root-fixing relabelings
        let keys: Vec<u64> = graphs
            .par_iter()
            .map(|&m| {
                let mut best = u64::MAX;
                for_root_fixing_perms(n, |p| {
                    best = best.min(permuted(m, n, p));
                    false
                });
                best
            })
            .collect();
        let mut reps: Vec<u64> = keys.clone();
        reps.sort_unstable();
        reps.dedup();
        let invariant = |m: u64| {
            let mut deg: Vec<u32> = (0..n).map(|v| edges_of(m, n).iter().filter(|e| e.0 == v || e.1 == v).count() as u32).collect();
            let root = deg[0];
            deg.sort_unstable();
            (m.count_ones(), root, deg)
        };
        let rep_balls: Vec<(u64, RootedBall, (u32, u32, Vec<u32>))> =
            reps.iter().map(|&r| Ok((r, ball_of(n, r)?, invariant(r)))).collect::<Result<_>>()?;
        let counts: Vec<(u64, u64)> = graphs
            .par_iter()
            .zip(&keys)
            .map(|(&m, &key)| {
                let ball = ball_of(n, m)?;
                let inv = invariant(m);
                let (mut c, mut b) = (0, 0);
                for (r, rb, rinv) in &rep_balls {
                    if *r != key && *rinv != inv {
                        continue;
                    }
                    c += 1;
                    b += (rooted_isomorphic(&ball, rb)? != (*r == key)) as u64;
                }
                Ok((c, b))
            })
            .collect::<Result<_>>()?;
        checks += counts.iter().map(|x| x.0).sum::<u64>();
        bad += counts.iter().map(|x| x.1).sum::<u64>();
    }
    Ok((checks, bad))
}

/// Random connected graph on `n` vertices: a random spanning tree plus
/// extra edges.
fn random_connected(rng: &mut StreamRng, n: u32) -> Vec<(u32, u32)> {
    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(u32, u32)> = (1..n as usize)
        .map(|i| {
            let (a, b) = (order[i], order[rng.random_range(0..i)]);
            (a.min(b), a.max(b))
        })
        .collect();
    let extra = rng.random_range(0..=n);
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let e = (a.min(b), a.max(b));
        if a != b && !edges.contains(&e) {
            edges.push(e);
        }
    }
    edges
}

/// Degree-preserving double edge swap, if one applies.
fn swap_edges(rng: &mut StreamRng, edges: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut out = edges.to_vec();
    for _ in 0..20 {
        let (i, j) = (rng.random_range(0..out.len()), rng.random_range(0..out.len()));
        let ((a, b), (c, d)) = (out[i], out[j]);
        let (e1, e2) = ((a.min(d), a.max(d)), (c.min(b), c.max(b)));
        if i == j || a == d || c == b || out.contains(&e1) || out.contains(&e2) {
            continue;
        }
        out[i] = e1;
        out[j] = e2;
        break;
    }
    out
}

/// Pairs on 7 and 8 vertices: a random graph against a root-fixing
/// relabeling of itself or of a degree-preserving swap of itself.
fn isomorphism_random() -> Result<(u64, u64)> {
    let results: Vec<(bool, bool)> = (0..C10_RANDOM_PAIRS as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(0xC10C, tag::RUN_GRAPH, k);
            let n = rng.random_range(7..=8u32);
            let a = random_connected(&mut rng, n);
            let swapped = swap_edges(&mut rng, &a);
            // balls only see the root's component, so keep b connected
            let b = if rng.random::<bool>() && connected(n, mask_of(&swapped)) { swapped } else { a.clone() };
            let mut p: Vec<u32> = (0..n).collect();
            p[1..].shuffle(&mut rng);
            let b = edges_of(permuted(mask_of(&b), n, &p), n);
            let truth = brute_force_rooted_isomorphic(n, &a, &b);
            let got = rooted_isomorphic(&ball_of(n, mask_of(&a))?, &ball_of(n, mask_of(&b))?)?;
            Ok((got != truth, truth))
        })
        .collect::<Result<_>>()?;
    Ok((results.iter().filter(|r| r.0).count() as u64, results.iter().filter(|r| r.1).count() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perms_fix_the_root() {
        let mut count = 0;
        for_root_fixing_perms(4, |p| {
            assert_eq!(p[0], 0);
            count += 1;
            false
        });
        assert_eq!(count, 6);
    }

    #[test]
    fn brute_force_examples() {
        let path = [(0, 1), (1, 2)];
        let star = [(1, 0), (0, 2)];
        assert!(!brute_force_rooted_isomorphic(3, &path, &star));
        assert!(brute_force_rooted_isomorphic(3, &path, &[(0, 2), (2, 1)]));
    }

    #[test]
    fn oracle_instances_are_small_and_consistent() {
        for k in 0..50 {
            let (u, m) = random_oracle_instance(k);
            assert!(u.n() <= 7);
            m.check_covers(&u).unwrap();
        }
    }
}
