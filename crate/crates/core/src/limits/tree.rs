use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_distr::Distribution;

use super::{poisson, shifted_size_biased, LimitModel, OnOffMarkLaw, OriginalEdgeMarks};
use crate::epidemic::{EpidemicMarks, EpidemicParams};
use crate::error::{config, Error, Result};
use crate::graph::{DynamicGraph, MarkSeq, TimeMarkedUnionGraph};
use crate::rng::{exp_inv, stream, tag, StreamRng};

/// Hard ceiling on materialized vertices per tree.
pub const MAX_TREE_VERTICES: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LimitVertex {
    pub generation: u32,
    pub parent: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitEdge {
    pub a: u32,
    pub b: u32,
    pub marks: MarkSeq,
    /// Transmission time when epidemic marks were sampled with the tree.
    pub transmission: Option<f64>,
}

/// A group (right vertex) of the random intersection limit: `attach` is the
/// member through which it hangs off the tree.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitGroup {
    pub attach: u32,
    pub members: Vec<u32>,
    pub on: f64,
    pub off: f64,
}

/// A sampled limit object. Vertex 0 is the root and every vertex's parent has
/// a smaller id. For the intersection limit, `edges` is the community
/// projection of `groups`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitTree {
    pub model: &'static str,
    pub depth: u32,
    pub horizon: f64,
    pub vertices: Vec<LimitVertex>,
    pub edges: Vec<LimitEdge>,
    pub groups: Vec<LimitGroup>,
    pub recovery: Option<Vec<f64>>,
    pub initially_infected: Option<Vec<bool>>,
}

impl LimitTree {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn root_degree(&self) -> usize {
        self.edges.iter().filter(|e| e.a == 0 || e.b == 0).count()
    }

    /// Number of vertices per generation.
    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.depth as usize + 1];
        for v in &self.vertices {
            sizes[v.generation as usize] += 1;
        }
        sizes
    }

    pub fn union_graph(&self) -> TimeMarkedUnionGraph {
        TimeMarkedUnionGraph::from_edges(
            self.vertices.len() as u32,
            self.horizon,
            self.edges.iter().map(|e| (e.a, e.b, e.marks.clone())),
        )
    }

    /// Union graph together with the epidemic marks sampled alongside the tree.
    pub fn union_graph_with_marks(&self) -> Result<(TimeMarkedUnionGraph, EpidemicMarks)> {
        let (Some(recovery), Some(infected)) = (&self.recovery, &self.initially_infected) else {
            return Err(config("limit tree was sampled without epidemic marks"));
        };
        let u = self.union_graph();
        let mut transmission = vec![0.0; self.edges.len()];
        for e in &self.edges {
            let id = u.edge_id(e.a, e.b).expect("edge present");
            transmission[id as usize] = e.transmission.expect("epidemic marks sampled");
        }
        let m = EpidemicMarks { recovery: recovery.clone(), initially_infected: infected.clone(), transmission };
        Ok((u, m))
    }

    /// Every edge ON on all of `[0, horizon]`.
    pub fn frozen(mut self, horizon: f64) -> LimitTree {
        self.horizon = horizon;
        for e in &mut self.edges {
            e.marks = MarkSeq::always_on(horizon);
        }
        for g in &mut self.groups {
            (g.on, g.off) = (0.0, horizon);
        }
        self
    }

    pub fn to_dynamic(&self) -> DynamicGraph {
        self.union_graph().to_dynamic()
    }

    /// Graph text format with a `limit-kind` header comment.
    pub fn encode(&self) -> String {
        crate::io::encode_graph(
            &self.to_dynamic(),
            &[format!("limit-kind: {}", self.model), format!("depth: {}", self.depth)],
        )
    }
}

struct Pending {
    id: u32,
    rng: StreamRng,
    /// Base degree (configuration model) or weight (intersection graph).
    state: f64,
    /// Base offspring already drawn for configuration-model vertices.
    base_children: u64,
}

struct Builder<'a> {
    epi: Option<&'a EpidemicParams>,
    prune: bool,
    law: OnOffMarkLaw,
    depth: u32,
    tree: LimitTree,
    recovery: Vec<f64>,
    infected: Vec<bool>,
    queue: VecDeque<Pending>,
}

struct Drawn {
    recovery: f64,
    infected: bool,
}

impl Builder<'_> {
    fn draw_vertex(&self, rng: &mut StreamRng) -> Drawn {
        match self.epi {
            Some(e) => Drawn { infected: rng.random::<f64>() < e.rho, recovery: e.d_r.sample(rng) },
            None => Drawn { recovery: f64::INFINITY, infected: false },
        }
    }

    fn draw_transmission(&self, rng: &mut StreamRng) -> Option<f64> {
        self.epi.map(|e| e.d_i.sample(rng))
    }

    fn add_vertex(&mut self, parent: Option<u32>, d: &Drawn) -> Result<u32> {
        let id = self.tree.vertices.len();
        if id >= MAX_TREE_VERTICES {
            return Err(Error::ResourceLimit { what: "limit tree vertices".into(), limit: MAX_TREE_VERTICES as u64 });
        }
        let generation = parent.map_or(0, |p| self.tree.vertices[p as usize].generation + 1);
        self.tree.vertices.push(LimitVertex { generation, parent });
        self.recovery.push(d.recovery);
        self.infected.push(d.infected);
        Ok(id as u32)
    }

    fn add_edge(&mut self, a: u32, b: u32, on: f64, off: f64, transmission: Option<f64>) {
        self.tree.edges.push(LimitEdge { a, b, marks: MarkSeq::single(on, off), transmission });
    }

    /// Whether a freshly drawn vertex should be expanded further.
    fn expands(&self, id: u32) -> bool {
        self.tree.vertices[id as usize].generation < self.depth && !(self.prune && self.infected[id as usize])
    }

    /// A vertex hanging off its parent by a single edge is useless when it
    /// cannot transmit over that edge.
    fn prunes_edge(&self, d: &Drawn, transmission: Option<f64>) -> bool {
        self.prune && transmission.is_some_and(|c| c >= d.recovery)
    }

    fn push(&mut self, id: u32, rng: StreamRng, state: f64, base_children: u64) {
        if self.expands(id) {
            self.queue.push_back(Pending { id, rng, state, base_children });
        }
    }
}

/// Samples a limit object to `depth` generations.
///
/// Every vertex and group draws from its own generator seeded by its parent,
/// so a subtree's randomness does not depend on what is sampled elsewhere.
/// With epidemic parameters, recovery times, initial statuses and transmission
/// times are drawn along with the structure. With `prune`, parts of the tree
/// that cannot influence the root's infection time are not generated: a
/// vertex whose only link toward the root cannot carry a transmission, and
/// the descendants of initially infected vertices. The root's infection time
/// is the same with and without pruning.
pub fn materialize(model: &LimitModel, epi: Option<&EpidemicParams>, depth: u32, seed: u64, prune: bool) -> Result<LimitTree> {
    model.validate()?;
    if let Some(e) = epi {
        e.validate()?;
    }
    let horizon = model.horizon();
    let mut b = Builder {
        epi,
        prune: prune && epi.is_some(),
        law: OnOffMarkLaw::new(horizon)?,
        depth,
        tree: LimitTree {
            model: model.name(),
            depth,
            horizon,
            vertices: Vec::new(),
            edges: Vec::new(),
            groups: Vec::new(),
            recovery: None,
            initially_infected: None,
        },
        recovery: Vec::new(),
        infected: Vec::new(),
        queue: VecDeque::new(),
    };
    let mut rng = stream(seed, tag::LIMIT, 1);
    let root = b.draw_vertex(&mut rng);
    b.add_vertex(None, &root)?;
    match model {
        LimitModel::Der { gamma, .. } => {
            b.push(0, rng, 0.0, 0);
            grow_der(&mut b, gamma * (1.0 + horizon))?;
        }
        LimitModel::Cm { q_k, alpha, original_edges, .. } => {
            let q = WeightedIndex::new(q_k).map_err(|e| config(e.to_string()))?;
            let k = q.sample(&mut rng) as u64;
            b.push(0, rng, k as f64, k);
            grow_cm(&mut b, q_k, *alpha, *original_edges)?;
        }
        LimitModel::Rig { weights, group_size_pmf, .. } => {
            let w = weights.sample(&mut rng);
            b.push(0, rng, w, 0);
            grow_rig(&mut b, weights, &group_size_pmf.shifted_size_biased(), group_size_pmf.mean())?;
        }
    }
    let mut tree = b.tree;
    if epi.is_some() {
        tree.recovery = Some(b.recovery);
        tree.initially_infected = Some(b.infected);
    }
    Ok(tree)
}

fn grow_der(b: &mut Builder, mean: f64) -> Result<()> {
    while let Some(mut p) = b.queue.pop_front() {
        let k = poisson(&mut p.rng, mean);
        for _ in 0..k {
            let mut rng = StreamRng::seed_from_u64(p.rng.random());
            let d = b.draw_vertex(&mut rng);
            let c = b.draw_transmission(&mut rng);
            let (on, off) = b.law.sample(&mut rng);
            if b.prunes_edge(&d, c) {
                continue;
            }
            let id = b.add_vertex(Some(p.id), &d)?;
            b.add_edge(p.id, id, on, off, c);
            b.push(id, rng, 0.0, 0);
        }
    }
    Ok(())
}

fn grow_cm(b: &mut Builder, q_k: &[f64], alpha: f64, original: OriginalEdgeMarks) -> Result<()> {
    let q_tilde = shifted_size_biased(q_k);
    // a vertex with no further base edges still needs a valid sampler
    let q_tilde = if q_tilde.iter().all(|&x| x == 0.0) { vec![1.0] } else { q_tilde };
    let base = WeightedIndex::new(&q_tilde).map_err(|e| config(e.to_string()))?;
    let horizon = b.law.horizon();
    let death_rate = 4.0 * alpha / 3.0;
    while let Some(mut p) = b.queue.pop_front() {
        let degree = p.state;
        let extra = poisson(&mut p.rng, death_rate * degree * horizon);
        let births: Vec<Option<f64>> = (0..p.base_children)
            .map(|_| None)
            .chain((0..extra).map(|_| Some(horizon * (1.0 - p.rng.random::<f64>()))))
            .collect();
        for born in births {
            let mut rng = StreamRng::seed_from_u64(p.rng.random());
            let d = b.draw_vertex(&mut rng);
            let c = b.draw_transmission(&mut rng);
            let start = born.unwrap_or(0.0);
            let end = match original {
                OriginalEdgeMarks::Persistent => horizon,
                OriginalEdgeMarks::Exponential if death_rate > 0.0 => (start + exp_inv(&mut rng, death_rate)).min(horizon),
                OriginalEdgeMarks::Exponential => horizon,
            };
            if b.prunes_edge(&d, c) {
                continue;
            }
            let id = b.add_vertex(Some(p.id), &d)?;
            b.add_edge(p.id, id, start, end, c);
            let j = base.sample(&mut rng) as u64;
            b.push(id, rng, (j + 1) as f64, j);
        }
    }
    Ok(())
}

fn grow_rig(b: &mut Builder, weights: &crate::generators::WeightLaw, others_pmf: &[f64], zeta: f64) -> Result<()> {
    let others = WeightedIndex::new(others_pmf).map_err(|e| config(e.to_string()))?;
    let horizon = b.law.horizon();
    while let Some(mut p) = b.queue.pop_front() {
        let x = p.id;
        let groups = poisson(&mut p.rng, p.state * zeta * (1.0 + horizon));
        for _ in 0..groups {
            let mut grng = StreamRng::seed_from_u64(p.rng.random());
            let m = others.sample(&mut grng);
            let (on, off) = b.law.sample(&mut grng);
            // clique on [x, members...]: c[i][j] for i > j, slot 0 is x
            let mut members: Vec<(Drawn, StreamRng, f64)> = Vec::with_capacity(m);
            for _ in 0..m {
                let mut rng = StreamRng::seed_from_u64(grng.random());
                let d = b.draw_vertex(&mut rng);
                let w = weights.sample_size_biased(&mut rng);
                members.push((d, rng, w));
            }
            let c: Vec<Vec<Option<f64>>> =
                (0..=m).map(|i| (0..i).map(|_| b.draw_transmission(&mut grng)).collect()).collect();
            let keep = reaching_members(b.prune, &members, &c);
            if keep.is_empty() {
                continue;
            }
            let mut ids = Vec::with_capacity(keep.len());
            for &i in &keep {
                ids.push(b.add_vertex(Some(x), &members[i].0)?);
            }
            for (a, &i) in keep.iter().enumerate() {
                b.add_edge(x, ids[a], on, off, c[i + 1][0]);
                for (bb, &j) in keep.iter().enumerate().take(a) {
                    b.add_edge(ids[bb], ids[a], on, off, c[i + 1][j + 1]);
                }
            }
            b.tree.groups.push(LimitGroup { attach: x, members: ids.clone(), on, off });
            let mut members = members.into_iter().map(Some).collect::<Vec<_>>();
            for (a, &i) in keep.iter().enumerate() {
                let (_, rng, w) = members[i].take().unwrap();
                b.push(ids[a], rng, w, 0);
            }
        }
    }
    Ok(())
}

/// Members (indices) that can pass an infection to the attaching vertex
/// through the group's clique, via members that are not initially infected.
fn reaching_members(prune: bool, members: &[(Drawn, StreamRng, f64)], c: &[Vec<Option<f64>>]) -> Vec<usize> {
    let m = members.len();
    if !prune {
        return (0..m).collect();
    }
    let cost = |i: usize, j: usize| if i > j { c[i][j] } else { c[j][i] };
    let mut reach = vec![false; m];
    loop {
        let mut changed = false;
        for i in 0..m {
            if reach[i] {
                continue;
            }
            let r = members[i].0.recovery;
            let direct = cost(i + 1, 0).is_some_and(|t| t < r);
            let relay = (0..m).any(|j| reach[j] && !members[j].0.infected && cost(i + 1, j + 1).is_some_and(|t| t < r));
            if direct || relay {
                reach[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..m).filter(|&i| reach[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::{Backward, DistSpec, DEFAULT_PATH_CAP};
    use crate::generators::{GroupSizePmf, WeightLaw};

    fn epi(rho: f64) -> EpidemicParams {
        EpidemicParams { rho, d_i: DistSpec::Exp { rate: 2.0 }, d_r: DistSpec::Exp { rate: 3.0 } }
    }

    fn root_time(t: &LimitTree, radius: u32) -> f64 {
        let (u, m) = t.union_graph_with_marks().unwrap();
        Backward::new(&u, &m, Some(radius), DEFAULT_PATH_CAP).unwrap().infection_time(0).unwrap()
    }

    fn models() -> Vec<LimitModel> {
        vec![
            LimitModel::Der { gamma: 2.0, horizon: 1.5 },
            LimitModel::Cm { q_k: vec![0.0, 0.3, 0.4, 0.3], alpha: 0.5, horizon: 1.0, original_edges: OriginalEdgeMarks::Exponential },
            LimitModel::Rig {
                weights: WeightLaw::Gamma { shape: 2.0, scale: 0.5 },
                group_size_pmf: GroupSizePmf(vec![0.0, 0.0, 0.5, 0.3, 0.2]),
                horizon: 1.0,
            },
        ]
    }

    #[test]
    fn pruning_preserves_root_time() {
        for model in models() {
            let mut pruned_smaller = 0;
            for seed in 0..60 {
                let full = materialize(&model, Some(&epi(0.3)), 4, seed, false).unwrap();
                let pruned = materialize(&model, Some(&epi(0.3)), 4, seed, true).unwrap();
                assert!(pruned.vertex_count() <= full.vertex_count());
                pruned_smaller += (pruned.vertex_count() < full.vertex_count()) as usize;
                for r in [1, 2, 4] {
                    assert_eq!(root_time(&full, r), root_time(&pruned, r), "{} seed {seed} r {r}", model.name());
                }
            }
            assert!(pruned_smaller > 10, "{}", model.name());
        }
    }

    #[test]
    fn structure_invariants() {
        for model in models() {
            for seed in 0..20 {
                let t = materialize(&model, None, 3, seed, false).unwrap();
                for (i, v) in t.vertices.iter().enumerate().skip(1) {
                    let p = v.parent.unwrap() as usize;
                    assert!(p < i);
                    assert_eq!(t.vertices[p].generation + 1, v.generation);
                    assert!(v.generation <= 3);
                }
                for e in &t.edges {
                    let &(on, off) = &e.marks.intervals()[0];
                    assert!(0.0 <= on && on <= off && off <= t.horizon);
                }
                if model.name() != "rig" {
                    assert_eq!(t.edges.len(), t.vertex_count() - 1);
                }
                for g in &t.groups {
                    // each group projects to a clique with one shared mark
                    let mut clique = g.members.clone();
                    clique.push(g.attach);
                    for (i, &a) in clique.iter().enumerate() {
                        for &bb in &clique[..i] {
                            let e = t.edges.iter().find(|e| (e.a, e.b) == (a.min(bb), a.max(bb)) || (e.a, e.b) == (a.max(bb), a.min(bb))).unwrap();
                            assert_eq!(e.marks.intervals(), &[(g.on, g.off)]);
                        }
                    }
                }
                let u = t.union_graph();
                assert_eq!(u.bfs_distances(0, u32::MAX).iter().filter(|&&d| d == u32::MAX).count(), 0);
            }
        }
    }

    #[test]
    fn depth_zero_is_root_only() {
        for model in models() {
            let t = materialize(&model, None, 0, 1, false).unwrap();
            assert_eq!(t.vertex_count(), 1);
            assert!(t.edges.is_empty());
        }
    }

    #[test]
    fn encode_has_kind_header() {
        let t = materialize(&models()[0], None, 2, 3, false).unwrap();
        let text = t.encode();
        assert!(text.starts_with("# limit-kind: der\n"));
        assert_eq!(crate::io::decode_graph(&text).unwrap(), t.to_dynamic());
    }
}
