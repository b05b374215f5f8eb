//! In-memory brute-force references for small graphs.
//!
//! Everything here is quadratic-ish and memory-resident by design; the
//! external pipelines are tested against these functions.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graphio::{edges_from_text, nodes_from_text, EdgeRecord, LabelTable, NodeRecord, Partition};
use crate::iomodel::{Device, Seq};

/// Acyclic, memory-resident graph of at most [`SmallGraph::MAX_NODES`] nodes.
/// Labels are 64-bit so that block ids can serve as labels.
#[derive(Clone, Debug)]
pub struct SmallGraph {
    ids: Vec<u64>,
    labels: Vec<u64>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

impl SmallGraph {
    pub const MAX_NODES: usize = 100_000;

    /// `nodes` are `(id, label)`, `edges` are `(parent, child)`. Duplicate
    /// edges are collapsed; cycles are rejected.
    pub fn new<N, E>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = (u64, u64)>,
        E: IntoIterator<Item = (u64, u64)>,
    {
        let mut pairs: Vec<(u64, u64)> = nodes.into_iter().collect();
        if pairs.len() > Self::MAX_NODES {
            return Err(Error::Precondition(format!("oracle graphs hold at most {} nodes", Self::MAX_NODES)));
        }
        pairs.sort_unstable();
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!("duplicate node id {}", w[0].0)));
        }
        let (ids, labels): (Vec<u64>, Vec<u64>) = pairs.into_iter().unzip();
        let n = ids.len();
        let mut g = SmallGraph { ids, labels, children: vec![Vec::new(); n], parents: vec![Vec::new(); n] };
        for (p, c) in edges {
            let (pi, ci) = (g.require(p)?, g.require(c)?);
            g.children[pi].push(ci);
            g.parents[ci].push(pi);
        }
        for adj in g.children.iter_mut().chain(g.parents.iter_mut()) {
            adj.sort_unstable();
            adj.dedup();
        }
        g.topological_order()?;
        Ok(g)
    }

    pub fn from_files(nodes: &Seq<NodeRecord>, edges: &Seq<EdgeRecord>) -> Result<Self> {
        let nodes = nodes.to_vec()?;
        let edges = edges.to_vec()?;
        Self::new(nodes.iter().map(|n| (n.id, n.label as u64)), edges.iter().map(|e| (e.parent, e.child)))
    }

    /// Reads the whitespace text formats; labels are interned in order of
    /// appearance.
    pub fn from_text<R1: BufRead, R2: BufRead>(nodes: R1, edges: R2, device: &Device) -> Result<(Self, LabelTable)> {
        let mut labels = LabelTable::new();
        let n = nodes_from_text(nodes, Path::new("<nodes>"), &mut labels, device)?;
        let e = edges_from_text(edges, Path::new("<edges>"), device)?;
        Ok((Self::from_files(&n, &e)?, labels))
    }

    fn require(&self, id: u64) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::Validation(format!("edge endpoint {id} is not a node")))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Node ids in ascending order; node `i` of every accessor is `ids()[i]`.
    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn label(&self, i: usize) -> u64 {
        self.labels[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    /// `(parent, child)` in node ids, sorted by child then parent.
    pub fn edges(&self) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = (0..self.len())
            .flat_map(|c| self.parents[c].iter().map(move |&p| (p, c)))
            .map(|(p, c)| (self.ids[p], self.ids[c]))
            .collect();
        out.sort_unstable_by_key(|&(p, c)| (c, p));
        out
    }

    pub fn reversed(&self) -> SmallGraph {
        SmallGraph {
            ids: self.ids.clone(),
            labels: self.labels.clone(),
            children: self.parents.clone(),
            parents: self.children.clone(),
        }
    }

    pub fn with_labels(&self, labels: Vec<u64>) -> SmallGraph {
        assert_eq!(labels.len(), self.len());
        SmallGraph { labels, ..self.clone() }
    }

    /// Exactly one root and at most one parent per node.
    pub fn is_tree(&self) -> bool {
        self.parents.iter().all(|p| p.len() <= 1) && self.parents.iter().filter(|p| p.is_empty()).count() == 1
    }

    /// Children before parents.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut pending: Vec<usize> = self.children.iter().map(Vec::len).collect();
        let mut order: Vec<usize> = (0..self.len()).filter(|&i| pending[i] == 0).collect();
        let mut next = 0;
        while next < order.len() {
            let i = order[next];
            next += 1;
            for &p in &self.parents[i] {
                pending[p] -= 1;
                if pending[p] == 0 {
                    order.push(p);
                }
            }
        }
        if order.len() < self.len() {
            let stuck = (0..self.len()).find(|&i| pending[i] > 0).unwrap();
            return Err(Error::Cycle(self.ids[stuck]));
        }
        Ok(order)
    }

    fn partition(&self, classes: &[u64]) -> Partition {
        Partition::from_pairs(self.ids.iter().copied().zip(classes.iter().copied()).collect())
            .expect("ids are unique")
            .canonical()
    }

    fn depths(&self) -> Vec<usize> {
        let mut order = self.topological_order().expect("acyclic by construction");
        order.reverse();
        let mut depth = vec![0; self.len()];
        for i in order {
            for &c in &self.children[i] {
                depth[c] = depth[c].max(depth[i] + 1);
            }
        }
        depth
    }
}

/// Dense renaming of signatures. Returns the number of distinct classes.
fn refine<S: std::hash::Hash + Eq>(classes: &mut [u64], signature: impl Fn(usize, &[u64]) -> S) -> usize {
    let mut ids = HashMap::new();
    let next: Vec<u64> = (0..classes.len())
        .map(|i| {
            let fresh = ids.len() as u64;
            *ids.entry(signature(i, classes)).or_insert(fresh)
        })
        .collect();
    classes.copy_from_slice(&next);
    ids.len()
}

fn class_set(adj: &[usize], classes: &[u64]) -> Vec<u64> {
    let mut v: Vec<u64> = adj.iter().map(|&j| classes[j]).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn label_classes(g: &SmallGraph) -> (Vec<u64>, usize) {
    let mut classes = g.labels.clone();
    let count = refine(&mut classes, |i, _| g.labels[i]);
    (classes, count)
}

/// Iterates `class(n) <- (class(n), {class(c) : c child of n})` from the
/// label partition until the class count stops growing. Returns the
/// partition and the number of refinement rounds.
pub fn oracle_bisim_rounds(g: &SmallGraph) -> (Partition, usize) {
    let (mut classes, mut count) = label_classes(g);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let next = refine(&mut classes, |i, c| (c[i], class_set(&g.children[i], c)));
        if next == count {
            return (g.partition(&classes), rounds);
        }
        count = next;
    }
}

/// Coarsest (forward) bisimulation partition, canonical.
pub fn oracle_bisim(g: &SmallGraph) -> Partition {
    oracle_bisim_rounds(g).0
}

/// Longest outgoing path length per node, indexed like [`SmallGraph::ids`].
pub fn oracle_rank(g: &SmallGraph) -> Vec<u32> {
    let mut rank = vec![0u32; g.len()];
    for i in g.topological_order().expect("acyclic by construction") {
        rank[i] = g.children[i].iter().map(|&c| rank[c] + 1).max().unwrap_or(0);
    }
    rank
}

/// Backward k-bisimulation by the recursive definition, memoized level by
/// level.
pub fn backward_k_recursive(g: &SmallGraph, k: usize) -> Partition {
    let (mut classes, _) = label_classes(g);
    for _ in 0..k {
        refine(&mut classes, |i, c| (c[i], class_set(&g.parents[i], c)));
    }
    g.partition(&classes)
}

/// Groups tree nodes by their `(k+1)`-trace, padded in front with label 0.
pub fn trace_partition(g: &SmallGraph, k: usize) -> Result<Partition> {
    if !g.is_tree() {
        return Err(Error::Precondition("trace grouping requires a tree".into()));
    }
    let mut traces = HashMap::new();
    let classes: Vec<u64> = (0..g.len())
        .map(|i| {
            let mut trace = vec![0u64; k + 1];
            let mut at = Some(i);
            for slot in trace.iter_mut().rev() {
                match at {
                    Some(n) => {
                        *slot = g.labels[n];
                        at = g.parents[n].first().copied();
                    }
                    None => break,
                }
            }
            let fresh = traces.len() as u64;
            *traces.entry(trace).or_insert(fresh)
        })
        .collect();
    Ok(g.partition(&classes))
}

/// Backward k-bisimulation on a tree. Computes both the recursive definition
/// and the trace grouping and fails with an invariant error if they differ.
pub fn oracle_backward_k(g: &SmallGraph, k: usize) -> Result<Partition> {
    let traced = trace_partition(g, k)?;
    let recursive = backward_k_recursive(g, k);
    if traced != recursive {
        return Err(Error::Invariant(format!("trace grouping and recursive {k}-bisimulation differ")));
    }
    Ok(recursive)
}

/// Backward bisimulation (the 1-index partition).
pub fn oracle_backward(g: &SmallGraph) -> Partition {
    oracle_bisim(&g.reversed())
}

/// Coarsest partition stable under both child and parent sets.
pub fn oracle_fb(g: &SmallGraph) -> Partition {
    let (mut classes, mut count) = label_classes(g);
    loop {
        let next = refine(&mut classes, |i, c| (c[i], class_set(&g.children[i], c), class_set(&g.parents[i], c)));
        if next == count {
            return g.partition(&classes);
        }
        count = next;
    }
}

/// Whether every node of each graph is bisimilar to some node of the other.
pub fn bisimilar_graphs(a: &SmallGraph, b: &SmallGraph) -> bool {
    let offset = a.ids.len() as u64;
    let union = SmallGraph::new(
        (0..a.len()).map(|i| (i as u64, a.labels[i])).chain((0..b.len()).map(|i| (offset + i as u64, b.labels[i]))),
        a.edges_by_index().chain(b.edges_by_index().map(|(p, c)| (p + offset, c + offset))),
    )
    .expect("disjoint union of acyclic graphs");
    let p = oracle_bisim(&union);
    let mut sides: HashMap<u64, (bool, bool)> = HashMap::new();
    for &(n, block) in p.pairs() {
        let e = sides.entry(block).or_default();
        if n < offset {
            e.0 = true;
        } else {
            e.1 = true;
        }
    }
    sides.values().all(|&(x, y)| x && y)
}

/// Brute-force labeled-graph isomorphism with degree pruning.
pub fn isomorphic(a: &SmallGraph, b: &SmallGraph) -> bool {
    if a.len() != b.len() || a.edge_count() != b.edge_count() {
        return false;
    }
    let key = |g: &SmallGraph, i: usize| (g.labels[i], g.children[i].len(), g.parents[i].len());
    let mut map = vec![usize::MAX; a.len()];
    let mut used = vec![false; b.len()];

    fn extend(
        a: &SmallGraph,
        b: &SmallGraph,
        i: usize,
        map: &mut [usize],
        used: &mut [bool],
        key: &dyn Fn(&SmallGraph, usize) -> (u64, usize, usize),
    ) -> bool {
        if i == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if used[j] || key(a, i) != key(b, j) {
                continue;
            }
            // Edges between i and already-mapped nodes must correspond.
            let consistent = (0..i).all(|x| {
                let y = map[x];
                a.children[i].contains(&x) == b.children[j].contains(&y)
                    && a.children[x].contains(&i) == b.children[y].contains(&j)
            }) && a.children[i].contains(&i) == b.children[j].contains(&j);
            if consistent {
                map[i] = j;
                used[j] = true;
                if extend(a, b, i + 1, map, used, key) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    extend(a, b, 0, &mut map, &mut used, &key)
}

impl SmallGraph {
    fn edges_by_index(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        (0..self.len()).flat_map(move |p| self.children[p].iter().map(move |&c| (p as u64, c as u64)))
    }

    /// Maximum root-to-node depth (0 for a single node).
    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }
}

/// Small pinned graphs used throughout the tests.
pub mod fixtures {
    use super::SmallGraph;
    use crate::graphio::Partition;

    /// Labels of [`d_split_dag`]: a=1, b=2, c=3, d=4.
    pub const D_SPLIT_LABELS: [u64; 7] = [3, 3, 2, 2, 4, 1, 4];
    /// Edges of [`d_split_dag`], sorted by child.
    pub const D_SPLIT_EDGES: [(u64, u64); 7] = [(2, 0), (3, 0), (4, 0), (2, 1), (5, 2), (5, 3), (6, 3)];
    /// Bisimulation blocks of [`d_split_dag`].
    pub const D_SPLIT_BLOCKS: [&[u64]; 5] = [&[0, 1], &[2, 3], &[4], &[5], &[6]];

    /// Seven nodes numbered children first: c=0, c=1, b=2, b=3, d=4, a=5,
    /// d=6. Both c's, both b's are bisimilar; the two d's are not.
    pub fn d_split_dag() -> SmallGraph {
        SmallGraph::new((0..7).map(|i| (i, D_SPLIT_LABELS[i as usize])), D_SPLIT_EDGES).unwrap()
    }

    /// The quotient of [`d_split_dag`]: a -> b -> c, d -> b, d -> c.
    pub fn d_split_quotient() -> SmallGraph {
        // a=0, b=1, c=2, d=3, d=4
        SmallGraph::new([(0, 1), (1, 2), (2, 3), (3, 4), (4, 4)], [(0, 1), (1, 2), (3, 1), (4, 2)]).unwrap()
    }

    /// Ten elements, numbered breadth-first:
    /// a0(a1(b3, c4), a2(b5, c6, a7(b8, c9))).
    pub const SMALL_DOCUMENT: &str = "<a><a><b/><c/></a><a><b/><c/><a><b/><c/></a></a></a>";

    /// Fixture id of each element of [`SMALL_DOCUMENT`] in document order.
    pub const SMALL_DOCUMENT_IDS: [u64; 10] = [0, 1, 3, 4, 2, 5, 6, 7, 8, 9];

    /// Rewrites a partition over document-order ids into fixture ids.
    pub fn small_document_ids(p: &Partition) -> Partition {
        Partition::from_pairs(p.pairs().iter().map(|&(n, b)| (SMALL_DOCUMENT_IDS[n as usize], b)).collect()).unwrap()
    }

    /// [`SMALL_DOCUMENT`] as a forward tree in fixture ids; a=1, b=2, c=3.
    pub fn small_document_tree() -> SmallGraph {
        let labels = [1, 1, 1, 2, 3, 2, 3, 1, 2, 3];
        let edges = [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6), (2, 7), (7, 8), (7, 9)];
        SmallGraph::new((0..10).map(|i| (i, labels[i as usize])), edges).unwrap()
    }

    pub const SMALL_DOCUMENT_ONE_INDEX: [&[u64]; 7] = [&[0], &[1, 2], &[3, 5], &[4, 6], &[7], &[8], &[9]];
    /// Forward-and-backward stable partition: every node alone, since the
    /// parents of 3 and 5 (1 and 2) are not forward bisimilar.
    pub const SMALL_DOCUMENT_FB: [&[u64]; 10] = [&[0], &[1], &[2], &[3], &[4], &[5], &[6], &[7], &[8], &[9]];
    /// Meet of the forward and the 1-index partitions. Coarser than the
    /// stable partition: {3, 5} and {4, 6} survive.
    pub const SMALL_DOCUMENT_FORWARD_BACKWARD_MEET: [&[u64]; 8] =
        [&[0], &[1], &[2], &[3, 5], &[4, 6], &[7], &[8], &[9]];
    pub const SMALL_DOCUMENT_A0: [&[u64]; 3] = [&[0, 1, 2, 7], &[3, 5, 8], &[4, 6, 9]];
    pub const SMALL_DOCUMENT_A1: [&[u64]; 4] = [&[0], &[1, 2, 7], &[3, 5, 8], &[4, 6, 9]];
    pub const SMALL_DOCUMENT_A2: [&[u64]; 5] = [&[0], &[1, 2], &[3, 5, 8], &[4, 6, 9], &[7]];
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn blocks(p: &Partition) -> Vec<Vec<u64>> {
        p.blocks()
    }

    fn expected(b: &[&[u64]]) -> Vec<Vec<u64>> {
        Partition::from_blocks(b.iter().map(|x| x.to_vec())).unwrap().blocks()
    }

    #[test]
    fn d_split_bisim_and_rank() {
        let g = d_split_dag();
        assert_eq!(blocks(&oracle_bisim(&g)), expected(&D_SPLIT_BLOCKS));
        assert_eq!(oracle_rank(&g), vec![0, 0, 1, 1, 1, 2, 2]);
    }

    #[test]
    fn refinement_rounds_bounded_by_rank() {
        let g = d_split_dag();
        let (_, rounds) = oracle_bisim_rounds(&g);
        assert!(rounds <= 1 + 2);
    }

    #[test]
    fn distinct_labels_give_singletons() {
        let g = SmallGraph::new((0..5).map(|i| (i, i + 1)), [(1, 0), (2, 1), (4, 3)]).unwrap();
        assert_eq!(oracle_bisim(&g).num_blocks(), 5);
    }

    #[test]
    fn twin_subtrees_pair_up() {
        // Two copies of x(y, z(y)) under one root.
        let labels = [(0, 2), (1, 3), (2, 2), (3, 1), (10, 2), (11, 3), (12, 2), (13, 1), (20, 9)];
        let edges = [(1, 0), (3, 1), (3, 2), (11, 10), (13, 11), (13, 12), (20, 3), (20, 13)];
        let g = SmallGraph::new(labels, edges).unwrap();
        let p = oracle_bisim(&g);
        for (a, b) in [(0, 10), (1, 11), (2, 12), (3, 13)] {
            assert_eq!(p.block_of(a), p.block_of(b));
        }
        assert_ne!(p.block_of(1), p.block_of(2));
    }

    #[test]
    fn ranks_on_chains_and_isolated_nodes() {
        let chain = SmallGraph::new((0..5).map(|i| (i, 1)), (1..5).map(|i| (i, i - 1))).unwrap();
        assert_eq!(oracle_rank(&chain), vec![0, 1, 2, 3, 4]);
        let single = SmallGraph::new([(7, 1)], []).unwrap();
        assert_eq!(oracle_rank(&single), vec![0]);
    }

    #[test]
    fn cycles_are_rejected() {
        let r = SmallGraph::new([(0, 1), (1, 1)], [(0, 1), (1, 0)]);
        assert!(matches!(r, Err(Error::Cycle(_))));
    }

    #[test]
    fn small_document_indexes() {
        let t = small_document_tree();
        assert_eq!(blocks(&oracle_backward(&t)), expected(&SMALL_DOCUMENT_ONE_INDEX));
        assert_eq!(blocks(&oracle_fb(&t)), expected(&SMALL_DOCUMENT_FB));
        let meet = oracle_bisim(&t).meet(&oracle_backward(&t)).unwrap();
        assert_eq!(blocks(&meet), expected(&SMALL_DOCUMENT_FORWARD_BACKWARD_MEET));
        assert_eq!(blocks(&oracle_backward_k(&t, 0).unwrap()), expected(&SMALL_DOCUMENT_A0));
        assert_eq!(blocks(&oracle_backward_k(&t, 1).unwrap()), expected(&SMALL_DOCUMENT_A1));
        assert_eq!(blocks(&oracle_backward_k(&t, 2).unwrap()), expected(&SMALL_DOCUMENT_A2));
        assert_eq!(oracle_backward_k(&t, 3).unwrap(), oracle_backward(&t));
        assert_eq!(t.height(), 3);
    }

    #[test]
    fn root_only_tree() {
        let t = SmallGraph::new([(0, 1)], []).unwrap();
        assert_eq!(oracle_fb(&t).num_blocks(), 1);
        assert_eq!(oracle_backward_k(&t, 2).unwrap().num_blocks(), 1);
    }

    #[test]
    fn quotient_is_bisimilar_and_isomorphic_to_pinned_graph() {
        let g = d_split_dag();
        let q = d_split_quotient();
        assert!(bisimilar_graphs(&g, &q));
        assert!(isomorphic(&q, &q.reversed().reversed()));
        assert!(!isomorphic(&q, &q.reversed()));
        assert!(!bisimilar_graphs(&g, &g.with_labels(vec![3, 3, 2, 2, 4, 1, 1])));
    }

    #[test]
    fn text_input() {
        let dev = Device::new(crate::iomodel::MachineConfig::new(1 << 16, 256)).unwrap();
        let (g, labels) = SmallGraph::from_text("0 c\n1 c\n2 b\n".as_bytes(), "2 0\n2 1\n".as_bytes(), &dev).unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(oracle_bisim(&g).num_blocks(), 2);
    }
}
