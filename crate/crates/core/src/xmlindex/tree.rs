use std::collections::HashMap;
use std::io::Write;

use super::scan::{TagEvent, TagKind};
use crate::error::{Error, Result};
use crate::graphio::{EdgeRecord, NodeRecord, PartitionRecord, CURSOR_BLOCKS};
use crate::iomodel::{memory_shares, Device, ExternalSequence, ExternalSorter, Fixed, Seq};

/// A document tree as a graphio graph.
pub struct TreeGraph {
    pub nodes: Seq<NodeRecord>,
    pub edges: Seq<EdgeRecord>,
}

/// Graph id of the element with preorder id `pre` in [`forward_tree_graph`].
/// Descending preorder numbers every child below its parent.
#[inline]
pub fn forward_id(pre: u64) -> u64 {
    u64::MAX - pre
}

fn build<I>(events: I, device: &Device, id: fn(u64) -> u64, edge: fn(u64, u64) -> EdgeRecord) -> Result<TreeGraph>
where
    I: IntoIterator<Item = Result<TagEvent>>,
{
    let [node_share, edge_share] = memory_shares(device.memory_budget(), device.block_size() as u64, CURSOR_BLOCKS, [1, 1]);
    let mut nodes = ExternalSorter::new(device, Fixed::<NodeRecord>::new(), node_share, |a: &NodeRecord, b: &NodeRecord| a.id.cmp(&b.id));
    let mut edges = ExternalSorter::new(device, Fixed::<EdgeRecord>::new(), edge_share, |a: &EdgeRecord, b: &EdgeRecord| {
        (a.child, a.parent).cmp(&(b.child, b.parent))
    });
    let mut open: Vec<u64> = Vec::new();
    for ev in events {
        let ev = ev?;
        match ev.kind {
            TagKind::Start => {
                if let Some(&parent) = open.last() {
                    edges.push(edge(id(parent), id(ev.orig_id)))?;
                }
                nodes.push(NodeRecord { id: id(ev.orig_id), label: ev.label })?;
                open.push(ev.orig_id);
            }
            TagKind::End => {
                open.pop();
            }
        }
    }
    Ok(TreeGraph { nodes: nodes.into_sequence()?, edges: edges.into_sequence()? })
}

/// Parent-to-child edges; element `pre` becomes node [`forward_id`]`(pre)`.
pub fn forward_tree_graph<I: IntoIterator<Item = Result<TagEvent>>>(events: I, device: &Device) -> Result<TreeGraph> {
    build(events, device, forward_id, EdgeRecord::new)
}

/// Child-to-parent edges over preorder ids: forward bisimulation of this
/// graph is the 1-index of the document.
pub fn reversed_tree_graph<I: IntoIterator<Item = Result<TagEvent>>>(events: I, device: &Device) -> Result<TreeGraph> {
    build(events, device, |pre| pre, |parent, child| EdgeRecord::new(child, parent))
}

/// A graphio tree rendered as an in-memory document. Element `i` in
/// preorder stands for graph node `preorder[i]`.
pub struct TreeDocument {
    pub xml: Vec<u8>,
    pub preorder: Vec<u64>,
}

/// Renders a tree (edges parent to child, one root) as XML with elements
/// named `l<label code>`; children appear in ascending id order.
pub fn tree_document(nodes: &Seq<NodeRecord>, edges: &Seq<EdgeRecord>) -> Result<TreeDocument> {
    let nodes = nodes.to_vec()?;
    let index: HashMap<u64, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    if index.len() != nodes.len() {
        return Err(Error::Validation("duplicate node id".into()));
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut has_parent = vec![false; nodes.len()];
    for e in edges.reader()? {
        let e = e?;
        let (Some(&p), Some(&c)) = (index.get(&e.parent), index.get(&e.child)) else {
            return Err(Error::Validation(format!("edge ({}, {}) has an endpoint that is not a node", e.parent, e.child)));
        };
        if std::mem::replace(&mut has_parent[c], true) {
            return Err(Error::Precondition(format!("not a tree: node {} has more than one parent", e.child)));
        }
        children[p].push(c);
    }
    let roots: Vec<usize> = (0..nodes.len()).filter(|&i| !has_parent[i]).collect();
    let [root] = roots[..] else {
        return Err(Error::Precondition(format!("not a tree: {} roots", roots.len())));
    };
    for c in &mut children {
        c.sort_by_key(|&i| nodes[i].id);
    }

    let mut xml = Vec::new();
    let mut preorder = Vec::with_capacity(nodes.len());
    // (node, next child position)
    let mut stack = vec![(root, 0usize)];
    preorder.push(nodes[root].id);
    write!(xml, "<l{}>", nodes[root].label).unwrap();
    while let Some(top) = stack.last_mut() {
        let (node, pos) = *top;
        if let Some(&c) = children[node].get(pos) {
            top.1 += 1;
            preorder.push(nodes[c].id);
            write!(xml, "<l{}>", nodes[c].label).unwrap();
            stack.push((c, 0));
        } else {
            write!(xml, "</l{}>", nodes[node].label).unwrap();
            stack.pop();
        }
    }
    if preorder.len() != nodes.len() {
        return Err(Error::Precondition("not a tree: some nodes are unreachable from the root".into()));
    }
    Ok(TreeDocument { xml, preorder })
}

/// Rewrites a partition over preorder ids into graph ids.
pub fn remap_partition(partition: &Seq<PartitionRecord>, preorder: &[u64], device: &Device) -> Result<Seq<PartitionRecord>> {
    let mut v = Vec::with_capacity(preorder.len());
    for r in partition.reader()? {
        let r = r?;
        let id = *preorder
            .get(r.orig_id as usize)
            .ok_or_else(|| Error::Invariant(format!("preorder id {} out of range", r.orig_id)))?;
        v.push(PartitionRecord::new(id, r.bisim_id));
    }
    v.sort_unstable();
    ExternalSequence::from_records(device, v)
}
