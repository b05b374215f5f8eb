use super::{EdgeRecord, NodeRecord, PartitionRecord, CURSOR_BLOCKS};
use crate::error::{Error, Result};
use crate::iomodel::{Device, ExternalSorter, Fixed, Seq, SeqReader};

/// One node per block (id = block id, label of a representative member) and
/// the deduplicated block-to-block edges, sorted by child then parent.
///
/// Quotients of forward partitions of a DAG are DAGs, but block ids need not
/// be topologically ordered, and non-bisimulation partitions such as A(0)
/// may produce self-loops.
pub struct QuotientGraph {
    pub nodes: Seq<NodeRecord>,
    pub edges: Seq<EdgeRecord>,
}

fn lookup(r: &mut SeqReader<Fixed<PartitionRecord>>, node: u64) -> Result<u64> {
    while r.peek()?.is_some_and(|p| p.orig_id < node) {
        r.next_item()?;
    }
    match r.peek()? {
        Some(p) if p.orig_id == node => Ok(p.bisim_id),
        _ => Err(Error::Validation(format!("node {node} is not covered by the partition"))),
    }
}

/// Builds the quotient of `(nodes, edges)` under `partition` with sort-merge
/// joins. `nodes` must be sorted by id; `edges` and `partition` may be in any
/// order.
pub fn build_quotient(nodes: &Seq<NodeRecord>, edges: &Seq<EdgeRecord>, partition: &Seq<PartitionRecord>) -> Result<QuotientGraph> {
    let device: &Device = nodes.device();
    let share = device.memory_budget().saturating_sub(CURSOR_BLOCKS * device.block_size() as u64) / 2;
    let edge_cmp = |key: fn(&EdgeRecord) -> (u64, u64)| move |a: &EdgeRecord, b: &EdgeRecord| key(a).cmp(&key(b));

    let mut by_orig = ExternalSorter::new(device, Fixed::<PartitionRecord>::new(), share, |a: &PartitionRecord, b: &PartitionRecord| {
        a.orig_id.cmp(&b.orig_id)
    });
    for p in partition.reader()? {
        by_orig.push(p?)?;
    }
    let mapping = by_orig.into_sequence()?;

    // Quotient nodes: (block, label) sorted by block, first label kept.
    let mut by_block = ExternalSorter::new(device, Fixed::<NodeRecord>::new(), share, |a: &NodeRecord, b: &NodeRecord| a.id.cmp(&b.id));
    {
        let mut m = mapping.reader()?;
        let mut expected = nodes.reader()?;
        let mut prev: Option<u64> = None;
        while let Some(p) = m.next_item()? {
            if prev == Some(p.orig_id) {
                return Err(Error::Validation(format!("node {} assigned twice", p.orig_id)));
            }
            prev = Some(p.orig_id);
            match expected.next_item()? {
                Some(n) if n.id == p.orig_id => by_block.push(NodeRecord { id: p.bisim_id, label: n.label })?,
                Some(n) if n.id < p.orig_id => {
                    return Err(Error::Validation(format!("node {} is not covered by the partition", n.id)))
                }
                _ => return Err(Error::Validation(format!("partition names unknown node {}", p.orig_id))),
            }
        }
        if let Some(n) = expected.next_item()? {
            return Err(Error::Validation(format!("node {} is not covered by the partition", n.id)));
        }
    }
    let mut qnodes = Seq::spill_records(device)?;
    {
        let mut stream = by_block.sorted()?;
        let mut last: Option<u64> = None;
        while let Some(n) = stream.next_item()? {
            if last != Some(n.id) {
                qnodes.push(&n)?;
                last = Some(n.id);
            }
        }
    }
    drop(by_block);

    let mut by_child = ExternalSorter::new(device, Fixed::<EdgeRecord>::new(), share, edge_cmp(|e| (e.child, 0)));
    for e in edges.reader()? {
        by_child.push(e?)?;
    }
    let mut by_parent = ExternalSorter::new(device, Fixed::<EdgeRecord>::new(), share, edge_cmp(|e| (e.parent, 0)));
    {
        let mut m = mapping.reader()?;
        let mut stream = by_child.sorted()?;
        while let Some(e) = stream.next_item()? {
            by_parent.push(EdgeRecord::new(e.parent, lookup(&mut m, e.child)?))?;
        }
    }
    drop(by_child);
    let mut blocks = ExternalSorter::new(device, Fixed::<EdgeRecord>::new(), share, edge_cmp(|e| (e.child, e.parent)));
    {
        let mut m = mapping.reader()?;
        let mut stream = by_parent.sorted()?;
        while let Some(e) = stream.next_item()? {
            blocks.push(EdgeRecord::new(lookup(&mut m, e.parent)?, e.child))?;
        }
    }
    drop(by_parent);
    let mut qedges = Seq::spill_records(device)?;
    {
        let mut stream = blocks.sorted()?;
        let mut last: Option<EdgeRecord> = None;
        while let Some(e) = stream.next_item()? {
            if last != Some(e) {
                qedges.push(&e)?;
                last = Some(e);
            }
        }
    }
    Ok(QuotientGraph { nodes: qnodes.finish()?, edges: qedges.finish()? })
}
