use super::oneindex::{oneindex_phase1_with, oneindex_phase2, LevelPartition};
use super::scan::XmlSource;
use super::tree::{forward_id, forward_tree_graph};
use crate::bisim::{partition_dag, Variant};
use crate::error::{Error, Result};
use crate::graphio::PartitionRecord;
use crate::iomodel::{Device, ExternalSorter, Fixed, IoStats};

pub struct FbRun {
    pub partition: LevelPartition,
    /// Blocks of the forward bisimulation.
    pub forward_blocks: u64,
    pub forward: IoStats,
    pub backward: IoStats,
}

/// F&B-index of a document: forward bisimulation of the tree, then the
/// backward level pass with each node labelled by its forward block id.
pub fn fb_partition(source: &XmlSource, device: &Device) -> Result<FbRun> {
    let start = device.stats();
    let graph = forward_tree_graph(source.scan(device)?, device)?;
    let fwd = partition_dag(&graph.nodes, &graph.edges, device, Variant::RankLabelHash)?;
    drop(graph);
    // Forward output is in descending preorder; turn it around.
    let mut by_pre = ExternalSorter::new(device, Fixed::<PartitionRecord>::new(), device.memory_budget() / 2, |a: &PartitionRecord, b: &PartitionRecord| {
        a.orig_id.cmp(&b.orig_id)
    });
    for r in fwd.partition.reader()? {
        let r = r?;
        by_pre.push(PartitionRecord::new(forward_id(r.orig_id), r.bisim_id))?;
    }
    drop(fwd.partition);
    let by_pre = by_pre.into_sequence()?;
    let mid = device.stats();

    let mut labels = by_pre.reader()?;
    let level = oneindex_phase1_with(
        source.scan(device)?,
        |ev| match labels.next_item()? {
            Some(r) if r.orig_id == ev.orig_id => Ok(r.bisim_id),
            other => Err(Error::Invariant(format!("forward block of element {} missing (found {other:?})", ev.orig_id))),
        },
        device,
    )?;
    drop(labels);
    drop(by_pre);
    let partition = oneindex_phase2(&level, device)?;
    let end = device.stats();
    Ok(FbRun { partition, forward_blocks: fwd.blocks, forward: mid - start, backward: end - mid })
}
