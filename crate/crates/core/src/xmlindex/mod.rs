//! XML structural indexes over element trees.
//!
//! A streaming scanner turns a document into start/end events with preorder
//! ids. The 1-index numbers nodes by `(depth, arrival within depth)` and runs
//! one backward time-forward pass level by level. The A(k)-index sorts nodes
//! by their last `k + 1` root-path labels. The F&B-index runs the DAG
//! partitioner forward on the tree, then the 1-index pass backward with
//! forward block ids as labels.

mod ak;
mod fb;
mod oneindex;
mod scan;
mod tree;

pub use ak::{ak_partition, Trace, TraceCodec, TracePartition, LAMBDA};
pub use fb::{fb_partition, FbRun};
pub use oneindex::{oneindex_phase1, oneindex_phase1_with, oneindex_phase2, LevelEdge, LevelNode, LevelOrder, LevelPartition};
pub use scan::{scan_xml, TagEvent, TagKind, XmlScanner, XmlSource};
pub use tree::{forward_id, forward_tree_graph, remap_partition, reversed_tree_graph, tree_document, TreeDocument, TreeGraph};

use crate::error::Result;
use crate::graphio::{LabelTable, PartitionRecord};
use crate::iomodel::{Device, IoStats, Seq};

/// Output of an index build over a document.
pub struct IndexRun {
    /// `(origId, bisimId)` over preorder ids, sorted by `origId`.
    pub partition: Seq<PartitionRecord>,
    pub blocks: u64,
    pub elements: u64,
    pub labels: LabelTable,
    /// Named per-phase IO counts, in execution order.
    pub phases: Vec<(&'static str, IoStats)>,
}

impl IndexRun {
    pub fn total_io(&self) -> IoStats {
        self.phases.iter().fold(IoStats::default(), |mut t, (_, s)| {
            t += *s;
            t
        })
    }
}

pub fn one_index(source: &XmlSource, device: &Device) -> Result<IndexRun> {
    let start = device.stats();
    let mut scanner = source.scan(device)?;
    let level = oneindex_phase1(scanner.by_ref(), device)?;
    let mid = device.stats();
    let p = oneindex_phase2(&level, device)?;
    drop(level);
    let end = device.stats();
    Ok(IndexRun {
        partition: p.partition,
        blocks: p.blocks,
        elements: scanner.elements(),
        labels: scanner.into_labels(),
        phases: vec![("phase1", mid - start), ("phase2", end - mid)],
    })
}

pub fn ak_index(source: &XmlSource, k: usize, device: &Device) -> Result<IndexRun> {
    let start = device.stats();
    let mut scanner = source.scan(device)?;
    let p = ak_partition(scanner.by_ref(), k, device)?;
    let end = device.stats();
    Ok(IndexRun {
        partition: p.partition,
        blocks: p.blocks,
        elements: scanner.elements(),
        labels: scanner.into_labels(),
        phases: vec![("traces", end - start)],
    })
}

pub fn fb_index(source: &XmlSource, device: &Device) -> Result<IndexRun> {
    let r = fb_partition(source, device)?;
    // Labels and element count come from a scan that is not charged.
    let (elements, labels) = {
        let quiet = Device::new(device.config().clone())?;
        let mut s = source.scan(&quiet)?;
        while s.next_event()?.is_some() {}
        (s.elements(), s.into_labels())
    };
    Ok(IndexRun {
        partition: r.partition.partition,
        blocks: r.partition.blocks,
        elements,
        labels,
        phases: vec![("forward", r.forward), ("backward", r.backward)],
    })
}
