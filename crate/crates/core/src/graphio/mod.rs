//! On-disk graph representation.
//!
//! Graphs are two record files: nodes `(id, label)` sorted by id, and edges
//! `(parent, child)` sorted by child, with every child numbered below its
//! parents. Partitions are `(origId, bisimId)` files.
//!
//! | file      | magic   | record                          | width |
//! |-----------|---------|---------------------------------|-------|
//! | nodes     | `EXBG1` | `id: u64, label: u32`           | 12    |
//! | edges     | `EXBE1` | `parent: u64, child: u64`       | 16    |
//! | partition | `EXBP1` | `orig_id: u64, bisim_id: u64`   | 16    |
//!
//! Each file starts with its magic and a little-endian `u64` record count.

mod labels;
mod partition;
mod quotient;
mod renumber;
mod text;
mod validate;

use crate::iomodel::{get_u32, get_u64, put_u32, put_u64, Record, Seq};

pub use labels::LabelTable;
pub use partition::{canonicalize, compare_partitions, Partition, Relation};
pub use quotient::{build_quotient, QuotientGraph};
pub use renumber::{renumber, Renumberable, Renumbered};
pub use text::{edges_from_text, edges_to_text, nodes_from_text, nodes_to_text};
pub use validate::{validate_input, FileKind, ValidationReport, Violation, ViolationKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRecord {
    pub id: u64,
    pub label: u32,
}

impl Record for NodeRecord {
    const WIDTH: usize = 12;
    const MAGIC: [u8; 5] = *b"EXBG1";

    #[inline]
    fn encode(&self, out: &mut [u8]) {
        put_u64(out, 0, self.id);
        put_u32(out, 8, self.label);
    }

    #[inline]
    fn decode(buf: &[u8]) -> Self {
        NodeRecord { id: get_u64(buf, 0), label: get_u32(buf, 8) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRecord {
    pub parent: u64,
    pub child: u64,
}

impl EdgeRecord {
    pub fn new(parent: u64, child: u64) -> Self {
        EdgeRecord { parent, child }
    }
}

impl Record for EdgeRecord {
    const WIDTH: usize = 16;
    const MAGIC: [u8; 5] = *b"EXBE1";

    #[inline]
    fn encode(&self, out: &mut [u8]) {
        put_u64(out, 0, self.parent);
        put_u64(out, 8, self.child);
    }

    #[inline]
    fn decode(buf: &[u8]) -> Self {
        EdgeRecord { parent: get_u64(buf, 0), child: get_u64(buf, 8) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionRecord {
    pub orig_id: u64,
    pub bisim_id: u64,
}

impl PartitionRecord {
    pub fn new(orig_id: u64, bisim_id: u64) -> Self {
        PartitionRecord { orig_id, bisim_id }
    }
}

impl Record for PartitionRecord {
    const WIDTH: usize = 16;
    const MAGIC: [u8; 5] = *b"EXBP1";

    #[inline]
    fn encode(&self, out: &mut [u8]) {
        put_u64(out, 0, self.orig_id);
        put_u64(out, 8, self.bisim_id);
    }

    #[inline]
    fn decode(buf: &[u8]) -> Self {
        PartitionRecord { orig_id: get_u64(buf, 0), bisim_id: get_u64(buf, 8) }
    }
}

pub type NodeFile = Seq<NodeRecord>;
pub type EdgeFile = Seq<EdgeRecord>;
/// One `(origId, bisimId)` record per node.
pub type PartitionAssignment = Seq<PartitionRecord>;

/// Stream-buffer blocks a pipeline step keeps aside for its cursors.
pub(crate) const CURSOR_BLOCKS: u64 = 6;
