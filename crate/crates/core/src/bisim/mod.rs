//! Two-phase external-memory bisimulation partitioning of DAGs.
//!
//! Phase 1 computes every node's rank (and optionally a structural hash) by
//! time-forward processing, sorts the nodes by `(rank, label[, hash])` and
//! renumbers them so that this order is also id order. Phase 2 walks the
//! groups of equal `(rank, label[, hash])` in that order, collects each
//! node's family of child block ids from the priority queue, sorts the group
//! by family and hands out one block id per distinct family.

mod phase1;
mod phase2;
mod words;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graphio::{EdgeRecord, NodeRecord, PartitionAssignment, Renumberable};
use crate::iomodel::{get_u32, get_u64, put_u32, put_u64, Device, IoStats, Record, Seq};

pub use phase1::{hash_combine, phase1_hashed, phase1_rank_label, HashCombine, PhaseOne};
pub use phase2::{phase2, second_hash, PhaseTwo};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Initial partition by rank and label.
    RankLabel,
    /// Initial partition by rank, label and structural hash.
    #[default]
    RankLabelHash,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::RankLabel => "rank-label",
            Variant::RankLabelHash => "rank-label-hash",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank-label" | "rl" => Ok(Variant::RankLabel),
            "rank-label-hash" | "ss" => Ok(Variant::RankLabelHash),
            _ => Err(Error::Config(format!("unknown variant `{s}` (expected rank-label or rank-label-hash)"))),
        }
    }
}

/// Node after phase 1. `hash` is 0 in the rank-label variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RankedNode {
    pub id: u64,
    pub orig_id: u64,
    pub rank: u32,
    pub label: u32,
    pub hash: u64,
}

impl RankedNode {
    /// Phase-2 group key.
    pub fn group_key(&self) -> (u32, u32, u64) {
        (self.rank, self.label, self.hash)
    }
}

impl Record for RankedNode {
    const WIDTH: usize = 32;
    const MAGIC: [u8; 5] = *b"EXBR1";

    #[inline]
    fn encode(&self, out: &mut [u8]) {
        put_u64(out, 0, self.id);
        put_u64(out, 8, self.orig_id);
        put_u32(out, 16, self.rank);
        put_u32(out, 20, self.label);
        put_u64(out, 24, self.hash);
    }

    #[inline]
    fn decode(buf: &[u8]) -> Self {
        RankedNode {
            id: get_u64(buf, 0),
            orig_id: get_u64(buf, 8),
            rank: get_u32(buf, 16),
            label: get_u32(buf, 20),
            hash: get_u64(buf, 24),
        }
    }
}

impl Renumberable for RankedNode {
    fn orig_id(&self) -> u64 {
        self.orig_id
    }

    fn set_id(&mut self, id: u64) {
        self.id = id;
    }
}

/// Output of [`partition_dag`].
pub struct PartitionRun {
    /// One `(origId, bisimId)` per node, sorted by `origId`; block ids are
    /// `1..=blocks`.
    pub partition: PartitionAssignment,
    pub blocks: u64,
    /// Families that shared a secondary hash with a different family.
    pub collisions: u64,
    /// Bytes the phase-2 group sorter wrote to disk.
    pub group_spill_bytes: u64,
    pub phase1: IoStats,
    pub phase2: IoStats,
}

impl PartitionRun {
    pub fn total_io(&self) -> IoStats {
        let mut t = self.phase1;
        t += self.phase2;
        t
    }
}

/// Computes the coarsest bisimulation partition of a DAG whose nodes are
/// sorted by id, with edges sorted by child and every child numbered below
/// its parents.
pub fn partition_dag(
    nodes: &Seq<NodeRecord>,
    edges: &Seq<EdgeRecord>,
    device: &Device,
    variant: Variant,
) -> Result<PartitionRun> {
    let start = device.stats();
    let p1 = match variant {
        Variant::RankLabel => phase1_rank_label(nodes, edges, device)?,
        Variant::RankLabelHash => phase1_hashed(nodes, edges, device, &hash_combine)?,
    };
    let mid = device.stats();
    let p2 = phase2(&p1, device)?;
    drop(p1);
    let end = device.stats();
    Ok(PartitionRun {
        partition: p2.partition,
        blocks: p2.blocks,
        collisions: p2.collisions,
        group_spill_bytes: p2.group_spill_bytes,
        phase1: mid - start,
        phase2: end - mid,
    })
}
