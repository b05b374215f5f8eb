use super::RankedNode;
use crate::error::{Error, Result};
use crate::graphio::{renumber, EdgeRecord, NodeRecord, CURSOR_BLOCKS};
use crate::iomodel::{memory_shares, Device, ExternalPriorityQueue, ExternalSorter, Fixed, Seq};

/// Phase-1 output: nodes sorted by new id and, equivalently, by
/// `(rank, label, hash)`; edges in new ids sorted by child.
pub struct PhaseOne {
    pub nodes: Seq<RankedNode>,
    pub edges: Seq<EdgeRecord>,
}

/// Structural hash of a node from its label and the sorted, deduplicated
/// hashes of its children.
pub trait HashCombine {
    fn combine(&self, label: u32, sorted_child_hashes: &mut dyn Iterator<Item = u64>) -> u64;
}

impl<F: Fn(u32, &mut dyn Iterator<Item = u64>) -> u64> HashCombine for F {
    fn combine(&self, label: u32, sorted_child_hashes: &mut dyn Iterator<Item = u64>) -> u64 {
        self(label, sorted_child_hashes)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[inline]
pub(crate) fn fnv_bytes(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 finalizer; spreads FNV's weak high bits.
#[inline]
pub(crate) fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the label and the child hashes (little-endian bytes), then
/// the SplitMix64 finalizer.
pub fn hash_combine(label: u32, sorted_child_hashes: &mut dyn Iterator<Item = u64>) -> u64 {
    let mut h = fnv_bytes(FNV_OFFSET, &label.to_le_bytes());
    for c in sorted_child_hashes {
        h = fnv_bytes(h, &c.to_le_bytes());
    }
    mix(h)
}

pub fn phase1_rank_label(nodes: &Seq<NodeRecord>, edges: &Seq<EdgeRecord>, device: &Device) -> Result<PhaseOne> {
    run(nodes, edges, device, None)
}

pub fn phase1_hashed(
    nodes: &Seq<NodeRecord>,
    edges: &Seq<EdgeRecord>,
    device: &Device,
    combine: &dyn HashCombine,
) -> Result<PhaseOne> {
    run(nodes, edges, device, Some(combine))
}

fn run(nodes: &Seq<NodeRecord>, edges: &Seq<EdgeRecord>, device: &Device, combine: Option<&dyn HashCombine>) -> Result<PhaseOne> {
    let [pq_share, ranks_share, child_share] =
        memory_shares(device.memory_budget(), device.block_size() as u64, CURSOR_BLOCKS, [7, 7, 2]);
    let mut queue: ExternalPriorityQueue<u64, (u32, u64)> = ExternalPriorityQueue::new(device, pq_share);
    let mut ranks = ExternalSorter::new(device, Fixed::<RankedNode>::new(), ranks_share, |a: &RankedNode, b: &RankedNode| {
        a.group_key().cmp(&b.group_key())
    });
    let mut child_hashes = ExternalSorter::new(device, Fixed::<u64>::new(), child_share, |a: &u64, b: &u64| a.cmp(b));

    let mut edge_cursor = edges.reader()?;
    let mut prev: Option<u64> = None;
    for n in nodes.reader()? {
        let n = n?;
        if prev.is_some_and(|p| p >= n.id) {
            return Err(Error::Validation(format!("node ids not strictly ascending at {}", n.id)));
        }
        prev = Some(n.id);

        let mut rank = 0u32;
        while let Some(key) = queue.peek_min_key() {
            if key > n.id {
                break;
            }
            if key < n.id {
                return Err(Error::Validation(format!("edge parent {key} is not a node")));
            }
            let (_, (child_rank, child_hash)) = queue.extract_min()?;
            rank = rank.max(child_rank + 1);
            if combine.is_some() {
                child_hashes.push(child_hash)?;
            }
        }
        let hash = match combine {
            None => 0,
            Some(f) => {
                let mut stream = child_hashes.sorted()?;
                let mut failure = None;
                let mut last = None;
                let h = {
                    let mut distinct = std::iter::from_fn(|| loop {
                        match stream.next_item() {
                            Ok(Some(h)) if last == Some(h) => continue,
                            Ok(Some(h)) => {
                                last = Some(h);
                                return Some(h);
                            }
                            Ok(None) => return None,
                            Err(e) => {
                                failure = Some(e);
                                return None;
                            }
                        }
                    });
                    f.combine(n.label, &mut distinct)
                };
                if let Some(e) = failure {
                    return Err(e);
                }
                h
            }
        };
        ranks.push(RankedNode { id: 0, orig_id: n.id, rank, label: n.label, hash })?;

        while let Some(e) = edge_cursor.peek()? {
            if e.child > n.id {
                break;
            }
            let e = *e;
            edge_cursor.next_item()?;
            if e.child < n.id {
                return Err(Error::Validation(format!("edge ({}, {}): child is not a node or edges unsorted", e.parent, e.child)));
            }
            if e.parent <= n.id {
                return Err(Error::TopologicalOrder {
                    node: n.id,
                    detail: format!("edge ({}, {}) points from a lower id to a higher one", e.parent, e.child),
                });
            }
            queue.insert(e.parent, (rank, hash))?;
        }
    }
    if let Some(e) = edge_cursor.next_item()? {
        return Err(Error::Validation(format!("edge ({}, {}): child is not a node", e.parent, e.child)));
    }
    if let Some(key) = queue.peek_min_key() {
        return Err(Error::Validation(format!("edge parent {key} is not a node")));
    }
    drop(queue);
    drop(child_hashes);

    let renumbered = renumber(ranks.sorted()?, edges, device)?;
    Ok(PhaseOne { nodes: renumbered.nodes, edges: renumbered.edges })
}
