use std::cmp::Ordering;

use super::scan::{TagEvent, TagKind};
use crate::error::{Error, Result};
use crate::graphio::{PartitionRecord, CURSOR_BLOCKS};
use crate::iomodel::{get_u64, memory_shares, put_u64, BlockArray, Device, ExternalPriorityQueue, ExternalSorter, Fixed, Record, Seq};

/// A node under its composite id `(rank, id_on_level)`: rank is the depth
/// (root 0), `id_on_level` the arrival index within that depth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct LevelNode {
    pub rank: u64,
    pub id_on_level: u64,
    pub orig_id: u64,
    pub label: u64,
}

impl LevelNode {
    pub fn key(&self) -> (u64, u64) {
        (self.rank, self.id_on_level)
    }
}

impl Record for LevelNode {
    const WIDTH: usize = 32;
    const MAGIC: [u8; 5] = *b"EXBL1";

    fn encode(&self, out: &mut [u8]) {
        put_u64(out, 0, self.rank);
        put_u64(out, 8, self.id_on_level);
        put_u64(out, 16, self.orig_id);
        put_u64(out, 24, self.label);
    }

    fn decode(buf: &[u8]) -> Self {
        LevelNode { rank: get_u64(buf, 0), id_on_level: get_u64(buf, 8), orig_id: get_u64(buf, 16), label: get_u64(buf, 24) }
    }
}

/// Tree edge from the parent at `(parent_rank, parent_id_on_level)` to the
/// child at `(parent_rank + 1, child_id_on_level)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct LevelEdge {
    pub parent_rank: u64,
    pub parent_id_on_level: u64,
    pub child_id_on_level: u64,
}

impl LevelEdge {
    pub fn parent_key(&self) -> (u64, u64) {
        (self.parent_rank, self.parent_id_on_level)
    }
}

impl Record for LevelEdge {
    const WIDTH: usize = 24;
    const MAGIC: [u8; 5] = *b"EXBM1";

    fn encode(&self, out: &mut [u8]) {
        put_u64(out, 0, self.parent_rank);
        put_u64(out, 8, self.parent_id_on_level);
        put_u64(out, 16, self.child_id_on_level);
    }

    fn decode(buf: &[u8]) -> Self {
        LevelEdge { parent_rank: get_u64(buf, 0), parent_id_on_level: get_u64(buf, 8), child_id_on_level: get_u64(buf, 16) }
    }
}

/// Phase-1 output: nodes sorted by composite id, edges by parent composite id.
pub struct LevelOrder {
    pub nodes: Seq<LevelNode>,
    pub edges: Seq<LevelEdge>,
    /// Number of distinct depths.
    pub levels: u64,
}

/// Assigns composite ids with a per-depth counter array kept on the device.
/// `label_of` picks each node's label; the event label by default.
pub fn oneindex_phase1_with<I, F>(events: I, mut label_of: F, device: &Device) -> Result<LevelOrder>
where
    I: IntoIterator<Item = Result<TagEvent>>,
    F: FnMut(&TagEvent) -> Result<u64>,
{
    let [node_share, edge_share] = memory_shares(device.memory_budget(), device.block_size() as u64, CURSOR_BLOCKS + 2, [4, 3]);
    let mut nodes = ExternalSorter::new(device, Fixed::<LevelNode>::new(), node_share, |a: &LevelNode, b: &LevelNode| a.key().cmp(&b.key()));
    let mut edges = ExternalSorter::new(device, Fixed::<LevelEdge>::new(), edge_share, |a: &LevelEdge, b: &LevelEdge| a.cmp(b));
    let mut count = BlockArray::new(device)?;
    let mut depth = 0u64;
    for ev in events {
        let ev = ev?;
        match ev.kind {
            TagKind::Start => {
                let rank = depth;
                let id_on_level = count.get(rank)?;
                count.set(rank, id_on_level + 1)?;
                if rank > 0 {
                    let parent = count.get(rank - 1)?;
                    edges.push(LevelEdge { parent_rank: rank - 1, parent_id_on_level: parent - 1, child_id_on_level: id_on_level })?;
                }
                nodes.push(LevelNode { rank, id_on_level, orig_id: ev.orig_id, label: label_of(&ev)? })?;
                depth += 1;
            }
            TagKind::End => {
                if depth == 0 {
                    return Err(Error::Parse { offset: 0, reason: format!("end of element {} below depth 0", ev.orig_id) });
                }
                depth -= 1;
            }
        }
    }
    let levels = count.len();
    drop(count);
    Ok(LevelOrder { nodes: nodes.into_sequence()?, edges: edges.into_sequence()?, levels })
}

pub fn oneindex_phase1<I: IntoIterator<Item = Result<TagEvent>>>(events: I, device: &Device) -> Result<LevelOrder> {
    oneindex_phase1_with(events, |e| Ok(e.label as u64), device)
}

const MARKER: u8 = 0;
const CHILD: u8 = 1;

/// One row of a depth group. The marker row carries the node; each child row
/// carries one child to forward the node's block id to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct LevelGroupRecord {
    label: u64,
    parent_bid: u64,
    orig_id: u64,
    tag: u8,
    child_id_on_level: u64,
}

impl Record for LevelGroupRecord {
    const WIDTH: usize = 33;
    const MAGIC: [u8; 5] = *b"EXBX1";

    fn encode(&self, out: &mut [u8]) {
        put_u64(out, 0, self.label);
        put_u64(out, 8, self.parent_bid);
        put_u64(out, 16, self.orig_id);
        out[24] = self.tag;
        put_u64(out, 25, self.child_id_on_level);
    }

    fn decode(buf: &[u8]) -> Self {
        LevelGroupRecord {
            label: get_u64(buf, 0),
            parent_bid: get_u64(buf, 8),
            orig_id: get_u64(buf, 16),
            tag: buf[24],
            child_id_on_level: get_u64(buf, 25),
        }
    }
}

pub struct LevelPartition {
    /// `(origId, bisimId)` sorted by `origId`; block ids `1..=blocks`.
    pub partition: Seq<PartitionRecord>,
    pub blocks: u64,
}

type Key = (i64, u64);
const ROOT_SENTINEL: Key = (-1, 0);

fn desync(what: String) -> Error {
    Error::Invariant(format!("1-index queue out of step: {what}"))
}

/// Backward bisimulation of a tree given in level order: nodes of one depth
/// share a block iff they share a label and their parents share a block.
pub fn oneindex_phase2(level: &LevelOrder, device: &Device) -> Result<LevelPartition> {
    let [pq_share, group_share, out_share] =
        memory_shares(device.memory_budget(), device.block_size() as u64, CURSOR_BLOCKS, [4, 4, 3]);
    let mut queue: ExternalPriorityQueue<Key, u64> = ExternalPriorityQueue::new(device, pq_share);
    let group_cmp = |a: &LevelGroupRecord, b: &LevelGroupRecord| a.cmp(b);
    let mut group = ExternalSorter::new(device, Fixed::<LevelGroupRecord>::new(), group_share, group_cmp);
    let mut out = ExternalSorter::new(device, Fixed::<PartitionRecord>::new(), out_share, |a: &PartitionRecord, b: &PartitionRecord| {
        a.orig_id.cmp(&b.orig_id)
    });
    queue.insert(ROOT_SENTINEL, 0)?;

    let mut last = 0u64;
    let mut edges = level.edges.reader()?;
    let mut rank: Option<u64> = None;
    for n in level.nodes.reader()? {
        let n = n?;
        if let Some(r) = rank.filter(|&r| r != n.rank) {
            flush(&mut group, &mut queue, &mut out, &mut last, r)?;
        }
        rank = Some(n.rank);

        let key = if n.rank == 0 {
            if n.id_on_level != 0 {
                return Err(desync(format!("second root {}", n.orig_id)));
            }
            ROOT_SENTINEL
        } else {
            (n.rank as i64, n.id_on_level)
        };
        if queue.peek_min_key().is_some_and(|k| k < key) {
            return Err(desync(format!("message for {:?} was never consumed", queue.peek_min_key().unwrap())));
        }
        let Some(parent_bid) = queue.extract_if_key(&key)? else {
            return Err(desync(format!("no parent message for node {}", n.orig_id)));
        };
        let base = LevelGroupRecord { label: n.label, parent_bid, orig_id: n.orig_id, tag: MARKER, child_id_on_level: 0 };
        group.push(base)?;
        while let Some(e) = edges.peek()? {
            match e.parent_key().cmp(&n.key()) {
                Ordering::Greater => break,
                Ordering::Less => return Err(desync(format!("edge from missing parent {:?}", e.parent_key()))),
                Ordering::Equal => {}
            }
            let child = e.child_id_on_level;
            edges.next_item()?;
            group.push(LevelGroupRecord { tag: CHILD, child_id_on_level: child, ..base })?;
        }
    }
    if let Some(r) = rank {
        flush(&mut group, &mut queue, &mut out, &mut last, r)?;
    }
    if let Some(k) = queue.peek_min_key() {
        return Err(desync(format!("message for {k:?} left over")));
    }
    if let Some(e) = edges.next_item()? {
        return Err(desync(format!("edge from {:?} left over", e.parent_key())));
    }
    drop(queue);
    drop(group);
    Ok(LevelPartition { partition: out.into_sequence()?, blocks: last })
}

fn flush<F, G>(
    group: &mut ExternalSorter<Fixed<LevelGroupRecord>, F>,
    queue: &mut ExternalPriorityQueue<Key, u64>,
    out: &mut ExternalSorter<Fixed<PartitionRecord>, G>,
    last: &mut u64,
    rank: u64,
) -> Result<()>
where
    F: Fn(&LevelGroupRecord, &LevelGroupRecord) -> Ordering + Clone,
    G: Fn(&PartitionRecord, &PartitionRecord) -> Ordering + Clone,
{
    let mut prev: Option<(u64, u64)> = None;
    let mut stream = group.sorted()?;
    while let Some(r) = stream.next_item()? {
        if r.tag == MARKER {
            if prev != Some((r.label, r.parent_bid)) {
                *last += 1;
                prev = Some((r.label, r.parent_bid));
            }
            out.push(PartitionRecord::new(r.orig_id, *last))?;
        } else {
            queue.insert((rank as i64 + 1, r.child_id_on_level), *last)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphio::Partition;
    use crate::iomodel::MachineConfig;
    use crate::oracle::fixtures;
    use crate::xmlindex::scan::XmlSource;

    fn dev() -> Device {
        Device::new(MachineConfig::new(1 << 16, 64)).unwrap()
    }

    #[test]
    fn small_document_composite_ids() {
        let d = dev();
        let lv = oneindex_phase1(XmlSource::from(fixtures::SMALL_DOCUMENT).scan(&d).unwrap(), &d).unwrap();
        let ids: Vec<_> = lv.nodes.to_vec().unwrap().iter().map(|n| (n.key(), fixtures::SMALL_DOCUMENT_IDS[n.orig_id as usize])).collect();
        assert_eq!(
            ids,
            vec![
                ((0, 0), 0),
                ((1, 0), 1),
                ((1, 1), 2),
                ((2, 0), 3),
                ((2, 1), 4),
                ((2, 2), 5),
                ((2, 3), 6),
                ((2, 4), 7),
                ((3, 0), 8),
                ((3, 1), 9)
            ]
        );
        assert_eq!(lv.edges.len(), 9);
        assert_eq!(lv.levels, 4);
    }

    #[test]
    fn deep_chain_counts_one_per_level() {
        let d = dev();
        let doc = "<a>".repeat(1000) + &"</a>".repeat(1000);
        let lv = oneindex_phase1(XmlSource::Bytes(doc.into_bytes()).scan(&d).unwrap(), &d).unwrap();
        assert_eq!(lv.levels, 1000);
        assert!(lv.nodes.to_vec().unwrap().iter().all(|n| n.id_on_level == 0));
        let p = oneindex_phase2(&lv, &d).unwrap();
        assert_eq!(p.blocks, 1000);
    }

    #[test]
    fn small_document_one_index() {
        let d = dev();
        let lv = oneindex_phase1(XmlSource::from(fixtures::SMALL_DOCUMENT).scan(&d).unwrap(), &d).unwrap();
        let p = oneindex_phase2(&lv, &d).unwrap();
        assert_eq!(p.blocks, 7);
        let got = Partition::load(&p.partition).unwrap();
        let want = Partition::from_blocks(fixtures::SMALL_DOCUMENT_ONE_INDEX.iter().map(|b| b.to_vec())).unwrap();
        assert_eq!(fixtures::small_document_ids(&got).canonical(), want.canonical());
    }

    #[test]
    fn root_only() {
        let d = dev();
        let lv = oneindex_phase1(XmlSource::from("<r/>").scan(&d).unwrap(), &d).unwrap();
        assert_eq!((lv.nodes.len(), lv.edges.len()), (1, 0));
        assert_eq!(oneindex_phase2(&lv, &d).unwrap().blocks, 1);
    }

    #[test]
    fn missing_parent_is_desync() {
        let d = dev();
        let nodes = Seq::from_records(&d, [LevelNode { rank: 0, id_on_level: 0, orig_id: 0, label: 1 }, LevelNode {
            rank: 1,
            id_on_level: 0,
            orig_id: 1,
            label: 1,
        }])
        .unwrap();
        let edges = Seq::from_records(&d, []).unwrap();
        let lv = LevelOrder { nodes, edges, levels: 2 };
        assert!(matches!(oneindex_phase2(&lv, &d), Err(Error::Invariant(_))));
    }
}
