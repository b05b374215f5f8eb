use super::phase1::{fnv_bytes, mix};
use super::words::WordBuffer;
use super::PhaseOne;
use crate::error::{Error, Result};
use crate::graphio::{PartitionAssignment, PartitionRecord, CURSOR_BLOCKS};
use crate::iomodel::{get_u64, memory_shares, put_u64, Device, ExternalPriorityQueue, ExternalSorter, Fixed, Record};

pub struct PhaseTwo {
    /// Sorted by `origId`.
    pub partition: PartitionAssignment,
    pub blocks: u64,
    pub collisions: u64,
    pub group_spill_bytes: u64,
}

const MARKER: u8 = 0;
const FAMILY: u8 = 1;
const PARENT: u8 = 2;

/// Fixed-size group entry: a node marker, one element of the node's family,
/// or one of its parents. Sorting by all fields lists each node as marker,
/// family ascending, parents ascending, with nodes ordered by secondary hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupRecord {
    pub second_hash: u64,
    pub orig_id: u64,
    pub tag: u8,
    pub value: u64,
}

impl Record for GroupRecord {
    const WIDTH: usize = 25;
    const MAGIC: [u8; 5] = *b"EXBQ1";

    #[inline]
    fn encode(&self, out: &mut [u8]) {
        put_u64(out, 0, self.second_hash);
        put_u64(out, 8, self.orig_id);
        out[16] = self.tag;
        put_u64(out, 17, self.value);
    }

    #[inline]
    fn decode(buf: &[u8]) -> Self {
        GroupRecord { second_hash: get_u64(buf, 0), orig_id: get_u64(buf, 8), tag: buf[16], value: get_u64(buf, 17) }
    }
}

const CARD_SHIFT: u32 = 48;
const WIDE: u64 = 0xFFFF;

/// Secondary hash of a family from its 64-bit content hash. The cardinality
/// occupies the top 16 bits, or, from `0xFFFF` elements on, the top 16 bits
/// are all ones and the next 32 hold the cardinality; families of different
/// sizes therefore never share a value.
pub fn second_hash(cardinality: u64, content: u64) -> Result<u64> {
    if cardinality < WIDE {
        Ok((cardinality << CARD_SHIFT) | (content & ((1 << CARD_SHIFT) - 1)))
    } else if cardinality <= u32::MAX as u64 {
        Ok((WIDE << CARD_SHIFT) | (cardinality << 16) | (content & 0xFFFF))
    } else {
        Err(Error::Precondition(format!("a node with {cardinality} distinct child blocks is not supported")))
    }
}

/// Collision dictionary: `(family, bisimId)` entries laid out as
/// `[len, id, elements...]` in a sequential word list.
struct Dictionary {
    words: WordBuffer,
}

impl Dictionary {
    fn lookup(&mut self, family: &mut WordBuffer) -> Result<Option<u64>> {
        let target = family.len();
        let mut entries = self.words.words()?;
        while let Some(len) = entries.next_word()? {
            let id = entries.next_word()?.ok_or_else(|| Error::Invariant("truncated dictionary entry".into()))?;
            let mut equal = len == target;
            let mut mine = family.words()?;
            for _ in 0..len {
                let w = entries.next_word()?.ok_or_else(|| Error::Invariant("truncated dictionary entry".into()))?;
                if equal && mine.next_word()? != Some(w) {
                    equal = false;
                }
            }
            if equal {
                return Ok(Some(id));
            }
        }
        Ok(None)
    }

    fn insert(&mut self, family: &mut WordBuffer, id: u64) -> Result<()> {
        self.words.push(family.len())?;
        self.words.push(id)?;
        let mut it = family.words()?;
        while let Some(w) = it.next_word()? {
            self.words.push(w)?;
        }
        Ok(())
    }
}

/// Per-group state while the sorted group stream is consumed.
struct Assigner {
    dictionary: Dictionary,
    dictionary_hash: Option<u64>,
    family: WordBuffer,
    last_bisim_id: u64,
    collisions: u64,
}

impl Assigner {
    fn assign(&mut self, second_hash: u64) -> Result<u64> {
        if self.dictionary_hash != Some(second_hash) {
            self.dictionary.words.clear();
            self.dictionary_hash = Some(second_hash);
        }
        if !self.dictionary.words.is_empty() {
            if let Some(id) = self.dictionary.lookup(&mut self.family)? {
                return Ok(id);
            }
            self.collisions += 1;
        }
        self.last_bisim_id += 1;
        let id = self.last_bisim_id;
        self.dictionary.insert(&mut self.family, id)?;
        Ok(id)
    }
}

pub fn phase2(p1: &PhaseOne, device: &Device) -> Result<PhaseTwo> {
    let block = device.block_size() as u64;
    let [pq_share, group_share, family_share, out_share] =
        memory_shares(device.memory_budget(), block, CURSOR_BLOCKS + 2, [6, 4, 2, 4]);
    let mut queue: ExternalPriorityQueue<u64, u64> = ExternalPriorityQueue::new(device, pq_share);
    let mut group = ExternalSorter::new(device, Fixed::<GroupRecord>::new(), group_share, |a: &GroupRecord, b: &GroupRecord| a.cmp(b));
    let mut family_sorter = ExternalSorter::new(device, Fixed::<u64>::new(), family_share / 2, |a: &u64, b: &u64| a.cmp(b));
    let mut output = ExternalSorter::new(device, Fixed::<PartitionRecord>::new(), out_share, |a: &PartitionRecord, b: &PartitionRecord| {
        a.orig_id.cmp(&b.orig_id)
    });
    let mut assigner = Assigner {
        dictionary: Dictionary { words: WordBuffer::new(device, block) },
        dictionary_hash: None,
        family: WordBuffer::new(device, family_share / 2),
        last_bisim_id: 0,
        collisions: 0,
    };

    let mut nodes = p1.nodes.reader()?;
    let mut edges = p1.edges.reader()?;
    while let Some(n) = nodes.next_item()? {
        // Family: child block ids addressed to n, sorted, doubles removed.
        while let Some(key) = queue.peek_min_key() {
            if key > n.id {
                break;
            }
            if key < n.id {
                return Err(Error::Invariant(format!("message for node {key} arrived after the node was processed")));
            }
            family_sorter.push(queue.extract_min()?.1)?;
        }
        assigner.family.clear();
        let mut content = 0xcbf2_9ce4_8422_2325u64;
        {
            let mut stream = family_sorter.sorted()?;
            let mut last = None;
            while let Some(b) = stream.next_item()? {
                if last != Some(b) {
                    last = Some(b);
                    assigner.family.push(b)?;
                    content = fnv_bytes(content, &b.to_le_bytes());
                }
            }
        }
        let sh = second_hash(assigner.family.len(), mix(content))?;
        group.push(GroupRecord { second_hash: sh, orig_id: n.orig_id, tag: MARKER, value: n.id })?;
        {
            let mut it = assigner.family.words()?;
            while let Some(b) = it.next_word()? {
                group.push(GroupRecord { second_hash: sh, orig_id: n.orig_id, tag: FAMILY, value: b })?;
            }
        }
        while let Some(e) = edges.peek()? {
            if e.child > n.id {
                break;
            }
            if e.child < n.id {
                return Err(Error::Invariant(format!("edge ({}, {}) out of step with node stream", e.parent, e.child)));
            }
            group.push(GroupRecord { second_hash: sh, orig_id: n.orig_id, tag: PARENT, value: e.parent })?;
            edges.next_item()?;
        }

        let group_ends = match nodes.peek()? {
            Some(next) => next.group_key() != n.group_key(),
            None => true,
        };
        if group_ends {
            flush_group(&mut group, &mut assigner, &mut queue, &mut output)?;
        }
    }
    if let Some(e) = edges.next_item()? {
        return Err(Error::Invariant(format!("edge ({}, {}) left over after the last node", e.parent, e.child)));
    }
    if let Some(key) = queue.peek_min_key() {
        return Err(Error::Invariant(format!("{} messages left over, first for node {key}", queue.len())));
    }
    let group_spill_bytes = group.spilled_bytes();
    drop((queue, group, family_sorter));
    Ok(PhaseTwo {
        partition: output.into_sequence()?,
        blocks: assigner.last_bisim_id,
        collisions: assigner.collisions,
        group_spill_bytes,
    })
}

fn flush_group<F, G>(
    group: &mut ExternalSorter<Fixed<GroupRecord>, F>,
    assigner: &mut Assigner,
    queue: &mut ExternalPriorityQueue<u64, u64>,
    output: &mut ExternalSorter<Fixed<PartitionRecord>, G>,
) -> Result<()>
where
    F: Fn(&GroupRecord, &GroupRecord) -> std::cmp::Ordering + Clone,
    G: Fn(&PartitionRecord, &PartitionRecord) -> std::cmp::Ordering + Clone,
{
    // The node currently being read: (secondHash, origId, bisimId once known).
    let mut current: Option<(u64, u64, Option<u64>)> = None;
    let mut finish = |current: &mut Option<(u64, u64, Option<u64>)>, assigner: &mut Assigner| -> Result<u64> {
        let (sh, orig, id) = current.as_mut().expect("inside a node");
        if let Some(id) = *id {
            return Ok(id);
        }
        let bid = assigner.assign(*sh)?;
        *id = Some(bid);
        output.push(PartitionRecord::new(*orig, bid))?;
        Ok(bid)
    };
    let mut stream = group.sorted()?;
    while let Some(r) = stream.next_item()? {
        match r.tag {
            MARKER => {
                if current.is_some() {
                    finish(&mut current, assigner)?;
                }
                current = Some((r.second_hash, r.orig_id, None));
                assigner.family.clear();
            }
            FAMILY => assigner.family.push(r.value)?,
            _ => {
                let bid = finish(&mut current, assigner)?;
                queue.insert(r.value, bid)?;
            }
        }
    }
    if current.is_some() {
        finish(&mut current, assigner)?;
    }
    // Families never match across groups.
    assigner.dictionary.words.clear();
    assigner.dictionary_hash = None;
    Ok(())
}
