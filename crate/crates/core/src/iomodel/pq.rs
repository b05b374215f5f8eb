//! External priority queue for time-forward processing.
//!
//! Inserts go to an in-memory heap. When the heap reaches its share of the
//! budget it is sorted and written out as a run; runs are consumed lazily
//! through a merge heap that holds one head entry per run. Runs are organised
//! in levels: once `fan_in` runs share a level they are merged into one run on
//! the next level, so every message is rewritten `O(log_{fan_in}(k/M))` times.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::device::Device;
use super::record::{Fixed, Record};
use super::sequence::{ExternalSequence, Seq, SeqReader};
use crate::error::{Error, Result};

const MAX_LEVELS: u64 = 4;

#[derive(Clone, Copy, Debug)]
struct Entry<K, V> {
    key: K,
    seq: u64,
    val: V,
}

impl<K: Ord, V> PartialEq for Entry<K, V> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq && self.key == other.key
    }
}

impl<K: Ord, V> Eq for Entry<K, V> {}

impl<K: Ord, V> PartialOrd for Entry<K, V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K: Ord, V> Ord for Entry<K, V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key).then(self.seq.cmp(&other.seq))
    }
}

impl<K: Record, V: Record> Record for Entry<K, V> {
    const WIDTH: usize = K::WIDTH + 8 + V::WIDTH;

    fn encode(&self, out: &mut [u8]) {
        self.key.encode(&mut out[..K::WIDTH]);
        self.seq.encode(&mut out[K::WIDTH..K::WIDTH + 8]);
        self.val.encode(&mut out[K::WIDTH + 8..Self::WIDTH]);
    }

    fn decode(buf: &[u8]) -> Self {
        Entry {
            key: K::decode(&buf[..K::WIDTH]),
            seq: u64::decode(&buf[K::WIDTH..K::WIDTH + 8]),
            val: V::decode(&buf[K::WIDTH + 8..Self::WIDTH]),
        }
    }
}

struct Run<K: Record, V: Record> {
    reader: SeqReader<Fixed<Entry<K, V>>>,
    level: u32,
    _file: Seq<Entry<K, V>>,
}

/// Min-priority queue keyed by `K`; equal keys leave in insertion order.
pub struct ExternalPriorityQueue<K: Record, V: Record> {
    heap: BinaryHeap<Reverse<Entry<K, V>>>,
    heap_capacity: usize,
    runs: Vec<Option<Run<K, V>>>,
    heads: BinaryHeap<Reverse<(Entry<K, V>, usize)>>,
    fan_in: usize,
    max_runs: usize,
    next_seq: u64,
    len: u64,
    spilled_bytes: u64,
    device: Device,
}

impl<K, V> ExternalPriorityQueue<K, V>
where
    K: Record + Ord + Copy,
    V: Record + Copy,
{
    /// Creates a queue that keeps at most `budget_bytes` resident: half for
    /// the insertion heap, half for one block buffer per spilled run.
    pub fn new(device: &Device, budget_bytes: u64) -> Self {
        let block = device.block_size() as u64;
        let entry = std::mem::size_of::<Reverse<Entry<K, V>>>().max(Entry::<K, V>::WIDTH) as u64;
        let heap_capacity = ((budget_bytes / 2) / entry).max(1) as usize;
        let run_blocks = ((budget_bytes / 2) / block).max(2);
        let fan_in = (run_blocks / MAX_LEVELS).max(2) as usize;
        ExternalPriorityQueue {
            heap: BinaryHeap::new(),
            heap_capacity,
            runs: Vec::new(),
            heads: BinaryHeap::new(),
            fan_in,
            max_runs: run_blocks as usize,
            next_seq: 0,
            len: 0,
            spilled_bytes: 0,
            device: device.clone(),
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bytes written to spill runs, including compaction rewrites.
    pub fn spilled_bytes(&self) -> u64 {
        self.spilled_bytes
    }

    pub fn insert(&mut self, key: K, val: V) -> Result<()> {
        if self.heap.len() >= self.heap_capacity {
            self.spill_heap()?;
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry { key, seq, val }));
        self.len += 1;
        Ok(())
    }

    pub fn peek_min_key(&self) -> Option<K> {
        self.min_source().map(|(e, _)| e.key)
    }

    /// Removes the entry with the smallest key.
    pub fn extract_min(&mut self) -> Result<(K, V)> {
        let Some((_, from_run)) = self.min_source() else {
            return Err(Error::Precondition("extract from an empty priority queue".into()));
        };
        let entry = if from_run {
            let Reverse((entry, slot)) = self.heads.pop().unwrap();
            self.advance(slot)?;
            entry
        } else {
            self.heap.pop().unwrap().0
        };
        self.len -= 1;
        Ok((entry.key, entry.val))
    }

    /// Extracts the minimum entry if its key equals `key`.
    pub fn extract_if_key(&mut self, key: &K) -> Result<Option<V>> {
        match self.peek_min_key() {
            Some(k) if k == *key => Ok(Some(self.extract_min()?.1)),
            _ => Ok(None),
        }
    }

    fn min_source(&self) -> Option<(Entry<K, V>, bool)> {
        match (self.heap.peek(), self.heads.peek()) {
            (None, None) => None,
            (Some(Reverse(h)), None) => Some((*h, false)),
            (None, Some(Reverse((r, _)))) => Some((*r, true)),
            (Some(Reverse(h)), Some(Reverse((r, _)))) => {
                if r < h {
                    Some((*r, true))
                } else {
                    Some((*h, false))
                }
            }
        }
    }

    fn advance(&mut self, slot: usize) -> Result<()> {
        let run = self.runs[slot].as_mut().unwrap();
        match run.reader.next_item()? {
            Some(next) => self.heads.push(Reverse((next, slot))),
            None => self.runs[slot] = None,
        }
        Ok(())
    }

    fn spill_heap(&mut self) -> Result<()> {
        let mut entries: Vec<Entry<K, V>> =
            std::mem::take(&mut self.heap).into_vec().into_iter().map(|r| r.0).collect();
        entries.sort_unstable();
        let mut w = ExternalSequence::spill_records(&self.device)?;
        for e in &entries {
            w.push(e)?;
        }
        drop(entries);
        self.add_run(w.finish()?, 0)?;
        self.compact()
    }

    fn add_run(&mut self, file: Seq<Entry<K, V>>, level: u32) -> Result<()> {
        self.spilled_bytes += file.len() * Entry::<K, V>::WIDTH as u64;
        let mut reader = file.reader()?;
        let Some(head) = reader.next_item()? else {
            return Ok(());
        };
        let slot = match self.runs.iter().position(Option::is_none) {
            Some(free) => free,
            None => {
                self.runs.push(None);
                self.runs.len() - 1
            }
        };
        self.runs[slot] = Some(Run { reader, level, _file: file });
        self.heads.push(Reverse((head, slot)));
        Ok(())
    }

    fn compact(&mut self) -> Result<()> {
        loop {
            let live: Vec<(usize, u32)> = self
                .runs
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.as_ref().map(|r| (i, r.level)))
                .collect();
            let mut per_level = std::collections::BTreeMap::<u32, Vec<usize>>::new();
            for &(slot, level) in &live {
                per_level.entry(level).or_default().push(slot);
            }
            let full = per_level.iter().find(|(_, slots)| slots.len() >= self.fan_in);
            let victim = match full {
                Some((&level, slots)) => Some((level, slots.clone())),
                None if live.len() > self.max_runs => {
                    per_level.into_iter().find(|(_, s)| s.len() >= 2)
                }
                None => None,
            };
            let Some((level, slots)) = victim else {
                return Ok(());
            };
            self.merge_runs(&slots, level + 1)?;
        }
    }

    fn merge_runs(&mut self, slots: &[usize], level: u32) -> Result<()> {
        let mut merge = BinaryHeap::new();
        let mut rest = BinaryHeap::new();
        for Reverse((e, slot)) in std::mem::take(&mut self.heads) {
            if slots.contains(&slot) {
                merge.push(Reverse((e, slot)));
            } else {
                rest.push(Reverse((e, slot)));
            }
        }
        self.heads = rest;
        let mut w = ExternalSequence::spill_records(&self.device)?;
        while let Some(Reverse((e, slot))) = merge.pop() {
            w.push(&e)?;
            let run = self.runs[slot].as_mut().unwrap();
            if let Some(next) = run.reader.next_item()? {
                merge.push(Reverse((next, slot)));
            }
        }
        for &slot in slots {
            self.runs[slot] = None;
        }
        self.add_run(w.finish()?, level)
    }
}
