//! External merge sort: memory-sized sorted runs followed by multiway merging
//! with fan-in `⌊M/B⌋ − 1`.
//!
//! Sorting is stable. The final merge pass is streamed to the consumer instead
//! of being written back, so a sort whose input fits in its budget performs no
//! IO at all beyond reading the input and writing the result.

use std::cmp::Ordering;

use super::device::Device;
use super::record::Codec;
use super::sequence::{ExternalSequence, SeqReader};
use crate::error::Result;

/// Accumulates records and yields them in sorted order, spilling sorted runs
/// to the device whenever the in-memory buffer exceeds its byte budget.
///
/// A sorter can be reused: after its [`sorted`](Self::sorted) stream is dropped
/// it is empty again.
pub struct ExternalSorter<C: Codec, F> {
    codec: C,
    cmp: F,
    buf: Vec<C::Item>,
    capacity: usize,
    fan_in: usize,
    runs: Vec<ExternalSequence<C>>,
    spilled_bytes: u64,
    device: Device,
}

impl<C, F> ExternalSorter<C, F>
where
    C: Codec,
    F: Fn(&C::Item, &C::Item) -> Ordering + Clone,
{
    pub fn new(device: &Device, codec: C, budget_bytes: u64, cmp: F) -> Self {
        let block = device.block_size() as u64;
        let item = codec.width().max(std::mem::size_of::<C::Item>()).max(1) as u64;
        let capacity = (budget_bytes / item).max(2) as usize;
        let fan_in = ((budget_bytes / block).saturating_sub(1)).max(2) as usize;
        ExternalSorter {
            codec,
            cmp,
            buf: Vec::new(),
            capacity,
            fan_in,
            runs: Vec::new(),
            spilled_bytes: 0,
            device: device.clone(),
        }
    }

    #[inline]
    pub fn push(&mut self, item: C::Item) -> Result<()> {
        if self.buf.len() == self.capacity {
            self.spill_buffer()?;
        }
        if self.buf.len() == self.buf.capacity() {
            let grow = self.buf.capacity().max(64).min(self.capacity - self.buf.len());
            self.buf.reserve_exact(grow);
        }
        self.buf.push(item);
        Ok(())
    }

    /// Bytes written to spill runs over the sorter's lifetime.
    pub fn spilled_bytes(&self) -> u64 {
        self.spilled_bytes
    }

    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty() && self.runs.is_empty()
    }

    fn spill_buffer(&mut self) -> Result<()> {
        let cmp = self.cmp.clone();
        self.buf.sort_by(|a, b| cmp(a, b));
        let mut w = ExternalSequence::spill(&self.device, self.codec.clone())?;
        for item in self.buf.drain(..) {
            w.push(&item)?;
        }
        let run = w.finish()?;
        self.spilled_bytes += run.len() * run.width_bytes();
        self.runs.push(run);
        Ok(())
    }

    /// Drains the sorter in order.
    pub fn sorted(&mut self) -> Result<SortedStream<'_, C, F>> {
        if self.runs.is_empty() {
            let cmp = self.cmp.clone();
            self.buf.sort_by(|a, b| cmp(a, b));
            return Ok(SortedStream::Memory(self.buf.drain(..)));
        }
        if !self.buf.is_empty() {
            self.spill_buffer()?;
        }
        // The run buffer is not needed while merging.
        self.buf = Vec::new();
        let mut runs = std::mem::take(&mut self.runs);
        while runs.len() > self.fan_in {
            let mut next = Vec::with_capacity(runs.len().div_ceil(self.fan_in));
            let mut pending = runs.into_iter().peekable();
            while pending.peek().is_some() {
                let group: Vec<_> = pending.by_ref().take(self.fan_in).collect();
                if group.len() == 1 {
                    next.extend(group);
                    continue;
                }
                let mut merge = KMerge::new(group, self.cmp.clone())?;
                let mut w = ExternalSequence::spill(&self.device, self.codec.clone())?;
                while let Some(item) = merge.next_item()? {
                    w.push(&item)?;
                }
                let run = w.finish()?;
                self.spilled_bytes += run.len() * run.width_bytes();
                next.push(run);
            }
            runs = next;
        }
        Ok(SortedStream::Merge(KMerge::new(runs, self.cmp.clone())?))
    }

    /// Drains the sorter into a new spill sequence.
    pub fn into_sequence(mut self) -> Result<ExternalSequence<C>> {
        let mut w = ExternalSequence::spill(&self.device, self.codec.clone())?;
        let mut stream = self.sorted()?;
        while let Some(item) = stream.next_item()? {
            w.push(&item)?;
        }
        w.finish()
    }
}

/// Sorted output of an [`ExternalSorter`].
pub enum SortedStream<'a, C: Codec, F> {
    Memory(std::vec::Drain<'a, C::Item>),
    Merge(KMerge<C, F>),
}

impl<C, F> SortedStream<'_, C, F>
where
    C: Codec,
    F: Fn(&C::Item, &C::Item) -> Ordering,
{
    pub fn next_item(&mut self) -> Result<Option<C::Item>> {
        match self {
            SortedStream::Memory(drain) => Ok(drain.next()),
            SortedStream::Merge(merge) => merge.next_item(),
        }
    }
}

impl<C, F> Iterator for SortedStream<'_, C, F>
where
    C: Codec,
    F: Fn(&C::Item, &C::Item) -> Ordering,
{
    type Item = Result<C::Item>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_item().transpose()
    }
}

/// Stable multiway merge of sorted runs; ties go to the earlier run.
pub struct KMerge<C: Codec, F> {
    readers: Vec<SeqReader<C>>,
    heads: Vec<Option<C::Item>>,
    heap: Vec<usize>,
    cmp: F,
    _runs: Vec<ExternalSequence<C>>,
}

impl<C, F> KMerge<C, F>
where
    C: Codec,
    F: Fn(&C::Item, &C::Item) -> Ordering,
{
    pub fn new(runs: Vec<ExternalSequence<C>>, cmp: F) -> Result<Self> {
        let mut readers = Vec::with_capacity(runs.len());
        let mut heads = Vec::with_capacity(runs.len());
        for run in &runs {
            let mut r = run.reader()?;
            heads.push(r.next_item()?);
            readers.push(r);
        }
        let mut m = KMerge { readers, heads, heap: Vec::new(), cmp, _runs: runs };
        for i in 0..m.heads.len() {
            if m.heads[i].is_some() {
                m.heap.push(i);
                m.sift_up(m.heap.len() - 1);
            }
        }
        Ok(m)
    }

    #[inline]
    fn less(&self, a: usize, b: usize) -> bool {
        let (x, y) = (self.heads[a].as_ref().unwrap(), self.heads[b].as_ref().unwrap());
        match (self.cmp)(x, y) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a < b,
        }
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let p = (i - 1) / 2;
            if self.less(self.heap[i], self.heap[p]) {
                self.heap.swap(i, p);
                i = p;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut m = i;
            if l < n && self.less(self.heap[l], self.heap[m]) {
                m = l;
            }
            if r < n && self.less(self.heap[r], self.heap[m]) {
                m = r;
            }
            if m == i {
                break;
            }
            self.heap.swap(i, m);
            i = m;
        }
    }

    pub fn next_item(&mut self) -> Result<Option<C::Item>> {
        let Some(&top) = self.heap.first() else {
            return Ok(None);
        };
        let item = self.heads[top].take();
        self.heads[top] = self.readers[top].next_item()?;
        if self.heads[top].is_none() {
            let last = self.heap.pop().unwrap();
            if !self.heap.is_empty() {
                self.heap[0] = last;
            }
        }
        if !self.heap.is_empty() {
            self.sift_down(0);
        }
        Ok(item)
    }
}

/// Sorts a whole sequence under the device's full memory budget.
pub fn external_sort<C, F>(seq: &ExternalSequence<C>, cmp: F) -> Result<ExternalSequence<C>>
where
    C: Codec,
    F: Fn(&C::Item, &C::Item) -> Ordering + Clone,
{
    let device = seq.device();
    // One block each for the input cursor and the output writer.
    let budget = device.memory_budget() - 2 * device.block_size() as u64;
    let mut sorter = ExternalSorter::new(device, seq.codec().clone(), budget, cmp);
    let mut r = seq.reader()?;
    while let Some(item) = r.next_item()? {
        sorter.push(item)?;
    }
    drop(r);
    sorter.into_sequence()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iomodel::{MachineConfig, Seq};

    fn device(m: u64, b: u64) -> Device {
        Device::new(MachineConfig::new(m, b)).unwrap()
    }

    #[test]
    fn reverse_sorted_becomes_ascending() {
        let dev = device(4096, 256);
        let seq = Seq::from_records(&dev, (1..=1000u64).rev()).unwrap();
        let out = external_sort(&seq, |a: &u64, b: &u64| a.cmp(b)).unwrap();
        assert_eq!(out.to_vec().unwrap(), (1..=1000).collect::<Vec<_>>());
    }

    #[test]
    fn stable_on_equal_keys_across_runs() {
        let dev = device(1024, 128);
        let items: Vec<(u64, u64)> = (0..2000).map(|i| ((i * 7919) % 13, i)).collect();
        let seq = Seq::from_records(&dev, items.clone()).unwrap();
        let out = external_sort(&seq, |a: &(u64, u64), b: &(u64, u64)| a.0.cmp(&b.0)).unwrap();
        let mut expected = items;
        expected.sort_by_key(|x| x.0);
        assert_eq!(out.to_vec().unwrap(), expected);
    }

    #[test]
    fn multi_pass_merge_when_runs_exceed_fan_in() {
        // 3 blocks of 64 bytes: fan-in 2, runs of 24 records.
        let dev = device(192, 64);
        let items: Vec<u64> = (0..500).map(|i| (i * 104729) % 977).collect();
        let mut sorter = ExternalSorter::new(&dev, crate::iomodel::Fixed::<u64>::new(), 192, u64::cmp);
        assert_eq!(sorter.fan_in(), 2);
        for &x in &items {
            sorter.push(x).unwrap();
        }
        let got: Vec<u64> = sorter.sorted().unwrap().collect::<Result<_>>().unwrap();
        let mut expected = items;
        expected.sort();
        assert_eq!(got, expected);
        assert!(sorter.spilled_bytes() > 500 * 8);
        assert!(sorter.is_empty());
    }

    #[test]
    fn in_memory_sort_reads_once_and_writes_once() {
        let dev = device(1 << 20, 4096);
        let seq = Seq::from_records(&dev, 0..10_000u64).unwrap();
        let before = dev.stats();
        let out = external_sort(&seq, u64::cmp).unwrap();
        let io = dev.stats() - before;
        let blocks = (13 + 80_000u64).div_ceil(4096);
        assert_eq!(io.reads, blocks);
        assert_eq!(io.writes, blocks + 1);
        assert_eq!(out.len(), 10_000);
    }
}
