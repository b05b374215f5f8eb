use super::scan::{TagEvent, TagKind};
use crate::error::{Error, Result};
use crate::graphio::{PartitionRecord, CURSOR_BLOCKS};
use crate::iomodel::{get_u32, get_u64, memory_shares, put_u32, put_u64, Codec, Device, ExternalSorter, Fixed, Seq};

/// Label code padding traces of nodes closer than `k` to the root.
pub const LAMBDA: u32 = 0;

/// A node's last `k + 1` root-path labels, front-padded with [`LAMBDA`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Trace {
    pub labels: Box<[u32]>,
    pub orig_id: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct TraceCodec {
    len: usize,
}

impl TraceCodec {
    pub fn new(len: usize) -> Self {
        TraceCodec { len }
    }
}

impl Codec for TraceCodec {
    type Item = Trace;

    fn width(&self) -> usize {
        4 * self.len + 8
    }

    fn magic(&self) -> [u8; 5] {
        *b"EXBK1"
    }

    fn encode(&self, t: &Trace, out: &mut [u8]) {
        for (i, &l) in t.labels.iter().enumerate() {
            put_u32(out, 4 * i, l);
        }
        put_u64(out, 4 * self.len, t.orig_id);
    }

    fn decode(&self, buf: &[u8]) -> Trace {
        Trace { labels: (0..self.len).map(|i| get_u32(buf, 4 * i)).collect(), orig_id: get_u64(buf, 4 * self.len) }
    }
}

pub struct TracePartition {
    /// `(origId, bisimId)` sorted by `origId`; block ids `1..=blocks`.
    pub partition: Seq<PartitionRecord>,
    pub blocks: u64,
}

/// A(k)-index: nodes share a block iff their (k+1)-traces are equal.
pub fn ak_partition<I>(events: I, k: usize, device: &Device) -> Result<TracePartition>
where
    I: IntoIterator<Item = Result<TagEvent>>,
{
    let len = k.checked_add(1).ok_or_else(|| Error::Precondition("k is too large".into()))?;
    let codec = TraceCodec::new(len);
    let [trace_share, out_share] = memory_shares(device.memory_budget(), device.block_size() as u64, CURSOR_BLOCKS, [3, 1]);
    // Decoded traces live on the heap: charge pointer, length and allocator slack.
    let trace_share = trace_share * codec.width() as u64 / (codec.width() as u64 + 40);
    let mut traces = ExternalSorter::new(device, codec, trace_share, |a: &Trace, b: &Trace| a.cmp(b));

    let mut stack: Vec<u32> = Vec::new();
    for ev in events {
        let ev = ev?;
        match ev.kind {
            TagKind::Start => {
                if ev.label == LAMBDA {
                    return Err(Error::Precondition(format!("node {} carries the reserved label 0", ev.orig_id)));
                }
                stack.push(ev.label);
                let pad = len.saturating_sub(stack.len());
                let tail = &stack[stack.len() - (len - pad)..];
                let labels: Box<[u32]> = std::iter::repeat_n(LAMBDA, pad).chain(tail.iter().copied()).collect();
                traces.push(Trace { labels, orig_id: ev.orig_id })?;
            }
            TagKind::End => {
                if stack.pop().is_none() {
                    return Err(Error::Parse { offset: 0, reason: format!("end of element {} below depth 0", ev.orig_id) });
                }
            }
        }
    }

    let mut out = ExternalSorter::new(device, Fixed::<PartitionRecord>::new(), out_share, |a: &PartitionRecord, b: &PartitionRecord| {
        a.orig_id.cmp(&b.orig_id)
    });
    let mut blocks = 0u64;
    let mut prev: Option<Box<[u32]>> = None;
    let mut stream = traces.sorted()?;
    while let Some(t) = stream.next_item()? {
        if prev.as_ref() != Some(&t.labels) {
            blocks += 1;
            prev = Some(t.labels);
        }
        out.push(PartitionRecord::new(t.orig_id, blocks))?;
    }
    drop(stream);
    drop(traces);
    Ok(TracePartition { partition: out.into_sequence()?, blocks })
}
