use crate::error::Result;
use crate::iomodel::{Device, Fixed, Seq, SeqReader, SeqWriter};

/// Append-only list of words: the first `cap` stay in memory, the rest
/// spill to sequential files. Reading replays memory first, then the files
/// in append order.
pub(crate) struct WordBuffer {
    mem: Vec<u64>,
    cap: usize,
    writer: Option<SeqWriter<Fixed<u64>>>,
    chunks: Vec<Seq<u64>>,
    len: u64,
    device: Device,
}

impl WordBuffer {
    pub(crate) fn new(device: &Device, cap_bytes: u64) -> Self {
        WordBuffer {
            mem: Vec::new(),
            cap: (cap_bytes / 8).max(1) as usize,
            writer: None,
            chunks: Vec::new(),
            len: 0,
            device: device.clone(),
        }
    }

    pub(crate) fn len(&self) -> u64 {
        self.len
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub(crate) fn clear(&mut self) {
        self.mem.clear();
        self.writer = None;
        self.chunks.clear();
        self.len = 0;
    }

    pub(crate) fn push(&mut self, w: u64) -> Result<()> {
        self.len += 1;
        if self.mem.len() < self.cap {
            self.mem.push(w);
            return Ok(());
        }
        if self.writer.is_none() {
            self.writer = Some(Seq::spill_records(&self.device)?);
        }
        self.writer.as_mut().unwrap().push(&w)
    }

    pub(crate) fn words(&mut self) -> Result<Words<'_>> {
        if let Some(w) = self.writer.take() {
            self.chunks.push(w.finish()?);
        }
        Ok(Words { mem: self.mem.iter(), chunks: self.chunks.iter(), current: None })
    }
}

pub(crate) struct Words<'a> {
    mem: std::slice::Iter<'a, u64>,
    chunks: std::slice::Iter<'a, Seq<u64>>,
    current: Option<SeqReader<Fixed<u64>>>,
}

impl Words<'_> {
    pub(crate) fn next_word(&mut self) -> Result<Option<u64>> {
        if let Some(&w) = self.mem.next() {
            return Ok(Some(w));
        }
        loop {
            if let Some(r) = self.current.as_mut() {
                if let Some(w) = r.next_item()? {
                    return Ok(Some(w));
                }
            }
            match self.chunks.next() {
                Some(c) => self.current = Some(c.reader()?),
                None => return Ok(None),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iomodel::MachineConfig;

    #[test]
    fn spills_past_capacity_and_replays_in_order() {
        let dev = Device::new(MachineConfig::new(1 << 14, 256)).unwrap();
        let mut b = WordBuffer::new(&dev, 32);
        for i in 0..10 {
            b.push(i).unwrap();
        }
        let mut out = Vec::new();
        let mut w = b.words().unwrap();
        while let Some(x) = w.next_word().unwrap() {
            out.push(x);
        }
        drop(w);
        b.push(10).unwrap();
        let mut w = b.words().unwrap();
        let mut n = 0;
        while w.next_word().unwrap().is_some() {
            n += 1;
        }
        assert_eq!(out, (0..10).collect::<Vec<_>>());
        assert_eq!((n, b.len()), (11, 11));
        assert!(dev.stats().writes > 0);
    }
}
