//! Block-buffered sequences of fixed-width records.
//!
//! Every sequence file starts with a 13-byte header: a 5-byte magic followed by
//! the little-endian `u64` record count. Records follow back to back and may
//! straddle block boundaries; each transfer of up to `B` bytes is one IO.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::device::Device;
use super::record::{Codec, Fixed, Record};
use crate::error::{Error, Result};

pub const HEADER_LEN: usize = 13;

/// A file of records, accessed only through sequential cursors.
pub struct ExternalSequence<C: Codec> {
    codec: C,
    path: PathBuf,
    len: u64,
    temporary: bool,
    device: Device,
}

/// Sequence of a [`Record`] type.
pub type Seq<T> = ExternalSequence<Fixed<T>>;

impl<C: Codec> std::fmt::Debug for ExternalSequence<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalSequence")
            .field("path", &self.path)
            .field("len", &self.len)
            .field("width", &self.codec.width())
            .finish()
    }
}

impl<C: Codec> Drop for ExternalSequence<C> {
    fn drop(&mut self) {
        if self.temporary {
            let _ = std::fs::remove_file(&self.path);
        }
    }
}

impl<C: Codec> ExternalSequence<C> {
    /// Starts a private spill sequence, deleted when dropped.
    pub fn spill(device: &Device, codec: C) -> Result<SeqWriter<C>> {
        let path = device.spill_path("seq");
        SeqWriter::open(device, codec, path, true)
    }

    /// Starts a persistent sequence file at `path`.
    pub fn create(device: &Device, codec: C, path: impl AsRef<Path>) -> Result<SeqWriter<C>> {
        SeqWriter::open(device, codec, path.as_ref().to_path_buf(), false)
    }

    /// Opens an existing sequence file, checking its magic and length.
    pub fn open(device: &Device, codec: C, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = File::open(&path).map_err(|e| Error::storage(&path, e))?;
        let mut header = [0u8; HEADER_LEN];
        file.read_exact(&mut header)
            .map_err(|_| Error::format(&path, "file shorter than the 13-byte header"))?;
        device.count_read(HEADER_LEN);
        if header[..5] != codec.magic() {
            return Err(Error::format(
                &path,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(&header[..5]),
                    String::from_utf8_lossy(&codec.magic())
                ),
            ));
        }
        let len = u64::from_le_bytes(header[5..].try_into().unwrap());
        let size = file.metadata().map_err(|e| Error::storage(&path, e))?.len();
        let expected = HEADER_LEN as u64 + len * codec.width() as u64;
        if size != expected {
            return Err(Error::format(
                &path,
                format!("header declares {len} records ({expected} bytes) but file has {size} bytes"),
            ));
        }
        Ok(ExternalSequence { codec, path, len, temporary: false, device: device.clone() })
    }

    pub fn from_iter<I>(device: &Device, codec: C, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = C::Item>,
    {
        let mut w = Self::spill(device, codec)?;
        for item in items {
            w.push(&item)?;
        }
        w.finish()
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn codec(&self) -> &C {
        &self.codec
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn width_bytes(&self) -> u64 {
        self.codec.width() as u64
    }

    pub fn reader(&self) -> Result<SeqReader<C>> {
        SeqReader::open(self)
    }

    /// Moves the sequence to `path` and keeps it after drop.
    pub fn persist(mut self, path: impl AsRef<Path>) -> Result<Self> {
        let target = path.as_ref().to_path_buf();
        if std::fs::rename(&self.path, &target).is_err() {
            std::fs::copy(&self.path, &target).map_err(|e| Error::storage(&target, e))?;
            if self.temporary {
                let _ = std::fs::remove_file(&self.path);
            }
        }
        self.path = target;
        self.temporary = false;
        Ok(self)
    }

    /// Reads the whole sequence into memory.
    pub fn to_vec(&self) -> Result<Vec<C::Item>> {
        self.reader()?.collect()
    }
}

/// Append cursor; produces an [`ExternalSequence`] on [`finish`](SeqWriter::finish).
pub struct SeqWriter<C: Codec> {
    codec: C,
    file: File,
    path: PathBuf,
    buf: Vec<u8>,
    block: usize,
    flushed_any: bool,
    len: u64,
    temporary: bool,
    device: Device,
}

impl<C: Codec> SeqWriter<C> {
    fn open(device: &Device, codec: C, path: PathBuf, temporary: bool) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&path)
            .map_err(|e| Error::storage(&path, e))?;
        let block = device.block_size();
        let mut buf = Vec::with_capacity(block);
        buf.extend_from_slice(&codec.magic());
        buf.extend_from_slice(&0u64.to_le_bytes());
        Ok(SeqWriter {
            codec,
            file,
            path,
            buf,
            block,
            flushed_any: false,
            len: 0,
            temporary,
            device: device.clone(),
        })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn push(&mut self, item: &C::Item) -> Result<()> {
        let w = self.codec.width();
        let start = self.buf.len();
        if start + w <= self.block {
            self.buf.resize(start + w, 0);
            self.codec.encode(item, &mut self.buf[start..]);
        } else {
            let mut scratch = vec![0u8; w];
            self.codec.encode(item, &mut scratch);
            let mut rest = &scratch[..];
            while !rest.is_empty() {
                let room = self.block - self.buf.len();
                let take = room.min(rest.len());
                self.buf.extend_from_slice(&rest[..take]);
                rest = &rest[take..];
                if self.buf.len() == self.block {
                    self.flush_block()?;
                }
            }
        }
        if self.buf.len() == self.block {
            self.flush_block()?;
        }
        self.len += 1;
        Ok(())
    }

    fn flush_block(&mut self) -> Result<()> {
        if self.buf.is_empty() {
            return Ok(());
        }
        self.file.write_all(&self.buf).map_err(|e| Error::storage(&self.path, e))?;
        self.device.count_write(self.buf.len());
        self.buf.clear();
        self.flushed_any = true;
        Ok(())
    }

    pub fn finish(mut self) -> Result<ExternalSequence<C>> {
        if !self.flushed_any {
            self.buf[5..HEADER_LEN].copy_from_slice(&self.len.to_le_bytes());
            self.flush_block()?;
        } else {
            self.flush_block()?;
            self.file
                .seek(SeekFrom::Start(5))
                .and_then(|_| self.file.write_all(&self.len.to_le_bytes()))
                .map_err(|e| Error::storage(&self.path, e))?;
            self.device.count_write(8);
        }
        self.file.flush().map_err(|e| Error::storage(&self.path, e))?;
        let seq = ExternalSequence {
            codec: self.codec.clone(),
            path: std::mem::take(&mut self.path),
            len: self.len,
            temporary: self.temporary,
            device: self.device.clone(),
        };
        self.temporary = false;
        Ok(seq)
    }
}

impl<C: Codec> Drop for SeqWriter<C> {
    fn drop(&mut self) {
        // Abandoned spill writers must not leak files.
        if self.temporary && !self.path.as_os_str().is_empty() {
            let _ = std::fs::remove_file(&self.path);
        }
    }
}

/// Forward cursor over a sequence with one record of lookahead.
pub struct SeqReader<C: Codec> {
    codec: C,
    file: File,
    path: PathBuf,
    buf: Vec<u8>,
    pos: usize,
    filled: usize,
    remaining: u64,
    head: Option<C::Item>,
    scratch: Vec<u8>,
    device: Device,
}

impl<C: Codec> SeqReader<C> {
    fn open(seq: &ExternalSequence<C>) -> Result<Self> {
        let file = File::open(&seq.path).map_err(|e| Error::storage(&seq.path, e))?;
        let mut r = SeqReader {
            codec: seq.codec.clone(),
            file,
            path: seq.path.clone(),
            buf: vec![0u8; seq.device.block_size()],
            pos: 0,
            filled: 0,
            remaining: seq.len,
            head: None,
            scratch: vec![0u8; seq.codec.width()],
            device: seq.device.clone(),
        };
        r.fill()?;
        if r.filled < HEADER_LEN {
            return Err(Error::format(&seq.path, "truncated header"));
        }
        r.pos = HEADER_LEN;
        Ok(r)
    }

    fn fill(&mut self) -> Result<()> {
        let mut n = 0;
        while n < self.buf.len() {
            let got = self.file.read(&mut self.buf[n..]).map_err(|e| Error::storage(&self.path, e))?;
            if got == 0 {
                break;
            }
            n += got;
        }
        if n > 0 {
            self.device.count_read(n);
        }
        self.filled = n;
        self.pos = 0;
        Ok(())
    }

    fn decode_next(&mut self) -> Result<Option<C::Item>> {
        if self.remaining == 0 {
            return Ok(None);
        }
        let w = self.codec.width();
        if self.pos == self.filled {
            self.fill()?;
        }
        let item = if self.pos + w <= self.filled {
            let item = self.codec.decode(&self.buf[self.pos..self.pos + w]);
            self.pos += w;
            item
        } else {
            let mut got = 0;
            while got < w {
                if self.pos == self.filled {
                    self.fill()?;
                    if self.filled == 0 {
                        return Err(Error::format(&self.path, "sequence ends mid-record"));
                    }
                }
                let take = (w - got).min(self.filled - self.pos);
                self.scratch[got..got + take].copy_from_slice(&self.buf[self.pos..self.pos + take]);
                self.pos += take;
                got += take;
            }
            self.codec.decode(&self.scratch)
        };
        self.remaining -= 1;
        Ok(Some(item))
    }

    /// Returns the next record without consuming it.
    pub fn peek(&mut self) -> Result<Option<&C::Item>> {
        if self.head.is_none() {
            self.head = self.decode_next()?;
        }
        Ok(self.head.as_ref())
    }

    pub fn next_item(&mut self) -> Result<Option<C::Item>> {
        match self.head.take() {
            Some(item) => Ok(Some(item)),
            None => self.decode_next(),
        }
    }

    /// Records not yet consumed.
    pub fn remaining(&self) -> u64 {
        self.remaining + u64::from(self.head.is_some())
    }
}

impl<C: Codec> Iterator for SeqReader<C> {
    type Item = Result<C::Item>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_item().transpose()
    }
}

impl<T: Record> ExternalSequence<Fixed<T>> {
    pub fn spill_records(device: &Device) -> Result<SeqWriter<Fixed<T>>> {
        Self::spill(device, Fixed::new())
    }

    pub fn from_records<I: IntoIterator<Item = T>>(device: &Device, items: I) -> Result<Self> {
        Self::from_iter(device, Fixed::new(), items)
    }

    pub fn open_records(device: &Device, path: impl AsRef<Path>) -> Result<Self> {
        Self::open(device, Fixed::new(), path)
    }

    pub fn create_records(device: &Device, path: impl AsRef<Path>) -> Result<SeqWriter<Fixed<T>>> {
        Self::create(device, Fixed::new(), path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iomodel::MachineConfig;

    fn device(block: u64) -> Device {
        Device::new(MachineConfig::new(64 * block, block)).unwrap()
    }

    #[test]
    fn records_straddle_blocks() {
        let dev = device(64);
        let items: Vec<(u64, u32)> = (0..100).map(|i| (i * 3, i as u32)).collect();
        let seq = Seq::from_records(&dev, items.clone()).unwrap();
        assert_eq!(seq.len(), 100);
        assert_eq!(seq.to_vec().unwrap(), items);
    }

    #[test]
    fn write_counts_match_scan_cost() {
        let dev = device(64);
        let before = dev.stats();
        let seq = Seq::from_records(&dev, 0u64..1000).unwrap();
        let bytes = HEADER_LEN as u64 + 8000;
        let w = dev.stats() - before;
        // One extra write patches the record count.
        assert_eq!(w.writes, bytes.div_ceil(64) + 1);
        let before = dev.stats();
        let _ = seq.to_vec().unwrap();
        assert_eq!((dev.stats() - before).reads, bytes.div_ceil(64));
    }

    #[test]
    fn spill_file_removed_on_drop() {
        let dev = device(64);
        let seq = Seq::from_records(&dev, 0u64..10).unwrap();
        let path = seq.path().to_path_buf();
        assert!(path.exists());
        drop(seq);
        assert!(!path.exists());
    }

    #[test]
    fn open_checks_magic_and_length() {
        let dev = device(64);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let seq = Seq::from_records(&dev, 0u64..5).unwrap().persist(&path).unwrap();
        drop(seq);
        assert!(path.exists());
        assert_eq!(Seq::<u64>::open_records(&dev, &path).unwrap().to_vec().unwrap(), vec![0, 1, 2, 3, 4]);
        let mut raw = std::fs::read(&path).unwrap();
        raw.push(0);
        std::fs::write(&path, &raw).unwrap();
        assert!(matches!(Seq::<u64>::open_records(&dev, &path), Err(Error::Format { .. })));
        raw[0] = b'Z';
        std::fs::write(&path, &raw).unwrap();
        assert!(matches!(Seq::<u64>::open_records(&dev, &path), Err(Error::Format { .. })));
    }

    #[test]
    fn peek_does_not_consume() {
        let dev = device(64);
        let seq = Seq::from_records(&dev, [7u64, 8]).unwrap();
        let mut r = seq.reader().unwrap();
        assert_eq!(r.peek().unwrap(), Some(&7));
        assert_eq!(r.remaining(), 2);
        assert_eq!(r.next_item().unwrap(), Some(7));
        assert_eq!(r.next_item().unwrap(), Some(8));
        assert_eq!(r.peek().unwrap(), None);
    }
}
