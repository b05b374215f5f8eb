use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::PathBuf;

use super::device::Device;
use crate::error::{Error, Result};

struct Cached {
    index: u64,
    words: Vec<u64>,
    dirty: bool,
}

/// Growable array of `u64` counters stored on the device, with only the two
/// most recently used blocks resident.
///
/// Reading an entry past the end yields 0 and extends the array.
pub struct BlockArray {
    file: File,
    path: PathBuf,
    words_per_block: usize,
    blocks_on_disk: u64,
    len: u64,
    // cache[0] is the most recently used block.
    cache: Vec<Cached>,
    device: Device,
}

impl BlockArray {
    pub fn new(device: &Device) -> Result<Self> {
        let path = device.spill_path("array");
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .write(true)
            .truncate(true)
            .open(&path)
            .map_err(|e| Error::storage(&path, e))?;
        Ok(BlockArray {
            file,
            path,
            words_per_block: device.block_size() / 8,
            blocks_on_disk: 0,
            len: 0,
            cache: Vec::with_capacity(2),
            device: device.clone(),
        })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&mut self, i: u64) -> Result<u64> {
        self.len = self.len.max(i + 1);
        let (block, off) = self.locate(i);
        let c = self.load(block)?;
        Ok(c.words[off])
    }

    pub fn set(&mut self, i: u64, v: u64) -> Result<()> {
        self.len = self.len.max(i + 1);
        let (block, off) = self.locate(i);
        let c = self.load(block)?;
        c.words[off] = v;
        c.dirty = true;
        Ok(())
    }

    fn locate(&self, i: u64) -> (u64, usize) {
        (i / self.words_per_block as u64, (i % self.words_per_block as u64) as usize)
    }

    fn load(&mut self, block: u64) -> Result<&mut Cached> {
        if let Some(pos) = self.cache.iter().position(|c| c.index == block) {
            if pos != 0 {
                self.cache.swap(0, pos);
            }
            return Ok(&mut self.cache[0]);
        }
        if self.cache.len() == 2 {
            let evicted = self.cache.pop().unwrap();
            self.write_back(evicted)?;
        }
        let mut words = vec![0u64; self.words_per_block];
        if block < self.blocks_on_disk {
            let mut raw = vec![0u8; self.words_per_block * 8];
            self.file
                .seek(SeekFrom::Start(block * raw.len() as u64))
                .and_then(|_| self.file.read_exact(&mut raw))
                .map_err(|e| Error::storage(&self.path, e))?;
            self.device.count_read(raw.len());
            for (w, chunk) in words.iter_mut().zip(raw.chunks_exact(8)) {
                *w = u64::from_le_bytes(chunk.try_into().unwrap());
            }
        }
        self.cache.insert(0, Cached { index: block, words, dirty: false });
        Ok(&mut self.cache[0])
    }

    fn write_back(&mut self, c: Cached) -> Result<()> {
        if !c.dirty {
            return Ok(());
        }
        let raw: Vec<u8> = c.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        self.file
            .seek(SeekFrom::Start(c.index * raw.len() as u64))
            .and_then(|_| self.file.write_all(&raw))
            .map_err(|e| Error::storage(&self.path, e))?;
        self.device.count_write(raw.len());
        self.blocks_on_disk = self.blocks_on_disk.max(c.index + 1);
        Ok(())
    }
}

impl Drop for BlockArray {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iomodel::MachineConfig;

    #[test]
    fn values_survive_eviction() {
        let dev = Device::new(MachineConfig::new(1024, 64)).unwrap();
        let mut a = BlockArray::new(&dev).unwrap();
        for i in 0..100 {
            a.set(i, i * i).unwrap();
        }
        for i in (0..100).rev() {
            assert_eq!(a.get(i).unwrap(), i * i);
        }
        assert_eq!(a.get(500).unwrap(), 0);
        assert_eq!(a.len(), 501);
    }

    #[test]
    fn walking_back_and_forth_stays_in_cache() {
        let dev = Device::new(MachineConfig::new(1024, 64)).unwrap();
        let mut a = BlockArray::new(&dev).unwrap();
        // Blocks hold 8 counters; oscillate across the boundary of blocks 0 and 1.
        for _ in 0..1000 {
            for i in 6..10 {
                let v = a.get(i).unwrap();
                a.set(i, v + 1).unwrap();
            }
        }
        assert_eq!(dev.stats().total(), 0);
        assert_eq!(a.get(7).unwrap(), 1000);
    }
}
