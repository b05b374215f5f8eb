use std::cell::Cell;
use std::fmt;
use std::ops::Sub;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use tempfile::TempDir;

use crate::error::{Error, Result};

pub const DEFAULT_BLOCK_SIZE: u64 = 64 * 1024;
pub const DEFAULT_MEMORY_BUDGET: u64 = 256 * 1024 * 1024;

/// Smallest block size accepted; every record type used by the pipelines fits.
pub const MIN_BLOCK_SIZE: u64 = 64;

/// The `(M, B)` machine: fast memory of `memory_budget_bytes`, block transfers of
/// `block_size_bytes`, and a directory for spill files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineConfig {
    pub memory_budget_bytes: u64,
    pub block_size_bytes: u64,
    pub temp_directory: PathBuf,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
            block_size_bytes: DEFAULT_BLOCK_SIZE,
            temp_directory: std::env::temp_dir(),
        }
    }
}

impl MachineConfig {
    pub fn new(memory_budget_bytes: u64, block_size_bytes: u64) -> Self {
        MachineConfig { memory_budget_bytes, block_size_bytes, ..Default::default() }
    }

    pub fn with_temp_directory(mut self, dir: impl Into<PathBuf>) -> Self {
        self.temp_directory = dir.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size_bytes < MIN_BLOCK_SIZE {
            return Err(Error::Config(format!(
                "block size {} is below the minimum of {MIN_BLOCK_SIZE} bytes",
                self.block_size_bytes
            )));
        }
        if self.memory_budget_bytes < 3 * self.block_size_bytes {
            return Err(Error::Config(format!(
                "memory budget {} must hold at least three blocks of {} bytes",
                self.memory_budget_bytes, self.block_size_bytes
            )));
        }
        Ok(())
    }

    /// Number of blocks that fit in memory, `⌊M/B⌋`.
    pub fn memory_blocks(&self) -> u64 {
        self.memory_budget_bytes / self.block_size_bytes
    }
}

/// Number of block transfers needed to scan `n` records of `record_width` bytes.
pub fn scan_cost(n: u64, record_width: u64, cfg: &MachineConfig) -> u64 {
    (n * record_width).div_ceil(cfg.block_size_bytes)
}

/// Block transfer counters. Partial blocks count as one transfer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IoStats {
    pub reads: u64,
    pub writes: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
}

impl IoStats {
    pub fn total(&self) -> u64 {
        self.reads + self.writes
    }

    /// `phase,reads,writes,bytes_read,bytes_written`
    pub fn csv_line(&self, phase: &str) -> String {
        format!("{phase},{},{},{},{}", self.reads, self.writes, self.bytes_read, self.bytes_written)
    }

    pub const CSV_HEADER: &'static str = "phase,reads,writes,bytes_read,bytes_written";
}

impl Sub for IoStats {
    type Output = IoStats;

    fn sub(self, earlier: IoStats) -> IoStats {
        IoStats {
            reads: self.reads - earlier.reads,
            writes: self.writes - earlier.writes,
            bytes_read: self.bytes_read - earlier.bytes_read,
            bytes_written: self.bytes_written - earlier.bytes_written,
        }
    }
}

impl std::ops::AddAssign for IoStats {
    fn add_assign(&mut self, other: IoStats) {
        self.reads += other.reads;
        self.writes += other.writes;
        self.bytes_read += other.bytes_read;
        self.bytes_written += other.bytes_written;
    }
}

impl fmt::Display for IoStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} reads / {} writes ({} B read, {} B written)",
            self.reads, self.writes, self.bytes_read, self.bytes_written
        )
    }
}

/// Counting block device shared by every structure of one pipeline run.
///
/// Cloning yields another handle to the same counters and spill directory. The
/// spill directory is removed when the last handle is dropped.
#[derive(Clone)]
pub struct Device {
    inner: Rc<Inner>,
}

struct Inner {
    cfg: MachineConfig,
    stats: Cell<IoStats>,
    next_spill: Cell<u64>,
    spill_dir: TempDir,
}

impl fmt::Debug for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Device")
            .field("cfg", &self.inner.cfg)
            .field("stats", &self.inner.stats.get())
            .finish()
    }
}

impl Device {
    pub fn new(cfg: MachineConfig) -> Result<Self> {
        cfg.validate()?;
        std::fs::create_dir_all(&cfg.temp_directory)
            .map_err(|e| Error::storage(&cfg.temp_directory, e))?;
        let spill_dir = tempfile::Builder::new()
            .prefix("dagbisim-")
            .tempdir_in(&cfg.temp_directory)
            .map_err(|e| Error::storage(&cfg.temp_directory, e))?;
        Ok(Device {
            inner: Rc::new(Inner {
                cfg,
                stats: Cell::new(IoStats::default()),
                next_spill: Cell::new(0),
                spill_dir,
            }),
        })
    }

    pub fn config(&self) -> &MachineConfig {
        &self.inner.cfg
    }

    pub fn block_size(&self) -> usize {
        self.inner.cfg.block_size_bytes as usize
    }

    pub fn memory_budget(&self) -> u64 {
        self.inner.cfg.memory_budget_bytes
    }

    pub fn stats(&self) -> IoStats {
        self.inner.stats.get()
    }

    pub fn spill_dir(&self) -> &Path {
        self.inner.spill_dir.path()
    }

    pub(crate) fn spill_path(&self, tag: &str) -> PathBuf {
        let n = self.inner.next_spill.get();
        self.inner.next_spill.set(n + 1);
        self.inner.spill_dir.path().join(format!("{tag}-{n}.bin"))
    }

    pub(crate) fn count_read(&self, bytes: usize) {
        let mut s = self.inner.stats.get();
        s.reads += 1;
        s.bytes_read += bytes as u64;
        self.inner.stats.set(s);
    }

    pub(crate) fn count_write(&self, bytes: usize) {
        let mut s = self.inner.stats.get();
        s.writes += 1;
        s.bytes_written += bytes as u64;
        self.inner.stats.set(s);
    }
}

/// Splits a byte budget into shares proportional to `weights`, after setting
/// aside `reserved_blocks` for stream cursors.
pub fn memory_shares<const N: usize>(
    budget: u64,
    block_size: u64,
    reserved_blocks: u64,
    weights: [u64; N],
) -> [u64; N] {
    let usable = budget.saturating_sub(reserved_blocks * block_size).max(3 * block_size);
    let total: u64 = weights.iter().sum();
    weights.map(|w| (usable * w / total).max(3 * block_size))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(b: u64) -> MachineConfig {
        MachineConfig::new(1 << 20, b)
    }

    #[test]
    fn scan_cost_examples() {
        assert_eq!(scan_cost(0, 8, &cfg(100)), 0);
        assert_eq!(scan_cost(100, 10, &cfg(100)), 10);
        assert_eq!(scan_cost(1001, 1, &cfg(100)), 11);
    }

    #[test]
    fn rejects_budget_below_three_blocks() {
        let c = MachineConfig::new(3 * 4096 - 1, 4096);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(MachineConfig::new(3 * 4096, 4096).validate().is_ok());
    }

    #[test]
    fn shares_respect_budget() {
        let [a, b] = memory_shares(1 << 20, 4096, 4, [1, 3]);
        assert!(a + b <= (1 << 20) - 4 * 4096);
        assert_eq!(b, 3 * a);
    }
}
