//! Block-granular external-memory machine model.
//!
//! A [`Device`] counts every block transfer made by the structures built on
//! it: [`ExternalSequence`] files, the [`ExternalSorter`], the
//! [`ExternalPriorityQueue`] and the [`BlockArray`]. Each structure is handed
//! an explicit byte share of the memory budget `M` and spills rather than
//! growing past it.

mod block_array;
mod device;
mod pq;
mod record;
mod sequence;
mod sort;

pub use block_array::BlockArray;
pub use device::{
    memory_shares, scan_cost, Device, IoStats, MachineConfig, DEFAULT_BLOCK_SIZE, DEFAULT_MEMORY_BUDGET,
    MIN_BLOCK_SIZE,
};
pub use pq::ExternalPriorityQueue;
pub use record::{get_u32, get_u64, put_u32, put_u64, Codec, Fixed, Record};
pub use sequence::{ExternalSequence, Seq, SeqReader, SeqWriter, HEADER_LEN};
pub use sort::{external_sort, ExternalSorter, KMerge, SortedStream};
