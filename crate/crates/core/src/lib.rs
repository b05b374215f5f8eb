//! External-memory bisimulation partitioning for directed acyclic graphs.
//!
//! The crate computes the coarsest bisimulation partition of a disk-resident
//! DAG in `O(Sort(|N| + |E|))` block transfers using two time-forward passes:
//! the first ranks and (optionally) hashes every node, the second assigns
//! bisimulation identifiers group by group. The same machinery specializes to
//! XML structural indexes: the 1-index, the A(k)-index and the F&B-index.
//!
//! Modules:
//! - [`iomodel`]: the counting block device, external sort and priority queue.
//! - [`graphio`]: on-disk graph and partition files, validation, renumbering,
//!   canonical partitions and quotient graphs.
//! - [`bisim`]: the two-phase DAG partitioner.
//! - [`xmlindex`]: tag scanning and the XML index builders.
//! - [`generator`]: seeded benchmark graphs and documents.
//! - [`oracle`]: in-memory reference algorithms for testing.

pub mod bisim;
pub mod error;
pub mod generator;
pub mod graphio;
pub mod iomodel;
pub mod oracle;
pub mod xmlindex;

pub use error::{Error, Result};
