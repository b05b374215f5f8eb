//! Identifier renumbering: nodes get their 1-based position in a target
//! order as new id, and the edge file is rewritten with two linear merges
//! against the `(origId, newId)` mapping.

use super::{EdgeRecord, CURSOR_BLOCKS};
use crate::error::{Error, Result};
use crate::iomodel::{Device, ExternalSequence, ExternalSorter, Fixed, Record, Seq, SeqReader};

/// A node record that carries both its original and its new identifier.
pub trait Renumberable: Record + Copy {
    fn orig_id(&self) -> u64;
    fn set_id(&mut self, id: u64);
}

pub struct Renumbered<T: Record> {
    /// Input records in target order with new ids `1..=n` assigned.
    pub nodes: Seq<T>,
    /// `(origId, newId)`, sorted by `origId`.
    pub mapping: Seq<(u64, u64)>,
    /// Edges in new ids, sorted by child then parent.
    pub edges: Seq<EdgeRecord>,
}

fn lookup(r: &mut SeqReader<Fixed<(u64, u64)>>, orig: u64, role: &str, e: &EdgeRecord) -> Result<u64> {
    while r.peek()?.is_some_and(|m| m.0 < orig) {
        r.next_item()?;
    }
    match r.peek()? {
        Some(&(o, new)) if o == orig => Ok(new),
        _ => Err(Error::Validation(format!(
            "dangling edge ({}, {}): {role} {orig} is not a node",
            e.parent, e.child
        ))),
    }
}

/// Renumbers `ordered` (already in target order) and rewrites `edges`
/// (sorted by child, original ids) accordingly.
pub fn renumber<T, I>(ordered: I, edges: &Seq<EdgeRecord>, device: &Device) -> Result<Renumbered<T>>
where
    T: Renumberable,
    I: IntoIterator<Item = Result<T>>,
{
    let block = device.block_size() as u64;
    let half = device.memory_budget().saturating_sub(CURSOR_BLOCKS * block) / 2;

    let mut nodes = ExternalSequence::spill_records(device)?;
    let mut mapping = ExternalSorter::new(device, Fixed::<(u64, u64)>::new(), half, |a: &(u64, u64), b: &(u64, u64)| {
        a.0.cmp(&b.0)
    });
    let mut new_id = 0u64;
    for rec in ordered {
        let mut rec = rec?;
        new_id += 1;
        mapping.push((rec.orig_id(), new_id))?;
        rec.set_id(new_id);
        nodes.push(&rec)?;
    }
    let nodes = nodes.finish()?;
    let mapping = mapping.into_sequence()?;

    // Child pass: E is sorted by child, R by origId.
    let mut by_parent = ExternalSorter::new(device, Fixed::<EdgeRecord>::new(), half, |a: &EdgeRecord, b: &EdgeRecord| {
        a.parent.cmp(&b.parent)
    });
    {
        let mut r = mapping.reader()?;
        let mut prev_child = 0u64;
        for e in edges.reader()? {
            let e = e?;
            if e.child < prev_child {
                return Err(Error::Validation(format!("edge file not sorted by child at ({}, {})", e.parent, e.child)));
            }
            prev_child = e.child;
            let child = lookup(&mut r, e.child, "child", &e)?;
            by_parent.push(EdgeRecord::new(e.parent, child))?;
        }
    }

    // Parent pass, then back to child order.
    let mut by_child = ExternalSorter::new(device, Fixed::<EdgeRecord>::new(), half, |a: &EdgeRecord, b: &EdgeRecord| {
        a.child.cmp(&b.child)
    });
    {
        let mut r = mapping.reader()?;
        let mut stream = by_parent.sorted()?;
        while let Some(e) = stream.next_item()? {
            let parent = lookup(&mut r, e.parent, "parent", &e)?;
            by_child.push(EdgeRecord::new(parent, e.child))?;
        }
    }
    drop(by_parent);
    let edges = by_child.into_sequence()?;
    Ok(Renumbered { nodes, mapping, edges })
}
