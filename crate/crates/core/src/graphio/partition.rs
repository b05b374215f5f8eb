use std::collections::HashMap;
use std::fmt;

use super::{PartitionRecord, CURSOR_BLOCKS};
use crate::error::{Error, Result};
use crate::iomodel::{Device, ExternalSorter, Fixed, Seq};

/// How two partitions of the same node set relate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Equal,
    /// Every block of the first lies inside a block of the second.
    FirstRefinesSecond,
    SecondRefinesFirst,
    Incomparable,
}

impl Relation {
    fn from_refinements(first_refines: bool, second_refines: bool) -> Self {
        match (first_refines, second_refines) {
            (true, true) => Relation::Equal,
            (true, false) => Relation::FirstRefinesSecond,
            (false, true) => Relation::SecondRefinesFirst,
            (false, false) => Relation::Incomparable,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Equal => "equal",
            Relation::FirstRefinesSecond => "p1-refines-p2",
            Relation::SecondRefinesFirst => "p2-refines-p1",
            Relation::Incomparable => "incomparable",
        })
    }
}

/// In-memory partition, sorted by node id. Used by tests, the oracle and
/// small-scale reporting; the pipelines only use the file form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pairs: Vec<(u64, u64)>,
}

impl Partition {
    pub fn from_pairs(mut pairs: Vec<(u64, u64)>) -> Result<Self> {
        pairs.sort_unstable();
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!("node {} assigned twice", w[0].0)));
        }
        Ok(Partition { pairs })
    }

    pub fn from_blocks<I, B>(blocks: I) -> Result<Self>
    where
        I: IntoIterator<Item = B>,
        B: IntoIterator<Item = u64>,
    {
        let pairs = blocks
            .into_iter()
            .enumerate()
            .flat_map(|(b, nodes)| nodes.into_iter().map(move |n| (n, b as u64 + 1)))
            .collect();
        Self::from_pairs(pairs)
    }

    pub fn load(seq: &Seq<PartitionRecord>) -> Result<Self> {
        let pairs = seq.reader()?.map(|r| r.map(|p| (p.orig_id, p.bisim_id))).collect::<Result<_>>()?;
        Self::from_pairs(pairs)
    }

    /// `(node, block)` pairs sorted by node.
    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn block_of(&self, node: u64) -> Option<u64> {
        self.pairs.binary_search_by_key(&node, |p| p.0).ok().map(|i| self.pairs[i].1)
    }

    /// Renames blocks to `1..=k` in order of first appearance by node id.
    pub fn canonical(&self) -> Partition {
        let mut rename = HashMap::new();
        let pairs = self
            .pairs
            .iter()
            .map(|&(n, b)| {
                let next = rename.len() as u64 + 1;
                (n, *rename.entry(b).or_insert(next))
            })
            .collect();
        Partition { pairs }
    }

    pub fn num_blocks(&self) -> usize {
        let mut ids: Vec<u64> = self.pairs.iter().map(|p| p.1).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Blocks as sorted node lists, ordered by smallest member.
    pub fn blocks(&self) -> Vec<Vec<u64>> {
        let canon = self.canonical();
        let mut blocks = vec![Vec::new(); canon.num_blocks()];
        for &(n, b) in &canon.pairs {
            blocks[b as usize - 1].push(n);
        }
        blocks
    }

    /// Whether every block of `self` lies inside one block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        if self.pairs.len() != other.pairs.len() {
            return false;
        }
        let mut image = HashMap::new();
        self.pairs.iter().zip(&other.pairs).all(|(&(n, b), &(m, c))| n == m && *image.entry(b).or_insert(c) == c)
    }

    /// Common refinement: nodes share a block iff they share one in both.
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        if self.pairs.len() != other.pairs.len() || self.pairs.iter().zip(&other.pairs).any(|(a, b)| a.0 != b.0) {
            return Err(Error::Validation("partitions cover different nodes".into()));
        }
        let mut ids = HashMap::new();
        let pairs = self
            .pairs
            .iter()
            .zip(&other.pairs)
            .map(|(&(n, a), &(_, b))| {
                let next = ids.len() as u64 + 1;
                (n, *ids.entry((a, b)).or_insert(next))
            })
            .collect();
        Ok(Partition { pairs })
    }

    pub fn relation(&self, other: &Partition) -> Relation {
        Relation::from_refinements(self.refines(other), other.refines(self))
    }
}

fn budget(device: &Device, parts: u64) -> u64 {
    device.memory_budget().saturating_sub(CURSOR_BLOCKS * device.block_size() as u64) / parts
}

/// External canonicalization: renames block ids to `1..=k` in order of first
/// appearance by node id. The output is sorted by node id.
///
/// Canonical files of two partitions are byte-identical iff the partitions
/// have the same blocks.
pub fn canonicalize(partition: &Seq<PartitionRecord>) -> Result<Seq<PartitionRecord>> {
    let device = partition.device();
    let share = budget(device, 2);

    let mut by_node = ExternalSorter::new(device, Fixed::<PartitionRecord>::new(), share, |a: &PartitionRecord, b: &PartitionRecord| {
        a.orig_id.cmp(&b.orig_id)
    });
    for p in partition.reader()? {
        by_node.push(p?)?;
    }
    // (block, position, node)
    let mut by_block = ExternalSorter::new(device, Fixed::<(u64, u64, u64)>::new(), share, |a: &(u64, u64, u64), b: &(u64, u64, u64)| {
        (a.0, a.1).cmp(&(b.0, b.1))
    });
    {
        let mut stream = by_node.sorted()?;
        let mut prev: Option<u64> = None;
        let mut pos = 0u64;
        while let Some(p) = stream.next_item()? {
            if prev == Some(p.orig_id) {
                return Err(Error::format(partition.path(), format!("node {} assigned twice", p.orig_id)));
            }
            prev = Some(p.orig_id);
            by_block.push((p.bisim_id, pos, p.orig_id))?;
            pos += 1;
        }
    }
    drop(by_node);
    // (first position of the node's block, node)
    let mut by_first = ExternalSorter::new(device, Fixed::<(u64, u64)>::new(), share, |a: &(u64, u64), b: &(u64, u64)| {
        a.cmp(b)
    });
    {
        let mut stream = by_block.sorted()?;
        let mut current: Option<(u64, u64)> = None;
        while let Some((block, pos, node)) = stream.next_item()? {
            let first = match current {
                Some((b, first)) if b == block => first,
                _ => pos,
            };
            current = Some((block, first));
            by_first.push((first, node))?;
        }
    }
    drop(by_block);
    let mut out = ExternalSorter::new(device, Fixed::<PartitionRecord>::new(), share, |a: &PartitionRecord, b: &PartitionRecord| {
        a.orig_id.cmp(&b.orig_id)
    });
    {
        let mut stream = by_first.sorted()?;
        let mut last_first: Option<u64> = None;
        let mut next_id = 0u64;
        while let Some((first, node)) = stream.next_item()? {
            if last_first != Some(first) {
                next_id += 1;
                last_first = Some(first);
            }
            out.push(PartitionRecord::new(node, next_id))?;
        }
    }
    drop(by_first);
    out.into_sequence()
}

/// Decides equality and refinement between two partition files covering the
/// same nodes. Both files may be in any order.
pub fn compare_partitions(first: &Seq<PartitionRecord>, second: &Seq<PartitionRecord>) -> Result<Relation> {
    let device = first.device();
    let share = budget(device, 4);
    let sort_by_node = |seq: &Seq<PartitionRecord>| -> Result<Seq<PartitionRecord>> {
        let mut s = ExternalSorter::new(device, Fixed::<PartitionRecord>::new(), share, |a: &PartitionRecord, b: &PartitionRecord| {
            a.orig_id.cmp(&b.orig_id)
        });
        for p in seq.reader()? {
            s.push(p?)?;
        }
        s.into_sequence()
    };
    let (a, b) = (sort_by_node(first)?, sort_by_node(second)?);
    let pair_cmp = |x: &(u64, u64), y: &(u64, u64)| x.cmp(y);
    let mut forward = ExternalSorter::new(device, Fixed::<(u64, u64)>::new(), share, pair_cmp);
    let mut backward = ExternalSorter::new(device, Fixed::<(u64, u64)>::new(), share, pair_cmp);
    {
        let (mut ra, mut rb) = (a.reader()?, b.reader()?);
        let mut prev: Option<u64> = None;
        loop {
            match (ra.next_item()?, rb.next_item()?) {
                (None, None) => break,
                (Some(x), Some(y)) if x.orig_id == y.orig_id => {
                    if prev == Some(x.orig_id) {
                        return Err(Error::Validation(format!("node {} assigned twice", x.orig_id)));
                    }
                    prev = Some(x.orig_id);
                    forward.push((x.bisim_id, y.bisim_id))?;
                    backward.push((y.bisim_id, x.bisim_id))?;
                }
                (x, y) => {
                    let node = x.map(|p| p.orig_id).into_iter().chain(y.map(|p| p.orig_id)).min().unwrap();
                    return Err(Error::Validation(format!("partitions cover different nodes (first difference at node {node})")));
                }
            }
        }
    }
    let functional = |sorter: &mut ExternalSorter<Fixed<(u64, u64)>, _>| -> Result<bool> {
        let mut stream = sorter.sorted()?;
        let mut prev: Option<(u64, u64)> = None;
        let mut ok = true;
        while let Some((k, v)) = stream.next_item()? {
            if let Some((pk, pv)) = prev {
                if pk == k && pv != v {
                    ok = false;
                }
            }
            prev = Some((k, v));
        }
        Ok(ok)
    };
    let first_refines = functional(&mut forward)?;
    let second_refines = functional(&mut backward)?;
    Ok(Relation::from_refinements(first_refines, second_refines))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iomodel::MachineConfig;

    fn dev() -> Device {
        Device::new(MachineConfig::new(1 << 14, 256)).unwrap()
    }

    fn seq(dev: &Device, pairs: &[(u64, u64)]) -> Seq<PartitionRecord> {
        Seq::from_records(dev, pairs.iter().map(|&(n, b)| PartitionRecord::new(n, b))).unwrap()
    }

    fn pairs(s: &Seq<PartitionRecord>) -> Vec<(u64, u64)> {
        s.to_vec().unwrap().iter().map(|p| (p.orig_id, p.bisim_id)).collect()
    }

    #[test]
    fn canonical_renames_by_first_appearance() {
        let dev = dev();
        let c = canonicalize(&seq(&dev, &[(2, 9), (0, 7), (1, 7)])).unwrap();
        assert_eq!(pairs(&c), vec![(0, 1), (1, 1), (2, 2)]);
        let again = canonicalize(&c).unwrap();
        assert_eq!(pairs(&again), pairs(&c));
        let mem = Partition::from_pairs(vec![(0, 7), (1, 7), (2, 9)]).unwrap().canonical();
        assert_eq!(mem.pairs(), &[(0, 1), (1, 1), (2, 2)]);
    }

    #[test]
    fn canonical_rejects_duplicate_nodes() {
        let dev = dev();
        assert!(matches!(canonicalize(&seq(&dev, &[(0, 1), (0, 2)])), Err(Error::Format { .. })));
    }

    #[test]
    fn external_and_in_memory_relations_agree() {
        let dev = dev();
        let fine = [(0, 1), (1, 2), (2, 3), (3, 3)];
        let coarse = [(0, 5), (1, 5), (2, 6), (3, 6)];
        let other = [(0, 1), (1, 2), (2, 2), (3, 3)];
        let cases = [
            (&fine[..], &coarse[..], Relation::FirstRefinesSecond),
            (&coarse[..], &fine[..], Relation::SecondRefinesFirst),
            (&fine[..], &fine[..], Relation::Equal),
            (&coarse[..], &other[..], Relation::Incomparable),
        ];
        for (a, b, expected) in cases {
            assert_eq!(compare_partitions(&seq(&dev, a), &seq(&dev, b)).unwrap(), expected);
            let (pa, pb) = (Partition::from_pairs(a.to_vec()).unwrap(), Partition::from_pairs(b.to_vec()).unwrap());
            assert_eq!(pa.relation(&pb), expected);
        }
    }

    #[test]
    fn different_node_sets_are_an_error() {
        let dev = dev();
        let r = compare_partitions(&seq(&dev, &[(0, 1), (1, 1)]), &seq(&dev, &[(0, 1), (2, 1)]));
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn blocks_listed_by_smallest_member() {
        let p = Partition::from_blocks([vec![4, 6], vec![0], vec![1, 2]]).unwrap();
        assert_eq!(p.blocks(), vec![vec![0], vec![1, 2], vec![4, 6]]);
        assert_eq!(p.num_blocks(), 3);
    }
}
