use std::fmt;

use super::{EdgeRecord, NodeRecord, CURSOR_BLOCKS};
use crate::error::Result;
use crate::iomodel::{Device, ExternalSorter, Fixed, Seq};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileKind {
    Nodes,
    Edges,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    /// Node ids are not strictly ascending (unsorted or duplicated).
    NodesUnsorted,
    /// Edges are not sorted by child.
    EdgesUnsorted,
    /// An edge whose child is not numbered below its parent.
    TopologicalOrder,
    /// An edge endpoint that is not in the node file.
    EndpointMissing,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::NodesUnsorted => "node ids not strictly ascending",
            ViolationKind::EdgesUnsorted => "edges not sorted by child",
            ViolationKind::TopologicalOrder => "topological order violated",
            ViolationKind::EndpointMissing => "endpoint missing",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub file: FileKind,
    /// Zero-based index of the first offending record.
    pub offset: u64,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let file = match self.file {
            FileKind::Nodes => "nodes",
            FileKind::Edges => "edges",
        };
        write!(f, "{}: {file} record {}: {}", self.kind, self.offset, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub nodes: u64,
    pub edges: u64,
    /// Repeated `(parent, child)` pairs; tolerated, removed during partitioning.
    pub duplicate_edges: u64,
    /// At most one entry per kind, carrying the first offending record.
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first(&self, kind: ViolationKind) -> Option<&Violation> {
        self.violations.iter().find(|v| v.kind == kind)
    }

    fn record(&mut self, kind: ViolationKind, file: FileKind, offset: u64, detail: String) {
        match self.violations.iter_mut().find(|v| v.kind == kind) {
            Some(v) if v.offset <= offset => {}
            Some(v) => *v = Violation { kind, file, offset, detail },
            None => self.violations.push(Violation { kind, file, offset, detail }),
        }
    }
}

/// Checks the input contract of the partitioner: nodes strictly ascending by
/// id, edges sorted by child, `child < parent` on every edge, and both
/// endpoints present.
///
/// Node order, edge order, topological order and child presence are checked
/// in one merged scan. Parent presence and duplicate detection need the edges
/// in parent order and cost one external sort.
pub fn validate_input(nodes: &Seq<NodeRecord>, edges: &Seq<EdgeRecord>) -> Result<ValidationReport> {
    let device: &Device = nodes.device();
    let mut report = ValidationReport { nodes: nodes.len(), edges: edges.len(), ..Default::default() };

    let mut prev: Option<u64> = None;
    for (offset, n) in nodes.reader()?.enumerate() {
        let n = n?;
        if let Some(p) = prev {
            if n.id <= p {
                report.record(
                    ViolationKind::NodesUnsorted,
                    FileKind::Nodes,
                    offset as u64,
                    format!("id {} follows id {p}", n.id),
                );
                break;
            }
        }
        prev = Some(n.id);
    }

    let budget = device.memory_budget().saturating_sub(CURSOR_BLOCKS * device.block_size() as u64);
    let mut by_parent = ExternalSorter::new(
        device,
        Fixed::<(u64, u64, u64)>::new(),
        budget,
        |a: &(u64, u64, u64), b: &(u64, u64, u64)| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)),
    );
    let mut node_cursor = nodes.reader()?;
    let mut child_checks = report.is_valid();
    let mut prev_child: Option<u64> = None;
    for (offset, e) in edges.reader()?.enumerate() {
        let e = e?;
        let offset = offset as u64;
        if e.child >= e.parent {
            report.record(
                ViolationKind::TopologicalOrder,
                FileKind::Edges,
                offset,
                format!("edge ({}, {}) has parent <= child", e.parent, e.child),
            );
        }
        if prev_child.is_some_and(|p| e.child < p) {
            report.record(
                ViolationKind::EdgesUnsorted,
                FileKind::Edges,
                offset,
                format!("child {} follows child {}", e.child, prev_child.unwrap()),
            );
            child_checks = false;
        }
        prev_child = Some(e.child);
        if child_checks {
            while node_cursor.peek()?.is_some_and(|n| n.id < e.child) {
                node_cursor.next_item()?;
            }
            if node_cursor.peek()?.map(|n| n.id) != Some(e.child) {
                report.record(
                    ViolationKind::EndpointMissing,
                    FileKind::Edges,
                    offset,
                    format!("child {} of edge ({}, {}) is not a node", e.child, e.parent, e.child),
                );
            }
        }
        by_parent.push((e.parent, e.child, offset))?;
    }
    drop(node_cursor);

    if report.first(ViolationKind::NodesUnsorted).is_none() {
        let mut node_cursor = nodes.reader()?;
        let mut last: Option<(u64, u64)> = None;
        let mut stream = by_parent.sorted()?;
        while let Some((parent, child, offset)) = stream.next_item()? {
            if last == Some((parent, child)) {
                report.duplicate_edges += 1;
            }
            last = Some((parent, child));
            while node_cursor.peek()?.is_some_and(|n| n.id < parent) {
                node_cursor.next_item()?;
            }
            if node_cursor.peek()?.map(|n| n.id) != Some(parent) {
                report.record(
                    ViolationKind::EndpointMissing,
                    FileKind::Edges,
                    offset,
                    format!("parent {parent} of edge ({parent}, {child}) is not a node"),
                );
            }
        }
    }
    report.violations.sort_by_key(|v| v.kind);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iomodel::MachineConfig;

    fn dev() -> Device {
        Device::new(MachineConfig::new(1 << 16, 256)).unwrap()
    }

    fn graph(dev: &Device, n: u64, edges: &[(u64, u64)]) -> (Seq<NodeRecord>, Seq<EdgeRecord>) {
        let nodes = Seq::from_records(dev, (0..n).map(|id| NodeRecord { id, label: 1 })).unwrap();
        let edges = Seq::from_records(dev, edges.iter().map(|&(p, c)| EdgeRecord::new(p, c))).unwrap();
        (nodes, edges)
    }

    #[test]
    fn d_split_dag_is_valid() {
        let dev = dev();
        let (n, e) = graph(&dev, 7, &[(2, 0), (3, 0), (4, 0), (2, 1), (5, 2), (5, 3), (6, 3)]);
        let r = validate_input(&n, &e).unwrap();
        assert!(r.is_valid(), "{:?}", r.violations);
        assert_eq!((r.nodes, r.edges), (7, 7));
    }

    #[test]
    fn out_of_range_endpoint() {
        let dev = dev();
        let (n, e) = graph(&dev, 7, &[(5, 9)]);
        let r = validate_input(&n, &e).unwrap();
        let v = r.first(ViolationKind::EndpointMissing).expect("endpoint missing");
        assert_eq!(v.offset, 0);
        assert!(v.to_string().starts_with("endpoint missing"));
        assert!(r.first(ViolationKind::TopologicalOrder).is_some());
    }

    #[test]
    fn missing_parent_reports_first_offset() {
        let dev = dev();
        let (n, e) = graph(&dev, 4, &[(2, 0), (9, 1), (8, 1)]);
        let r = validate_input(&n, &e).unwrap();
        assert_eq!(r.first(ViolationKind::EndpointMissing).unwrap().offset, 1);
    }

    #[test]
    fn parent_below_child() {
        let dev = dev();
        let (n, e) = graph(&dev, 4, &[(1, 0), (1, 3)]);
        let r = validate_input(&n, &e).unwrap();
        let v = r.first(ViolationKind::TopologicalOrder).unwrap();
        assert_eq!(v.offset, 1);
        assert!(v.to_string().contains("topological order violated"));
    }

    #[test]
    fn duplicates_reported_not_rejected() {
        let dev = dev();
        let (n, e) = graph(&dev, 3, &[(2, 0), (1, 0), (2, 0)]);
        let r = validate_input(&n, &e).unwrap();
        assert!(r.is_valid());
        assert_eq!(r.duplicate_edges, 1);
    }

    #[test]
    fn unsorted_inputs() {
        let dev = dev();
        let nodes = Seq::from_records(&dev, [0, 2, 2].map(|id| NodeRecord { id, label: 0 })).unwrap();
        let edges = Seq::from_records(&dev, [(2, 1), (2, 0)].map(|(p, c)| EdgeRecord::new(p, c))).unwrap();
        let r = validate_input(&nodes, &edges).unwrap();
        assert_eq!(r.first(ViolationKind::NodesUnsorted).unwrap().offset, 2);
        assert_eq!(r.first(ViolationKind::EdgesUnsorted).unwrap().offset, 1);
    }
}
