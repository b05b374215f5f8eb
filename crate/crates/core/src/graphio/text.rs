//! Whitespace-separated text interop: `id label` lines for nodes and
//! `parent child` lines for edges. Blank lines and `#` comments are skipped.
//!
//! Text-to-binary conversion sorts nodes by id and edges by child, so the
//! output is ready for validation and partitioning.

use std::io::{BufRead, Write};
use std::path::Path;

use super::{EdgeFile, EdgeRecord, LabelTable, NodeFile, NodeRecord};
use crate::error::{Error, Result};
use crate::iomodel::{Device, ExternalSorter, Fixed, Seq};

fn data_lines<'a, R: BufRead + 'a>(input: R, origin: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    input.lines().enumerate().filter_map(move |(i, line)| match line {
        Err(e) => Some(Err(Error::storage(origin, e))),
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then(|| Ok((i + 1, t.to_owned())))
        }
    })
}

fn two_fields<'a>(line: &'a str, lineno: usize, origin: &Path) -> Result<(&'a str, &'a str)> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(Error::format(origin, format!("line {lineno}: expected two fields"))),
    }
}

fn parse_id(tok: &str, lineno: usize, origin: &Path) -> Result<u64> {
    tok.parse()
        .map_err(|_| Error::format(origin, format!("line {lineno}: `{tok}` is not a node id")))
}

/// Label tokens are interned in `labels`.
pub fn nodes_from_text<R: BufRead>(
    input: R,
    origin: &Path,
    labels: &mut LabelTable,
    device: &Device,
) -> Result<NodeFile> {
    let mut sorter =
        ExternalSorter::new(device, Fixed::<NodeRecord>::new(), device.memory_budget() / 2, |a: &NodeRecord, b: &NodeRecord| {
            a.id.cmp(&b.id)
        });
    for line in data_lines(input, origin) {
        let (lineno, line) = line?;
        let (id, label) = two_fields(&line, lineno, origin)?;
        sorter.push(NodeRecord { id: parse_id(id, lineno, origin)?, label: labels.intern(label) })?;
    }
    sorter.into_sequence()
}

pub fn edges_from_text<R: BufRead>(input: R, origin: &Path, device: &Device) -> Result<EdgeFile> {
    let mut sorter =
        ExternalSorter::new(device, Fixed::<EdgeRecord>::new(), device.memory_budget() / 2, |a: &EdgeRecord, b: &EdgeRecord| {
            a.child.cmp(&b.child)
        });
    for line in data_lines(input, origin) {
        let (lineno, line) = line?;
        let (p, c) = two_fields(&line, lineno, origin)?;
        sorter.push(EdgeRecord::new(parse_id(p, lineno, origin)?, parse_id(c, lineno, origin)?))?;
    }
    sorter.into_sequence()
}

/// Labels are written by name when `labels` knows them, by code otherwise.
pub fn nodes_to_text<W: Write>(nodes: &Seq<NodeRecord>, labels: Option<&LabelTable>, mut out: W) -> Result<()> {
    let io = |e| Error::storage("<output>", e);
    for n in nodes.reader()? {
        let n = n?;
        match labels.and_then(|t| t.name(n.label)) {
            Some(name) => writeln!(out, "{} {}", n.id, name).map_err(io)?,
            None => writeln!(out, "{} {}", n.id, n.label).map_err(io)?,
        }
    }
    out.flush().map_err(io)
}

pub fn edges_to_text<W: Write>(edges: &Seq<EdgeRecord>, mut out: W) -> Result<()> {
    let io = |e| Error::storage("<output>", e);
    for e in edges.reader()? {
        let e = e?;
        writeln!(out, "{} {}", e.parent, e.child).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iomodel::MachineConfig;

    #[test]
    fn text_round_trip_sorts_and_interns() {
        let dev = Device::new(MachineConfig::new(1 << 16, 256)).unwrap();
        let mut labels = LabelTable::new();
        let nodes = nodes_from_text("# fig\n2 b\n0 a\n\n1 b\n".as_bytes(), Path::new("n"), &mut labels, &dev).unwrap();
        assert_eq!(
            nodes.to_vec().unwrap(),
            vec![NodeRecord { id: 0, label: 2 }, NodeRecord { id: 1, label: 1 }, NodeRecord { id: 2, label: 1 }]
        );
        let edges = edges_from_text("2 1\n1 0\n2 0\n".as_bytes(), Path::new("e"), &dev).unwrap();
        let mut out = Vec::new();
        edges_to_text(&edges, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 0\n2 0\n2 1\n");
        let mut out = Vec::new();
        nodes_to_text(&nodes, Some(&labels), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0 a\n1 b\n2 b\n");
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let dev = Device::new(MachineConfig::new(1 << 16, 256)).unwrap();
        let err = edges_from_text("1 x\n".as_bytes(), Path::new("e"), &dev).unwrap_err();
        assert!(err.to_string().contains("line 1"));
        let err = edges_from_text("1 2 3\n".as_bytes(), Path::new("e"), &dev).unwrap_err();
        assert!(err.to_string().contains("two fields"));
    }
}
