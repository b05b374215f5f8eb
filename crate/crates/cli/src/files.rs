use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dagbisim::graphio::{edges_from_text, edges_to_text, nodes_from_text, nodes_to_text, EdgeRecord, LabelTable, NodeRecord, PartitionRecord};
use dagbisim::iomodel::{Device, ExternalSorter, Fixed, Seq};

use crate::args::Format;

pub struct Graph {
    pub nodes: Seq<NodeRecord>,
    pub edges: Seq<EdgeRecord>,
    /// Label names of text input.
    pub labels: Option<LabelTable>,
}

fn reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

pub fn load_graph(nodes: &Path, edges: &Path, format: Format, device: &Device) -> Result<Graph> {
    match format {
        Format::Bin => Ok(Graph { nodes: Seq::open_records(device, nodes)?, edges: Seq::open_records(device, edges)?, labels: None }),
        Format::Text => {
            let mut labels = LabelTable::new();
            let n = nodes_from_text(reader(nodes)?, nodes, &mut labels, device)?;
            let e = edges_from_text(reader(edges)?, edges, device)?;
            Ok(Graph { nodes: n, edges: e, labels: Some(labels) })
        }
    }
}

pub fn graph_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    (with(".nodes"), with(".edges"))
}

/// Writes `<prefix>.nodes` and `<prefix>.edges`.
pub fn save_graph(nodes: Seq<NodeRecord>, edges: Seq<EdgeRecord>, labels: Option<&LabelTable>, prefix: &Path, format: Format) -> Result<()> {
    let (np, ep) = graph_paths(prefix);
    match format {
        Format::Bin => {
            nodes.persist(&np)?;
            edges.persist(&ep)?;
        }
        Format::Text => {
            nodes_to_text(&nodes, labels, writer(&np)?)?;
            edges_to_text(&edges, writer(&ep)?)?;
        }
    }
    Ok(())
}

pub fn save_partition(p: Seq<PartitionRecord>, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Bin => {
            p.persist(path)?;
        }
        Format::Text => {
            let mut w = writer(path)?;
            for r in p.reader()? {
                let r = r?;
                writeln!(w, "{} {}", r.orig_id, r.bisim_id)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Partition sorted by node id.
pub fn load_partition(path: &Path, format: Format, device: &Device) -> Result<Seq<PartitionRecord>> {
    let mut sorter = ExternalSorter::new(device, Fixed::<PartitionRecord>::new(), device.memory_budget() / 2, |a: &PartitionRecord, b: &PartitionRecord| {
        a.orig_id.cmp(&b.orig_id)
    });
    match format {
        Format::Bin => {
            for r in Seq::<PartitionRecord>::open_records(device, path)?.reader()? {
                sorter.push(r?)?;
            }
        }
        Format::Text => {
            for (i, line) in reader(path)?.lines().enumerate() {
                let line = line?;
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                let f: Vec<&str> = t.split_whitespace().collect();
                let [a, b] = f[..] else { bail!("{}:{}: expected `node block`", path.display(), i + 1) };
                let parse = |s: &str| s.parse::<u64>().with_context(|| format!("{}:{}: `{s}` is not a number", path.display(), i + 1));
                sorter.push(PartitionRecord::new(parse(a)?, parse(b)?))?;
            }
        }
    }
    Ok(sorter.into_sequence()?)
}
