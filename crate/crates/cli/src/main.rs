mod args;
mod files;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;
use dagbisim::bisim::{partition_dag, Variant};
use dagbisim::generator::{generate, generate_xml, GenSpec, Shape, XmlSpec};
use dagbisim::graphio::{build_quotient, compare_partitions, validate_input};
use dagbisim::iomodel::{Device, MachineConfig};
use dagbisim::xmlindex::{ak_index, fb_index, one_index, remap_partition, tree_document, IndexRun, XmlSource};

use args::{Cli, Command, Machine, Mode, Sweep};
use files::{load_graph, load_partition, save_graph, save_partition};
use report::RunReport;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn device(cfg: &MachineConfig) -> Result<Device> {
    Ok(Device::new(cfg.clone())?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let m = &cli.machine;
    let cfg = m.config();
    match cli.command {
        Command::Gen { shape, n, p, alphabet, seed, out } => {
            if shape == "xml" {
                let w = BufWriter::new(File::create(&out).with_context(|| format!("cannot create {}", out.display()))?);
                let depth = generate_xml(&XmlSpec { n, label_alphabet: alphabet, seed }, w)?;
                eprintln!("wrote {n} elements, depth {depth}, to {}", out.display());
                return Ok(ExitCode::SUCCESS);
            }
            let shape: Shape = shape.parse()?;
            let mut spec = GenSpec::new(shape, n, seed);
            if let Some(p) = p {
                spec = spec.with_p(p);
            }
            if let Some(a) = alphabet {
                spec = spec.with_alphabet(a);
            }
            let dev = device(&cfg)?;
            let g = generate(&spec, &dev)?;
            eprintln!("generated {} nodes, {} edges (p = {}, {} labels)", g.nodes.len(), g.edges.len(), g.p, g.alphabet);
            save_graph(g.nodes, g.edges, None, &out, m.format)?;
        }
        Command::Validate { graph } => {
            let dev = device(&cfg)?;
            let g = load_graph(&graph.nodes, &graph.edges, m.format, &dev)?;
            let r = validate_input(&g.nodes, &g.edges)?;
            println!("nodes {} edges {} duplicate_edges {}", r.nodes, r.edges, r.duplicate_edges);
            for v in &r.violations {
                println!("violation: {v}");
            }
            if !r.is_valid() {
                return Ok(ExitCode::from(1));
            }
            println!("valid");
        }
        Command::Partition { graph, variant, out } => {
            let dev = device(&cfg)?;
            let g = load_graph(&graph.nodes, &graph.edges, m.format, &dev)?;
            let variant = Variant::from(variant);
            let t = Instant::now();
            let r = partition_dag(&g.nodes, &g.edges, &dev, variant)?;
            let mut rep = RunReport::new("partition", &cfg);
            rep.seconds = t.elapsed().as_secs_f64();
            rep.variant = variant.name().into();
            rep.phases = vec![("phase1".into(), r.phase1), ("phase2".into(), r.phase2)];
            rep.blocks = r.blocks;
            rep.collisions = r.collisions;
            save_partition(r.partition, &out, m.format)?;
            rep.emit(m.report.as_deref())?;
        }
        Command::Xml { mode, k, input, nodes, edges, out } => {
            let dev = device(&cfg)?;
            let (source, preorder) = match (input, nodes, edges) {
                (Some(doc), _, _) => (XmlSource::File(doc), None),
                (None, Some(n), Some(e)) => {
                    let g = load_graph(&n, &e, m.format, &dev)?;
                    let doc = tree_document(&g.nodes, &g.edges)?;
                    (XmlSource::Bytes(doc.xml), Some(doc.preorder))
                }
                _ => bail!("give either --input or both --nodes and --edges"),
            };
            let t = Instant::now();
            let r: IndexRun = match mode {
                Mode::OneIndex => one_index(&source, &dev)?,
                Mode::Ak => ak_index(&source, k, &dev)?,
                Mode::Fb => fb_index(&source, &dev)?,
            };
            let mut rep = RunReport::new("xml", &cfg);
            rep.seconds = t.elapsed().as_secs_f64();
            rep.variant = match mode {
                Mode::OneIndex => "1index",
                Mode::Ak => "ak",
                Mode::Fb => "fb",
            }
            .into();
            rep.k = (mode == Mode::Ak).then_some(k);
            rep.phases = r.phases.iter().map(|(n, s)| (n.to_string(), *s)).collect();
            rep.blocks = r.blocks;
            let partition = match preorder {
                Some(pre) => remap_partition(&r.partition, &pre, &dev)?,
                None => r.partition,
            };
            save_partition(partition, &out, m.format)?;
            rep.emit(m.report.as_deref())?;
        }
        Command::Compare { first, second } => {
            let dev = device(&cfg)?;
            let a = load_partition(&first, m.format, &dev)?;
            let b = load_partition(&second, m.format, &dev)?;
            println!("{}", compare_partitions(&a, &b)?);
        }
        Command::Quotient { graph, partition, out } => {
            let dev = device(&cfg)?;
            let g = load_graph(&graph.nodes, &graph.edges, m.format, &dev)?;
            let p = load_partition(&partition, m.format, &dev)?;
            let q = build_quotient(&g.nodes, &g.edges, &p)?;
            eprintln!("quotient: {} nodes, {} edges", q.nodes.len(), q.edges.len());
            save_graph(q.nodes, q.edges, g.labels.as_ref(), &out, m.format)?;
        }
        Command::Bench { sweep, values, shape, n, variant, seed } => bench(m, sweep, &values, &shape, n, variant.into(), seed)?,
        Command::Convert { graph, to, out } => {
            let dev = device(&cfg)?;
            let g = load_graph(&graph.nodes, &graph.edges, m.format, &dev)?;
            save_graph(g.nodes, g.edges, g.labels.as_ref(), &out, to)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

const BENCH_HEADER: &str = "sweep,value,nodes,edges,ios,ios_per_element,seconds,seconds_per_element,blocks,collisions";

fn bench(m: &Machine, sweep: Sweep, values: &[String], shape: &str, n: u64, variant: Variant, seed: u64) -> Result<()> {
    let mut out: Box<dyn Write> = match &m.report {
        Some(p) => {
            let f = std::fs::OpenOptions::new().create(true).append(true).open(p)?;
            let fresh = f.metadata()?.len() == 0;
            let mut w = BufWriter::new(f);
            if fresh {
                writeln!(w, "{BENCH_HEADER}")?;
            }
            Box::new(w)
        }
        None => {
            println!("{BENCH_HEADER}");
            Box::new(std::io::stdout())
        }
    };
    for value in values {
        let mut cfg = m.config();
        let (mut size, mut k) = (n, 0usize);
        match sweep {
            Sweep::N => size = args::parse_count(value)?,
            Sweep::Memory => cfg.memory_budget_bytes = args::parse_size(value)?,
            Sweep::K => k = value.parse().with_context(|| format!("`{value}` is not a k"))?,
        }
        let dev = device(&cfg)?;
        let row = match sweep {
            Sweep::K => {
                let mut doc = Vec::new();
                generate_xml(&XmlSpec { n: size, label_alphabet: None, seed }, &mut doc)?;
                let before = dev.stats();
                let t = Instant::now();
                let r = ak_index(&XmlSource::Bytes(doc), k, &dev)?;
                let secs = t.elapsed().as_secs_f64();
                let ios = (dev.stats() - before).total();
                Row { nodes: r.elements, edges: r.elements.saturating_sub(1), ios, secs, blocks: r.blocks, collisions: 0 }
            }
            _ => {
                let g = generate(&GenSpec::new(shape.parse()?, size, seed), &dev)?;
                let before = dev.stats();
                let t = Instant::now();
                let r = partition_dag(&g.nodes, &g.edges, &dev, variant)?;
                let secs = t.elapsed().as_secs_f64();
                let ios = (dev.stats() - before).total();
                Row { nodes: g.nodes.len(), edges: g.edges.len(), ios, secs, blocks: r.blocks, collisions: r.collisions }
            }
        };
        let elems = (row.nodes + row.edges).max(1) as f64;
        let name = match sweep {
            Sweep::N => "n",
            Sweep::Memory => "memory",
            Sweep::K => "k",
        };
        writeln!(
            out,
            "{name},{value},{},{},{},{:.6},{:.3},{:.3e},{},{}",
            row.nodes,
            row.edges,
            row.ios,
            row.ios as f64 / elems,
            row.secs,
            row.secs / elems,
            row.blocks,
            row.collisions
        )?;
        out.flush()?;
    }
    Ok(())
}

struct Row {
    nodes: u64,
    edges: u64,
    ios: u64,
    secs: f64,
    blocks: u64,
    collisions: u64,
}

