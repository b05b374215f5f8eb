use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dagbisim::bisim::Variant;
use dagbisim::iomodel::{MachineConfig, DEFAULT_BLOCK_SIZE, DEFAULT_MEMORY_BUDGET};

#[derive(Parser, Debug)]
#[command(name = "dagbisim", version, about = "External-memory bisimulation partitioning for DAGs and XML indexes")]
pub struct Cli {
    #[command(flatten)]
    pub machine: Machine,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Machine {
    /// Memory budget M in bytes; K, M and G suffixes are binary multiples.
    #[arg(long, global = true, value_parser = parse_size, default_value_t = DEFAULT_MEMORY_BUDGET)]
    pub memory: u64,
    /// Block size B in bytes.
    #[arg(long, global = true, value_parser = parse_size, default_value_t = DEFAULT_BLOCK_SIZE)]
    pub block_size: u64,
    /// Directory for spill files.
    #[arg(long, global = true)]
    pub tmp: Option<PathBuf>,
    /// Encoding of graph and partition files.
    #[arg(long, global = true, value_enum, default_value_t = Format::Bin)]
    pub format: Format,
    /// Append the run report to this CSV file instead of printing it.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

impl Machine {
    pub fn config(&self) -> MachineConfig {
        let cfg = MachineConfig::new(self.memory, self.block_size);
        match &self.tmp {
            Some(dir) => cfg.with_temp_directory(dir),
            None => cfg,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Bin,
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantArg {
    RankLabel,
    RankLabelHash,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::RankLabel => Variant::RankLabel,
            VariantArg::RankLabelHash => Variant::RankLabelHash,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    #[value(name = "1index")]
    OneIndex,
    Ak,
    Fb,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    N,
    Memory,
    K,
}

#[derive(Args, Debug)]
pub struct GraphFiles {
    #[arg(long)]
    pub nodes: PathBuf,
    #[arg(long)]
    pub edges: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a benchmark graph (`<out>.nodes`, `<out>.edges`) or, with
    /// `--shape xml`, the document `<out>`.
    Gen {
        /// dag-geometric, dag-pairwise, tree, chain, tc-chain or xml.
        #[arg(long)]
        shape: String,
        #[arg(long, value_parser = parse_count)]
        n: u64,
        /// Edge probability; shape default when omitted.
        #[arg(long)]
        p: Option<f64>,
        /// Number of distinct labels; about log2(n) when omitted.
        #[arg(long)]
        alphabet: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the partitioner's input contract.
    Validate {
        #[command(flatten)]
        graph: GraphFiles,
    },
    /// Bisimulation partition of a DAG.
    Partition {
        #[command(flatten)]
        graph: GraphFiles,
        #[arg(long, value_enum, default_value_t = VariantArg::RankLabelHash)]
        variant: VariantArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Structural index of an XML document or of a tree given as graph files.
    Xml {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// XML document.
        #[arg(long, conflicts_with_all = ["nodes", "edges"])]
        input: Option<PathBuf>,
        #[arg(long, requires = "edges")]
        nodes: Option<PathBuf>,
        #[arg(long, requires = "nodes")]
        edges: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Relation between two partitions of the same nodes.
    Compare { first: PathBuf, second: PathBuf },
    /// Quotient graph of a partition (`<out>.nodes`, `<out>.edges`).
    Quotient {
        #[command(flatten)]
        graph: GraphFiles,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep one parameter and print one CSV row per value.
    Bench {
        #[arg(long, value_enum, default_value_t = Sweep::N)]
        sweep: Sweep,
        /// Comma-separated values of the swept parameter.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Graph shape for n and memory sweeps.
        #[arg(long, default_value = "dag-geometric")]
        shape: String,
        /// Node count when n is not swept.
        #[arg(long, value_parser = parse_count, default_value = "100000")]
        n: u64,
        #[arg(long, value_enum, default_value_t = VariantArg::RankLabelHash)]
        variant: VariantArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Convert graph files between the binary and text encodings.
    Convert {
        #[command(flatten)]
        graph: GraphFiles,
        #[arg(long, value_enum)]
        to: Format,
        #[arg(long)]
        out: PathBuf,
    },
}

/// `4096`, `64K`, `256M`, `1G`.
pub fn parse_size(s: &str) -> Result<u64> {
    let s = s.trim();
    let (num, mult) = match s.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&s[..s.len() - 1], 1u64 << 10),
        Some('M') => (&s[..s.len() - 1], 1 << 20),
        Some('G') => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    let n: u64 = num.trim().parse().with_context(|| format!("`{s}` is not a size"))?;
    n.checked_mul(mult).with_context(|| format!("`{s}` overflows"))
}

/// Integers, also in `1e6` notation.
pub fn parse_count(s: &str) -> Result<u64> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let f: f64 = s.parse().with_context(|| format!("`{s}` is not a count"))?;
    if !(f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64) {
        bail!("`{s}` is not a whole number");
    }
    Ok(f as u64)
}
