//! Seeded benchmark inputs: random DAGs in two regimes, random trees, chains,
//! transitive-closure chains, and random XML documents.
//!
//! All randomness comes from `Xoshiro256PlusPlus::seed_from_u64(seed)`, which
//! expands the seed with SplitMix64. Node `i` of the generation order is
//! written with the id that keeps children below parents: shapes that attach
//! new nodes under old ones (trees, pairwise DAGs) are emitted with reversed
//! ids `n - 1 - i`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::graphio::{EdgeFile, EdgeRecord, NodeFile, NodeRecord};
use crate::iomodel::{Device, ExternalSorter, Fixed, Seq};

/// Continuation probability giving 3.4 expected draws per node, `p / (1 - p)`.
pub const GEOMETRIC_P: f64 = 3.4 / 4.4;
/// Quadratic pair enumeration limit of [`Shape::DagPairwise`].
pub const PAIRWISE_MAX_NODES: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Per node, draw uniform earlier children while a `p`-coin lands heads.
    DagGeometric,
    /// Every earlier/later pair is an edge from the earlier node with
    /// probability `p`.
    DagPairwise,
    /// Random recursive tree: each node hangs under a uniform earlier node.
    Tree,
    Chain,
    /// All `i < j` pairs.
    TcChain,
}

impl Shape {
    pub const ALL: [Shape; 5] = [Shape::DagGeometric, Shape::DagPairwise, Shape::Tree, Shape::Chain, Shape::TcChain];

    pub fn name(self) -> &'static str {
        match self {
            Shape::DagGeometric => "dag-geometric",
            Shape::DagPairwise => "dag-pairwise",
            Shape::Tree => "tree",
            Shape::Chain => "chain",
            Shape::TcChain => "tc-chain",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('_', "-");
        Shape::ALL
            .into_iter()
            .find(|shape| shape.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown shape `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub shape: Shape,
    pub n: u64,
    /// Defaults to [`GEOMETRIC_P`] for geometric DAGs and `0.01` for pairwise.
    pub p: Option<f64>,
    /// Defaults to [`default_alphabet`].
    pub label_alphabet: Option<u32>,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(shape: Shape, n: u64, seed: u64) -> Self {
        GenSpec { shape, n, p: None, label_alphabet: None, seed }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_alphabet(mut self, alphabet: u32) -> Self {
        self.label_alphabet = Some(alphabet);
        self
    }

    pub fn effective_p(&self) -> f64 {
        self.p.unwrap_or(match self.shape {
            Shape::DagPairwise => 0.01,
            _ => GEOMETRIC_P,
        })
    }

    pub fn effective_alphabet(&self) -> u32 {
        self.label_alphabet.unwrap_or_else(|| default_alphabet(self.n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("node count must be at least 1".into()));
        }
        if self.effective_alphabet() == 0 {
            return Err(Error::Config("label alphabet must be at least 1".into()));
        }
        let p = self.effective_p();
        match self.shape {
            Shape::DagGeometric if !(p > 0.0 && p < 1.0) => {
                return Err(Error::Config(format!("p must lie in (0, 1), got {p}")))
            }
            Shape::DagPairwise if !(p > 0.0 && p <= 1.0) => {
                return Err(Error::Config(format!("p must lie in (0, 1], got {p}")))
            }
            Shape::DagPairwise if self.n > PAIRWISE_MAX_NODES => {
                return Err(Error::Config(format!("{} is limited to {PAIRWISE_MAX_NODES} nodes", self.shape)))
            }
            _ => {}
        }
        Ok(())
    }
}

/// `max(2, ceil(log2 n))`.
pub fn default_alphabet(n: u64) -> u32 {
    let bits = if n <= 1 { 0 } else { 64 - (n - 1).leading_zeros() };
    bits.max(2)
}

pub struct Generated {
    pub nodes: NodeFile,
    /// Sorted by child.
    pub edges: EdgeFile,
    pub p: f64,
    pub alphabet: u32,
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Number of failures before the next success of a `p`-coin.
fn geometric_skip(rng: &mut Xoshiro256PlusPlus, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = rng.random();
    ((1.0 - u).ln() / (1.0 - p).ln()).floor().min(u64::MAX as f64) as u64
}

pub fn generate(spec: &GenSpec, device: &Device) -> Result<Generated> {
    spec.validate()?;
    let (n, p, alphabet) = (spec.n, spec.effective_p(), spec.effective_alphabet());
    let mut rng = rng(spec.seed);
    // Labels first, so that every shape with the same seed shares them.
    let nodes = Seq::from_records(device, (0..n).map(|id| NodeRecord { id, label: rng.random_range(1..=alphabet) }))?;
    let mut edges = Seq::spill_records(device)?;
    match spec.shape {
        Shape::DagGeometric => {
            let budget = device.memory_budget() / 2;
            let mut sorter = ExternalSorter::new(device, Fixed::<EdgeRecord>::new(), budget, |a: &EdgeRecord, b: &EdgeRecord| {
                (a.child, a.parent).cmp(&(b.child, b.parent))
            });
            let mut children = Vec::new();
            for v in 0..n {
                children.clear();
                while rng.random_bool(p) {
                    if v > 0 {
                        let c = rng.random_range(0..v);
                        if !children.contains(&c) {
                            children.push(c);
                        }
                    }
                }
                for &c in &children {
                    sorter.push(EdgeRecord::new(v, c))?;
                }
            }
            let mut stream = sorter.sorted()?;
            while let Some(e) = stream.next_item()? {
                edges.push(&e)?;
            }
        }
        Shape::DagPairwise => {
            // Generation index g has id n-1-g; children ascend as g descends.
            for g in (1..n).rev() {
                let mut u = g;
                loop {
                    let skip = geometric_skip(&mut rng, p);
                    if skip >= u {
                        break;
                    }
                    u -= skip + 1;
                    edges.push(&EdgeRecord::new(n - 1 - u, n - 1 - g))?;
                }
            }
        }
        Shape::Tree => {
            for g in (1..n).rev() {
                let parent = rng.random_range(0..g);
                edges.push(&EdgeRecord::new(n - 1 - parent, n - 1 - g))?;
            }
        }
        Shape::Chain => {
            for c in 0..n - 1 {
                edges.push(&EdgeRecord::new(c + 1, c))?;
            }
        }
        Shape::TcChain => {
            for c in 0..n {
                for parent in c + 1..n {
                    edges.push(&EdgeRecord::new(parent, c))?;
                }
            }
        }
    }
    Ok(Generated { nodes, edges: edges.finish()?, p, alphabet })
}

/// Random XML document of exactly `n` elements named `l1..l{alphabet}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XmlSpec {
    pub n: u64,
    pub label_alphabet: Option<u32>,
    pub seed: u64,
}

/// After each element, ancestors are closed one at a time with this
/// probability. Slightly above 1/2, which keeps the documents shallow and
/// bushy.
const XML_CLOSE_P: f64 = 0.55;

/// Writes the document and returns its maximum depth (root depth 0).
pub fn generate_xml<W: Write>(spec: &XmlSpec, out: W) -> Result<u64> {
    if spec.n == 0 {
        return Err(Error::Config("an XML document needs at least one element".into()));
    }
    let alphabet = spec.label_alphabet.unwrap_or_else(|| default_alphabet(spec.n));
    if alphabet == 0 {
        return Err(Error::Config("label alphabet must be at least 1".into()));
    }
    let mut out = std::io::BufWriter::new(out);
    let io = |e| Error::storage("<xml output>", e);
    let mut rng = rng(spec.seed);
    let mut stack: Vec<u32> = Vec::new();
    let mut max_depth = 0u64;
    for i in 0..spec.n {
        if i > 0 {
            // The root (stack[0]) stays open.
            while stack.len() > 1 && rng.random_bool(XML_CLOSE_P) {
                let l = stack.pop().unwrap();
                write!(out, "</l{l}>").map_err(io)?;
            }
        }
        let l = rng.random_range(1..=alphabet);
        max_depth = max_depth.max(stack.len() as u64);
        write!(out, "<l{l}>").map_err(io)?;
        stack.push(l);
        if i % 64 == 63 {
            out.write_all(b"\n").map_err(io)?;
        }
    }
    while let Some(l) = stack.pop() {
        write!(out, "</l{l}>").map_err(io)?;
    }
    out.write_all(b"\n").map_err(io)?;
    out.flush().map_err(io)?;
    Ok(max_depth)
}
