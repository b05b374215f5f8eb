//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero on any failure not listed in `KNOWN_FAILURES`.

use std::time::{Duration, Instant};

use dagbisim::bisim::{partition_dag, PartitionRun, Variant};
use dagbisim::generator::{generate, generate_xml, GenSpec, Shape, XmlSpec};
use dagbisim::graphio::{build_quotient, canonicalize, compare_partitions, EdgeRecord, NodeRecord, Partition, PartitionRecord, Relation};
use dagbisim::iomodel::{Device, IoStats, MachineConfig, Seq};
use dagbisim::oracle::{fixtures, isomorphic, oracle_backward, oracle_backward_k, oracle_bisim, oracle_fb, oracle_rank, SmallGraph};
use dagbisim::xmlindex::{ak_index, fb_index, one_index, remap_partition, reversed_tree_graph, tree_document, IndexRun, XmlSource};
use dagbisim::Result;

const MIB: u64 = 1 << 20;
const KIB: u64 = 1 << 10;

/// Per-fixture wall-clock limit of criteria 1 and 2.
const FIXTURE_LIMIT: Duration = Duration::from_secs(1);
const ORACLE_DAGS: u64 = 1000;
const ORACLE_TREES: u64 = 500;
const MAX_ORACLE_NODES: u64 = 200;
const MAX_K: usize = 5;
const SWEEP_N: [u64; 3] = [100_000, 1_000_000, 10_000_000];
/// Largest allowed ratio between IOs per element across the n sweep.
const SWEEP_SPREAD: f64 = 3.0;
const SWEEP_BUDGET: Duration = Duration::from_secs(30 * 60);
const BUDGETS: [u64; 3] = [16 * MIB, 64 * MIB, 256 * MIB];
const XML_NODES: u64 = 1_000_000;
const VARIANT_SEEDS: u64 = 10;

/// Criteria expected to print FAIL; see the README. The small-document
/// F&B block count is 10, not 8: the 8-block grouping is the meet of the
/// forward partition and the 1-index, which is not stable in both directions.
const KNOWN_FAILURES: &[u32] = &[2];

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn main() {
    let criteria: [(u32, Criterion); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (n, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let o = f().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n}: {verdict} ({:.1}s) {}", t.elapsed().as_secs_f64(), o.detail);
        if !o.pass && !KNOWN_FAILURES.contains(&n) {
            unexpected.push(n);
        }
        if o.pass && KNOWN_FAILURES.contains(&n) {
            println!("criterion {n}: listed as a known failure but passed");
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}

fn dev(memory: u64, block: u64) -> Device {
    Device::new(MachineConfig::new(memory, block)).expect("device")
}

fn small_dev() -> Device {
    dev(4 * MIB, 4 * KIB)
}

fn files(d: &Device, g: &SmallGraph) -> Result<(Seq<NodeRecord>, Seq<EdgeRecord>)> {
    let nodes = Seq::from_records(d, g.ids().iter().enumerate().map(|(i, &id)| NodeRecord { id, label: g.label(i) as u32 }))?;
    let edges = Seq::from_records(d, g.edges().into_iter().map(|(p, c)| EdgeRecord::new(p, c)))?;
    Ok((nodes, edges))
}

fn load(p: &Seq<PartitionRecord>) -> Result<Partition> {
    Ok(Partition::load(p)?.canonical())
}

fn blocks(bs: &[&[u64]]) -> Partition {
    Partition::from_blocks(bs.iter().map(|b| b.to_vec())).expect("fixture").canonical()
}

fn small_graph(nodes: &Seq<NodeRecord>, edges: &Seq<EdgeRecord>) -> Result<SmallGraph> {
    SmallGraph::from_files(nodes, edges)
}

fn criterion_1() -> Result<Outcome> {
    let t = Instant::now();
    let d = small_dev();
    let g = fixtures::d_split_dag();
    let (nodes, edges) = files(&d, &g)?;
    let mut notes = Vec::new();
    let mut pass = true;
    for v in [Variant::RankLabel, Variant::RankLabelHash] {
        let r = partition_dag(&nodes, &edges, &d, v)?;
        let p = load(&r.partition)?;
        let q = build_quotient(&nodes, &edges, &r.partition)?;
        let iso = isomorphic(&small_graph(&q.nodes, &q.edges)?, &fixtures::d_split_quotient());
        let ok = r.blocks == 5 && p == blocks(&fixtures::D_SPLIT_BLOCKS) && iso;
        pass &= ok;
        notes.push(format!("{v}: {} blocks, quotient isomorphic {iso}", r.blocks));
    }
    let elapsed = t.elapsed();
    pass &= elapsed < FIXTURE_LIMIT;
    Ok(Outcome::new(pass, notes.join("; ")))
}

fn criterion_2() -> Result<Outcome> {
    let t = Instant::now();
    let d = small_dev();
    let src = XmlSource::from(fixtures::SMALL_DOCUMENT);
    let tree = fixtures::small_document_tree();
    let fixture_ids = |r: &IndexRun| -> Result<Partition> { Ok(fixtures::small_document_ids(&Partition::load(&r.partition)?).canonical()) };

    let one = fixture_ids(&one_index(&src, &d)?)?;
    let one_ok = one == blocks(&fixtures::SMALL_DOCUMENT_ONE_INDEX);
    let expected_ak = [
        blocks(&fixtures::SMALL_DOCUMENT_A0),
        blocks(&fixtures::SMALL_DOCUMENT_A1),
        blocks(&fixtures::SMALL_DOCUMENT_A2),
        blocks(&fixtures::SMALL_DOCUMENT_ONE_INDEX),
    ];
    let mut ak_counts = Vec::new();
    let mut ak_ok = true;
    for (k, want) in expected_ak.iter().enumerate() {
        let got = fixture_ids(&ak_index(&src, k, &d)?)?;
        ak_counts.push(got.num_blocks());
        ak_ok &= got == *want;
    }
    let a3_is_one_index = fixture_ids(&ak_index(&src, 3, &d)?)? == one;

    let fb_run = fb_index(&src, &d)?;
    let fb = fixture_ids(&fb_run)?;
    let fb_count_ok = fb.num_blocks() == 8;
    // The analysis behind the mismatch must hold exactly.
    let forward = oracle_bisim(&tree);
    let meet = forward.meet(&one)?;
    let analysis_ok = fb == oracle_fb(&tree).canonical()
        && fb == blocks(&fixtures::SMALL_DOCUMENT_FB)
        && meet.canonical() == blocks(&fixtures::SMALL_DOCUMENT_FORWARD_BACKWARD_MEET);
    let fast = t.elapsed() < FIXTURE_LIMIT;

    let pass = one_ok && ak_ok && a3_is_one_index && fb_count_ok && fast;
    let detail = format!(
        "1-index {} blocks (exact {one_ok}); A(0..3) {ak_counts:?} (exact {ak_ok}); A(3) = 1-index {a3_is_one_index}; \
         F&B {} blocks, expected 8; F&B equals the fixpoint oracle and the 8-block grouping is the forward/1-index meet: {analysis_ok}",
        one.num_blocks(),
        fb.num_blocks()
    );
    if !(one_ok && ak_ok && a3_is_one_index && analysis_ok && fast) {
        return Ok(Outcome::new(false, format!("{detail}; UNEXPLAINED")));
    }
    Ok(Outcome::new(pass, detail))
}

/// Mixed shapes, sizes, alphabets and densities, all at most 200 nodes.
fn random_dag_spec(i: u64) -> GenSpec {
    let shape = Shape::ALL[(i % Shape::ALL.len() as u64) as usize];
    let n = 1 + (i * 7919) % MAX_ORACLE_NODES;
    let mut spec = GenSpec::new(shape, n, i);
    if !i.is_multiple_of(3) {
        spec = spec.with_alphabet(1 + (i % 4) as u32);
    }
    match shape {
        Shape::DagPairwise => spec.with_p([0.01, 0.05, 0.2][(i % 3) as usize]),
        Shape::DagGeometric if i.is_multiple_of(2) => spec.with_p(0.5),
        _ => spec,
    }
}

fn random_tree_spec(i: u64) -> GenSpec {
    let n = 1 + (i * 104_729) % MAX_ORACLE_NODES;
    GenSpec::new(Shape::Tree, n, 10_000 + i).with_alphabet(1 + (i % 4) as u32)
}

/// Runs an index on a generated tree and maps it back to graph ids.
fn tree_index(d: &Device, nodes: &Seq<NodeRecord>, edges: &Seq<EdgeRecord>, f: impl Fn(&XmlSource) -> Result<IndexRun>) -> Result<Partition> {
    let doc = tree_document(nodes, edges)?;
    let r = f(&XmlSource::Bytes(doc.xml))?;
    load(&remap_partition(&r.partition, &doc.preorder, d)?)
}

fn criterion_3() -> Result<Outcome> {
    let d = small_dev();
    let mut mismatches = Vec::new();
    for i in 0..ORACLE_DAGS {
        let spec = random_dag_spec(i);
        let g = generate(&spec, &d)?;
        let sg = small_graph(&g.nodes, &g.edges)?;
        let want = oracle_bisim(&sg).canonical();
        for v in [Variant::RankLabel, Variant::RankLabelHash] {
            if load(&partition_dag(&g.nodes, &g.edges, &d, v)?.partition)? != want {
                mismatches.push(format!("dag {i} ({}, n={}) {v}", spec.shape.name(), spec.n));
            }
        }
    }
    let mut tree_checks = 0u64;
    for i in 0..ORACLE_TREES {
        let g = generate(&random_tree_spec(i), &d)?;
        let sg = small_graph(&g.nodes, &g.edges)?;
        if tree_index(&d, &g.nodes, &g.edges, |s| one_index(s, &d))? != oracle_backward(&sg).canonical() {
            mismatches.push(format!("tree {i} 1-index"));
        }
        for k in 0..=MAX_K {
            if tree_index(&d, &g.nodes, &g.edges, |s| ak_index(s, k, &d))? != oracle_backward_k(&sg, k)?.canonical() {
                mismatches.push(format!("tree {i} A({k})"));
            }
        }
        if tree_index(&d, &g.nodes, &g.edges, |s| fb_index(s, &d))? != oracle_fb(&sg).canonical() {
            mismatches.push(format!("tree {i} F&B"));
        }
        tree_checks += 3 + MAX_K as u64;
    }
    let detail = format!(
        "{ORACLE_DAGS} DAGs x 2 variants, {ORACLE_TREES} trees x {} index checks ({tree_checks} total); mismatches {}{}",
        3 + MAX_K,
        mismatches.len(),
        mismatches.first().map(|m| format!(", first: {m}")).unwrap_or_default()
    );
    Ok(Outcome::new(mismatches.is_empty(), detail))
}

fn io_per_element(run: &PartitionRun, nodes: u64, edges: u64) -> f64 {
    run.total_io().total() as f64 / (nodes + edges) as f64
}

fn criterion_4() -> Result<Outcome> {
    let t = Instant::now();
    let mut ratios = Vec::new();
    for n in SWEEP_N {
        let d = dev(256 * MIB, 64 * KIB);
        let g = generate(&GenSpec::new(Shape::DagGeometric, n, 4), &d)?;
        let r = partition_dag(&g.nodes, &g.edges, &d, Variant::RankLabelHash)?;
        ratios.push(io_per_element(&r, g.nodes.len(), g.edges.len()));
    }
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let spread = hi / lo;
    let elapsed = t.elapsed();
    let detail = format!(
        "IOs/(N+E) for n = {SWEEP_N:?}: [{}]; spread {spread:.2}x (limit {SWEEP_SPREAD}x); {:.0}s (limit {}s)",
        ratios.iter().map(|r| format!("{r:.5}")).collect::<Vec<_>>().join(", "),
        elapsed.as_secs_f64(),
        SWEEP_BUDGET.as_secs()
    );
    Ok(Outcome::new(spread < SWEEP_SPREAD && elapsed <= SWEEP_BUDGET, detail))
}

fn criterion_5() -> Result<Outcome> {
    let mut ios = Vec::new();
    let mut reference: Option<Partition> = None;
    let mut identical = true;
    for m in BUDGETS {
        let d = dev(m, 64 * KIB);
        let g = generate(&GenSpec::new(Shape::DagGeometric, 1_000_000, 5), &d)?;
        let r = partition_dag(&g.nodes, &g.edges, &d, Variant::RankLabelHash)?;
        ios.push(r.total_io().total());
        let p = load(&r.partition)?;
        match &reference {
            None => reference = Some(p),
            Some(q) => identical &= *q == p,
        }
    }
    let non_increasing = ios.windows(2).all(|w| w[1] <= w[0]);
    let detail = format!("total IOs at M = 16/64/256 MiB: {ios:?}; non-increasing {non_increasing}; identical partitions {identical}");
    Ok(Outcome::new(non_increasing && identical, detail))
}

fn criterion_6() -> Result<Outcome> {
    // A small M with two labels gives large (rank, label) groups that the
    // structural hash splits.
    let mut rows = Vec::new();
    let mut pass = true;
    let mut collisions = 0;
    for seed in 0..VARIANT_SEEDS {
        let d = dev(MIB, 4 * KIB);
        let g = generate(&GenSpec::new(Shape::DagGeometric, 200_000, seed).with_alphabet(2), &d)?;
        let rl = partition_dag(&g.nodes, &g.edges, &d, Variant::RankLabel)?;
        let ss = partition_dag(&g.nodes, &g.edges, &d, Variant::RankLabelHash)?;
        pass &= rl.group_spill_bytes > 0 && ss.group_spill_bytes <= rl.group_spill_bytes;
        pass &= load(&rl.partition)? == load(&ss.partition)?;
        collisions += ss.collisions + rl.collisions;
        rows.push((rl.group_spill_bytes, ss.group_spill_bytes));
    }
    // Standard seeds over every shape at the default budget.
    for i in 0..VARIANT_SEEDS * Shape::ALL.len() as u64 {
        let d = small_dev();
        let spec = random_dag_spec(i);
        let g = generate(&GenSpec::new(spec.shape, 2_000, i), &d)?;
        collisions += partition_dag(&g.nodes, &g.edges, &d, Variant::RankLabelHash)?.collisions;
    }
    pass &= collisions == 0;
    let (rl, ss): (u64, u64) = rows.iter().fold((0, 0), |a, r| (a.0 + r.0, a.1 + r.1));
    let detail = format!(
        "group spill bytes over {VARIANT_SEEDS} seeds: rank-label {rl}, rank-label-hash {ss}; collisions {collisions}"
    );
    Ok(Outcome::new(pass, detail))
}

fn criterion_7() -> Result<Outcome> {
    let d = dev(256 * MIB, 64 * KIB);
    let mut doc = Vec::new();
    generate_xml(&XmlSpec { n: XML_NODES, label_alphabet: None, seed: 7 }, &mut doc)?;
    let src = XmlSource::Bytes(doc);
    let idx = one_index(&src, &d)?;
    let xml_io: IoStats = idx.total_io();
    let g = reversed_tree_graph(src.scan(&d)?, &d)?;
    let dag = partition_dag(&g.nodes, &g.edges, &d, Variant::RankLabelHash)?;
    let dag_io = dag.total_io();
    let same = load(&idx.partition)? == load(&dag.partition)?;
    let detail = format!(
        "{XML_NODES} elements: 1-index {} IOs, DAG pipeline {} IOs ({:.2}x); partitions equal {same}",
        xml_io.total(),
        dag_io.total(),
        dag_io.total() as f64 / xml_io.total().max(1) as f64
    );
    Ok(Outcome::new(xml_io.total() < dag_io.total() && same, detail))
}

fn relation(d: &Device, a: &Partition, b: &Partition) -> Result<Relation> {
    let seq = |p: &Partition| Seq::from_records(d, p.pairs().iter().map(|&(n, b)| PartitionRecord::new(n, b)));
    compare_partitions(&seq(a)?, &seq(b)?)
}

fn refines(r: Relation) -> bool {
    matches!(r, Relation::Equal | Relation::FirstRefinesSecond)
}

fn criterion_8() -> Result<Outcome> {
    let d = small_dev();
    let mut violations: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            violations.push(what);
        }
    };
    for i in 0..200 {
        let g = generate(&random_dag_spec(i), &d)?;
        let sg = small_graph(&g.nodes, &g.edges)?;
        let rank = oracle_rank(&sg);
        let r = partition_dag(&g.nodes, &g.edges, &d, Variant::RankLabelHash)?;
        let p = load(&r.partition)?;
        for block in p.blocks() {
            let idx: Vec<usize> = block.iter().map(|&n| sg.index_of(n).unwrap()).collect();
            check(idx.iter().all(|&j| rank[j] == rank[idx[0]]), format!("dag {i}: block with mixed ranks"));
            check(idx.iter().all(|&j| sg.label(j) == sg.label(idx[0])), format!("dag {i}: block with mixed labels"));
        }
        let once = canonicalize(&r.partition)?;
        let twice = canonicalize(&once)?;
        check(once.to_vec()? == twice.to_vec()?, format!("dag {i}: canonicalize not idempotent"));
        check(relation(&d, &p, &p)? == Relation::Equal, format!("dag {i}: compare not reflexive"));
    }
    for i in 0..100 {
        let g = generate(&random_tree_spec(i), &d)?;
        let mut ak = Vec::new();
        for k in 0..=MAX_K + 1 {
            ak.push(tree_index(&d, &g.nodes, &g.edges, |s| ak_index(s, k, &d))?);
        }
        for k in 0..=MAX_K {
            let fwd = relation(&d, &ak[k + 1], &ak[k])?;
            let back = relation(&d, &ak[k], &ak[k + 1])?;
            check(refines(fwd), format!("tree {i}: A({}) does not refine A({k})", k + 1));
            check(!(refines(fwd) && refines(back)) || fwd == Relation::Equal, format!("tree {i}: compare not antisymmetric at k={k}"));
        }
        let one = tree_index(&d, &g.nodes, &g.edges, |s| one_index(s, &d))?;
        let fb = tree_index(&d, &g.nodes, &g.edges, |s| fb_index(s, &d))?;
        let forward = load(&partition_dag(&g.nodes, &g.edges, &d, Variant::RankLabelHash)?.partition)?;
        check(refines(relation(&d, &fb, &one)?), format!("tree {i}: F&B does not refine the 1-index"));
        check(refines(relation(&d, &fb, &forward)?), format!("tree {i}: F&B does not refine forward bisimulation"));
    }
    let detail = format!(
        "single rank and label per block, A(k+1) refines A(k), F&B refines 1-index and forward, canonicalize idempotent, compare reflexive and antisymmetric; violations {}{}",
        violations.len(),
        violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
    );
    Ok(Outcome::new(violations.is_empty(), detail))
}
