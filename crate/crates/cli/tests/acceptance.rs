//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or exceeds its time budget.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ontoscaffold::config::{RunConfig, SimilarityBackend};
use ontoscaffold::eval::{
    default_taus, greedy_align_matrix, load_gold, load_prediction, sweep, GoldSet, Level,
    Prediction, SweepResult, TrigramSimilarity,
};
use ontoscaffold::graph::{orphan_label, NodeKind, ScaffoldGraph};
use ontoscaffold::inference::{dynamic_max_tokens, OrphanReason, RawTriple, SentenceOutcome};
use ontoscaffold::normalize::{normalize_term, Provenance, ValidatedTriple};
use ontoscaffold::pipeline;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn fixture_config() -> RunConfig {
    RunConfig::load(&fixtures().join("secepp_short.toml")).expect("fixture config")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn identity_self_evaluation() -> Outcome {
    let pred_path = fixtures().join("pred_graph.json");
    let pred = load_prediction(&pred_path).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gold_path = dir.path().join("self.json");
    let gold = GoldSet {
        name: "self".into(),
        triples: pred.triples.clone(),
        extra_nodes: pred.nodes.clone(),
    };
    std::fs::write(&gold_path, serde_json::to_string(&gold).unwrap()).map_err(|e| e.to_string())?;
    let mut rows = 0;
    for backend in [SimilarityBackend::Trigram, SimilarityBackend::Embedding] {
        let mut cfg = fixture_config();
        cfg.evaluation.backend = backend;
        let r = pipeline::evaluate(&pred_path, std::slice::from_ref(&gold_path), &cfg)
            .map_err(|e| e.to_string())?;
        ensure(r.rows.len() == 2 * default_taus().len(), || {
            format!("{backend:?}: {} rows", r.rows.len())
        })?;
        for row in &r.rows {
            ensure(
                row.precision == 1.0 && row.recall == 1.0 && row.f1 == 1.0,
                || {
                    format!(
                        "{backend:?} {} tau {:.2}: P={} R={} F1={}",
                        row.level, row.tau, row.precision, row.recall, row.f1
                    )
                },
            )?;
        }
        rows += r.rows.len();
    }
    Ok(format!(
        "trigram + replayed embeddings, {rows} rows all exactly 1.0"
    ))
}

fn random_phrase(rng: &mut ChaCha8Rng) -> String {
    const WORDS: &[&str] = &[
        "software",
        "engineer",
        "public",
        "interest",
        "client",
        "employer",
        "product",
        "standard",
        "integrity",
        "judgment",
        "colleague",
        "profession",
        "quality",
        "cost",
        "work",
    ];
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn monotonicity_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let taus = default_taus();
    for case in 0..50 {
        let np = rng.gen_range(1..=20);
        let ng = rng.gen_range(1..=20);
        let mk = |rng: &mut ChaCha8Rng, n: usize| -> Vec<RawTriple> {
            (0..n)
                .map(|_| RawTriple {
                    subject: random_phrase(rng),
                    predicate: random_phrase(rng),
                    object: random_phrase(rng),
                })
                .collect()
        };
        let pred = Prediction::from_triples(mk(&mut rng, np));
        let gold = GoldSet {
            name: "g".into(),
            triples: mk(&mut rng, ng),
            extra_nodes: vec![],
        };
        let r = sweep(&pred, &[gold], &TrigramSimilarity, &taus).map_err(|e| e.to_string())?;
        for level in [Level::Node, Level::Triple] {
            for w in r.series(level, "g").windows(2) {
                ensure(
                    w[0].matched >= w[1].matched
                        && w[0].precision >= w[1].precision
                        && w[0].recall >= w[1].recall,
                    || {
                        format!(
                            "case {case} {level}: tau {:.2} -> {:.2} increases",
                            w[0].tau, w[1].tau
                        )
                    },
                )?;
            }
        }
    }
    Ok("50 instances (<=20 x <=20), matched/P/R non-increasing over 17 taus".into())
}

fn brute_max_matching(m: &[Vec<f64>], tau: f64) -> usize {
    fn go(row: usize, m: &[Vec<f64>], tau: f64, used: &mut Vec<bool>) -> usize {
        if row == m.len() {
            return 0;
        }
        let mut best = go(row + 1, m, tau, used);
        for j in 0..used.len() {
            if !used[j] && m[row][j] >= tau {
                used[j] = true;
                best = best.max(1 + go(row + 1, m, tau, used));
                used[j] = false;
            }
        }
        best
    }
    go(0, m, tau, &mut vec![false; m.first().map_or(0, Vec::len)])
}

fn greedy_vs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut equal = 0;
    for case in 0..200 {
        let rows = rng.gen_range(1..=5);
        let cols = rng.gen_range(1..=5);
        let m: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| f64::from(rng.gen_range(0..=20u8)) / 20.0)
                    .collect()
            })
            .collect();
        let tau = f64::from(rng.gen_range(2..=18u8)) / 20.0;
        let pairs = greedy_align_matrix(&m, tau);
        let rs: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
        let cs: BTreeSet<usize> = pairs.iter().map(|p| p.1).collect();
        ensure(rs.len() == pairs.len() && cs.len() == pairs.len(), || {
            format!("case {case}: not one-to-one")
        })?;
        ensure(pairs.iter().all(|&(i, j)| m[i][j] >= tau), || {
            format!("case {case}: pair below tau")
        })?;
        let best = brute_max_matching(&m, tau);
        ensure(pairs.len() <= best, || {
            format!("case {case}: greedy {} > max {best}", pairs.len())
        })?;
        if pairs.len() == best {
            equal += 1;
        }
    }
    Ok(format!(
        "200 cases valid; greedy equals maximum in {equal}/200 ({:.1}%)",
        equal as f64 / 2.0
    ))
}

fn bfs_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut queue = std::collections::VecDeque::from([s]);
        seen[s] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    count
}

fn island_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for case in 0..100 {
        let n = rng.gen_range(1..=50);
        let m = rng.gen_range(0..=n + 10);
        let mut g = ScaffoldGraph::new();
        let mut edges = Vec::new();
        for k in 0..m {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            edges.push((a, b));
            g.add_triple(&ValidatedTriple {
                subject: format!("n{a}"),
                predicate: "r".into(),
                object: format!("n{b}"),
                provenance: Provenance {
                    sentence_id: format!("s{k}"),
                    section_label: None,
                },
                flags: Default::default(),
            });
        }
        // nodes never touched by an edge are added as isolated orphans
        let touched: BTreeSet<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        let orphans: Vec<_> = (0..n)
            .filter(|i| !touched.contains(i))
            .map(|i| ontoscaffold::graph::OrphanSentence {
                sentence_id: format!("o{i}"),
                text: format!("lonely node {i}"),
            })
            .collect();
        g.insert_orphans(&orphans);
        let expected = bfs_components(n, &edges);
        ensure(g.node_count() == n, || {
            format!("case {case}: {} nodes, expected {n}", g.node_count())
        })?;
        ensure(g.island_count() == expected, || {
            format!(
                "case {case}: {} islands, oracle {expected}",
                g.island_count()
            )
        })?;
    }
    Ok("100 random graphs (<=50 nodes) match BFS component count".into())
}

fn algorithm_conformance() -> Outcome {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut graphs = Vec::new();
    for d in &dirs {
        let o = Command::new(env!("CARGO_BIN_EXE_ontoscaffold"))
            .args([
                "--config",
                fixtures().join("secepp_short.toml").to_str().unwrap(),
            ])
            .args(["--out", d.path().to_str().unwrap(), "extract"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || {
            format!("extract failed: {}", String::from_utf8_lossy(&o.stderr))
        })?;
        graphs.push(std::fs::read(d.path().join(pipeline::GRAPH_FILE)).map_err(|e| e.to_string())?);
    }
    ensure(graphs[0] == graphs[1] && graphs[1] == graphs[2], || {
        "graph JSON differs between runs".into()
    })?;

    let dir = dirs[0].path();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join(pipeline::MANIFEST_FILE)).unwrap())
            .map_err(|e| e.to_string())?;
    let c = &manifest["counts"];
    let n = |k: &str| c[k].as_u64().unwrap_or(u64::MAX);
    ensure(
        n("sentences") == n("gated_skips") + n("orphans") + n("sentences_with_batches"),
        || format!("counts do not reconcile: {c}"),
    )?;

    let outcomes: Vec<SentenceOutcome> = std::fs::read_to_string(dir.join(pipeline::OUTCOMES_FILE))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    ensure(outcomes.len() as u64 == n("sentences"), || {
        "outcome count differs from sentence count".into()
    })?;
    let segments: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join(pipeline::SEGMENTS_FILE)).unwrap())
            .unwrap();
    let mut text = HashMap::new();
    for p in segments["paragraphs"].as_array().unwrap() {
        for s in p["sentences"].as_array().unwrap() {
            text.insert(
                s["sentence_id"].as_str().unwrap().to_string(),
                s["text"].as_str().unwrap().to_string(),
            );
        }
    }
    let graph = ScaffoldGraph::from_json(std::str::from_utf8(&graphs[0]).unwrap())
        .map_err(|e| e.to_string())?;
    let mut max_attempts = 0;
    let mut failed = 0;
    for o in &outcomes {
        let attempts = match o {
            SentenceOutcome::Batch(b) => b.attempts_used,
            SentenceOutcome::Orphan(m) => m.attempts_used,
            SentenceOutcome::Skipped { .. } => 0,
        };
        max_attempts = max_attempts.max(attempts);
        if let SentenceOutcome::Orphan(m) = o {
            if matches!(
                m.reason,
                OrphanReason::EmptyResult | OrphanReason::ParseFailure { .. }
            ) {
                failed += 1;
                let label = orphan_label(&text[&m.sentence_id]);
                let present = graph
                    .node(&label)
                    .is_some_and(|n| n.kind == NodeKind::OrphanSentence);
                ensure(present, || {
                    format!("{} has no orphan node '{label}'", m.sentence_id)
                })?;
            }
        }
    }
    ensure(max_attempts <= 3, || {
        format!("attempts_used reached {max_attempts}")
    })?;
    ensure(failed > 0, || {
        "fixture exercises no empty or failed parse".into()
    })?;
    Ok(format!(
        "3 runs byte-identical; {} = {} skips + {} orphans + {} batches; max attempts {max_attempts}; {failed} empty/failed parses present as orphan nodes",
        n("sentences"), n("gated_skips"), n("orphans"), n("sentences_with_batches")
    ))
}

fn token_clamp() -> Outcome {
    for n in 0..=2000usize {
        let m = dynamic_max_tokens(n, 2, 256, 1024, 24).map_err(|e| e.to_string())?;
        let expected = 1024.min(256.max(n * 2 * 24)) as u32;
        ensure((256..=1024).contains(&m) && m == expected, || {
            format!("n={n}: got {m}, expected {expected}")
        })?;
    }
    Ok("n in [0, 2000] all equal min(1024, max(256, 48n))".into())
}

fn fuzz_string(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "the",
        "The",
        "a",
        "An",
        "these",
        "those",
        "software",
        "engineers",
        "policies",
        "analyses",
        "children",
        "status",
        "areas",
        "well-known",
        "cross-checks",
        "\"",
        "'",
        "\u{201c}",
        "\u{201d}",
        " ",
        "  ",
        "\t",
        "\n",
        ".",
        ",",
        "s",
        "es",
        "ies",
        "Ü",
        "é",
        "e\u{301}",
        "日本",
        "-",
        "'s",
        "data",
        "criteria",
        "buses",
        "boxes",
        "QUALITY",
        "Public Interest",
    ];
    let n = rng.gen_range(0..8);
    let mut s = String::new();
    for _ in 0..n {
        if rng.gen_bool(0.15) {
            s.push(char::from_u32(rng.gen_range(0x20..0x3000)).unwrap_or('?'));
        } else {
            s.push_str(PIECES.choose(rng).unwrap());
        }
        if rng.gen_bool(0.5) {
            s.push(' ');
        }
    }
    s
}

fn normalization_idempotence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for i in 0..10_000 {
        let s = fuzz_string(&mut rng);
        let once = normalize_term(&s);
        let twice = normalize_term(&once);
        ensure(once == twice, || {
            format!("string {i} {s:?}: {once:?} -> {twice:?}")
        })?;
    }
    Ok("10000 fuzz strings".into())
}

fn sweep_regression() -> Outcome {
    let pred = load_prediction(&fixtures().join("pred_graph.json")).map_err(|e| e.to_string())?;
    let gold = load_gold(&fixtures().join("mini_gold.json")).map_err(|e| e.to_string())?;
    ensure(gold.triples.len() == 15, || {
        format!("mini-gold has {} triples", gold.triples.len())
    })?;
    let fresh =
        sweep(&pred, &[gold], &TrigramSimilarity, &default_taus()).map_err(|e| e.to_string())?;
    let golden = SweepResult::from_csv(
        &std::fs::read_to_string(fixtures().join("sweep_golden.csv")).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    ensure(fresh.rows.len() == golden.rows.len(), || {
        "row count differs".into()
    })?;
    let mut worst: f64 = 0.0;
    for (a, b) in fresh.rows.iter().zip(&golden.rows) {
        ensure(
            a.level == b.level
                && a.gold == b.gold
                && (a.tau - b.tau).abs() < 1e-12
                && a.matched == b.matched,
            || format!("row mismatch at {} tau {:.2}", a.level, a.tau),
        )?;
        for d in [a.precision - b.precision, a.recall - b.recall, a.f1 - b.f1] {
            worst = worst.max(d.abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    // hand-checked cells
    let cell = |l: Level, t: f64| {
        fresh
            .rows
            .iter()
            .find(|r| r.level == l && (r.tau - t).abs() < 1e-9)
            .unwrap()
    };
    let checks = [
        (cell(Level::Triple, 0.10).f1, 30.0 / 39.0),
        (cell(Level::Triple, 0.85).f1, 18.0 / 39.0),
        (cell(Level::Node, 0.55).f1, 34.0 / 53.0),
    ];
    for (got, want) in checks {
        ensure((got - want).abs() <= 1e-9, || {
            format!("hand cell {got} != {want}")
        })?;
    }
    Ok(format!(
        "{} rows, max |delta| {worst:e}, 3 hand-checked cells",
        fresh.rows.len()
    ))
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        (
            "identity self-evaluation",
            Duration::from_secs(10),
            identity_self_evaluation,
        ),
        (
            "monotonicity suite",
            Duration::from_secs(30),
            monotonicity_suite,
        ),
        (
            "greedy alignment vs oracle",
            Duration::from_secs(30),
            greedy_vs_oracle,
        ),
        (
            "island/stats oracle",
            Duration::from_secs(10),
            island_oracle,
        ),
        (
            "extraction conformance on fixture",
            Duration::from_secs(20),
            algorithm_conformance,
        ),
        ("token budget clamp", Duration::from_secs(1), token_clamp),
        (
            "normalization idempotence",
            Duration::from_secs(5),
            normalization_idempotence,
        ),
        (
            "sweep regression",
            Duration::from_secs(10),
            sweep_regression,
        ),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time budget")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!(
            "{status} [{}] {name}: {detail} ({:.2}s, budget {}s)",
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
