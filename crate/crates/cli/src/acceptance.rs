//! The acceptance criteria, each evaluated end to end against independent
//! oracles.

use crate::workload::prepare;
use faulty_clique::circuit::{evaluate, Semiring};
use faulty_clique::compile::{run_clique_directly, sample_algorithm, SAMPLE_ALGORITHMS};
use faulty_clique::engine::{
    word_bits, Adversary, FnAdversary, GreedyAdversary, NoAdversary, PublicTrace, RandomAdversary,
};
use faulty_clique::galois::{CodeParams, FieldElement, ReedSolomon, MODULUS};
use faulty_clique::matmul::{MMTensor, Matrix};
use faulty_clique::protocol::{check_batch_shrink, Planner};
use faulty_clique::{run_faulty, run_faulty_sublinear, run_nonfaulty, Engine, RunOptions, SimConfig, Workload};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

/// Per-node per-round crash probability of the random adversaries; high
/// enough that every run exhausts its budget.
pub const RANDOM_RATE: f64 = 0.05;
pub const ROUTE_COST: usize = 2;

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {verdict} {}: {}", self.id, self.title, self.detail)
    }
}

fn criterion(id: usize, title: &'static str, passed: bool, detail: String) -> Criterion {
    Criterion { id, title, passed, detail }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn mds_suite() -> Criterion {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut decodes, mut wrong) = (0usize, 0usize);
    for n in [8, 16, 64] {
        for c in [2, 4] {
            let params = CodeParams::new(n, c).expect("valid code");
            let code = ReedSolomon::new(params);
            let k = params.dimension;
            let subsets = if n == 8 {
                combinations(n, k)
            } else {
                (0..50).map(|_| sample(&mut rng, n, k).into_vec()).collect()
            };
            let decoders: Vec<_> = subsets.iter().map(|s| code.decoder(s).expect("k distinct positions")).collect();
            for _ in 0..100 {
                let message: Vec<FieldElement> = (0..k).map(|_| FieldElement::new(rng.random_range(0..MODULUS))).collect();
                let word = code.encode(&message).expect("message of length k");
                for d in &decoders {
                    let picked: Vec<FieldElement> = d.positions().iter().map(|&i| word[i]).collect();
                    decodes += 1;
                    wrong += usize::from(d.apply(&picked) != message);
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    criterion(
        1,
        "MDS code suite",
        wrong == 0 && secs < 10.0,
        format!("{decodes} decodes, {wrong} wrong, {secs:.2}s"),
    )
}

pub fn tensor_identity() -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ring = Semiring::plus_times(31);
    let mut mismatches = 0;
    let cases = [(MMTensor::strassen(), 2, 1000), (MMTensor::trivial(4), 4, 100)];
    for (tensor, dim, count) in &cases {
        for _ in 0..*count {
            let x = Matrix::random(*dim, ring, &mut rng);
            let y = Matrix::random(*dim, ring, &mut rng);
            if !tensor.agrees(&x, &y, ring).unwrap_or(false) {
                mismatches += 1;
            }
        }
    }
    criterion(2, "tensor identity", mismatches == 0, format!("1100 products, {mismatches} mismatches"))
}

pub fn compiler_equivalence() -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checked, mut bad) = (0, Vec::new());
    for name in SAMPLE_ALGORITHMS {
        let alg = sample_algorithm(name).expect("sample algorithm");
        for n in [4usize, 8] {
            let bits = word_bits(n, 4);
            for _ in 0..20 {
                let per: Vec<Vec<u64>> =
                    (0..n).map(|_| (0..n).map(|_| rng.random_range(0..1u64 << bits)).collect()).collect();
                checked += 1;
                let direct = run_clique_directly(alg.as_ref(), bits, &per);
                let w = Workload::clique(name, alg.clone(), bits, &per);
                let (Ok(direct), Ok(w)) = (direct, w) else {
                    bad.push(format!("{name} n={n}: build failed"));
                    continue;
                };
                let top = w.circuit.depth();
                if top != 2 * alg.rounds() + 1 {
                    bad.push(format!("{name} n={n}: depth {top}"));
                }
                let Ok(out) = evaluate(&w.circuit, &w.inputs) else {
                    bad.push(format!("{name} n={n}: evaluation failed"));
                    continue;
                };
                let per_node: Vec<Vec<u64>> =
                    (0..n).map(|u| w.scheme.part(top, u).iter().map(|&g| out[g as usize]).collect()).collect();
                if per_node != direct {
                    bad.push(format!("{name} n={n}: outputs differ"));
                }
            }
        }
    }
    bad.dedup();
    criterion(3, "compiler equivalence", bad.is_empty(), format!("{checked} inputs, failures {bad:?}"))
}

/// Distinct alive nodes, lowest first, capped by the remaining budget.
fn capped(mut nodes: Vec<usize>, t: &PublicTrace<'_>) -> Vec<usize> {
    nodes.retain(|&v| t.alive[v]);
    nodes.sort_unstable();
    nodes.dedup();
    nodes.truncate(t.budget_left);
    nodes
}

/// Nodes about to send checkpoint shards: assigned simulators, or the owners
/// of missing parts in a main pass.
fn senders(t: &PublicTrace<'_>) -> Vec<usize> {
    if t.assignments.is_empty() {
        t.missing.to_vec()
    } else {
        t.assignments.iter().map(|&(v, _)| v).collect()
    }
}

/// Kills every checkpoint sender the round its stage starts.
pub fn sender_killer() -> Box<dyn Adversary> {
    Box::new(FnAdversary::new("sender-killer", |t: &PublicTrace<'_>| {
        if t.quiet || !t.label_started || !t.label.ends_with(":checkpoint") {
            return Vec::new();
        }
        capped(senders(t), t)
    }))
}

/// Half the budget on the first protocol round, the rest when decoding starts.
pub fn burst_then_decode() -> Box<dyn Adversary> {
    let mut burst_done = false;
    Box::new(FnAdversary::new("burst-then-decode", move |t: &PublicTrace<'_>| {
        if t.quiet {
            return Vec::new();
        }
        let alive: Vec<usize> = (0..t.alive.len()).filter(|&v| t.alive[v]).collect();
        if !burst_done {
            burst_done = true;
            return alive.into_iter().take(t.budget_left / 2).collect();
        }
        if t.label == "decode" && t.label_started {
            return alive.into_iter().rev().take(t.budget_left).collect();
        }
        Vec::new()
    }))
}

/// One crash at the start of every collection stage, spreading the budget
/// over as many attempts as possible.
pub fn trickle() -> Box<dyn Adversary> {
    Box::new(FnAdversary::new("trickle", |t: &PublicTrace<'_>| {
        if t.quiet || !t.label_started || !t.label.ends_with(":collect") {
            return Vec::new();
        }
        let mut victims = capped(senders(t), t);
        if victims.is_empty() {
            victims = capped((0..t.alive.len()).collect(), t);
        }
        victims.truncate(1);
        victims
    }))
}

pub const WORST_CASE_SCRIPTS: [(&str, fn() -> Box<dyn Adversary>); 3] =
    [("sender-killer", sender_killer), ("burst-then-decode", burst_then_decode), ("trickle", trickle)];

/// Outcome of one semiring product run under faults.
#[derive(Clone, Debug)]
pub struct MmRun {
    pub n: usize,
    pub c: usize,
    pub adversary: String,
    pub correct: bool,
    pub error: Option<String>,
    pub quiet_rounds: usize,
    pub protocol_rounds: usize,
    pub decode_rounds: usize,
    pub max_attempts_per_epoch: usize,
    pub failures: usize,
    pub budget: usize,
}

fn adversary_by_name(name: &str) -> Box<dyn Adversary> {
    if let Some(seed) = name.strip_prefix("random#") {
        return Box::new(RandomAdversary::new(RANDOM_RATE, seed.parse().expect("seed")));
    }
    match name {
        "none" => Box::new(NoAdversary),
        "greedy" => Box::new(GreedyAdversary),
        _ => WORST_CASE_SCRIPTS.iter().find(|(s, _)| *s == name).map(|(_, f)| f()).expect("known adversary"),
    }
}

/// Adversary names run at every grid point.
pub fn adversary_names() -> Vec<String> {
    let mut out = vec!["none".to_string()];
    out.extend((0..10).map(|s| format!("random#{s}")));
    out.push("greedy".into());
    out.extend(WORST_CASE_SCRIPTS.iter().map(|(s, _)| s.to_string()));
    out
}

fn mm_run(workload: &str, n: usize, c: usize, adversary: &str, seed: u64) -> MmRun {
    let config = SimConfig::new(n, c).with_route_cost(ROUTE_COST).with_seed(seed);
    let mut run = MmRun {
        n,
        c,
        adversary: adversary.to_string(),
        correct: false,
        error: None,
        quiet_rounds: 0,
        protocol_rounds: 0,
        decode_rounds: 0,
        max_attempts_per_epoch: 0,
        failures: 0,
        budget: config.budget(),
    };
    let outcome = prepare(workload, n, 1.0, n, config.b, seed).and_then(|p| {
        let mut engine = Engine::new(config, adversary_by_name(adversary)).map_err(|e| e.to_string())?;
        let report = run_faulty(&p.workload, &mut engine, RunOptions::default()).map_err(|e| e.to_string())?;
        Ok((report.outputs == p.oracle && report.collectors_correct, report.ledger))
    });
    match outcome {
        Ok((correct, ledger)) => {
            run.correct = correct;
            run.quiet_rounds = ledger.quiet_rounds;
            run.protocol_rounds = ledger.protocol_rounds;
            run.decode_rounds = ledger.decode_rounds;
            run.max_attempts_per_epoch = ledger.max_attempts_per_epoch();
            run.failures = ledger.failures.len();
        }
        Err(e) => run.error = Some(e),
    }
    run
}

/// Every semiring product run behind criteria 4, 5, 6 and 8, in parallel.
/// Odd random seeds use the tropical semiring.
pub fn mm_runs() -> Vec<MmRun> {
    let mut jobs = Vec::new();
    for n in [8usize, 27, 64] {
        for c in [2usize, 3, 4] {
            for (i, adv) in adversary_names().into_iter().enumerate() {
                let tropical = adv.strip_prefix("random#").is_some_and(|s| s.parse::<u64>().unwrap_or(0) % 2 == 1);
                let workload = if tropical { "semiring-mm:tropical" } else { "semiring-mm:plus-times" };
                jobs.push((workload, n, c, adv, i as u64));
            }
        }
    }
    jobs.par_iter().map(|(w, n, c, adv, seed)| mm_run(w, *n, *c, adv, *seed)).collect()
}

pub fn mm_correctness(runs: &[MmRun], elapsed_secs: f64) -> Criterion {
    let bad: Vec<String> = runs
        .iter()
        .filter(|r| !r.correct)
        .map(|r| format!("n={} c={} {}: {}", r.n, r.c, r.adversary, r.error.as_deref().unwrap_or("wrong product")))
        .collect();
    let random: Vec<&MmRun> = runs.iter().filter(|r| r.adversary.starts_with("random#")).collect();
    let full = random.iter().filter(|r| r.failures == r.budget).count();
    criterion(
        4,
        "semiring MM correctness under faults",
        bad.is_empty() && elapsed_secs < 300.0,
        format!(
            "{} runs, {} incorrect {:?}, random adversaries spent full budget in {full}/{}, {elapsed_secs:.1}s",
            runs.len(),
            bad.len(),
            &bad[..bad.len().min(3)],
            random.len()
        ),
    )
}

fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().copied().fold(f64::MIN, f64::max);
    let min = v.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

pub fn round_scaling(runs: &[MmRun]) -> Criterion {
    let mut worst: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for r in runs.iter().filter(|r| r.error.is_none()) {
        let slot = worst.entry((r.n, r.c)).or_default();
        *slot = (*slot).max(r.protocol_rounds);
    }
    let ratio: BTreeMap<(usize, usize), f64> = worst
        .iter()
        .map(|(&(n, c), &rounds)| {
            let nf = n as f64;
            ((n, c), rounds as f64 / ((c * c) as f64 * nf.cbrt() * nf.log2()))
        })
        .collect();
    let ns: Vec<usize> = ratio.keys().map(|k| k.0).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let cs: Vec<usize> = ratio.keys().map(|k| k.1).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let across_n = cs.iter().map(|&c| spread(ns.iter().filter_map(|&n| ratio.get(&(n, c)).copied()))).fold(0.0, f64::max);
    let across_c = ns.iter().map(|&n| spread(cs.iter().filter_map(|&c| ratio.get(&(n, c)).copied()))).fold(0.0, f64::max);
    let table: Vec<String> = ratio.iter().map(|((n, c), r)| format!("n={n} c={c}: {r:.3}")).collect();
    criterion(
        5,
        "round scaling",
        !ratio.is_empty() && across_n <= 4.0 && across_c <= 4.0,
        format!("max spread across n {across_n:.2}, across c {across_c:.2}; ratios [{}]", table.join(", ")),
    )
}

/// Quiet-round counts of the compiled sample algorithms, `(name, c, quiet)`.
pub fn clique_quiet_rounds() -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    for name in SAMPLE_ALGORITHMS {
        for c in [2usize, 4] {
            let workload = format!("clique:{name}");
            let quiet = prepare(&workload, 8, 1.0, 8, 4, 0).ok().and_then(|p| {
                let config = SimConfig::new(8, c).with_route_cost(ROUTE_COST);
                let mut engine = Engine::new(config, Box::new(GreedyAdversary)).ok()?;
                run_faulty(&p.workload, &mut engine, RunOptions::default()).ok().map(|r| r.ledger.quiet_rounds)
            });
            out.push((workload, c, quiet.unwrap_or(usize::MAX)));
        }
    }
    out
}

pub fn quiet_rounds(runs: &[MmRun], cliques: &[(String, usize, usize)]) -> Criterion {
    let mut observed: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut off = 0;
    let mut total = 0;
    for r in runs.iter().filter(|r| r.error.is_none()) {
        total += 1;
        if r.quiet_rounds != ROUTE_COST + r.c {
            off += 1;
            observed.entry(format!("semiring-mm c={}", r.c)).or_default().push(r.quiet_rounds);
        }
    }
    for (name, c, q) in cliques {
        total += 1;
        if *q != ROUTE_COST + c {
            off += 1;
            observed.entry(format!("{name} c={c}")).or_default().push(*q);
        }
    }
    let summary: Vec<String> = observed
        .iter()
        .map(|(k, v)| {
            let mut v = v.clone();
            v.dedup();
            format!("{k}: {v:?}")
        })
        .collect();
    criterion(
        6,
        "quiet rounds equal route_cost + c",
        off == 0,
        format!("{off}/{total} runs differ (route_cost = {ROUTE_COST}) [{}]", summary.join("; ")),
    )
}

/// Spends `pre` crashes on the first checkpoint stage and everything left
/// on decode round `offset`, choosing victims from `seed`.
fn decode_script(pre: usize, offset: usize, seed: u64) -> Box<dyn Adversary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut decode_round = 0;
    let mut pre_done = false;
    Box::new(FnAdversary::new(format!("decode-script-{seed}"), move |t: &PublicTrace<'_>| {
        let alive: Vec<usize> = (0..t.alive.len()).filter(|&v| t.alive[v]).collect();
        let mut pick = |k: usize| -> Vec<usize> {
            let k = k.min(alive.len()).min(t.budget_left);
            sample(&mut rng, alive.len(), k).into_iter().map(|i| alive[i]).collect()
        };
        if !pre_done && t.label_started && t.label.ends_with(":checkpoint") {
            pre_done = true;
            return pick(pre);
        }
        if t.label == "decode" {
            decode_round += 1;
            if decode_round == offset + 1 {
                return pick(t.budget_left);
            }
        }
        Vec::new()
    }))
}

pub fn decodability() -> Criterion {
    let (n, c) = (8, 2);
    let mut bad = Vec::new();
    let mut worst = 0;
    for i in 0..20u64 {
        let prepared = match prepare("semiring-mm:plus-times", n, 1.0, n, 4, 100 + i) {
            Ok(p) => p,
            Err(e) => {
                bad.push(e);
                continue;
            }
        };
        let script = decode_script((i % 3) as usize, (i % 2) as usize, i);
        let result = Engine::new(SimConfig::new(n, c).with_route_cost(ROUTE_COST), script)
            .map_err(|e| e.to_string())
            .and_then(|mut engine| {
                let budget = engine.budget();
                let r = run_faulty(&prepared.workload, &mut engine, RunOptions::default()).map_err(|e| e.to_string())?;
                let alive = engine.alive_count();
                Ok((r, budget, alive))
            });
        match result {
            Ok((r, budget, alive)) => {
                worst = worst.max(r.ledger.decode_rounds);
                let ok = r.ledger.decode_rounds <= 2 * c
                    && r.ledger.failures.len() == budget
                    && r.collected.len() == alive
                    && r.collectors_correct
                    && r.outputs == prepared.oracle;
                if !ok {
                    bad.push(format!("script {i}: decode rounds {}, collectors {}", r.ledger.decode_rounds, r.collected.len()));
                }
            }
            Err(e) => bad.push(format!("script {i}: {e}")),
        }
    }
    criterion(
        7,
        "decodability within 2c rounds",
        bad.is_empty(),
        format!("20 scripts, worst decode {worst} rounds (limit {}), failures {bad:?}", 2 * c),
    )
}

pub fn attempt_bound(runs: &[MmRun], planner: Planner) -> Criterion {
    let over: Vec<String> = runs
        .iter()
        .filter(|r| r.max_attempts_per_epoch as f64 > r.c as f64 + 4.0 * (r.n as f64).log2())
        .map(|r| format!("n={} c={} {}: {}", r.n, r.c, r.adversary, r.max_attempts_per_epoch))
        .collect();
    let most = runs.iter().map(|r| r.max_attempts_per_epoch).max().unwrap_or(0);
    let (checked, violations) = check_batch_shrink(planner, 60, &[2, 3]);
    criterion(
        8,
        "attempt bound and batch shrink",
        over.is_empty() && violations.is_empty() && checked > 0,
        format!(
            "most attempts in an epoch {most}, over bound {over:?}; batch shrink {checked} states, {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(", e.g. {v:?}")).unwrap_or_default()
        ),
    )
}

pub fn sublinear() -> Criterion {
    let (n, c) = (64, 2);
    let config = SimConfig::new(n, c).with_chi(0.5).with_route_cost(ROUTE_COST);
    let results: Vec<Result<(bool, usize, usize), String>> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let p = prepare("semiring-mm:plus-times", n, 0.5, 8, 4, seed)?;
            let mut engine = Engine::new(config.clone().with_seed(seed), Box::new(RandomAdversary::new(RANDOM_RATE, seed)))
                .map_err(|e| e.to_string())?;
            let r = run_faulty_sublinear(&p.workload, &mut engine, RunOptions::default()).map_err(|e| e.to_string())?;
            Ok((r.outputs == p.oracle && r.collectors_correct, r.min_shard_margin, r.ledger.failures.len()))
        })
        .collect();
    let errors: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let ok: Vec<&(bool, usize, usize)> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let correct = ok.iter().filter(|r| r.0).count();
    let margin = ok.iter().map(|r| r.1).min().unwrap_or(0);
    let budget = config.budget();
    let full = ok.iter().filter(|r| r.2 == budget).count();
    criterion(
        9,
        "sublinear variant",
        errors.is_empty() && correct == 10,
        format!(
            "groups of 8, code {:?}, {correct}/10 correct, full budget ({budget}) in {full}/10, smallest holder surplus over K {margin}, errors {errors:?}",
            CodeParams::new(8, c).map(|p| (p.length, p.dimension, p.distance)).ok()
        ),
    )
}

pub fn nonfaulty_runner() -> Criterion {
    let mut per_n = Vec::new();
    let mut bad = Vec::new();
    for n in [8usize, 27, 64] {
        let result = prepare("semiring-mm:plus-times", n, 1.0, n, 4, n as u64).and_then(|p| {
            let mut engine = Engine::new(SimConfig::new(n, 2).with_route_cost(ROUTE_COST), Box::new(NoAdversary))
                .map_err(|e| e.to_string())?;
            let r = run_nonfaulty(&p.workload, &mut engine).map_err(|e| e.to_string())?;
            Ok((r.outputs == p.oracle, r.ledger.protocol_rounds))
        });
        match result {
            Ok((true, rounds)) => per_n.push((n, rounds, rounds as f64 / (n as f64).cbrt())),
            Ok((false, _)) => bad.push(format!("n={n}: wrong product")),
            Err(e) => bad.push(format!("n={n}: {e}")),
        }
    }
    let band = spread(per_n.iter().map(|x| x.2));
    let table: Vec<String> = per_n.iter().map(|(n, r, q)| format!("n={n}: {r} rounds, {q:.2}")).collect();
    criterion(
        10,
        "fault-free runner",
        bad.is_empty() && per_n.len() == 3 && band <= 4.0,
        format!("[{}], band {band:.2}, failures {bad:?}", table.join(", ")),
    )
}

/// Raw wire counts into one layer: `(part size, in-wires, distinct source
/// parts, wires per source part)` for every part.
pub fn incoming_counts(w: &Workload, layer: usize) -> Vec<(usize, usize, usize, Vec<usize>)> {
    let owners = w.scheme.owners(layer - 1);
    (0..w.scheme.n)
        .map(|p| {
            let part = w.scheme.part(layer, p);
            let mut per_source: BTreeMap<u32, usize> = BTreeMap::new();
            let mut wires = 0;
            for &g in part {
                for wire in &w.circuit.layers[layer][g as usize].inputs {
                    wires += 1;
                    *per_source.entry(owners[wire.index as usize]).or_default() += 1;
                }
            }
            (part.len(), wires, per_source.len(), per_source.into_values().collect())
        })
        .collect()
}

pub fn fast_mm() -> Criterion {
    let n = 64usize;
    let tensor = MMTensor::trivial(4);
    let side = (n as f64).powf(1.0 - 2.0 / tensor.sigma()).round() as usize;
    let mut notes = Vec::new();
    let locality_ok = match prepare("fast-mm:trivial", n, 1.0, n, 4, 0) {
        Ok(p) => {
            let l3 = incoming_counts(&p.workload, 3);
            let l5 = incoming_counts(&p.workload, 5);
            let want3 = (2 * n * side, 2 * n * side, n, vec![2 * side; n]);
            let want5 = (n * side, n * side, n, vec![side; n]);
            notes.push(format!(
                "layer 3 parts ({}, {}, {}) want ({}, {}, {}); layer 5 parts ({}, {}, {}) want ({}, {}, {})",
                l3[0].0, l3[0].1, l3[0].2, want3.0, want3.1, want3.2, l5[0].0, l5[0].1, l5[0].2, want5.0, want5.1, want5.2
            ));
            l3.iter().all(|x| *x == want3) && l5.iter().all(|x| *x == want5)
        }
        Err(e) => {
            notes.push(e);
            false
        }
    };
    let adversaries = ["none", "random#0", "random#1", "greedy"];
    let runs: Vec<Result<bool, String>> = adversaries
        .par_iter()
        .enumerate()
        .map(|(i, adv)| {
            let p = prepare("fast-mm:trivial", n, 1.0, n, 4, i as u64)?;
            let mut engine = Engine::new(SimConfig::new(n, 2).with_route_cost(ROUTE_COST), adversary_by_name(adv))
                .map_err(|e| e.to_string())?;
            let r = run_faulty(&p.workload, &mut engine, RunOptions::default()).map_err(|e| e.to_string())?;
            Ok(r.outputs == p.oracle && r.collectors_correct)
        })
        .collect();
    let correct = runs.iter().filter(|r| matches!(r, Ok(true))).count();
    criterion(
        11,
        "fast MM",
        locality_ok && correct == adversaries.len(),
        format!("{correct}/{} faulty runs correct; {}", adversaries.len(), notes.join("; ")),
    )
}

/// Every criterion, in order.
pub fn run_all(planner: Planner) -> Vec<Criterion> {
    let mut out = vec![mds_suite(), tensor_identity(), compiler_equivalence()];
    let started = Instant::now();
    let runs = mm_runs();
    let secs = started.elapsed().as_secs_f64();
    out.push(mm_correctness(&runs, secs));
    out.push(round_scaling(&runs));
    out.push(quiet_rounds(&runs, &clique_quiet_rounds()));
    out.push(decodability());
    out.push(attempt_bound(&runs, planner));
    out.push(sublinear());
    out.push(nonfaulty_runner());
    out.push(fast_mm());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(8, 4).len(), 70);
        assert_eq!(combinations(8, 2).len(), 28);
        assert!(combinations(5, 3).iter().all(|c| c.windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn spread_is_max_over_min() {
        assert_eq!(spread([2.0, 8.0, 4.0]), 4.0);
    }
}
