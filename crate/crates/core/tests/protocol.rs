use faulty_clique::circuit::{Gate, LayeredCircuit, PartitionScheme, Semiring};
use faulty_clique::compile::{run_clique_directly, sample_algorithm, SAMPLE_ALGORITHMS};
use faulty_clique::engine::{
    word_bits, Adversary, Engine, GreedyAdversary, NoAdversary, RandomAdversary, ScriptedAdversary, SimConfig,
};
use faulty_clique::matmul::{alphabet_bits, build_semiring_mm_circuit, naive_mm, Matrix};
use faulty_clique::protocol::{
    run_faulty, run_faulty_sublinear, run_nonfaulty, AttemptCase, FaultyReport, ProtocolError, RunOptions, Workload,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mm_workload(n: usize, seed: u64) -> (Workload, Matrix) {
    let s = Semiring::plus_times(alphabet_bits(n, 4));
    let mc = build_semiring_mm_circuit(n, s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::random(n, s, &mut rng);
    let b = Matrix::random(n, s, &mut rng);
    let want = naive_mm(&a, &b, s).unwrap();
    (Workload::matmul("semiring-mm", &mc, &a, &b), want)
}

fn faulty(w: &Workload, config: SimConfig, adversary: Box<dyn Adversary>) -> FaultyReport {
    let mut engine = Engine::new(config, adversary).unwrap();
    run_faulty(w, &mut engine, RunOptions::default()).unwrap()
}

fn product(w: &Workload, outputs: &[u64]) -> Matrix {
    let s = w.circuit.semiring;
    let mc = build_semiring_mm_circuit(w.circuit.n, s).unwrap();
    mc.layout.assemble_output(outputs)
}

#[test]
fn nonfaulty_semiring_product() {
    let (w, want) = mm_workload(8, 1);
    let mut engine = Engine::new(SimConfig::new(8, 2), Box::new(NoAdversary)).unwrap();
    let r = run_nonfaulty(&w, &mut engine).unwrap();
    assert!(r.correct);
    assert_eq!(product(&w, &r.outputs), want);
    // 2s - 1 = 3 and s - 1 = 1 invocations of 2 rounds
    assert_eq!(r.ledger.protocol_rounds, 8);
}

#[test]
fn identity_circuit_needs_no_rounds() {
    let n = 4;
    let circuit = LayeredCircuit {
        n,
        alphabet_bits: 8,
        semiring: Semiring::wrapping(8),
        layers: vec![(0..n).map(|_| Gate::input()).collect(), (0..n).map(|g| Gate::copy(0, g)).collect()],
    };
    let parts = vec![(0..n as u32).map(|g| vec![g]).collect(); 2];
    let scheme = PartitionScheme::from_parts(n, n, parts);
    let w = Workload::new("identity", circuit, scheme, vec![1, 2, 3, 4]);
    let mut engine = Engine::new(SimConfig::new(n, 2), Box::new(NoAdversary)).unwrap();
    let r = run_nonfaulty(&w, &mut engine).unwrap();
    assert!(r.correct);
    assert_eq!(r.ledger.protocol_rounds, 0);
}

#[test]
fn compiled_programs_match_direct_execution() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for name in SAMPLE_ALGORITHMS {
        for n in [4usize, 8] {
            let bits = word_bits(n, 4);
            let alg = sample_algorithm(name).unwrap();
            let per: Vec<Vec<u64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0..1u64 << bits)).collect()).collect();
            let direct = run_clique_directly(alg.as_ref(), bits, &per).unwrap();
            let w = Workload::clique(name, alg, bits, &per).unwrap();
            let depth = w.circuit.depth();
            let per_node = |outputs: &[u64]| -> Vec<Vec<u64>> {
                (0..n).map(|u| w.scheme.part(depth, u).iter().map(|&g| outputs[g as usize]).collect()).collect()
            };
            let mut engine = Engine::new(SimConfig::new(n, 2), Box::new(NoAdversary)).unwrap();
            let r = run_nonfaulty(&w, &mut engine).unwrap();
            assert_eq!(per_node(&r.outputs), direct, "{name} n={n} fault-free");
            let f = faulty(&w, SimConfig::new(n, 2), Box::new(GreedyAdversary));
            assert_eq!(per_node(&f.outputs), direct, "{name} n={n} greedy");
            assert_eq!(f.ledger.quiet_rounds, 2 + 2);
        }
    }
}

#[test]
fn no_faults_means_no_attempts() {
    let (w, want) = mm_workload(8, 3);
    let r = faulty(&w, SimConfig::new(8, 2), Box::new(NoAdversary));
    assert!(r.correct && r.collectors_correct);
    assert_eq!(product(&w, &r.outputs), want);
    assert!(r.ledger.attempts_per_epoch.iter().all(|&a| a == 0));
    assert_eq!(r.ledger.attempts_per_epoch.len(), 2);
    assert_eq!(r.ledger.decode_rounds, 2);
}

#[test]
fn three_crashes_mid_epoch() {
    let (w, want) = mm_workload(8, 4);
    let script = ScriptedAdversary::parse("phase epoch:0:attempt:0:pos:0:checkpoint fail 1 4 6").unwrap();
    let r = faulty(&w, SimConfig::new(8, 2), Box::new(script));
    assert_eq!(r.ledger.failures.len(), 3);
    assert!(r.correct && r.collectors_correct);
    assert_eq!(product(&w, &r.outputs), want);
    assert!(r.ledger.attempts_per_epoch[0] >= 1);
}

#[test]
fn killing_every_sender_as_it_starts() {
    // crash the whole budget at the first round of every checkpoint stage
    let (w, want) = mm_workload(27, 5);
    let script = "phase epoch:0:attempt:0:pos:0:checkpoint fail 0 1 2 3 4 5\n\
                  phase epoch:0:attempt:1 fail 6 7 8 9 10 11\n\
                  phase epoch:1:attempt:0:pos:0:checkpoint fail 12 13 14 15 16 17\n";
    let r = faulty(&w, SimConfig::new(27, 3), Box::new(ScriptedAdversary::parse(script).unwrap()));
    assert_eq!(r.ledger.failures.len(), 18);
    assert!(r.correct && r.collectors_correct);
    assert_eq!(product(&w, &r.outputs), want);
}

#[test]
fn over_budget_script_is_a_model_violation() {
    let (w, _) = mm_workload(8, 6);
    let script = ScriptedAdversary::parse("phase epoch:0 fail 0 1 2 3 4").unwrap();
    let mut engine = Engine::new(SimConfig::new(8, 2), Box::new(script)).unwrap();
    let err = run_faulty(&w, &mut engine, RunOptions::default()).unwrap_err();
    assert!(matches!(err, ProtocolError::Engine(faulty_clique::engine::EngineError::ModelViolation { .. })));
}

#[test]
fn pipelined_collection_changes_rounds_not_results() {
    let (w, _) = mm_workload(27, 7);
    let config = SimConfig::new(27, 3).with_seed(9);
    let run = |pipeline_collect| {
        let mut engine = Engine::new(config.clone(), Box::new(RandomAdversary::new(0.01, 9))).unwrap();
        run_faulty(&w, &mut engine, RunOptions { pipeline_collect }).unwrap()
    };
    let (serial, piped) = (run(false), run(true));
    assert!(serial.correct && piped.correct);
    assert_eq!(serial.outputs, piped.outputs);
    assert_eq!(serial.ledger.quiet_rounds, piped.ledger.quiet_rounds);
    let calm = |pipeline_collect| {
        let mut engine = Engine::new(config.clone(), Box::new(NoAdversary)).unwrap();
        run_faulty(&w, &mut engine, RunOptions { pipeline_collect }).unwrap().ledger.protocol_rounds
    };
    assert!(calm(true) < calm(false));
}

#[test]
fn runs_are_deterministic_and_audited() {
    let (w, _) = mm_workload(8, 8);
    let run = || faulty(&w, SimConfig::new(8, 2).recording(), Box::new(RandomAdversary::new(0.05, 11)));
    let (a, b) = (run(), run());
    assert_eq!(a.ledger, b.ledger);
    assert_eq!(a.outputs, b.outputs);
    a.ledger.audit().unwrap();
    assert!(!a.ledger.deliveries.is_empty());
    assert_eq!(a.ledger.messages_received(), a.ledger.deliveries.iter().filter(|d| d.delivered).count() as u64);
    for r in &a.ledger.rounds {
        assert!(r.sent.iter().chain(&r.received).all(|&m| m as usize <= 8));
        assert!(r.alive >= 4);
    }
}

#[test]
fn decode_survives_crashes_during_decoding() {
    let (w, want) = mm_workload(8, 9);
    for victims in [vec![0, 1, 2, 3], vec![7], vec![2, 5]] {
        let ids: Vec<String> = victims.iter().map(ToString::to_string).collect();
        let script = ScriptedAdversary::parse(&format!("phase decode fail {}", ids.join(" "))).unwrap();
        let r = faulty(&w, SimConfig::new(8, 2), Box::new(script));
        assert!(r.ledger.decode_rounds <= 4);
        assert_eq!(r.collected.len(), 8 - victims.len());
        assert!(r.collectors_correct);
        assert_eq!(product(&w, &r.outputs), want);
    }
}

#[test]
fn one_to_one_attempts_checkpoint_at_least_n_over_c_parts() {
    let (w, _) = mm_workload(27, 10);
    let mut seen = 0;
    for seed in 0..12 {
        let r = faulty(&w, SimConfig::new(27, 3), Box::new(RandomAdversary::new(0.08, seed)));
        assert!(r.correct);
        for rec in r.attempts.iter().filter(|rec| rec.case == AttemptCase::OneToOne) {
            seen += 1;
            assert!(rec.missing_before - rec.missing_after >= 27 / 3, "{rec:?}");
        }
    }
    assert!(seen > 0, "no one-to-one attempt was exercised");
}

#[test]
fn sublinear_groups_of_eight() {
    let (mut w, want) = mm_workload(64, 11);
    w.scheme = w.scheme.regroup(8);
    let config = SimConfig::new(64, 2).with_chi(0.5);
    assert_eq!(config.budget(), 4);
    // a whole group down to n^chi / c members
    let script = ScriptedAdversary::parse("phase epoch:0:attempt:0:pos:0:collect fail 0 1 2 3").unwrap();
    let mut engine = Engine::new(config.clone(), Box::new(script)).unwrap();
    let r = run_faulty_sublinear(&w, &mut engine, RunOptions::default()).unwrap();
    assert!(r.correct && r.collectors_correct);
    assert_eq!(product(&w, &r.outputs), want);
    assert_eq!(r.min_shard_margin, 0);
    let mut linear = Engine::new(SimConfig::new(64, 2), Box::new(NoAdversary)).unwrap();
    assert!(run_faulty_sublinear(&w, &mut linear, RunOptions::default()).is_err());
}

#[test]
fn tropical_product_under_greedy_crashes() {
    let n = 27;
    let s = Semiring::tropical(alphabet_bits(n, 4));
    let mc = build_semiring_mm_circuit(n, s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (a, b) = (Matrix::random(n, s, &mut rng), Matrix::random(n, s, &mut rng));
    let w = Workload::matmul("tropical", &mc, &a, &b);
    let r = faulty(&w, SimConfig::new(n, 3), Box::new(GreedyAdversary));
    assert!(r.correct);
    assert_eq!(mc.layout.assemble_output(&r.outputs), naive_mm(&a, &b, s).unwrap());
}

#[test]
fn oversized_values_are_rejected() {
    let (w, _) = mm_workload(8, 13);
    let mut engine = Engine::new(SimConfig::new(8, 2).with_b(1), Box::new(NoAdversary)).unwrap();
    assert!(matches!(run_faulty(&w, &mut engine, RunOptions::default()), Err(ProtocolError::Incompatible(_))));
}
