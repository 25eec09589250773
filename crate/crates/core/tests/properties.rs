use faulty_clique::circuit::Semiring;
use faulty_clique::engine::{Engine, RandomAdversary, SimConfig};
use faulty_clique::galois::{CodeParams, FieldElement, ReedSolomon, StateCodec};
use faulty_clique::matmul::{alphabet_bits, build_semiring_mm_circuit, Matrix};
use faulty_clique::protocol::{run_faulty, run_nonfaulty, RunOptions, Workload};
use proptest::prelude::*;
use proptest::sample::subsequence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const P: u128 = (1 << 61) - 1;

fn pow_mod(mut b: u128, mut e: u128) -> u128 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % P;
        }
        b = b * b % P;
        e >>= 1;
    }
    acc
}

/// Plain Lagrange evaluation at `x` through `points`, in u128 arithmetic.
fn lagrange_at(points: &[(u128, u128)], x: u128) -> u128 {
    let mut total = 0;
    for (j, &(xj, yj)) in points.iter().enumerate() {
        let (mut num, mut den) = (1u128, 1u128);
        for (m, &(xm, _)) in points.iter().enumerate() {
            if m != j {
                num = num * ((x + P - xm) % P) % P;
                den = den * ((xj + P - xm) % P) % P;
            }
        }
        total = (total + yj * num % P * pow_mod(den, P - 2)) % P;
    }
    total
}

fn code_case() -> impl Strategy<Value = (usize, usize, Vec<u64>, Vec<usize>)> {
    (prop::sample::select(vec![8usize, 16, 64]), prop::sample::select(vec![2usize, 4])).prop_flat_map(|(n, c)| {
        let k = n.div_ceil(c);
        (Just(n), Just(c), prop::collection::vec(0..(1u64 << 61) - 1, k), subsequence((0..n).collect::<Vec<_>>(), k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn codewords_match_interpolation_and_any_k_positions_decode((n, c, msg, keep) in code_case()) {
        let params = CodeParams::new(n, c).unwrap();
        prop_assert_eq!(params.dimension + params.max_erasures(), n);
        let code = ReedSolomon::new(params);
        let message: Vec<FieldElement> = msg.iter().map(|&v| FieldElement::new(v)).collect();
        let word = code.encode(&message).unwrap();
        let points: Vec<(u128, u128)> = msg.iter().enumerate().map(|(i, &v)| (i as u128, v as u128)).collect();
        for (i, sym) in word.iter().enumerate() {
            prop_assert_eq!(sym.value() as u128, lagrange_at(&points, i as u128));
        }
        let symbols: Vec<(usize, FieldElement)> = keep.iter().map(|&i| (i, word[i])).collect();
        prop_assert_eq!(code.decode(&symbols).unwrap(), message);
        prop_assert!(code.decode(&symbols[1..]).is_err());
    }

    #[test]
    fn state_round_trips_through_any_k_shards(
        (n, c, _msg, keep) in code_case(),
        bits in 1u32..=61,
        raw in prop::collection::vec(any::<u64>(), 0..40),
    ) {
        let state: Vec<u64> = raw.iter().map(|v| v & ((1u64 << bits) - 1)).collect();
        let codec = StateCodec::new(CodeParams::new(n, c).unwrap(), bits).unwrap();
        let shards = codec.encode(&state).unwrap();
        prop_assert_eq!(shards.len(), n);
        let kept = keep.iter().map(|&i| &shards[i]);
        prop_assert_eq!(codec.decode(kept).unwrap(), state);
    }
}

fn mm_workload(n: usize, seed: u64) -> Workload {
    let s = Semiring::plus_times(alphabet_bits(n, 4));
    let mc = build_semiring_mm_circuit(n, s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::random(n, s, &mut rng);
    let b = Matrix::random(n, s, &mut rng);
    Workload::matmul("semiring-mm", &mc, &a, &b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn renaming_nodes_leaves_outputs_unchanged(
        perm in Just((0..8usize).collect::<Vec<_>>()).prop_shuffle(),
        seed in 0u64..1000,
        rate in 0.0f64..0.1,
    ) {
        let w = mm_workload(8, seed);
        let mut renamed = w.clone();
        renamed.scheme = w.scheme.permuted(&perm);
        renamed.holders = w.holders.iter().map(|&h| perm[h as usize] as u32).collect();
        let expected = w.expected_outputs().unwrap();

        let mut engine = Engine::new(SimConfig::new(8, 2), Box::new(RandomAdversary::new(0.0, seed))).unwrap();
        let plain = run_nonfaulty(&renamed, &mut engine).unwrap();
        prop_assert_eq!(&plain.outputs, &expected);

        let mut engine = Engine::new(SimConfig::new(8, 2), Box::new(RandomAdversary::new(rate, seed))).unwrap();
        let r = run_faulty(&renamed, &mut engine, RunOptions::default()).unwrap();
        prop_assert_eq!(&r.outputs, &expected);
        prop_assert!(r.collectors_correct);
    }

    #[test]
    fn scheduling_options_never_change_outputs(seed in 0u64..1000, rate in 0.0f64..0.1) {
        let w = mm_workload(8, seed);
        let expected = w.expected_outputs().unwrap();
        for pipeline_collect in [false, true] {
            let mut engine = Engine::new(SimConfig::new(8, 2).with_seed(seed), Box::new(RandomAdversary::new(rate, seed))).unwrap();
            let r = run_faulty(&w, &mut engine, RunOptions { pipeline_collect }).unwrap();
            prop_assert_eq!(&r.outputs, &expected);
        }
    }
}
