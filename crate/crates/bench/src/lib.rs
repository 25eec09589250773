//! Inputs shared by the benchmarks.

use faulty_clique::matmul::{alphabet_bits, build_semiring_mm_circuit};
use faulty_clique::{Matrix, Semiring, Workload};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A `(+, x)` product on `n` nodes with inputs drawn from `seed`.
pub fn semiring_workload(n: usize, seed: u64) -> Workload {
    let ring = Semiring::plus_times(alphabet_bits(n, 4));
    let mc = build_semiring_mm_circuit(n, ring).expect("n is a perfect cube");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::random(n, ring, &mut rng);
    let b = Matrix::random(n, ring, &mut rng);
    Workload::matmul("semiring-mm:plus-times", &mc, &a, &b)
}
