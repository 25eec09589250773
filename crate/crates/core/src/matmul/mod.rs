//! Matrix-multiplication workloads: a semiring circuit on a cube of nodes and
//! a ring circuit driven by a bilinear tensor.

mod fast;
mod semiring_mm;
mod tensor;

pub use crate::circuit::Semiring;
pub use fast::{build_fast_mm_circuit, effective_chi, FastDims};
pub use semiring_mm::build_semiring_mm_circuit;
pub use tensor::{tensor_by_name, MMTensor};

use crate::circuit::{LayeredCircuit, PartitionScheme};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatmulError {
    #[error("n must be a perfect cube, got {0}")]
    NotPerfectCube(usize),
    #[error("unsupported dimensions: {0}")]
    Divisibility(String),
    #[error("matrix dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("this construction needs a ring with additive inverses")]
    NotARing,
    #[error("fault exponent must lie in (0, 1], got {0}")]
    BadChi(f64),
}

/// Square matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    dim: usize,
    data: Vec<u64>,
}

impl Matrix {
    pub fn zeros(dim: usize, semiring: Semiring) -> Self {
        Self { dim, data: vec![semiring.zero(); dim * dim] }
    }

    pub fn identity(dim: usize, semiring: Semiring) -> Self {
        let mut m = Self::zeros(dim, semiring);
        for i in 0..dim {
            m.set(i, i, semiring.one());
        }
        m
    }

    /// Panics unless `data.len() == dim * dim`.
    pub fn from_vec(dim: usize, data: Vec<u64>) -> Self {
        assert_eq!(data.len(), dim * dim, "matrix data has the wrong length");
        Self { dim, data }
    }

    /// Uniform entries; tropical matrices get small finite weights and
    /// occasional infinities so that sums rarely saturate.
    pub fn random(dim: usize, semiring: Semiring, rng: &mut impl Rng) -> Self {
        let data = (0..dim * dim)
            .map(|_| match semiring {
                Semiring::MinPlus { infinity } => {
                    if rng.random_range(0..10) == 0 {
                        infinity
                    } else {
                        rng.random_range(0..=infinity / 4)
                    }
                }
                s => rng.random_range(0..s.size()),
            })
            .collect();
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }
}

/// Schoolbook product over `semiring`.
pub fn naive_mm(a: &Matrix, b: &Matrix, semiring: Semiring) -> Result<Matrix, MatmulError> {
    if a.dim != b.dim {
        return Err(MatmulError::DimensionMismatch { left: a.dim, right: b.dim });
    }
    let n = a.dim;
    let mut c = Matrix::zeros(n, semiring);
    for i in 0..n {
        for j in 0..n {
            let mut acc = semiring.zero();
            for k in 0..n {
                acc = semiring.add(acc, semiring.mul(a.get(i, k), b.get(k, j)));
            }
            c.set(i, j, acc);
        }
    }
    Ok(c)
}

/// Where every matrix entry lives in a matrix-multiplication circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub n: usize,
    /// Blocks per side of the outer partition.
    pub outer: usize,
    pub block_dim: usize,
    /// Rows and columns of an input sub-block held by one part.
    pub inner: (usize, usize),
    a_gate: Vec<u32>,
    b_gate: Vec<u32>,
    c_gate: Vec<u32>,
}

impl BlockLayout {
    fn new(n: usize, outer: usize, block_dim: usize, inner: (usize, usize)) -> Self {
        Self {
            n,
            outer,
            block_dim,
            inner,
            a_gate: vec![u32::MAX; n * n],
            b_gate: vec![u32::MAX; n * n],
            c_gate: vec![u32::MAX; n * n],
        }
    }

    /// Layer-0 gate holding `A[r][c]`.
    pub fn a_gate(&self, r: usize, c: usize) -> usize {
        self.a_gate[r * self.n + c] as usize
    }

    pub fn b_gate(&self, r: usize, c: usize) -> usize {
        self.b_gate[r * self.n + c] as usize
    }

    /// Output gate computing `C[r][c]`.
    pub fn c_gate(&self, r: usize, c: usize) -> usize {
        self.c_gate[r * self.n + c] as usize
    }

    /// Layer-0 input vector for the product `A * B`.
    pub fn circuit_inputs(&self, a: &Matrix, b: &Matrix) -> Vec<u64> {
        let n = self.n;
        let mut out = vec![0; 2 * n * n];
        for r in 0..n {
            for c in 0..n {
                out[self.a_gate(r, c)] = a.get(r, c);
                out[self.b_gate(r, c)] = b.get(r, c);
            }
        }
        out
    }

    /// Rebuilds `C` from the circuit's output values.
    pub fn assemble_output(&self, outputs: &[u64]) -> Matrix {
        let n = self.n;
        let data = (0..n * n).map(|i| outputs[self.c_gate[i] as usize]).collect();
        Matrix::from_vec(n, data)
    }

    /// Node initially holding each layer-0 gate: row `r` of both `A` and `B`
    /// starts at node `r`.
    pub fn initial_holders(&self) -> Vec<u32> {
        let n = self.n;
        let mut holders = vec![0u32; 2 * n * n];
        for r in 0..n {
            for c in 0..n {
                holders[self.a_gate(r, c)] = r as u32;
                holders[self.b_gate(r, c)] = r as u32;
            }
        }
        holders
    }

    /// Whether every entry maps to a distinct gate.
    pub fn is_complete(&self) -> bool {
        let check = |v: &[u32], len: usize| {
            let mut seen = vec![false; len];
            v.iter().all(|&g| (g as usize) < len && !std::mem::replace(&mut seen[g as usize], true))
        };
        let mut ab = self.a_gate.clone();
        ab.extend_from_slice(&self.b_gate);
        check(&ab, 2 * self.n * self.n) && check(&self.c_gate, self.n * self.n)
    }
}

/// Initial per-node inputs: node `w` holds row `w` of `A` followed by row `w` of `B`.
pub fn distribute_matrix_inputs(a: &Matrix, b: &Matrix, layout: &BlockLayout) -> Vec<Vec<u64>> {
    (0..layout.n)
        .map(|w| {
            let mut v = a.row(w).to_vec();
            v.extend_from_slice(b.row(w));
            v
        })
        .collect()
}

/// Inverse of [`distribute_matrix_inputs`].
pub fn reassemble_matrix_inputs(per_node: &[Vec<u64>]) -> (Matrix, Matrix) {
    let n = per_node.len();
    let mut a = Vec::with_capacity(n * n);
    let mut b = Vec::with_capacity(n * n);
    for v in per_node {
        a.extend_from_slice(&v[..n]);
        b.extend_from_slice(&v[n..2 * n]);
    }
    (Matrix::from_vec(n, a), Matrix::from_vec(n, b))
}

/// A matrix-multiplication circuit with its partition and entry layout.
#[derive(Clone, Debug)]
pub struct MatmulCircuit {
    pub circuit: LayeredCircuit,
    pub scheme: PartitionScheme,
    pub layout: BlockLayout,
}

/// Exact integer `k`-th root, if any.
pub fn exact_root(n: usize, k: u32) -> Option<usize> {
    let guess = (n as f64).powf(1.0 / k as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|r| r.checked_pow(k) == Some(n))
}

/// Alphabet width `b * ceil(log2 n)` used for workloads on `n` nodes.
pub fn alphabet_bits(n: usize, b: u32) -> u32 {
    crate::engine::word_bits(n, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_product_over_integers() {
        let s = Semiring::PlusTimes { modulus: 101 };
        let a = Matrix::from_vec(2, vec![1, 2, 3, 4]);
        let b = Matrix::from_vec(2, vec![5, 6, 7, 8]);
        assert_eq!(naive_mm(&a, &b, s).unwrap(), Matrix::from_vec(2, vec![19, 22, 43, 50]));
    }

    #[test]
    fn hand_product_tropical() {
        let s = Semiring::tropical(8);
        let a = Matrix::from_vec(2, vec![0, 3, 255, 1]);
        let b = Matrix::from_vec(2, vec![2, 255, 4, 0]);
        // [min(0+2, 3+4), min(0+inf, 3+0)], [min(inf, 1+4), min(inf, 1+0)]
        assert_eq!(naive_mm(&a, &b, s).unwrap(), Matrix::from_vec(2, vec![2, 3, 5, 1]));
    }

    #[test]
    fn identity_times_b_is_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in [Semiring::plus_times(12), Semiring::tropical(12)] {
            let b = Matrix::random(5, s, &mut rng);
            assert_eq!(naive_mm(&Matrix::identity(5, s), &b, s).unwrap(), b);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = Semiring::plus_times(8);
        assert!(naive_mm(&Matrix::zeros(2, s), &Matrix::zeros(3, s), s).is_err());
    }

    #[test]
    fn roots_and_widths() {
        assert_eq!(exact_root(27, 3), Some(3));
        assert_eq!(exact_root(9, 3), None);
        assert_eq!(exact_root(64, 2), Some(8));
        assert_eq!(alphabet_bits(8, 4), 12);
        assert_eq!(alphabet_bits(27, 4), 20);
        assert_eq!(alphabet_bits(64, 4), 24);
    }

    #[test]
    fn distribution_roundtrip_and_zero() {
        let s = Semiring::plus_times(12);
        let mc = build_semiring_mm_circuit(8, s).unwrap();
        assert!(mc.layout.is_complete());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b) = (Matrix::random(8, s, &mut rng), Matrix::random(8, s, &mut rng));
        let per_node = distribute_matrix_inputs(&a, &b, &mc.layout);
        assert!(per_node.iter().all(|v| v.len() == 16));
        assert_eq!(reassemble_matrix_inputs(&per_node), (a, b));
        let z = Matrix::zeros(8, s);
        assert!(distribute_matrix_inputs(&z, &z, &mc.layout).iter().flatten().all(|&x| x == 0));
        let mut holders = mc.layout.initial_holders();
        holders.sort_unstable();
        assert!(holders.chunks(16).enumerate().all(|(w, c)| c.iter().all(|&h| h as usize == w)));
    }
}
