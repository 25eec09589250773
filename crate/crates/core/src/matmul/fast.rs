//! Ring product through a bilinear tensor on `n = rank` nodes arranged as a
//! `p x p` grid (`p = sqrt n`). Matrices are cut into `m x m` blocks of side
//! `d = n / m`, and every block into `p x p` tiles of side `t = d / p`.
//! Part `w = (w0, w1)` owns tile `(w0, w1)` of everything.
//!
//! | layer | part `w` holds |
//! |---|---|
//! | 0, 1 | tile `w` of every block of `A`, then of `B` |
//! | 2 | tile `w` of every `A^_k`, then of every `B^_k` |
//! | 3 | every tile of `A^_w`, then of `B^_w` |
//! | 4 | `A^_w * B^_w`, tile by tile |
//! | 5 | tile `w` of `A^_v * B^_v` for every `v` |
//! | 6 | tile `w` of every block of `C` |

use super::semiring_mm::alphabet_width;
use super::{exact_root, BlockLayout, MMTensor, MatmulCircuit, MatmulError};
use crate::circuit::{Gate, GateFn, LayeredCircuit, PartitionScheme, Semiring};

/// Dimensions of a fast-product circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FastDims {
    pub n: usize,
    pub m: usize,
    pub rank: usize,
    /// Side of the part grid.
    pub grid: usize,
    pub block: usize,
    pub tile: usize,
}

impl FastDims {
    pub fn new(n: usize, tensor: &MMTensor) -> Result<Self, MatmulError> {
        let div = |msg: String| Err(MatmulError::Divisibility(msg));
        if tensor.rank != n {
            return div(format!("tensor rank {} must equal n = {n}", tensor.rank));
        }
        let Some(grid) = exact_root(n, 2) else {
            return div(format!("sqrt({n}) is not an integer"));
        };
        if n % tensor.m != 0 {
            return div(format!("block count {} does not divide n = {n}", tensor.m));
        }
        let block = n / tensor.m;
        if block % grid != 0 {
            return div(format!("block side {block} is not a multiple of sqrt(n) = {grid}"));
        }
        Ok(Self { n, m: tensor.m, rank: tensor.rank, grid, block, tile: block / grid })
    }
}

/// `max(chi, 1 - 2/sigma)`: the fault exponent the circuit is designed for.
pub fn effective_chi(chi: f64, tensor: &MMTensor) -> f64 {
    chi.max(1.0 - 2.0 / tensor.sigma())
}

/// Builds the circuit with pieces of `n^chi_eff` gates.
pub fn build_fast_mm_circuit(
    n: usize,
    tensor: &MMTensor,
    ring: Semiring,
    chi: f64,
) -> Result<MatmulCircuit, MatmulError> {
    if !ring.is_ring() {
        return Err(MatmulError::NotARing);
    }
    if !(chi > 0.0 && chi <= 1.0) {
        return Err(MatmulError::BadChi(chi));
    }
    let dims = FastDims::new(n, tensor)?;
    let chi_eff = effective_chi(chi, tensor);
    let group = (n as f64).powf(chi_eff).round() as usize;
    if (group as f64 - (n as f64).powf(chi_eff)).abs() > 1e-6 || n % group != 0 {
        return Err(MatmulError::Divisibility(format!("n^{chi_eff:.4} is not an integer divisor of {n}")));
    }
    let FastDims { m, rank, grid: p, block: d, tile: t, .. } = dims;
    let tt = t * t;
    let coeff = |c: i64| ring.from_i64(c).expect("ring coefficients");

    let sizes = [2 * n, 2 * n, 2 * rank * tt, 2 * n * tt, d * d, n * tt, n];
    let mut layout = BlockLayout::new(n, m, d, (t, t));

    // local index of entry (r, c) of tile (i, j) within the input half of a part
    let tile_entry = |i: usize, j: usize, r: usize, c: usize| ((i * m + j) * t + r) * t + c;

    let mut l0 = Vec::with_capacity(n * sizes[0]);
    for w in 0..n {
        let (w0, w1) = (w / p, w % p);
        let base = w * sizes[0];
        for i in 0..m {
            for j in 0..m {
                for r in 0..t {
                    for c in 0..t {
                        let (gr, gc) = (i * d + w0 * t + r, j * d + w1 * t + c);
                        layout.a_gate[gr * n + gc] = (base + tile_entry(i, j, r, c)) as u32;
                        layout.b_gate[gr * n + gc] = (base + n + tile_entry(i, j, r, c)) as u32;
                    }
                }
            }
        }
        l0.extend(std::iter::repeat_with(Gate::input).take(sizes[0]));
    }

    let l1: Vec<Gate> = (0..n * sizes[1]).map(|g| Gate::copy(0, g)).collect();

    let mut l2 = Vec::with_capacity(n * sizes[2]);
    for w in 0..n {
        let base = w * sizes[1];
        for (side, coeffs) in [(0, &tensor.alpha), (1, &tensor.beta)] {
            for k in 0..rank {
                let terms: Vec<(usize, usize, u64)> = (0..m)
                    .flat_map(|i| (0..m).map(move |j| (i, j)))
                    .filter(|&(i, j)| coeffs[k][i][j] != 0)
                    .map(|(i, j)| (i, j, coeff(coeffs[k][i][j])))
                    .collect();
                assert!(!terms.is_empty(), "tensor product {k} ignores its input");
                for r in 0..t {
                    for c in 0..t {
                        let func = GateFn::LinearCombination(terms.iter().map(|x| x.2).collect());
                        let wires = terms.iter().map(|&(i, j, _)| base + side * n + tile_entry(i, j, r, c));
                        l2.push(Gate::new(func, 1, wires));
                    }
                }
            }
        }
    }

    let mut l3 = Vec::with_capacity(n * sizes[3]);
    for u in 0..n {
        for side in 0..2 {
            for v in 0..n {
                let src = v * sizes[2] + side * rank * tt + u * tt;
                l3.extend((0..tt).map(|x| Gate::copy(2, src + x)));
            }
        }
    }

    let mut l4 = Vec::with_capacity(n * sizes[4]);
    for u in 0..n {
        let base = u * sizes[3];
        let a_at = |row: usize, col: usize| base + ((row / t) * p + col / t) * tt + (row % t) * t + col % t;
        let b_at = |row: usize, col: usize| a_at(row, col) + n * tt;
        for v in 0..n {
            let (v0, v1) = (v / p, v % p);
            for r in 0..t {
                for c in 0..t {
                    let (row, col) = (v0 * t + r, v1 * t + c);
                    let wires = (0..d).flat_map(|l| [a_at(row, l), b_at(l, col)]);
                    l4.push(Gate::new(GateFn::SumOfProducts, 3, wires));
                }
            }
        }
    }

    let mut l5 = Vec::with_capacity(n * sizes[5]);
    for w in 0..n {
        for v in 0..n {
            let src = v * sizes[4] + w * tt;
            l5.extend((0..tt).map(|x| Gate::copy(4, src + x)));
        }
    }

    let mut l6 = Vec::with_capacity(n * n);
    for w in 0..n {
        let (w0, w1) = (w / p, w % p);
        let base = w * sizes[5];
        for i in 0..m {
            for j in 0..m {
                let terms: Vec<(usize, u64)> = (0..rank)
                    .filter(|&k| tensor.gamma[i][j][k] != 0)
                    .map(|k| (k, coeff(tensor.gamma[i][j][k])))
                    .collect();
                for r in 0..t {
                    for c in 0..t {
                        let out = w * n + tile_entry(i, j, r, c);
                        layout.c_gate[(i * d + w0 * t + r) * n + j * d + w1 * t + c] = out as u32;
                        let func = GateFn::LinearCombination(terms.iter().map(|x| x.1).collect());
                        l6.push(Gate::new(func, 5, terms.iter().map(|&(k, _)| base + k * tt + r * t + c)));
                    }
                }
            }
        }
    }

    let circuit = LayeredCircuit {
        n,
        alphabet_bits: alphabet_width(ring),
        semiring: ring,
        layers: vec![l0, l1, l2, l3, l4, l5, l6],
    };
    let parts = sizes
        .iter()
        .map(|&size| (0..n).map(|w| ((w * size) as u32..((w + 1) * size) as u32).collect()).collect())
        .collect();
    Ok(MatmulCircuit { circuit, scheme: PartitionScheme::from_parts(n, group, parts), layout })
}
