//! Semiring product on `n = s^3` nodes, part `w = (w1, w2, w3)` with
//! `w = w1*s^2 + w2*s + w3`. Blocks are `s^2 x s^2`; `A` blocks are cut into
//! `s` column strips and `B` blocks into `s` row strips.
//!
//! | layer | part `w` holds |
//! |---|---|
//! | 0 | strip `w3` of `A[w1][w2]`, then strip `w3` of `B[w1][w2]` |
//! | 1 | all strips of `A[w1][w2]`, then all strips of `B[w2][w3]` |
//! | 2 | `A[w1][w2] * B[w2][w3]` |
//! | 3 | rows `w2*s..w2*s+s` of `A[w1][v] * B[v][w3]` for every `v` |
//! | 4 | those rows of `C[w1][w3]` |

use super::{exact_root, BlockLayout, MatmulCircuit, MatmulError};
use crate::circuit::{Gate, GateFn, LayeredCircuit, PartitionScheme, Semiring};

pub fn build_semiring_mm_circuit(n: usize, semiring: Semiring) -> Result<MatmulCircuit, MatmulError> {
    let s = exact_root(n, 3).filter(|&s| s >= 2).ok_or(MatmulError::NotPerfectCube(n))?;
    let s2 = s * s;
    let part = |w1: usize, w2: usize, w3: usize| (w1 * s + w2) * s + w3;
    let split = |w: usize| (w / s2, (w / s) % s, w % s);

    let sizes = [2 * n, 2 * s * n, s * n, s * n, n];
    let mut layout = BlockLayout::new(n, s, s2, (s2, s));

    let mut l0 = Vec::with_capacity(2 * n * n);
    for w in 0..n {
        let (w1, w2, w3) = split(w);
        let base = w * sizes[0];
        for i in 0..s2 {
            for j in 0..s {
                layout.a_gate[(w1 * s2 + i) * n + w2 * s2 + w3 * s + j] = (base + i * s + j) as u32;
            }
        }
        for j in 0..s {
            for k in 0..s2 {
                layout.b_gate[(w1 * s2 + w3 * s + j) * n + w2 * s2 + k] = (base + n + j * s2 + k) as u32;
            }
        }
        l0.extend(std::iter::repeat_with(Gate::input).take(sizes[0]));
    }

    let mut l1 = Vec::with_capacity(n * sizes[1]);
    for w in 0..n {
        let (w1, w2, w3) = split(w);
        for v in 0..s {
            let src = part(w1, w2, v) * sizes[0];
            l1.extend((0..n).map(|x| Gate::copy(0, src + x)));
        }
        for v in 0..s {
            let src = part(w2, w3, v) * sizes[0] + n;
            l1.extend((0..n).map(|x| Gate::copy(0, src + x)));
        }
    }

    let mut l2 = Vec::with_capacity(n * sizes[2]);
    for w in 0..n {
        let base = w * sizes[1];
        for i in 0..s2 {
            for k in 0..s2 {
                let wires = (0..s).flat_map(|v| {
                    (0..s).flat_map(move |j| [base + v * n + i * s + j, base + s * n + v * n + j * s2 + k])
                });
                l2.push(Gate::new(GateFn::SumOfProducts, 1, wires));
            }
        }
    }

    let mut l3 = Vec::with_capacity(n * sizes[3]);
    for w in 0..n {
        let (w1, w2, w3) = split(w);
        for v in 0..s {
            let src = part(w1, v, w3) * sizes[2];
            for i in 0..s {
                l3.extend((0..s2).map(|j| Gate::copy(2, src + (w2 * s + i) * s2 + j)));
            }
        }
    }

    let mut l4 = Vec::with_capacity(n * n);
    for w in 0..n {
        let (w1, w2, w3) = split(w);
        let base = w * sizes[3];
        for i in 0..s {
            for j in 0..s2 {
                layout.c_gate[(w1 * s2 + w2 * s + i) * n + w3 * s2 + j] = (w * n + i * s2 + j) as u32;
                l4.push(Gate::new(GateFn::Sum, 3, (0..s).map(|v| base + v * n + i * s2 + j)));
            }
        }
    }

    let bits = alphabet_width(semiring);
    let circuit = LayeredCircuit { n, alphabet_bits: bits, semiring, layers: vec![l0, l1, l2, l3, l4] };
    let parts = sizes
        .iter()
        .map(|&size| (0..n).map(|w| ((w * size) as u32..((w + 1) * size) as u32).collect()).collect())
        .collect();
    Ok(MatmulCircuit { circuit, scheme: PartitionScheme::from_parts(n, n, parts), layout })
}

/// Bits needed to hold every canonical element.
pub(super) fn alphabet_width(semiring: Semiring) -> u32 {
    let top = semiring.size() - 1;
    (u64::BITS - top.leading_zeros()).max(1)
}

#[cfg(test)]
mod tests {
    use super::super::{naive_mm, Matrix};
    use super::*;
    use crate::circuit::{analyze_partition, classify_layers, evaluate, validate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_non_cubes() {
        assert!(matches!(
            build_semiring_mm_circuit(9, Semiring::plus_times(12)),
            Err(MatmulError::NotPerfectCube(9))
        ));
    }

    #[test]
    fn identity_left_factor_returns_b() {
        let s = Semiring::plus_times(12);
        let mc = build_semiring_mm_circuit(8, s).unwrap();
        assert!(validate(&mc.circuit).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = Matrix::random(8, s, &mut rng);
        let out = evaluate(&mc.circuit, &mc.layout.circuit_inputs(&Matrix::identity(8, s), &b)).unwrap();
        assert_eq!(mc.layout.assemble_output(&out), b);
    }

    #[test]
    fn matches_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (n, reps) in [(8, 20), (27, 5)] {
            for s in [Semiring::plus_times(12), Semiring::tropical(12)] {
                let mc = build_semiring_mm_circuit(n, s).unwrap();
                for _ in 0..reps {
                    let a = Matrix::random(n, s, &mut rng);
                    let b = Matrix::random(n, s, &mut rng);
                    let out = evaluate(&mc.circuit, &mc.layout.circuit_inputs(&a, &b)).unwrap();
                    assert_eq!(mc.layout.assemble_output(&out), naive_mm(&a, &b, s).unwrap());
                }
            }
        }
    }

    #[test]
    fn locality_closed_forms() {
        for n in [8usize, 27, 64] {
            let s = exact_root(n, 3).unwrap();
            let mc = build_semiring_mm_circuit(n, Semiring::plus_times(12)).unwrap();
            let r = analyze_partition(&mc.circuit, &mc.scheme).unwrap();
            assert_eq!(r.max_output_part, n);
            assert_eq!(r.max_piece_count, s);
            assert_eq!(r.piece_counts, vec![2, 2 * s, s, s, 1]);
            // A strips from s-1 foreign parts plus B strips from s foreign
            // parts, one fewer on the diagonal w1 = w2 = w3
            for (w, &bin) in r.transitions[0].bin_counts.iter().enumerate() {
                let (w1, w2, w3) = (w / (s * s), (w / s) % s, w % s);
                let diag = usize::from(w1 == w2 && w2 == w3);
                assert_eq!(bin, (s - 1) + s - diag);
            }
            assert!(r.transitions[2].bin_counts.iter().all(|&b| b == s - 1));
            assert_eq!(r.max_bin_count, 2 * s - 1);
            assert!(r.max_bin_count <= 2 * s);
            let plan = classify_layers(&mc.circuit, &mc.scheme);
            assert_eq!(plan.checkpoint_layers, vec![0, 2, 4]);
            assert_eq!(plan.receiving_layers(), vec![1, 3]);
        }
    }

    #[test]
    fn layer_one_strip_sources_carry_n_wires_each() {
        let n = 8;
        let s = 2;
        let mc = build_semiring_mm_circuit(n, Semiring::plus_times(12)).unwrap();
        let owners0 = mc.scheme.owners(0);
        for u in 0..n {
            let mut per_source = std::collections::BTreeMap::new();
            for &g in mc.scheme.part(1, u).iter().take(s * n) {
                let w = mc.circuit.layers[1][g as usize].inputs[0];
                *per_source.entry(owners0[w.index as usize]).or_insert(0) += 1;
            }
            assert_eq!(per_source.len(), s);
            assert!(per_source.values().all(|&c| c == n));
            // sources differ from u only in the last coordinate
            assert!(per_source.keys().all(|&w| (w as usize) / s == u / s));
        }
    }
}
