use faulty_clique::compile::{run_clique_directly, sample_algorithm};
use faulty_clique::engine::word_bits;
use faulty_clique::matmul::{
    alphabet_bits, build_fast_mm_circuit, build_semiring_mm_circuit, naive_mm, tensor_by_name, MatmulCircuit, Matrix,
};
use faulty_clique::{Semiring, Workload};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORKLOAD_NAMES: [&str; 7] = [
    "semiring-mm:plus-times",
    "semiring-mm:tropical",
    "fast-mm:trivial",
    "fast-mm:strassen",
    "clique:echo",
    "clique:sum-broadcast",
    "clique:prefix-sum",
];

/// A workload with concrete inputs and the output layer an independent
/// oracle expects.
pub struct Prepared {
    pub workload: Workload,
    pub oracle: Vec<u64>,
}

fn matmul(name: &str, mc: &MatmulCircuit, ring: Semiring, rng: &mut ChaCha8Rng) -> Result<Prepared, String> {
    let n = mc.layout.n;
    let a = Matrix::random(n, ring, rng);
    let b = Matrix::random(n, ring, rng);
    let product = naive_mm(&a, &b, ring).map_err(|e| e.to_string())?;
    let mut oracle = vec![0; mc.circuit.output_len()];
    for r in 0..n {
        for c in 0..n {
            oracle[mc.layout.c_gate(r, c)] = product.get(r, c);
        }
    }
    Ok(Prepared { workload: Workload::matmul(name, mc, &a, &b), oracle })
}

/// Builds workload `name` for `n` nodes with pieces of `group` gates.
/// Inputs are drawn from `seed`.
pub fn prepare(name: &str, n: usize, chi: f64, group: usize, b: u32, seed: u64) -> Result<Prepared, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (family, variant) = name.split_once(':').ok_or_else(|| unknown(name))?;
    match family {
        "semiring-mm" => {
            let bits = alphabet_bits(n, b);
            let ring = match variant {
                "plus-times" => Semiring::plus_times(bits),
                "tropical" => Semiring::tropical(bits),
                _ => return Err(unknown(name)),
            };
            let mut mc = build_semiring_mm_circuit(n, ring).map_err(|e| e.to_string())?;
            if group != n {
                mc.scheme = mc.scheme.regroup(group);
            }
            matmul(name, &mc, ring, &mut rng)
        }
        "fast-mm" => {
            let tensor = tensor_by_name(variant).ok_or_else(|| unknown(name))?;
            let ring = Semiring::plus_times(alphabet_bits(n, b));
            let mc = build_fast_mm_circuit(n, &tensor, ring, chi).map_err(|e| e.to_string())?;
            matmul(name, &mc, ring, &mut rng)
        }
        "clique" => {
            let alg = sample_algorithm(variant).ok_or_else(|| unknown(name))?;
            let bits = word_bits(n, b);
            let per_node: Vec<Vec<u64>> =
                (0..n).map(|_| (0..n).map(|_| rng.random_range(0..1u64 << bits)).collect()).collect();
            let direct = run_clique_directly(alg.as_ref(), bits, &per_node).map_err(|e| e.to_string())?;
            let mut workload = Workload::clique(name, alg, bits, &per_node).map_err(|e| e.to_string())?;
            if group != n {
                workload.scheme = workload.scheme.regroup(group);
            }
            let top = workload.circuit.depth();
            let mut oracle = vec![0; workload.circuit.output_len()];
            for (u, values) in direct.iter().enumerate() {
                for (&g, &v) in workload.scheme.part(top, u).iter().zip(values) {
                    oracle[g as usize] = v;
                }
            }
            Ok(Prepared { workload, oracle })
        }
        _ => Err(unknown(name)),
    }
}

fn unknown(name: &str) -> String {
    format!("unknown workload {name:?}; expected one of {}", WORKLOAD_NAMES.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use faulty_clique::evaluate;

    #[test]
    fn every_named_workload_matches_its_oracle() {
        for name in WORKLOAD_NAMES {
            let n = if name.starts_with("fast-mm") { 64 } else { 8 };
            match prepare(name, n, 1.0, n, 4, 3) {
                Ok(p) => assert_eq!(evaluate(&p.workload.circuit, &p.workload.inputs).unwrap(), p.oracle, "{name}"),
                Err(e) => assert_eq!(name, "fast-mm:strassen", "{e}"),
            }
        }
    }

    #[test]
    fn non_cube_is_rejected() {
        let err = prepare("semiring-mm:plus-times", 9, 1.0, 9, 4, 0).err().unwrap();
        assert!(err.contains("n must be a perfect cube"), "{err}");
        assert!(prepare("matrix", 8, 1.0, 8, 4, 0).is_err());
        assert!(prepare("clique:nope", 8, 1.0, 8, 4, 0).is_err());
    }
}
