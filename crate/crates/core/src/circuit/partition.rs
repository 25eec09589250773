use super::{CircuitError, LayeredCircuit};
use std::collections::BTreeSet;

/// Gates of one layer split into `n` parts, each part further split into
/// pieces of exactly `group_size` slots. `None` slots are virtual zero gates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerPartition {
    pub parts: Vec<Vec<u32>>,
    pub pieces: Vec<Vec<Vec<Option<u32>>>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionScheme {
    pub n: usize,
    pub group_size: usize,
    pub layers: Vec<LayerPartition>,
}

fn chunk_part(part: &[u32], group_size: usize) -> Vec<Vec<Option<u32>>> {
    part.chunks(group_size)
        .map(|c| {
            let mut piece: Vec<Option<u32>> = c.iter().copied().map(Some).collect();
            piece.resize(group_size, None);
            piece
        })
        .collect()
}

impl PartitionScheme {
    /// Builds pieces by cutting each ordered part into consecutive chunks of
    /// `group_size`, padding the last one with virtual gates.
    pub fn from_parts(n: usize, group_size: usize, layers: Vec<Vec<Vec<u32>>>) -> Self {
        assert!(group_size > 0, "group size must be positive");
        let layers = layers
            .into_iter()
            .map(|parts| {
                let pieces = parts.iter().map(|p| chunk_part(p, group_size)).collect();
                LayerPartition { parts, pieces }
            })
            .collect();
        Self { n, group_size, layers }
    }

    /// Same parts, pieces re-cut to a new size. Explicit piece lists are discarded.
    pub fn regroup(&self, group_size: usize) -> Self {
        Self::from_parts(self.n, group_size, self.layers.iter().map(|l| l.parts.clone()).collect())
    }

    pub fn part(&self, layer: usize, node: usize) -> &[u32] {
        &self.layers[layer].parts[node]
    }

    pub fn pieces(&self, layer: usize, node: usize) -> &[Vec<Option<u32>>] {
        &self.layers[layer].pieces[node]
    }

    pub fn piece_count(&self, layer: usize, node: usize) -> usize {
        self.layers[layer].pieces[node].len()
    }

    /// Owner node of every gate in `layer`.
    pub fn owners(&self, layer: usize) -> Vec<u32> {
        let lp = &self.layers[layer];
        let len = lp.parts.iter().map(Vec::len).sum();
        let mut owner = vec![u32::MAX; len];
        for (w, part) in lp.parts.iter().enumerate() {
            for &g in part {
                if let Some(slot) = owner.get_mut(g as usize) {
                    *slot = w as u32;
                }
            }
        }
        owner
    }

    /// Renames node `w` to `perm[w]` in every layer.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        for (dst, src) in out.layers.iter_mut().zip(&self.layers) {
            for (w, &to) in perm.iter().enumerate() {
                dst.parts[to] = src.parts[w].clone();
                dst.pieces[to] = src.pieces[w].clone();
            }
        }
        out
    }

    /// Verifies that the scheme partitions every layer of `circuit` and that
    /// the pieces of each part are full-size and cover it.
    pub fn check(&self, circuit: &LayeredCircuit) -> Result<(), CircuitError> {
        let err = |m: String| Err(CircuitError::Scheme(m));
        if self.layers.len() != circuit.layers.len() {
            return err(format!("{} layers in scheme, {} in circuit", self.layers.len(), circuit.layers.len()));
        }
        if self.group_size == 0 {
            return err("group size must be positive".into());
        }
        for (l, (lp, gates)) in self.layers.iter().zip(&circuit.layers).enumerate() {
            if lp.parts.len() != self.n || lp.pieces.len() != self.n {
                return err(format!("layer {l} does not have exactly {} parts", self.n));
            }
            let mut seen = vec![false; gates.len()];
            for part in &lp.parts {
                for &g in part {
                    match seen.get_mut(g as usize) {
                        None => return err(format!("layer {l}: gate {g} does not exist")),
                        Some(s) if *s => return err(format!("layer {l}: gate {g} in two parts")),
                        Some(s) => *s = true,
                    }
                }
            }
            if let Some(g) = seen.iter().position(|s| !s) {
                return err(format!("layer {l}: gate {g} is in no part"));
            }
            for (w, (part, pieces)) in lp.parts.iter().zip(&lp.pieces).enumerate() {
                let members: BTreeSet<u32> = part.iter().copied().collect();
                let mut covered = BTreeSet::new();
                for piece in pieces {
                    if piece.len() != self.group_size {
                        return err(format!("layer {l} part {w}: piece of size {}", piece.len()));
                    }
                    for &g in piece.iter().flatten() {
                        if !members.contains(&g) {
                            return err(format!("layer {l} part {w}: piece holds foreign gate {g}"));
                        }
                        covered.insert(g);
                    }
                }
                if covered != members {
                    return err(format!("layer {l} part {w}: pieces do not cover the part"));
                }
            }
        }
        Ok(())
    }

    /// `bin` of every part of layer `layer + 1`: the foreign pieces
    /// `(owner, piece)` of `layer` holding a gate wired into it, sorted.
    pub fn bins(&self, circuit: &LayeredCircuit, layer: usize) -> Vec<Vec<(usize, usize)>> {
        let lp = &self.layers[layer];
        let mut memberships: Vec<Vec<(u32, u32)>> = vec![Vec::new(); circuit.layers[layer].len()];
        for (w, pieces) in lp.pieces.iter().enumerate() {
            for (j, piece) in pieces.iter().enumerate() {
                for &g in piece.iter().flatten() {
                    memberships[g as usize].push((w as u32, j as u32));
                }
            }
        }
        let upper = &self.layers[layer + 1];
        upper
            .parts
            .iter()
            .enumerate()
            .map(|(u, part)| {
                let mut bin = BTreeSet::new();
                for &g in part {
                    for wire in &circuit.layers[layer + 1][g as usize].inputs {
                        for &(w, j) in &memberships[wire.index as usize] {
                            if w as usize != u {
                                bin.insert((w as usize, j as usize));
                            }
                        }
                    }
                }
                bin.into_iter().collect()
            })
            .collect()
    }
}

/// Role of a layer when the circuit is run as a clique protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    /// Every out-wire of every part stays inside the same part one layer up.
    Computation,
    /// Some out-wire crosses into another node's part.
    Communication,
    /// Top layer; no out-wires.
    Output,
}

/// Cross-part traffic between layer `layer` and `layer + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionLocality {
    pub layer: usize,
    /// Max over parts of `layer` of wires leaving into another part.
    pub max_left_fan: usize,
    /// Max over parts of `layer + 1` of wires arriving from another part.
    pub max_right_fan: usize,
    /// Max over parts of `layer + 1` of the number of foreign pieces feeding it.
    pub max_bin: usize,
    pub bin_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalityReport {
    pub n: usize,
    pub group_size: usize,
    /// Largest cross-part wire count over all layer pairs and parts.
    pub max_block_fan: usize,
    /// Largest number of pieces in one part, over checkpointed layers.
    pub max_piece_count: usize,
    /// Largest number of foreign pieces feeding one part.
    pub max_bin_count: usize,
    /// Largest part of the top layer.
    pub max_output_part: usize,
    pub layer_kinds: Vec<LayerKind>,
    pub checkpoint_layers: Vec<usize>,
    /// Max pieces per part, for every layer.
    pub piece_counts: Vec<usize>,
    pub transitions: Vec<TransitionLocality>,
}

fn log_base(x: usize, n: usize) -> f64 {
    if x == 0 {
        f64::NEG_INFINITY
    } else {
        (x as f64).ln() / (n as f64).ln()
    }
}

impl LocalityReport {
    /// `log_n(max_block_fan) - 1`.
    pub fn fan_exponent(&self) -> f64 {
        log_base(self.max_block_fan, self.n) - 1.0
    }

    pub fn computation_exponent(&self) -> f64 {
        log_base(self.max_piece_count, self.n)
    }

    pub fn communication_exponent(&self) -> f64 {
        log_base(self.max_bin_count, self.n)
    }

    /// `log_n(max_output_part) - 1`.
    pub fn output_exponent(&self) -> f64 {
        log_base(self.max_output_part, self.n) - 1.0
    }

    /// Whether any wire crosses parts into layer `layer`.
    pub fn receives_cross(&self, layer: usize) -> bool {
        layer > 0 && self.transitions[layer - 1].max_right_fan > 0
    }
}

/// Epoch structure derived from layer kinds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpochPlan {
    pub kinds: Vec<LayerKind>,
    /// Layer 0, every communication layer, and the top layer, ascending.
    pub checkpoint_layers: Vec<usize>,
    /// `(start, end)` checkpoint layers of each epoch.
    pub epochs: Vec<(usize, usize)>,
}

impl EpochPlan {
    /// Layers whose parts receive wires from other parts.
    pub fn receiving_layers(&self) -> Vec<usize> {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == LayerKind::Communication)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

fn layer_kinds(circuit: &LayeredCircuit, scheme: &PartitionScheme) -> Vec<LayerKind> {
    let depth = circuit.depth();
    let mut kinds = vec![LayerKind::Computation; depth + 1];
    kinds[depth] = LayerKind::Output;
    for i in 0..depth {
        let lower = scheme.owners(i);
        let upper = scheme.owners(i + 1);
        let crosses = circuit.layers[i + 1].iter().enumerate().any(|(g, gate)| {
            gate.inputs.iter().any(|w| lower[w.index as usize] != upper[g])
        });
        if crosses {
            kinds[i] = LayerKind::Communication;
        }
    }
    kinds
}

/// Splits the circuit into epochs separated by checkpointed layers.
pub fn classify_layers(circuit: &LayeredCircuit, scheme: &PartitionScheme) -> EpochPlan {
    let kinds = layer_kinds(circuit, scheme);
    let depth = circuit.depth();
    let checkpoint_layers: Vec<usize> = (0..=depth)
        .filter(|&i| i == 0 || i == depth || kinds[i] == LayerKind::Communication)
        .collect();
    let epochs = checkpoint_layers.windows(2).map(|w| (w[0], w[1])).collect();
    EpochPlan { kinds, checkpoint_layers, epochs }
}

/// Exact locality counts, by wire traversal.
pub fn analyze_partition(circuit: &LayeredCircuit, scheme: &PartitionScheme) -> Result<LocalityReport, CircuitError> {
    scheme.check(circuit)?;
    let plan = classify_layers(circuit, scheme);
    let n = scheme.n;
    let mut transitions = Vec::with_capacity(circuit.depth());
    for i in 0..circuit.depth() {
        let lower = scheme.owners(i);
        let upper = scheme.owners(i + 1);
        let mut left = vec![0usize; n];
        let mut right = vec![0usize; n];
        for (g, gate) in circuit.layers[i + 1].iter().enumerate() {
            for w in &gate.inputs {
                let (from, to) = (lower[w.index as usize] as usize, upper[g] as usize);
                if from != to {
                    left[from] += 1;
                    right[to] += 1;
                }
            }
        }
        let bin_counts: Vec<usize> = scheme.bins(circuit, i).iter().map(Vec::len).collect();
        transitions.push(TransitionLocality {
            layer: i,
            max_left_fan: left.iter().copied().max().unwrap_or(0),
            max_right_fan: right.iter().copied().max().unwrap_or(0),
            max_bin: bin_counts.iter().copied().max().unwrap_or(0),
            bin_counts,
        });
    }
    let piece_counts: Vec<usize> = scheme
        .layers
        .iter()
        .map(|lp| lp.pieces.iter().map(Vec::len).max().unwrap_or(0))
        .collect();
    let depth = circuit.depth();
    Ok(LocalityReport {
        n,
        group_size: scheme.group_size,
        max_block_fan: transitions.iter().map(|t| t.max_left_fan.max(t.max_right_fan)).max().unwrap_or(0),
        max_piece_count: plan.checkpoint_layers.iter().map(|&l| piece_counts[l]).max().unwrap_or(0),
        max_bin_count: transitions.iter().map(|t| t.max_bin).max().unwrap_or(0),
        max_output_part: scheme.layers[depth].parts.iter().map(Vec::len).max().unwrap_or(0),
        layer_kinds: plan.kinds,
        checkpoint_layers: plan.checkpoint_layers,
        piece_counts,
        transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{Gate, GateFn, Semiring};
    use super::*;

    /// Two nodes, two gates each per layer; layer 1 swaps halves between nodes.
    fn swap_circuit() -> (LayeredCircuit, PartitionScheme) {
        let c = LayeredCircuit {
            n: 2,
            alphabet_bits: 4,
            semiring: Semiring::wrapping(4),
            layers: vec![
                vec![Gate::input(); 4],
                vec![Gate::copy(0, 0), Gate::copy(0, 1), Gate::copy(0, 2), Gate::copy(0, 3)],
                vec![Gate::new(GateFn::Sum, 1, [0, 2]), Gate::new(GateFn::Sum, 1, [1, 3])],
            ],
        };
        let s = PartitionScheme::from_parts(
            2,
            2,
            vec![
                vec![vec![0, 1], vec![2, 3]],
                vec![vec![0, 1], vec![2, 3]],
                vec![vec![0], vec![1]],
            ],
        );
        (c, s)
    }

    #[test]
    fn swap_counts() {
        let (c, s) = swap_circuit();
        let r = analyze_partition(&c, &s).unwrap();
        assert_eq!(r.layer_kinds, vec![LayerKind::Computation, LayerKind::Communication, LayerKind::Output]);
        assert_eq!(r.checkpoint_layers, vec![0, 1, 2]);
        assert_eq!(r.transitions[1].max_left_fan, 1);
        assert_eq!(r.transitions[1].max_bin, 1);
        assert_eq!(r.max_output_part, 1);
        assert!(r.receives_cross(2));
        assert!(!r.receives_cross(1));
    }

    #[test]
    fn whole_layer_parts_have_one_piece() {
        let (c, _) = swap_circuit();
        let s = PartitionScheme::from_parts(
            2,
            4,
            vec![vec![vec![0, 1, 2, 3], vec![]], vec![vec![0, 1, 2, 3], vec![]], vec![vec![0, 1], vec![]]],
        );
        let r = analyze_partition(&c, &s).unwrap();
        assert_eq!(r.max_piece_count, 1);
        assert_eq!(r.max_block_fan, 0);
        let plan = classify_layers(&c, &s);
        assert_eq!(plan.epochs, vec![(0, 2)]);
    }

    #[test]
    fn scheme_must_partition() {
        let (c, mut s) = swap_circuit();
        s.layers[1].parts[1].push(0);
        assert!(matches!(analyze_partition(&c, &s), Err(CircuitError::Scheme(_))));
    }

    #[test]
    fn padding_fills_short_pieces() {
        let s = PartitionScheme::from_parts(1, 4, vec![vec![vec![0, 1, 2, 3, 4]]]);
        assert_eq!(s.pieces(0, 0)[1], vec![Some(4), None, None, None]);
    }
}
