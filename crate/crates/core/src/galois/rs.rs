//! Systematic Reed-Solomon erasure code over [`FieldElement`]s and the
//! interleaved state codec built on top of it.
//!
//! Evaluation points are `0, 1, .., N-1`; position `i` of a codeword is the
//! message polynomial evaluated at `i`, with the message itself occupying
//! positions `0..K`. Any `K` positions determine the codeword, so up to
//! `N - K = d - 1` erasures are tolerated.

use super::field::{batch_inverse, FieldElement, CAPACITY_BITS, MODULUS};
use super::CodeError;

/// `[N, K, d]` parameters of an MDS code built for fault parameter `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CodeParams {
    /// Codeword length in symbols.
    pub length: usize,
    /// Message length in symbols.
    pub dimension: usize,
    /// Minimum distance, always `length - dimension + 1`.
    pub distance: usize,
    pub fault_parameter: usize,
}

impl CodeParams {
    /// Code of length `length` tolerating the loss of all but a `1/c`
    /// fraction of positions: `K = ceil(N / c)`, `d = N - K + 1`.
    ///
    /// When `c` divides `N` this is exactly `[N, N/c, (c-1)N/c + 1]`.
    pub fn new(length: usize, fault_parameter: usize) -> Result<Self, CodeError> {
        if fault_parameter == 0 {
            return Err(CodeError::InvalidParams("fault parameter must be at least 1".into()));
        }
        if length == 0 {
            return Err(CodeError::InvalidParams("code length must be positive".into()));
        }
        if length as u64 > MODULUS {
            return Err(CodeError::FieldTooSmall { length });
        }
        let dimension = length.div_ceil(fault_parameter);
        Ok(Self {
            length,
            dimension,
            distance: length - dimension + 1,
            fault_parameter,
        })
    }

    /// Largest number of erasures the code corrects.
    pub fn max_erasures(&self) -> usize {
        self.distance - 1
    }
}

/// Barycentric weights `1 / prod_{m != j} (x_j - x_m)` for distinct points.
fn barycentric_weights(xs: &[FieldElement]) -> Vec<FieldElement> {
    let mut weights: Vec<FieldElement> = xs
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            xs.iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .fold(FieldElement::ONE, |acc, (_, &xm)| acc * (xj - xm))
        })
        .collect();
    batch_inverse(&mut weights);
    weights
}

/// Matrix `M` with `M[t][j] = L_j(targets[t])`, where `L_j` is the Lagrange
/// basis polynomial of the points `xs`.
fn interpolation_matrix(xs: &[usize], targets: &[usize]) -> Vec<Vec<FieldElement>> {
    let points: Vec<FieldElement> = xs.iter().map(|&x| FieldElement::new(x as u64)).collect();
    let weights = barycentric_weights(&points);
    targets
        .iter()
        .map(|&t| {
            if let Some(hit) = xs.iter().position(|&x| x == t) {
                let mut row = vec![FieldElement::ZERO; xs.len()];
                row[hit] = FieldElement::ONE;
                return row;
            }
            let tf = FieldElement::new(t as u64);
            let mut diffs: Vec<FieldElement> = points.iter().map(|&x| tf - x).collect();
            let full = diffs.iter().fold(FieldElement::ONE, |acc, &d| acc * d);
            batch_inverse(&mut diffs);
            diffs
                .iter()
                .zip(&weights)
                .map(|(&inv_diff, &w)| full * inv_diff * w)
                .collect()
        })
        .collect()
}

/// A Reed-Solomon code with its parity matrix precomputed.
#[derive(Clone, Debug)]
pub struct ReedSolomon {
    params: CodeParams,
    /// Row `i` gives codeword position `K + i` as a combination of the message.
    parity: Vec<Vec<FieldElement>>,
}

impl ReedSolomon {
    pub fn new(params: CodeParams) -> Self {
        let systematic: Vec<usize> = (0..params.dimension).collect();
        let parity_points: Vec<usize> = (params.dimension..params.length).collect();
        Self {
            params,
            parity: interpolation_matrix(&systematic, &parity_points),
        }
    }

    pub fn params(&self) -> CodeParams {
        self.params
    }

    pub fn encode(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        if message.len() != self.params.dimension {
            return Err(CodeError::LengthMismatch {
                expected: self.params.dimension,
                actual: message.len(),
            });
        }
        let mut codeword = Vec::with_capacity(self.params.length);
        codeword.extend_from_slice(message);
        for row in &self.parity {
            let sym = row
                .iter()
                .zip(message)
                .fold(FieldElement::ZERO, |acc, (&a, &m)| acc + a * m);
            codeword.push(sym);
        }
        Ok(codeword)
    }

    /// Builds a decoder for a fixed set of surviving positions.
    ///
    /// Only the first `K` indices are used; the rest are checked for range
    /// and uniqueness but otherwise ignored.
    pub fn decoder(&self, indices: &[usize]) -> Result<Decoder, CodeError> {
        let k = self.params.dimension;
        let mut seen = vec![false; self.params.length];
        for &i in indices {
            if i >= self.params.length {
                return Err(CodeError::IndexOutOfRange { index: i, length: self.params.length });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(CodeError::DuplicateIndex(i));
            }
        }
        if indices.len() < k {
            return Err(CodeError::InsufficientShards { needed: k, available: indices.len() });
        }
        let used = indices[..k].to_vec();
        let targets: Vec<usize> = (0..k).collect();
        Ok(Decoder {
            matrix: interpolation_matrix(&used, &targets),
            used,
        })
    }

    pub fn decode(&self, symbols: &[(usize, FieldElement)]) -> Result<Vec<FieldElement>, CodeError> {
        let indices: Vec<usize> = symbols.iter().map(|&(i, _)| i).collect();
        let decoder = self.decoder(&indices)?;
        let values: Vec<FieldElement> = symbols.iter().map(|&(_, v)| v).collect();
        Ok(decoder.apply(&values[..decoder.used.len()]))
    }
}

/// Interpolation from a fixed set of `K` codeword positions back to the message.
#[derive(Clone, Debug)]
pub struct Decoder {
    used: Vec<usize>,
    matrix: Vec<Vec<FieldElement>>,
}

impl Decoder {
    /// Codeword positions this decoder reads, in the order `apply` expects.
    pub fn positions(&self) -> &[usize] {
        &self.used
    }

    pub fn apply(&self, values: &[FieldElement]) -> Vec<FieldElement> {
        debug_assert_eq!(values.len(), self.used.len());
        self.matrix
            .iter()
            .map(|row| {
                row.iter()
                    .zip(values)
                    .fold(FieldElement::ZERO, |acc, (&a, &v)| acc + a * v)
            })
            .collect()
    }
}

/// Encodes one message of `K` symbols into a codeword of `N` symbols.
pub fn rs_encode(message: &[FieldElement], params: CodeParams) -> Result<Vec<FieldElement>, CodeError> {
    ReedSolomon::new(params).encode(message)
}

/// Recovers the message from at least `K` distinct `(position, symbol)` pairs.
pub fn rs_decode(symbols: &[(usize, FieldElement)], params: CodeParams) -> Result<Vec<FieldElement>, CodeError> {
    ReedSolomon::new(params).decode(symbols)
}

/// One position of an interleaved codeword: position `index` of every
/// parallel code instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shard {
    pub index: usize,
    pub payload: Vec<FieldElement>,
}

/// Packs data symbols of `symbol_bits` bits into field elements and spreads
/// them over parallel Reed-Solomon instances.
///
/// Layout of the element stream: one header element holding the symbol count,
/// then the packed symbols, zero-padded to a multiple of `K`. Instance `t`
/// encodes elements `t*K .. (t+1)*K`. An empty state encodes to empty payloads.
#[derive(Clone, Debug)]
pub struct StateCodec {
    code: ReedSolomon,
    symbol_bits: u32,
    per_element: usize,
}

impl StateCodec {
    pub fn new(params: CodeParams, symbol_bits: u32) -> Result<Self, CodeError> {
        if symbol_bits == 0 || symbol_bits > CAPACITY_BITS {
            return Err(CodeError::InvalidParams(format!(
                "symbol width {symbol_bits} bits does not fit a {CAPACITY_BITS}-bit field element"
            )));
        }
        Ok(Self {
            code: ReedSolomon::new(params),
            symbol_bits,
            per_element: (CAPACITY_BITS / symbol_bits) as usize,
        })
    }

    pub fn params(&self) -> CodeParams {
        self.code.params()
    }

    pub fn code(&self) -> &ReedSolomon {
        &self.code
    }

    /// Data symbols carried by one field element.
    pub fn symbols_per_element(&self) -> usize {
        self.per_element
    }

    /// Number of interleaved code instances used for a state of `len` symbols.
    pub fn interleave_width(&self, len: usize) -> usize {
        if len == 0 {
            0
        } else {
            (1 + len.div_ceil(self.per_element)).div_ceil(self.code.params().dimension)
        }
    }

    pub fn encode(&self, state: &[u64]) -> Result<Vec<Shard>, CodeError> {
        let params = self.code.params();
        let width = self.interleave_width(state.len());
        let mut elements = Vec::with_capacity(width * params.dimension);
        if !state.is_empty() {
            elements.push(FieldElement::new(state.len() as u64));
            for chunk in state.chunks(self.per_element) {
                let mut packed = 0u64;
                for (slot, &sym) in chunk.iter().enumerate() {
                    if self.symbol_bits < 64 && sym >> self.symbol_bits != 0 {
                        return Err(CodeError::SymbolOutOfRange { value: sym, bits: self.symbol_bits });
                    }
                    packed |= sym << (slot as u32 * self.symbol_bits);
                }
                elements.push(FieldElement::new(packed));
            }
            elements.resize(width * params.dimension, FieldElement::ZERO);
        }
        let mut shards: Vec<Shard> = (0..params.length)
            .map(|index| Shard { index, payload: Vec::with_capacity(width) })
            .collect();
        for message in elements.chunks(params.dimension) {
            for (shard, sym) in shards.iter_mut().zip(self.code.encode(message)?) {
                shard.payload.push(sym);
            }
        }
        Ok(shards)
    }

    pub fn decode<'a, I>(&self, shards: I) -> Result<Vec<u64>, CodeError>
    where
        I: IntoIterator<Item = &'a Shard>,
    {
        let shards: Vec<&Shard> = shards.into_iter().collect();
        let indices: Vec<usize> = shards.iter().map(|s| s.index).collect();
        let decoder = self.code.decoder(&indices)?;
        let used = &shards[..decoder.positions().len()];
        let width = used[0].payload.len();
        if let Some(bad) = used.iter().find(|s| s.payload.len() != width) {
            return Err(CodeError::LengthMismatch { expected: width, actual: bad.payload.len() });
        }
        if width == 0 {
            return Ok(Vec::new());
        }
        let mut elements = Vec::with_capacity(width * self.code.params().dimension);
        let mut column = Vec::with_capacity(used.len());
        for t in 0..width {
            column.clear();
            column.extend(used.iter().map(|s| s.payload[t]));
            elements.extend(decoder.apply(&column));
        }
        let len = elements[0].value() as usize;
        let capacity = (elements.len() - 1) * self.per_element;
        if len > capacity {
            return Err(CodeError::CorruptHeader { len, capacity });
        }
        let mask = if self.symbol_bits == 64 { u64::MAX } else { (1u64 << self.symbol_bits) - 1 };
        let mut state = Vec::with_capacity(len);
        'outer: for el in &elements[1..] {
            let mut packed = el.value();
            for _ in 0..self.per_element {
                if state.len() == len {
                    break 'outer;
                }
                state.push(packed & mask);
                packed >>= self.symbol_bits;
            }
        }
        Ok(state)
    }
}

/// Encodes `state` into `N` shards; see [`StateCodec`].
pub fn encode_state(state: &[u64], params: CodeParams, symbol_bits: u32) -> Result<Vec<Shard>, CodeError> {
    StateCodec::new(params, symbol_bits)?.encode(state)
}

/// Inverse of [`encode_state`] given any `K` or more distinct shards.
pub fn decode_state(shards: &[Shard], params: CodeParams, symbol_bits: u32) -> Result<Vec<u64>, CodeError> {
    StateCodec::new(params, symbol_bits)?.decode(shards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_message(rng: &mut ChaCha8Rng, k: usize) -> Vec<FieldElement> {
        (0..k).map(|_| FieldElement::new(rng.random_range(0..MODULUS))).collect()
    }

    /// Direct Lagrange evaluation through `points`, written independently of
    /// the barycentric code path.
    fn lagrange_eval(points: &[(u64, FieldElement)], x: u64) -> FieldElement {
        let xf = FieldElement::new(x);
        let mut total = FieldElement::ZERO;
        for (j, &(xj, yj)) in points.iter().enumerate() {
            let mut num = FieldElement::ONE;
            let mut den = FieldElement::ONE;
            for (m, &(xm, _)) in points.iter().enumerate() {
                if m != j {
                    num *= xf - FieldElement::new(xm);
                    den *= FieldElement::new(xj) - FieldElement::new(xm);
                }
            }
            total += yj * num * den.inverse().unwrap();
        }
        total
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                go(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        go(0, n, k, &mut cur, &mut out);
        out
    }

    #[test]
    fn params_for_eight_nodes_two_faults() {
        let p = CodeParams::new(8, 2).unwrap();
        assert_eq!((p.length, p.dimension, p.distance), (8, 4, 5));
    }

    #[test]
    fn params_reject_degenerate_inputs() {
        assert!(CodeParams::new(8, 0).is_err());
        assert!(CodeParams::new(0, 2).is_err());
    }

    #[test]
    fn zero_message_gives_zero_codeword() {
        let p = CodeParams::new(16, 4).unwrap();
        let cw = rs_encode(&vec![FieldElement::ZERO; 4], p).unwrap();
        assert!(cw.iter().all(|s| s.is_zero()));
    }

    #[test]
    fn encode_is_systematic_and_matches_lagrange_oracle() {
        let p = CodeParams::new(8, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let msg = random_message(&mut rng, 4);
        let cw = rs_encode(&msg, p).unwrap();
        assert_eq!(&cw[..4], &msg[..]);
        let points: Vec<(u64, FieldElement)> = msg.iter().enumerate().map(|(i, &m)| (i as u64, m)).collect();
        for (i, &sym) in cw.iter().enumerate() {
            assert_eq!(sym, lagrange_eval(&points, i as u64));
        }
    }

    #[test]
    fn every_four_of_eight_positions_recover_message() {
        let p = CodeParams::new(8, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let msg = random_message(&mut rng, 4);
        let cw = rs_encode(&msg, p).unwrap();
        let all = subsets(8, 4);
        assert_eq!(all.len(), 70);
        for subset in all {
            let kept: Vec<(usize, FieldElement)> = subset.iter().map(|&i| (i, cw[i])).collect();
            // oracle: interpolate through the kept points, read back 0..K
            let pts: Vec<(u64, FieldElement)> = kept.iter().map(|&(i, v)| (i as u64, v)).collect();
            let oracle: Vec<FieldElement> = (0..4).map(|x| lagrange_eval(&pts, x)).collect();
            assert_eq!(oracle, msg);
            assert_eq!(rs_decode(&kept, p).unwrap(), msg, "subset {subset:?}");
        }
    }

    #[test]
    fn systematic_shards_read_back_directly() {
        let p = CodeParams::new(8, 2).unwrap();
        let msg: Vec<FieldElement> = (10..14).map(FieldElement::new).collect();
        let cw = rs_encode(&msg, p).unwrap();
        let kept: Vec<_> = (0..4).map(|i| (i, cw[i])).collect();
        assert_eq!(rs_decode(&kept, p).unwrap(), msg);
    }

    #[test]
    fn decode_errors() {
        let p = CodeParams::new(8, 2).unwrap();
        let cw = rs_encode(&[FieldElement::ONE; 4], p).unwrap();
        let three: Vec<_> = (0..3).map(|i| (i, cw[i])).collect();
        assert!(matches!(rs_decode(&three, p), Err(CodeError::InsufficientShards { needed: 4, available: 3 })));
        let dup = vec![(0, cw[0]), (1, cw[1]), (1, cw[1]), (2, cw[2]), (3, cw[3])];
        assert!(matches!(rs_decode(&dup, p), Err(CodeError::DuplicateIndex(1))));
        assert!(matches!(rs_encode(&[FieldElement::ONE; 3], p), Err(CodeError::LengthMismatch { .. })));
    }

    #[test]
    fn distinct_messages_differ_in_at_least_d_positions() {
        let p = CodeParams::new(8, 2).unwrap();
        let code = ReedSolomon::new(p);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let a = random_message(&mut rng, 4);
            let mut b = random_message(&mut rng, 4);
            if a == b {
                b[0] += FieldElement::ONE;
            }
            let (ca, cb) = (code.encode(&a).unwrap(), code.encode(&b).unwrap());
            let dist = ca.iter().zip(&cb).filter(|(x, y)| x != y).count();
            assert!(dist >= p.distance, "distance {dist}");
        }
    }

    #[test]
    fn empty_state_has_empty_payloads() {
        let p = CodeParams::new(8, 2).unwrap();
        let shards = encode_state(&[], p, 3).unwrap();
        assert_eq!(shards.len(), 8);
        assert!(shards.iter().all(|s| s.payload.is_empty()));
        assert_eq!(decode_state(&shards[4..], p, 3).unwrap(), Vec::<u64>::new());
    }

    #[test]
    fn eight_symbol_state_fits_one_instance() {
        let p = CodeParams::new(8, 2).unwrap();
        let state: Vec<u64> = (0..8).collect();
        let shards = encode_state(&state, p, 3).unwrap();
        assert!(shards.iter().all(|s| s.payload.len() == 1));
        assert_eq!(decode_state(&shards[3..7], p, 3).unwrap(), state);
    }

    #[test]
    fn state_decode_needs_k_shards() {
        let p = CodeParams::new(8, 2).unwrap();
        let shards = encode_state(&[1, 2, 3], p, 3).unwrap();
        assert!(matches!(decode_state(&shards[..3], p, 3), Err(CodeError::InsufficientShards { .. })));
    }

    #[test]
    fn zero_state_decodes_to_zero() {
        let p = CodeParams::new(16, 4).unwrap();
        let state = vec![0u64; 40];
        let shards = encode_state(&state, p, 12).unwrap();
        assert_eq!(decode_state(&shards[12..], p, 12).unwrap(), state);
    }

    #[test]
    fn oversized_symbol_is_rejected() {
        let p = CodeParams::new(8, 2).unwrap();
        assert!(matches!(encode_state(&[8], p, 3), Err(CodeError::SymbolOutOfRange { .. })));
    }

    #[test]
    fn non_divisible_length_uses_ceiling_dimension() {
        let p = CodeParams::new(27, 2).unwrap();
        assert_eq!((p.dimension, p.distance), (14, 14));
        let p = CodeParams::new(8, 3).unwrap();
        assert_eq!((p.dimension, p.max_erasures()), (3, 5));
    }
}
