//! Prime-field arithmetic and the Reed-Solomon erasure code used for checkpoints.

mod field;
mod rs;

pub use field::{batch_inverse, FieldElement, CAPACITY_BITS, MODULUS};
pub use rs::{
    decode_state, encode_state, rs_decode, rs_encode, CodeParams, Decoder, ReedSolomon, Shard,
    StateCodec,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("code length {length} exceeds the field size")]
    FieldTooSmall { length: usize },
    #[error("expected {expected} symbols, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("need {needed} distinct shards, have {available}")]
    InsufficientShards { needed: usize, available: usize },
    #[error("shard index {0} appears twice")]
    DuplicateIndex(usize),
    #[error("shard index {index} outside code of length {length}")]
    IndexOutOfRange { index: usize, length: usize },
    #[error("symbol {value} does not fit in {bits} bits")]
    SymbolOutOfRange { value: u64, bits: u32 },
    #[error("decoded length {len} exceeds payload capacity {capacity}")]
    CorruptHeader { len: usize, capacity: usize },
}
