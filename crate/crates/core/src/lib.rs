//! Classical simulation core for quantum-oblivious-key-transfer private query
//! protocols.
//!
//! The crate models the round-robin differential-phase-shift private query
//! protocol, its leakage under a weak coherent source, the improved protocol
//! built on low-shift-and-addition (LSA) postprocessing, and the generic
//! block-sifted oblivious key model. Quantum measurements are replaced by
//! probabilistic samplers; everything Alice learns is tracked exactly as GF(2)
//! constraints over key bits.
//!
//! The crate is `no_std` and only needs `alloc`. All randomness is passed in
//! explicitly as an [`rand::Rng`] handle.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod attack;
mod error;
pub mod gf2;
pub mod lsa;
pub mod protocol;
pub mod sources;

pub use error::{Error, Result};
pub use gf2::{
    combine_xor, cyclic_shift, knowledge_from_constraints, oracle_equivalent, BitState, Constraint,
    LinearSpanOracle, ObliviousKey, ParityKnowledge, ParityUnionFind,
};
