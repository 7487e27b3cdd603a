//! Alice's knowledge of bit strings as GF(2) constraints.
//!
//! [`ParityKnowledge`] is the fast model (known bits plus pairwise parity
//! groups, built with union-find). [`LinearSpanOracle`] is a dense Gaussian
//! elimination model used to cross-check it.

mod key;
mod knowledge;
mod span;

pub use key::{combine_xor, cyclic_shift, ObliviousKey};
pub use knowledge::{
    knowledge_from_constraints, BitState, Constraint, ParityKnowledge, ParityUnionFind,
};
pub use span::{knowledge_matches_span, oracle_equivalent, LinearSpanOracle};
