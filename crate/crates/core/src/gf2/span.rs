use alloc::vec::Vec;

use super::key::ObliviousKey;
use super::knowledge::{Constraint, ParityKnowledge};
use crate::{Error, Result};

#[derive(Clone, Debug)]
struct Row {
    bits: Vec<u64>,
    pivot: usize,
    parity: bool,
}

/// Reduced row-echelon basis of every GF(2) functional Alice can evaluate.
///
/// Each row owns a pivot column that no other row contains, so reducing a
/// query vector needs one pass over the rows in any order.
#[derive(Clone, Debug)]
pub struct LinearSpanOracle {
    length: usize,
    rows: Vec<Row>,
}

fn test_bit(v: &[u64], i: usize) -> bool {
    v[i / 64] >> (i % 64) & 1 == 1
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

impl LinearSpanOracle {
    pub fn new(length: usize) -> Self {
        Self {
            length,
            rows: Vec::new(),
        }
    }

    pub fn from_constraints(length: usize, constraints: &[Constraint]) -> Result<Self> {
        let mut oracle = Self::new(length);
        for c in constraints {
            oracle.add(c)?;
        }
        Ok(oracle)
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn words(&self) -> usize {
        self.length.div_ceil(64)
    }

    fn vector(&self, indices: &[usize]) -> Result<Vec<u64>> {
        let mut v = alloc::vec![0u64; self.words()];
        for &i in indices {
            if i >= self.length {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    length: self.length,
                });
            }
            v[i / 64] ^= 1 << (i % 64);
        }
        Ok(v)
    }

    fn reduce(&self, v: &mut [u64]) -> bool {
        let mut parity = false;
        for row in &self.rows {
            if test_bit(v, row.pivot) {
                xor_into(v, &row.bits);
                parity ^= row.parity;
            }
        }
        parity
    }

    /// Add a constraint of any arity. Returns whether it raised the rank.
    pub fn add(&mut self, constraint: &Constraint) -> Result<bool> {
        let mut v = self.vector(constraint.indices())?;
        let parity = constraint.parity() ^ self.reduce(&mut v);
        let Some(pivot) = v
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(wi, w)| wi * 64 + w.trailing_zeros() as usize)
        else {
            if parity {
                return Err(Error::Contradiction {
                    indices: constraint.indices().to_vec(),
                });
            }
            return Ok(false);
        };
        for row in &mut self.rows {
            if test_bit(&row.bits, pivot) {
                xor_into(&mut row.bits, &v);
                row.parity ^= parity;
            }
        }
        self.rows.push(Row {
            bits: v,
            pivot,
            parity,
        });
        Ok(true)
    }

    /// Value of the XOR over `indices` if it lies in the span.
    pub fn determined(&self, indices: &[usize]) -> Option<bool> {
        let mut v = self.vector(indices).ok()?;
        let parity = self.reduce(&mut v);
        v.iter().all(|w| *w == 0).then_some(parity)
    }
}

/// Whether the pairwise model and the span model agree on every single bit and
/// every pairwise sum (both on determinacy and on value).
pub fn knowledge_matches_span(knowledge: &ParityKnowledge, oracle: &LinearSpanOracle) -> bool {
    let n = knowledge.len();
    if n != oracle.len() {
        return false;
    }
    for i in 0..n {
        if knowledge.value(i) != oracle.determined(&[i]) {
            return false;
        }
        for j in i + 1..n {
            if knowledge.pair_parity(i, j) != oracle.determined(&[i, j]) {
                return false;
            }
        }
    }
    true
}

/// [`knowledge_matches_span`] for Alice's view of a key.
pub fn oracle_equivalent(key: &ObliviousKey, oracle: &LinearSpanOracle) -> bool {
    knowledge_matches_span(key.knowledge(), oracle)
}
