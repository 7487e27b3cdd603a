use alloc::vec::Vec;

use super::knowledge::{
    knowledge_from_constraints, BitState, Constraint, ParityKnowledge, RawState,
};
use crate::{Error, Result};

/// An oblivious key: Bob's complete bit string together with Alice's partial
/// knowledge of it.
///
/// Construction checks that every known value and every group parity agrees
/// with the bits, and every operation preserves that.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObliviousKey {
    bits: Vec<bool>,
    knowledge: ParityKnowledge,
}

impl ObliviousKey {
    pub fn new(bits: Vec<bool>, knowledge: ParityKnowledge) -> Result<Self> {
        if bits.len() != knowledge.len() {
            return Err(Error::LengthMismatch {
                left: bits.len(),
                right: knowledge.len(),
            });
        }
        if !knowledge.is_consistent_with(&bits) {
            return Err(Error::InconsistentKey);
        }
        Ok(Self { bits, knowledge })
    }

    /// Key whose knowledge is generated by `constraints`, all of which must
    /// hold for `bits`.
    pub fn from_constraints(bits: Vec<bool>, constraints: &[Constraint]) -> Result<Self> {
        if constraints
            .iter()
            .any(|c| c.indices().iter().all(|&i| i < bits.len()) && !c.holds_for(&bits))
        {
            return Err(Error::InconsistentKey);
        }
        let knowledge = knowledge_from_constraints(bits.len(), constraints)?;
        Self::new(bits, knowledge)
    }

    /// Key about which Alice knows nothing.
    pub fn unknown(bits: Vec<bool>) -> Self {
        let knowledge = ParityKnowledge::unknown(bits.len());
        Self { bits, knowledge }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bob's view.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Alice's view.
    pub fn knowledge(&self) -> &ParityKnowledge {
        &self.knowledge
    }

    pub fn into_parts(self) -> (Vec<bool>, ParityKnowledge) {
        (self.bits, self.knowledge)
    }

    pub fn is_known(&self, index: usize) -> bool {
        self.knowledge.is_known(index)
    }

    pub fn known_count(&self) -> usize {
        self.knowledge.known_count()
    }

    pub fn correlated_count(&self) -> usize {
        self.knowledge.correlated_count()
    }

    pub fn is_consistent(&self) -> bool {
        self.knowledge.is_consistent_with(&self.bits)
    }

    /// Concatenate keys end to end; groups stay within their part.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a ObliviousKey>) -> Self {
        let mut bits = Vec::new();
        let mut states = Vec::new();
        for part in parts {
            let offset = bits.len() as u32;
            bits.extend_from_slice(&part.bits);
            states.extend(part.knowledge.states().iter().map(|s| match *s {
                BitState::Linked { root, parity } => BitState::Linked {
                    root: root + offset,
                    parity,
                },
                other => other,
            }));
        }
        // Offsetting roots keeps every group rooted at its smallest member.
        let raw: Vec<RawState> = states
            .iter()
            .map(|s| match *s {
                BitState::Unknown => RawState::Unknown,
                BitState::Known(v) => RawState::Known(v),
                BitState::Linked { root, parity } => RawState::Class {
                    label: root as u64,
                    parity,
                },
            })
            .collect();
        Self {
            bits,
            knowledge: ParityKnowledge::from_raw(&raw),
        }
    }

    /// The sub-key at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            bits: indices.iter().map(|&i| self.bits[i]).collect(),
            knowledge: self.knowledge.select(indices),
        }
    }

    /// Split into consecutive chunks of `len` bits; a short tail is dropped.
    pub fn chunks(&self, len: usize) -> Vec<ObliviousKey> {
        if len == 0 {
            return Vec::new();
        }
        (0..self.len() / len)
            .map(|c| {
                let idx: Vec<usize> = (c * len..(c + 1) * len).collect();
                self.select(&idx)
            })
            .collect()
    }
}

/// Rotate a key so the bit at index `i` moves to `(i + offset) mod len`.
pub fn cyclic_shift(key: &ObliviousKey, offset: isize) -> ObliviousKey {
    let n = key.len();
    if n == 0 {
        return key.clone();
    }
    let r = offset.rem_euclid(n as isize) as usize;
    if r == 0 {
        return key.clone();
    }
    let mut bits = key.bits.clone();
    bits.rotate_right(r);
    let mut raw: Vec<RawState> = key.knowledge.to_raw().collect();
    raw.rotate_right(r);
    ObliviousKey {
        bits,
        knowledge: ParityKnowledge::from_raw(&raw),
    }
}

/// Bitwise XOR of two statistically independent keys.
///
/// An output bit is known iff it is known in both inputs. Two output bits are
/// parity-linked iff their parity is determined in each input (both known, or
/// in the same group), which makes the output groups the classes of the pair
/// (class in `a`, class in `b`).
pub fn combine_xor(a: &ObliviousKey, b: &ObliviousKey) -> Result<ObliviousKey> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len() as u64;
    // class label 0 is "known"; group roots are shifted by one
    let class = |s: BitState| -> Option<(u64, bool)> {
        match s {
            BitState::Unknown => None,
            BitState::Known(v) => Some((0, v)),
            BitState::Linked { root, parity } => Some((root as u64 + 1, parity)),
        }
    };
    let raw: Vec<RawState> = a
        .knowledge
        .states()
        .iter()
        .zip(b.knowledge.states())
        .map(|(&sa, &sb)| match (sa, sb) {
            (BitState::Known(x), BitState::Known(y)) => RawState::Known(x ^ y),
            _ => match (class(sa), class(sb)) {
                (Some((la, pa)), Some((lb, pb))) => RawState::Class {
                    label: la * (n + 1) + lb,
                    parity: pa ^ pb,
                },
                _ => RawState::Unknown,
            },
        })
        .collect();
    let bits = a.bits.iter().zip(&b.bits).map(|(x, y)| x ^ y).collect();
    Ok(ObliviousKey {
        bits,
        knowledge: ParityKnowledge::from_raw(&raw),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn key(bits: &[u8], constraints: &[Constraint]) -> ObliviousKey {
        ObliviousKey::from_constraints(bits.iter().map(|&b| b == 1).collect(), constraints).unwrap()
    }

    fn known_of(k: &ObliviousKey, i: usize) -> Constraint {
        Constraint::value(i, k.bits()[i])
    }

    #[test]
    fn aligned_known_bits_stay_known() {
        let bits = [1, 0, 1, 1, 0];
        let a = key(&bits, &[Constraint::value(2, true)]);
        let b = key(&[0, 0, 0, 1, 1], &[Constraint::value(2, false)]);
        let c = combine_xor(&a, &b).unwrap();
        assert_eq!(c.knowledge().known_indices().collect::<Vec<_>>(), vec![2]);
        assert_eq!(c.knowledge().value(2), Some(true));
        assert!(c.is_consistent());
    }

    #[test]
    fn group_survives_when_determined_in_both() {
        let a_bits = [0, 1, 1, 0, 1, 1];
        let a = key(
            &a_bits,
            &[Constraint::value(4, true), Constraint::pair(3, 5, true)],
        );
        let b_bits = [1, 1, 0, 1, 0, 1];
        let b_raw = key(&b_bits, &[]);
        let b = key(
            &b_bits,
            &[
                known_of(&b_raw, 3),
                known_of(&b_raw, 4),
                known_of(&b_raw, 5),
            ],
        );
        let c = combine_xor(&a, &b).unwrap();
        assert_eq!(c.knowledge().known_indices().collect::<Vec<_>>(), vec![4]);
        assert_eq!(c.knowledge().groups().len(), 1);
        assert_eq!(
            c.knowledge().groups()[0]
                .iter()
                .map(|m| m.0)
                .collect::<Vec<_>>(),
            vec![3, 5]
        );
        assert!(c.is_consistent());
    }

    #[test]
    fn group_dissolves_when_undetermined_in_one_input() {
        let a = key(
            &[0, 1, 1, 0, 1, 1],
            &[Constraint::value(4, true), Constraint::pair(3, 5, true)],
        );
        let b = key(&[1, 1, 0, 1, 0, 1], &[Constraint::value(4, false)]);
        let c = combine_xor(&a, &b).unwrap();
        assert_eq!(c.knowledge().known_indices().collect::<Vec<_>>(), vec![4]);
        assert!(c.knowledge().groups().is_empty());
    }

    #[test]
    fn combine_rejects_length_mismatch() {
        let a = ObliviousKey::unknown(vec![false; 3]);
        let b = ObliviousKey::unknown(vec![false; 4]);
        assert_eq!(
            combine_xor(&a, &b),
            Err(Error::LengthMismatch { left: 3, right: 4 })
        );
    }

    #[test]
    fn shift_moves_known_bits() {
        let k = key(&[0, 0, 0, 0, 0, 1, 0, 0], &[Constraint::value(5, true)]);
        assert_eq!(cyclic_shift(&k, 0), k);
        let s = cyclic_shift(&k, 1);
        assert_eq!(s.knowledge().known_indices().collect::<Vec<_>>(), vec![6]);
        assert!(s.bits()[6]);
        let w = key(&[0, 0, 0, 1], &[Constraint::value(3, true)]);
        let ws = cyclic_shift(&w, 2);
        assert_eq!(ws.knowledge().known_indices().collect::<Vec<_>>(), vec![1]);
        assert_eq!(cyclic_shift(&w, -2), ws);
    }

    #[test]
    fn shift_recanonicalises_group_roots() {
        let k = key(&[1, 0, 0, 1], &[Constraint::pair(0, 3, false)]);
        let s = cyclic_shift(&k, 1);
        // {0,3} -> {1,0}: root becomes 0
        assert_eq!(s.knowledge().groups(), vec![vec![(0, false), (1, false)]]);
        assert_eq!(cyclic_shift(&s, -1), k);
    }

    #[test]
    fn inconsistent_constraints_are_refused() {
        let err = ObliviousKey::from_constraints(vec![true, false], &[Constraint::value(0, false)])
            .unwrap_err();
        assert_eq!(err, Error::InconsistentKey);
    }

    #[test]
    fn concat_and_chunks_roundtrip() {
        let a = key(&[1, 0, 1], &[Constraint::pair(0, 2, false)]);
        let b = key(&[0, 1, 1], &[Constraint::value(1, true)]);
        let ab = ObliviousKey::concat([&a, &b]);
        assert_eq!(ab.knowledge().groups(), vec![vec![(0, false), (2, false)]]);
        assert_eq!(ab.chunks(3), vec![a, b]);
    }
}
