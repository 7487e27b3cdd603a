//! A dishonest client against the original protocol.
//!
//! Alice keeps a weak-coherent source's multiphoton leaks, so every accepted
//! query exposes exactly one key bit plus parities of other key bits. She
//! announces whatever shift maximises what the next answer teaches her about
//! the database, and repeats until she can reconstruct it completely.

use alloc::vec::Vec;

use rand::Rng;

use crate::gf2::{BitState, Constraint, ParityKnowledge, ParityUnionFind};
use crate::protocol::{encrypt_database, Database};
use crate::sources::{self, Placement, SourceParams};
use crate::{cyclic_shift, Error, Result};

/// Alice's accumulated knowledge about the database.
#[derive(Clone, Debug)]
pub struct AdversaryState {
    knowledge: ParityUnionFind,
    queries: usize,
}

impl AdversaryState {
    pub fn new(n: usize) -> Self {
        Self {
            knowledge: ParityUnionFind::new(n),
            queries: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.knowledge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knowledge.is_empty()
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn determined_count(&self) -> usize {
        self.knowledge.determined_count()
    }

    pub fn is_complete(&self) -> bool {
        self.determined_count() == self.len()
    }

    pub fn knowledge(&mut self) -> ParityKnowledge {
        self.knowledge.freeze()
    }

    /// The database, once every item is determined.
    pub fn reconstruct(&mut self) -> Option<Vec<bool>> {
        (0..self.len()).map(|i| self.knowledge.value(i)).collect()
    }

    /// Fold the answer to one query into the state. `view` is Alice's
    /// knowledge of the final (already shifted) key.
    pub fn absorb(&mut self, ciphertext: &[bool], view: &ParityKnowledge) -> Result<usize> {
        if ciphertext.len() != self.len() || view.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: ciphertext.len(),
                right: self.len(),
            });
        }
        let mut gained = 0;
        for (q, state) in view.states().iter().enumerate() {
            let c = match *state {
                BitState::Unknown => continue,
                BitState::Known(v) => Constraint::value(q, ciphertext[q] ^ v),
                BitState::Linked { root, parity } => {
                    let r = root as usize;
                    if r == q {
                        continue;
                    }
                    Constraint::pair(r, q, ciphertext[q] ^ ciphertext[r] ^ parity)
                }
            };
            gained += self.knowledge.apply(&c)?;
        }
        self.queries += 1;
        Ok(gained)
    }
}

/// What one unshifted block key lets Alice learn, in key coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryShape {
    /// Smallest directly known key index.
    pub anchor: usize,
    pub known: Vec<usize>,
    /// `(root, member)` of every parity group.
    pub pairs: Vec<(usize, usize)>,
}

impl QueryShape {
    pub fn from_knowledge(view: &ParityKnowledge) -> Option<Self> {
        let known: Vec<usize> = view.known_indices().collect();
        let anchor = *known.first()?;
        let pairs = view
            .states()
            .iter()
            .enumerate()
            .filter_map(|(q, s)| match *s {
                BitState::Linked { root, .. } if root as usize != q => Some((root as usize, q)),
                _ => None,
            })
            .collect();
        Some(Self {
            anchor,
            known,
            pairs,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryChoice {
    pub shift: isize,
    /// 0-based database address the anchor bit lands on.
    pub address: usize,
    pub gain: usize,
}

fn shift_to(shape: &QueryShape, address: usize, n: usize) -> isize {
    (address + n - shape.anchor) as isize % n as isize
}

/// The address (and shift) with the largest immediate gain; ties go to the
/// smallest address.
pub fn choose_query(state: &mut AdversaryState, shape: &QueryShape, n: usize) -> QueryChoice {
    let mut mapped = Vec::with_capacity(shape.known.len() + shape.pairs.len());
    let mut best = QueryChoice {
        shift: shift_to(shape, 0, n),
        address: 0,
        gain: 0,
    };
    let mut first = true;
    for address in 0..n {
        let s = (address + n - shape.anchor) % n;
        mapped.clear();
        mapped.extend(shape.known.iter().map(|&q| ((q + s) % n, None)));
        mapped.extend(
            shape
                .pairs
                .iter()
                .map(|&(a, b)| ((a + s) % n, Some((b + s) % n))),
        );
        let gain = state.knowledge.preview_gain(&mapped);
        if first || gain > best.gain {
            best = QueryChoice {
                shift: s as isize,
                address,
                gain,
            };
            first = false;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum AddressStrategy {
    /// Maximise the immediate gain.
    Optimal,
    /// Aim the known bit at a uniformly random undetermined item.
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecoveryReport {
    pub queries: usize,
    /// Items determined after each query.
    pub growth: Vec<usize>,
    /// Reconstruction equals the database.
    pub exact: bool,
}

/// Query `db` until Alice determines every item. Gives up after `10 N`
/// queries.
pub fn run_recovery_on<R: Rng + ?Sized>(
    db: &Database,
    source: &SourceParams,
    strategy: AddressStrategy,
    rng: &mut R,
) -> Result<RecoveryReport> {
    let n = db.len();
    let limit = 10 * n;
    let mut state = AdversaryState::new(n);
    let mut growth = Vec::new();
    let mut undetermined = Vec::with_capacity(n);
    while !state.is_complete() {
        if state.queries() >= limit {
            return Err(Error::NonTermination {
                queries: state.queries(),
            });
        }
        let (train, out, _) =
            sources::measure_until_accepted(n, source, Placement::SingleKnown, rng)?;
        let key = sources::block_key_from_measurement(&train, &out)?;
        let shape =
            QueryShape::from_knowledge(key.knowledge()).ok_or(Error::MissingAnnouncement)?;
        let shift = match strategy {
            AddressStrategy::Optimal => choose_query(&mut state, &shape, n).shift,
            AddressStrategy::Random => {
                undetermined.clear();
                undetermined.extend((0..n).filter(|&i| state.knowledge.value(i).is_none()));
                let address = undetermined[rng.random_range(0..undetermined.len())];
                shift_to(&shape, address, n)
            }
        };
        let shifted = cyclic_shift(&key, shift);
        let ciphertext = encrypt_database(db, &shifted)?;
        state.absorb(&ciphertext, shifted.knowledge())?;
        growth.push(state.determined_count());
    }
    let exact = state.reconstruct().as_deref() == Some(db.items());
    Ok(RecoveryReport {
        queries: state.queries(),
        growth,
        exact,
    })
}

/// Recovery against a fresh random database of `n` items.
pub fn run_recovery<R: Rng + ?Sized>(
    n: usize,
    source: &SourceParams,
    strategy: AddressStrategy,
    rng: &mut R,
) -> Result<RecoveryReport> {
    let db = Database::random(n, rng)?;
    run_recovery_on(&db, source, strategy, rng)
}
