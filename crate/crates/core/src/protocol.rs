//! End-to-end private query sessions.
//!
//! Every session runs the same three phases: key distribution (Bob's pulse
//! trains, or a generic oblivious key), Alice's shift announcement(s), and
//! retrieval (Bob one-time-pads the database with the shifted key, Alice
//! decodes whatever her view of the key lets her). Bob only ever touches
//! [`ObliviousKey::bits`]; Alice only ever touches [`ObliviousKey::knowledge`].
//!
//! Database addresses are 1-based in the public API and in transcripts; pulse
//! and key indices are 0-based.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gf2::{cyclic_shift, BitState, ObliviousKey, ParityKnowledge};
use crate::lsa::{self, LsaTrace, ShiftPlan, SiftReport};
use crate::sources::{self, SourceParams};
use crate::{Error, Result};

/// One bit per item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    items: Vec<bool>,
}

impl Database {
    pub fn new(items: Vec<bool>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidParameter(
                "database must hold at least one item",
            ));
        }
        Ok(Self { items })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..n).map(|_| rng.random::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[bool] {
        &self.items
    }

    /// Item at a 1-based address.
    pub fn get(&self, address: usize) -> Option<bool> {
        address
            .checked_sub(1)
            .and_then(|i| self.items.get(i).copied())
    }

    /// Zero-padded to a multiple of `l`.
    pub fn padded(&self, l: usize) -> Self {
        let mut items = self.items.clone();
        let len = items.len().div_ceil(l) * l;
        items.resize(len, false);
        Self { items }
    }
}

/// Bitwise XOR of the items with Bob's key bits.
pub fn encrypt_database(db: &Database, final_key: &ObliviousKey) -> Result<Vec<bool>> {
    if db.len() != final_key.len() {
        return Err(Error::LengthMismatch {
            left: db.len(),
            right: final_key.len(),
        });
    }
    Ok(db
        .items
        .iter()
        .zip(final_key.bits())
        .map(|(x, k)| x ^ k)
        .collect())
}

/// A bit string that serialises as a string of `0`/`1` characters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn to_text(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse(text: &str) -> Option<Self> {
        text.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(BitString)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let text = <String as serde::Deserialize>::deserialize(d)?;
        BitString::parse(&text).ok_or_else(|| serde::de::Error::custom("expected 0/1 characters"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Variant {
    /// One `(N+1)`-pulse train, no postprocessing.
    Original,
    /// Short `(l+1)`-pulse trains followed by LSA.
    Improved,
    /// Generic oblivious key, block-sifting, LSA.
    Generic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionConfig {
    pub variant: Variant,
    /// Database size `N`.
    pub n: usize,
    /// Block length `l` (ignored by the original variant).
    pub l: usize,
    /// Security parameter: number of substrings added.
    pub k: usize,
    /// 1-based retrieval address.
    pub address: usize,
    pub source: SourceParams,
    /// Per-bit known probability of the generic raw key.
    pub p: f64,
    pub seed: u64,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter(
                "database must hold at least one item",
            ));
        }
        if self.address == 0 || self.address > self.n {
            return Err(Error::InvalidParameter("address must lie in 1..=N"));
        }
        match self.variant {
            Variant::Original => self.source.validate(),
            Variant::Improved | Variant::Generic => {
                if self.l < 2 {
                    return Err(Error::InvalidParameter("block length must be at least 2"));
                }
                if self.k == 0 {
                    return Err(Error::InvalidParameter("k must be at least 1"));
                }
                if self.variant == Variant::Generic && !(self.p > 0.0 && self.p < 1.0) {
                    return Err(Error::InvalidParameter(
                        "known probability must lie in (0, 1)",
                    ));
                }
                self.source.validate()
            }
        }
    }
}

/// A database item Alice can read off the ciphertext.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecoveredItem {
    pub address: usize,
    pub value: bool,
}

/// `x[a] XOR x[b] = parity` for two 1-based addresses Alice cannot read
/// individually.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParityItem {
    pub a: usize,
    pub b: usize,
    pub parity: bool,
}

/// Everything exchanged in a session plus Alice's resulting knowledge of the
/// database.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolTranscript {
    pub variant: Variant,
    pub database_len: usize,
    /// Length after zero-padding to a multiple of `l`.
    pub padded_len: usize,
    pub block_len: usize,
    pub substrings: usize,
    /// 1-based retrieval address.
    pub address: usize,
    /// Announced pulse index `t` of each accepted train (0-based).
    pub announced_t: Vec<usize>,
    /// Trains discarded because Alice reported no detection.
    pub rejected_trains: usize,
    /// Raw blocks discarded by block-sifting (generic variant).
    pub discarded_blocks: Vec<usize>,
    pub shift_plan: ShiftPlan,
    pub ciphertext: BitString,
    /// Alice's decoded value of the item at `address`.
    pub retrieved: bool,
    pub recovered: Vec<RecoveredItem>,
    pub parity_items: Vec<ParityItem>,
    pub trace: Option<LsaTrace>,
    /// Bits of the final key Alice knows, padding included.
    pub known_final_bits: usize,
    /// Alice learned exactly one item and no parities.
    pub ideal_database_security: bool,
}

/// A finished session together with the database it ran against.
#[derive(Clone, Debug)]
pub struct SessionOutcome {
    pub database: Database,
    pub transcript: ProtocolTranscript,
}

/// Alice reads every item and parity her view of the final key exposes.
/// Positions at or beyond `real_len` are padding and are never reported.
fn alice_decode(
    ciphertext: &[bool],
    view: &ParityKnowledge,
    real_len: usize,
) -> (Vec<RecoveredItem>, Vec<ParityItem>) {
    let mut recovered = Vec::new();
    let mut parities = Vec::new();
    for (q, state) in view.states().iter().enumerate().take(real_len) {
        match *state {
            BitState::Known(v) => recovered.push(RecoveredItem {
                address: q + 1,
                value: ciphertext[q] ^ v,
            }),
            BitState::Linked { root, parity } => {
                let r = root as usize;
                if r != q {
                    parities.push(ParityItem {
                        a: r + 1,
                        b: q + 1,
                        parity: ciphertext[q] ^ ciphertext[r] ^ parity,
                    });
                }
            }
            BitState::Unknown => {}
        }
    }
    (recovered, parities)
}

struct Retrieval {
    ciphertext: Vec<bool>,
    retrieved: bool,
    recovered: Vec<RecoveredItem>,
    parity_items: Vec<ParityItem>,
    known_final_bits: usize,
}

fn retrieve(
    db: &Database,
    final_key: &ObliviousKey,
    address: usize,
    real_len: usize,
) -> Result<Retrieval> {
    let ciphertext = encrypt_database(db, final_key)?;
    let index = address - 1;
    let key_bit = final_key
        .knowledge()
        .value(index)
        .ok_or(Error::NoQualifyingShift { index })?;
    let retrieved = ciphertext[index] ^ key_bit;
    let (recovered, parity_items) = alice_decode(&ciphertext, final_key.knowledge(), real_len);
    Ok(Retrieval {
        ciphertext,
        retrieved,
        recovered,
        parity_items,
        known_final_bits: final_key.known_count(),
    })
}

/// Original protocol from an already measured `(N+1)`-pulse train. Alice
/// picks one of her known key positions `j` uniformly and claims the shift
/// `i - j`.
pub fn original_from_measurement<R: Rng + ?Sized>(
    db: &Database,
    address: usize,
    train: &sources::PulseTrain,
    outcome: &sources::MeasurementOutcome,
    rejected_trains: usize,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    let n = db.len();
    if train.len() != n + 1 {
        return Err(Error::LengthMismatch {
            left: train.len(),
            right: n + 1,
        });
    }
    if address == 0 || address > n {
        return Err(Error::InvalidParameter("address must lie in 1..=N"));
    }
    let key = sources::block_key_from_measurement(train, outcome)?;
    let known: Vec<usize> = key.knowledge().known_indices().collect();
    let j = known[rng.random_range(0..known.len())];
    let shift = (address - 1) as isize - j as isize;
    let final_key = cyclic_shift(&key, shift);
    let r = retrieve(db, &final_key, address, n)?;
    Ok(ProtocolTranscript {
        variant: Variant::Original,
        database_len: n,
        padded_len: n,
        block_len: n,
        substrings: 1,
        address,
        announced_t: outcome.announced_t.into_iter().collect(),
        rejected_trains,
        discarded_blocks: Vec::new(),
        shift_plan: ShiftPlan {
            shifts: alloc::vec![shift],
            target_index: Some(address - 1),
        },
        ciphertext: BitString(r.ciphertext),
        retrieved: r.retrieved,
        ideal_database_security: r.recovered.len() == 1 && r.parity_items.is_empty(),
        recovered: r.recovered,
        parity_items: r.parity_items,
        trace: None,
        known_final_bits: r.known_final_bits,
    })
}

pub fn run_original_on<R: Rng + ?Sized>(
    db: &Database,
    address: usize,
    source: &SourceParams,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    let (train, outcome, rejected) = sources::measure_until_detection(db.len(), source, rng)?;
    original_from_measurement(db, address, &train, &outcome, rejected, rng)
}

#[allow(clippy::too_many_arguments)]
fn finish_lsa_session<R: Rng + ?Sized>(
    variant: Variant,
    db: &Database,
    cfg: &SessionConfig,
    substrings: Vec<ObliviousKey>,
    announced_t: Vec<usize>,
    rejected_trains: usize,
    sift: SiftReport,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    let padded = db.padded(cfg.l);
    let lsa = lsa::lsa_honest(&substrings, cfg.address - 1, cfg.l, rng)?;
    let r = retrieve(&padded, &lsa.final_key, cfg.address, db.len())?;
    Ok(ProtocolTranscript {
        variant,
        database_len: db.len(),
        padded_len: padded.len(),
        block_len: cfg.l,
        substrings: cfg.k,
        address: cfg.address,
        announced_t,
        rejected_trains,
        discarded_blocks: sift.discarded_blocks,
        shift_plan: lsa.plan,
        ciphertext: BitString(r.ciphertext),
        retrieved: r.retrieved,
        ideal_database_security: r.recovered.len() == 1 && r.parity_items.is_empty(),
        recovered: r.recovered,
        parity_items: r.parity_items,
        trace: Some(lsa.trace),
        known_final_bits: r.known_final_bits,
    })
}

/// Improved protocol: `k N / l` short trains, cut into `k` substrings, honest
/// LSA towards `address`, then retrieval.
pub fn run_improved_on<R: Rng + ?Sized>(
    db: &Database,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    cfg.validate()?;
    let n = db.len().div_ceil(cfg.l) * cfg.l;
    let trains = cfg.k * n / cfg.l;
    let mut blocks = Vec::with_capacity(trains);
    let mut announced_t = Vec::with_capacity(trains);
    let mut rejected = 0;
    for _ in 0..trains {
        let (train, out, skipped) = sources::measure_until_detection(cfg.l, &cfg.source, rng)?;
        rejected += skipped;
        announced_t.push(out.announced_t.ok_or(Error::MissingAnnouncement)?);
        blocks.push(sources::block_key_from_measurement(&train, &out)?);
    }
    let raw = ObliviousKey::concat(&blocks);
    let substrings = raw.chunks(n);
    finish_lsa_session(
        Variant::Improved,
        db,
        cfg,
        substrings,
        announced_t,
        rejected,
        SiftReport::default(),
        rng,
    )
}

/// Generic model: block-sifted raw key of `k N` bits, honest LSA, retrieval.
pub fn run_generic_on<R: Rng + ?Sized>(
    db: &Database,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    cfg.validate()?;
    let n = db.len().div_ceil(cfg.l) * cfg.l;
    let (raw, sift) = lsa::sifted_generic_key(cfg.k * n, cfg.l, cfg.p, rng)?;
    let substrings = raw.chunks(n);
    finish_lsa_session(
        Variant::Generic,
        db,
        cfg,
        substrings,
        Vec::new(),
        0,
        sift,
        rng,
    )
}

fn seeded(cfg: &SessionConfig) -> Result<(Database, ChaCha8Rng)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let db = Database::random(cfg.n, &mut rng)?;
    Ok((db, rng))
}

/// Run the original protocol on a random database derived from `cfg.seed`.
pub fn run_original(cfg: &SessionConfig) -> Result<SessionOutcome> {
    let (database, mut rng) = seeded(cfg)?;
    let transcript = run_original_on(&database, cfg.address, &cfg.source, &mut rng)?;
    Ok(SessionOutcome {
        database,
        transcript,
    })
}

/// Run the improved protocol on a random database derived from `cfg.seed`.
pub fn run_improved(cfg: &SessionConfig) -> Result<SessionOutcome> {
    let (database, mut rng) = seeded(cfg)?;
    let transcript = run_improved_on(&database, cfg, &mut rng)?;
    Ok(SessionOutcome {
        database,
        transcript,
    })
}

/// Run the generic model on a random database derived from `cfg.seed`.
pub fn run_generic(cfg: &SessionConfig) -> Result<SessionOutcome> {
    let (database, mut rng) = seeded(cfg)?;
    let transcript = run_generic_on(&database, cfg, &mut rng)?;
    Ok(SessionOutcome {
        database,
        transcript,
    })
}

/// Dispatch on `cfg.variant`.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionOutcome> {
    match cfg.variant {
        Variant::Original => run_original(cfg),
        Variant::Improved => run_improved(cfg),
        Variant::Generic => run_generic(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{MeasurementOutcome, PulseTrain, Reporting};
    use alloc::vec;
    use rand::rngs::StdRng;

    fn cfg(variant: Variant, n: usize, l: usize, k: usize, address: usize) -> SessionConfig {
        SessionConfig {
            variant,
            n,
            l,
            k,
            address,
            source: SourceParams::ideal(),
            p: 0.25,
            seed: 7,
        }
    }

    #[test]
    fn encryption_is_an_involution() {
        let db = Database::new(vec![true, false, true, true]).unwrap();
        let zero = ObliviousKey::unknown(vec![false; 4]);
        assert_eq!(encrypt_database(&db, &zero).unwrap(), db.items());
        let key = ObliviousKey::unknown(vec![true, true, false, true]);
        let once = Database::new(encrypt_database(&db, &key).unwrap()).unwrap();
        assert_eq!(encrypt_database(&once, &key).unwrap(), db.items());
        let short = ObliviousKey::unknown(vec![false; 3]);
        assert!(encrypt_database(&db, &short).is_err());
    }

    #[test]
    fn ideal_original_session_reveals_exactly_the_wanted_item() {
        for seed in 0..50 {
            let mut c = cfg(Variant::Original, 12, 0, 1, 1 + seed as usize % 12);
            c.seed = seed;
            let out = run_original(&c).unwrap();
            let t = &out.transcript;
            assert_eq!(Some(t.retrieved), out.database.get(c.address));
            assert_eq!(t.recovered.len(), 1);
            assert_eq!(t.recovered[0].address, c.address);
            assert!(t.ideal_database_security);
            assert_eq!(t.ciphertext.0.len(), 12);
        }
    }

    #[test]
    fn single_item_database() {
        let out = run_original(&cfg(Variant::Original, 1, 0, 1, 1)).unwrap();
        assert_eq!(out.transcript.shift_plan.shifts, vec![0]);
        assert_eq!(Some(out.transcript.retrieved), out.database.get(1));
    }

    #[test]
    fn multiphoton_leak_gives_item_and_parity() {
        let db = Database::new(vec![true, false, true, true, false, false, true, false]).unwrap();
        let train = PulseTrain::new(vec![
            false, true, true, false, false, true, true, false, true,
        ])
        .unwrap();
        let out = MeasurementOutcome {
            shift_r: 2,
            detections: vec![2, 3],
            announced_t: Some(2),
        };
        let mut rng = StdRng::seed_from_u64(0);
        let t = original_from_measurement(&db, 4, &train, &out, 0, &mut rng).unwrap();
        assert_eq!(t.shift_plan.shifts, vec![0]);
        assert_eq!(
            t.recovered,
            vec![RecoveredItem {
                address: 4,
                value: true
            }]
        );
        assert_eq!(
            t.parity_items,
            vec![ParityItem {
                a: 3,
                b: 5,
                parity: true ^ false
            }]
        );
        assert!(!t.ideal_database_security);
    }

    #[test]
    fn improved_walkthrough_size() {
        let out = run_improved(&cfg(Variant::Improved, 8, 4, 3, 6)).unwrap();
        let t = &out.transcript;
        assert_eq!(t.announced_t.len(), 6);
        assert_eq!(t.shift_plan.shifts.len(), 3);
        assert!(t.shift_plan.is_low(4));
        assert_eq!(Some(t.retrieved), out.database.get(6));
    }

    #[test]
    fn improved_k1_ideal_knows_one_bit_per_block() {
        let out = run_improved(&cfg(Variant::Improved, 40, 8, 1, 13)).unwrap();
        assert_eq!(out.transcript.known_final_bits, 5);
        assert_eq!(out.transcript.recovered.len(), 5);
    }

    #[test]
    fn padding_is_never_reported() {
        for seed in 0..30 {
            let mut c = cfg(Variant::Improved, 10, 4, 1, 10);
            c.seed = seed;
            let out = run_improved(&c).unwrap();
            let t = &out.transcript;
            assert_eq!(t.padded_len, 12);
            assert!(t.recovered.iter().all(|r| r.address <= 10));
            assert_eq!(Some(t.retrieved), out.database.get(10));
            for r in &t.recovered {
                assert_eq!(Some(r.value), out.database.get(r.address));
            }
        }
    }

    #[test]
    fn weak_coherent_improved_session_is_correct() {
        let mut c = cfg(Variant::Improved, 64, 8, 4, 33);
        c.source = SourceParams::weak_coherent(0.5, Reporting::Honest).unwrap();
        for seed in 0..20 {
            c.seed = seed;
            let out = run_improved(&c).unwrap();
            let t = &out.transcript;
            assert_eq!(Some(t.retrieved), out.database.get(33));
            for p in &t.parity_items {
                let x = out.database.items();
                assert_eq!(x[p.a - 1] ^ x[p.b - 1], p.parity);
            }
        }
    }

    #[test]
    fn generic_session_retrieves() {
        let mut c = cfg(Variant::Generic, 100, 10, 6, 42);
        for seed in 0..20 {
            c.seed = seed;
            let out = run_generic(&c).unwrap();
            assert_eq!(Some(out.transcript.retrieved), out.database.get(42));
            assert!(out.transcript.known_final_bits >= 1);
        }
    }

    #[test]
    fn near_certain_knowledge_is_flagged() {
        let mut c = cfg(Variant::Generic, 20, 4, 1, 3);
        c.p = 0.999_999;
        let out = run_generic(&c).unwrap();
        assert!(!out.transcript.ideal_database_security);
        assert_eq!(out.transcript.recovered.len(), 20);
        assert_eq!(Some(out.transcript.retrieved), out.database.get(3));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(Variant::Improved, 8, 1, 1, 1).validate().is_err());
        assert!(cfg(Variant::Improved, 8, 4, 0, 1).validate().is_err());
        assert!(cfg(Variant::Original, 8, 4, 1, 9).validate().is_err());
        assert!(cfg(Variant::Original, 8, 4, 1, 0).validate().is_err());
        let mut g = cfg(Variant::Generic, 8, 4, 1, 1);
        g.p = 1.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn bitstring_text() {
        let b = BitString(vec![true, false, true]);
        assert_eq!(b.to_text(), "101");
        assert_eq!(BitString::parse("101"), Some(b));
        assert_eq!(BitString::parse("1x"), None);
    }
}
