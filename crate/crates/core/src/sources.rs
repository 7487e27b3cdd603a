//! Samplers standing in for the quantum layer.
//!
//! A pulse train is a string of phases (`false` = 0, `true` = pi). Alice's
//! interferometer with delay `r` reveals `phase[j] XOR phase[(j + r) mod len]`
//! for every pulse `j` that a photon is detected in. A single-photon source
//! yields exactly one such difference per train; a weak coherent source yields
//! a Poisson number of them. In the most favourable case for Alice each
//! photon gives a distinct difference.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::gf2::{Constraint, ObliviousKey};
use crate::{Error, Result};

/// Phases `s_0 .. s_l` of one `(l + 1)`-pulse train.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PulseTrain {
    phases: Vec<bool>,
}

impl PulseTrain {
    pub fn new(phases: Vec<bool>) -> Result<Self> {
        if phases.len() < 2 {
            return Err(Error::InvalidParameter(
                "a pulse train needs at least two pulses",
            ));
        }
        Ok(Self { phases })
    }

    pub fn phases(&self) -> &[bool] {
        &self.phases
    }

    /// Number of pulses, `l + 1`.
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Block length `l` of the key this train produces.
    pub fn block_len(&self) -> usize {
        self.phases.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum SourceKind {
    IdealSinglePhoton,
    WeakCoherent { mu: f64 },
}

/// When Alice claims a successful detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Reporting {
    /// Any train with at least one photon.
    Honest,
    /// Only trains that gave her at least two phase differences.
    MaliciousMultiphoton,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceParams {
    pub kind: SourceKind,
    pub reporting: Reporting,
}

impl SourceParams {
    pub fn ideal() -> Self {
        Self {
            kind: SourceKind::IdealSinglePhoton,
            reporting: Reporting::Honest,
        }
    }

    pub fn weak_coherent(mu: f64, reporting: Reporting) -> Result<Self> {
        let params = Self {
            kind: SourceKind::WeakCoherent { mu },
            reporting,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.reporting) {
            (SourceKind::WeakCoherent { mu }, _) if !(mu > 0.0 && mu.is_finite()) => Err(
                Error::InvalidParameter("mean photon number must be positive"),
            ),
            (SourceKind::IdealSinglePhoton, Reporting::MaliciousMultiphoton) => Err(
                Error::InvalidParameter("a single-photon source never yields two differences"),
            ),
            _ => Ok(()),
        }
    }

    /// Minimum photon number for which Alice reports a detection.
    pub fn min_photons(&self) -> u64 {
        match self.reporting {
            Reporting::Honest => 1,
            Reporting::MaliciousMultiphoton => 2,
        }
    }

    /// Probability that a train is accepted under the reporting rule.
    pub fn acceptance_probability(&self) -> f64 {
        match self.kind {
            SourceKind::IdealSinglePhoton => 1.0,
            SourceKind::WeakCoherent { mu } => {
                let e = libm::exp(-mu);
                match self.reporting {
                    Reporting::Honest => 1.0 - e,
                    Reporting::MaliciousMultiphoton => 1.0 - e - mu * e,
                }
            }
        }
    }
}

/// Probability of `m` photons in a Poisson pulse of mean `mu`.
pub fn poisson_pmf(mu: f64, m: u64) -> f64 {
    let mut p = libm::exp(-mu);
    for i in 1..=m {
        p *= mu / i as f64;
    }
    p
}

/// `P(m = photons | m >= min_photons)` for a Poisson source.
pub fn conditional_photon_probability(mu: f64, photons: u64, min_photons: u64) -> f64 {
    if photons < min_photons {
        return 0.0;
    }
    let below: f64 = (0..min_photons).map(|m| poisson_pmf(mu, m)).sum();
    poisson_pmf(mu, photons) / (1.0 - below)
}

/// What Alice's measurement of one train produced.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasurementOutcome {
    /// Interferometer delay `r` in `1..=l`.
    pub shift_r: usize,
    /// Pulses `j` whose difference with `(j + r) mod (l + 1)` Alice learned,
    /// ascending.
    pub detections: Vec<usize>,
    /// The pulse index Alice publishes.
    pub announced_t: Option<usize>,
}

impl MeasurementOutcome {
    pub fn photons(&self) -> usize {
        self.detections.len()
    }
}

/// `l + 1` independent uniform phases.
pub fn gen_train<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Result<PulseTrain> {
    if l < 1 {
        return Err(Error::InvalidParameter("block length must be at least 1"));
    }
    PulseTrain::new((0..=l).map(|_| rng.random::<bool>()).collect())
}

fn photon_count<R: Rng + ?Sized>(params: &SourceParams, rng: &mut R) -> u64 {
    match params.kind {
        SourceKind::IdealSinglePhoton => 1,
        SourceKind::WeakCoherent { mu } => {
            let poisson = Poisson::new(mu).expect("validated mean photon number");
            poisson.sample(rng) as u64
        }
    }
}

/// Simulate Alice's interference measurement. Returns `None` when the train
/// is not accepted under the reporting rule.
pub fn measure<R: Rng + ?Sized>(
    train: &PulseTrain,
    params: &SourceParams,
    rng: &mut R,
) -> Option<MeasurementOutcome> {
    let m = photon_count(params, rng);
    if m < params.min_photons() {
        return None;
    }
    Some(measure_photons(train, m as usize, rng))
}

/// Measurement of a train known to carry `photons >= 1` photons: one shared
/// delay and `photons` distinct detection pulses (capped at the train length).
pub fn measure_photons<R: Rng + ?Sized>(
    train: &PulseTrain,
    photons: usize,
    rng: &mut R,
) -> MeasurementOutcome {
    let pulses = train.len();
    let m = photons.clamp(1, pulses);
    let shift_r = rng.random_range(1..pulses);
    let mut detections = index::sample(rng, pulses, m).into_vec();
    let announced_t = Some(detections[rng.random_range(0..m)]);
    detections.sort_unstable();
    MeasurementOutcome {
        shift_r,
        detections,
        announced_t,
    }
}

/// How detections are placed once the photon number is fixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Placement {
    /// Distinct uniform pulses sharing one delay. Extra detections can chain
    /// through pulse `t` and expose a second key bit.
    #[default]
    Physical,
    /// As `Physical`, redrawn until Alice knows exactly one key bit and every
    /// other detection gives a fresh parity of unknown bits.
    SingleKnown,
}

/// Placement redraws before the photon number is drawn again; only reached
/// when nearly every pulse carries a photon.
const PLACEMENT_ATTEMPTS: usize = 256;

/// Measure fresh trains until one is accepted. Returns the train, the
/// outcome and how many trains were discarded first.
///
/// Phases are independent of the photon number, so rejected trains are
/// never materialised.
pub fn measure_until_detection<R: Rng + ?Sized>(
    l: usize,
    params: &SourceParams,
    rng: &mut R,
) -> Result<(PulseTrain, MeasurementOutcome, usize)> {
    measure_until_accepted(l, params, Placement::Physical, rng)
}

/// [`measure_until_detection`] with a choice of detection placement.
pub fn measure_until_accepted<R: Rng + ?Sized>(
    l: usize,
    params: &SourceParams,
    placement: Placement,
    rng: &mut R,
) -> Result<(PulseTrain, MeasurementOutcome, usize)> {
    params.validate()?;
    let mut discarded = 0;
    loop {
        let photons = loop {
            let m = photon_count(params, rng);
            if m >= params.min_photons() {
                break m as usize;
            }
            discarded += 1;
        };
        let train = gen_train(l, rng)?;
        match placement {
            Placement::Physical => {
                let out = measure_photons(&train, photons, rng);
                return Ok((train, out, discarded));
            }
            Placement::SingleKnown => {
                for _ in 0..PLACEMENT_ATTEMPTS {
                    let out = measure_photons(&train, photons, rng);
                    let key = block_key_from_measurement(&train, &out)?;
                    let rank =
                        key.known_count() + key.correlated_count() - key.knowledge().group_count();
                    if key.known_count() == 1 && rank == out.photons().min(l) {
                        return Ok((train, out, discarded));
                    }
                }
            }
        }
    }
}

/// Key position of pulse `p` once pulse `t` is removed.
pub fn key_index(pulse: usize, announced_t: usize) -> usize {
    if pulse < announced_t {
        pulse
    } else {
        pulse - 1
    }
}

/// The `l`-bit block key shared after Alice announces `t`.
///
/// Bob's bits are `s_t XOR s_j` for every `j != t` in ascending order. Each
/// detected difference becomes a constraint on those key bits; the one
/// touching pulse `t` is a directly known key bit.
pub fn block_key_from_measurement(
    train: &PulseTrain,
    outcome: &MeasurementOutcome,
) -> Result<ObliviousKey> {
    let t = outcome.announced_t.ok_or(Error::MissingAnnouncement)?;
    let pulses = train.len();
    let s = train.phases();
    if t >= pulses || !outcome.detections.contains(&t) {
        return Err(Error::MissingAnnouncement);
    }
    if outcome.shift_r == 0 || outcome.shift_r >= pulses {
        return Err(Error::InvalidParameter("interferometer delay out of range"));
    }
    let bits: Vec<bool> = (0..pulses)
        .filter(|&j| j != t)
        .map(|j| s[t] ^ s[j])
        .collect();
    let mut constraints = Vec::with_capacity(outcome.detections.len());
    for &j in &outcome.detections {
        if j >= pulses {
            return Err(Error::IndexOutOfRange {
                index: j,
                length: pulses,
            });
        }
        let jj = (j + outcome.shift_r) % pulses;
        let diff = s[j] ^ s[jj];
        let c = if j == t {
            Constraint::value(key_index(jj, t), diff)
        } else if jj == t {
            Constraint::value(key_index(j, t), diff)
        } else {
            Constraint::pair(key_index(j, t), key_index(jj, t), diff)
        };
        constraints.push(c);
    }
    ObliviousKey::from_constraints(bits, &constraints)
}

/// Raw oblivious key of the generic model: `n` uniform bits, each known to
/// Alice independently with probability `p`.
pub fn gen_generic_raw_key<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<ObliviousKey> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(
            "known probability must lie in (0, 1)",
        ));
    }
    let mut bits = Vec::with_capacity(n);
    let mut constraints = Vec::new();
    for i in 0..n {
        let b = rng.random::<bool>();
        bits.push(b);
        if rng.random_bool(p) {
            constraints.push(Constraint::value(i, b));
        }
    }
    ObliviousKey::from_constraints(bits, &constraints)
}
