//! Chains, events, chain amplitudes and the decoherence functional.
//!
//! This module is the analytic reference: every quantity is computed straight
//! from the chain amplitudes, with no use of the state-vector simulator.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{c, cone, czero, Real};
use crate::spinor::{eigenstate, Direction, QubitState};

/// Longest chain representable by [`Chain`].
pub const MAX_CHAIN_LEN: usize = 63;

/// Upper bound on `k · C(2ⁿ, k)` accepted by [`enumerate_events`].
pub const MAX_ENUMERATION_WORK: u128 = 1 << 28;

/// A path through `n` analyzers, one beam label per analyzer.
///
/// Stored as a big-endian integer: the first analyzer's bit is the most
/// significant one, so integer order equals lexicographic order for chains of
/// equal length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chain {
    len: u8,
    value: u64,
}

impl Chain {
    pub fn new(len: usize, value: u64) -> Result<Self> {
        if len == 0 || len > MAX_CHAIN_LEN {
            return Err(Error::Domain(format!("chain length {len} outside 1..={MAX_CHAIN_LEN}")));
        }
        if value >> len != 0 {
            return Err(Error::Domain(format!("value {value} does not fit in {len} bits")));
        }
        Ok(Self { len: len as u8, value })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut value = 0u64;
        for &b in bits {
            if b > 1 {
                return Err(Error::Domain(format!("chain bit {b} is not 0 or 1")));
            }
            value = (value << 1) | b as u64;
        }
        Self::new(bits.len(), value)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Big-endian integer value, also the ancilla basis index.
    pub fn index(&self) -> usize {
        self.value as usize
    }

    /// Bit at analyzer `step` (0-based, `step = 0` is the first analyzer).
    pub fn bit(&self, step: usize) -> u8 {
        debug_assert!(step < self.len());
        ((self.value >> (self.len() - 1 - step)) & 1) as u8
    }

    /// Beam the particle ends in.
    pub fn final_bit(&self) -> u8 {
        (self.value & 1) as u8
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    pub fn with_bit(&self, step: usize, bit: u8) -> Self {
        let shift = self.len() - 1 - step;
        let value = (self.value & !(1 << shift)) | ((bit as u64 & 1) << shift);
        Self { len: self.len, value }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for Chain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Domain(format!("invalid chain character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_bits(&bits)
    }
}

impl Serialize for Chain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Chain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A set of equal-length chains, kept in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Event {
    n: usize,
    chains: BTreeSet<Chain>,
}

impl Event {
    /// Builds an event; rejects duplicates and chains of the wrong length.
    pub fn new(n: usize, chains: impl IntoIterator<Item = Chain>) -> Result<Self> {
        if n == 0 || n > MAX_CHAIN_LEN {
            return Err(Error::Domain(format!("event chain length {n} outside 1..={MAX_CHAIN_LEN}")));
        }
        let mut set = BTreeSet::new();
        for ch in chains {
            if ch.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: ch.len() });
            }
            if !set.insert(ch) {
                return Err(Error::Domain(format!("duplicate chain {ch} in event")));
            }
        }
        Ok(Self { n, chains: set })
    }

    /// Parses chain strings such as `["00", "10"]`.
    pub fn parse<S: AsRef<str>>(n: usize, chains: &[S]) -> Result<Self> {
        let parsed = chains.iter().map(|s| s.as_ref().parse()).collect::<Result<Vec<Chain>>>()?;
        Self::new(n, parsed)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    /// Ω, every chain of length `n`.
    pub fn full(n: usize) -> Result<Self> {
        if n > 24 {
            return Err(Error::Resource(format!("full event over {n} steps is too large to list")));
        }
        Self::new(n, (0..1u64 << n).map(|v| Chain { len: n as u8, value: v }))
    }

    pub fn singleton(chain: Chain) -> Self {
        Self { n: chain.len(), chains: BTreeSet::from([chain]) }
    }

    pub(crate) fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        Self {
            n,
            chains: indices.into_iter().map(|i| Chain { len: n as u8, value: i as u64 }).collect(),
        }
    }

    /// Chain length shared by all members.
    pub fn steps(&self) -> usize {
        self.n
    }

    /// Cardinality `k`.
    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn contains(&self, chain: &Chain) -> bool {
        self.chains.contains(chain)
    }

    /// Chains in canonical (lexicographic) order.
    pub fn iter(&self) -> impl Iterator<Item = &Chain> + '_ {
        self.chains.iter()
    }

    pub fn chains(&self) -> Vec<Chain> {
        self.chains.iter().copied().collect()
    }

    pub fn complement(&self) -> Result<Self> {
        let full = Self::full(self.n)?;
        Ok(Self { n: self.n, chains: full.chains.difference(&self.chains).copied().collect() })
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.chains.is_disjoint(&other.chains)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::LengthMismatch { expected: self.n, found: other.n });
        }
        Ok(Self { n: self.n, chains: self.chains.union(&other.chains).copied().collect() })
    }

    /// Draws `k` distinct chains uniformly at random.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Result<Self> {
        if n > 24 {
            return Err(Error::Resource(format!("random events over {n} steps not supported")));
        }
        let total = 1usize << n;
        if k > total {
            return Err(Error::Domain(format!("cannot draw {k} distinct chains out of {total}")));
        }
        let picks = rand::seq::index::sample(rng, total, k);
        Ok(Self::from_indices(n, picks))
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.chains.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "{{{}}}", self.chains.iter().join(","))
    }
}

/// Initial particle state plus the ordered analyzer directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig<T> {
    pub initial: QubitState<T>,
    pub analyzers: Vec<Direction<T>>,
}

impl<T: Real> ExperimentConfig<T> {
    pub fn new(initial: QubitState<T>, analyzers: Vec<Direction<T>>) -> Result<Self> {
        if analyzers.is_empty() {
            return Err(Error::Config("at least one analyzer is required".into()));
        }
        if analyzers.len() > MAX_CHAIN_LEN {
            return Err(Error::Config(format!("at most {MAX_CHAIN_LEN} analyzers are supported")));
        }
        if !initial.is_normalized() {
            return Err(Error::Config(format!(
                "initial state is not normalized (|a0|²+|a1|² = {})",
                initial.norm_sqr()
            )));
        }
        Ok(Self { initial, analyzers })
    }

    /// Two analyzers, `Z` then `X`, with initial state `α|0⟩ + β|1⟩`.
    pub fn z_then_x(alpha: Complex<T>, beta: Complex<T>) -> Result<Self> {
        Self::new(QubitState::new(alpha, beta), vec![Direction::z(), Direction::x()])
    }

    /// The cycle `Z, Y, -Z, -Y` repeated to `n` analyzers.
    pub fn random_walk(initial: QubitState<T>, n: usize) -> Result<Self> {
        let cycle = [Direction::z(), Direction::y(), Direction::minus_z(), Direction::minus_y()];
        Self::new(initial, (0..n).map(|i| cycle[i % 4]).collect())
    }

    /// Uniformly random analyzer directions and initial state.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Self> {
        let initial = random_qubit(rng);
        let analyzers = (0..n).map(|_| random_direction(rng)).collect();
        Self::new(initial, analyzers)
    }

    /// Number of analyzers `n`.
    pub fn steps(&self) -> usize {
        self.analyzers.len()
    }

    /// Eigenbases of every analyzer under the library's phase convention.
    pub fn step_bases(&self) -> StepBases<T> {
        StepBases {
            initial: self.initial,
            bases: self.analyzers.iter().map(|d| [eigenstate(d, 0), eigenstate(d, 1)]).collect(),
        }
    }

    pub fn check_event(&self, e: &Event) -> Result<()> {
        if e.steps() != self.steps() {
            return Err(Error::LengthMismatch { expected: self.steps(), found: e.steps() });
        }
        Ok(())
    }
}

pub fn random_qubit<T: Real, R: Rng + ?Sized>(rng: &mut R) -> QubitState<T> {
    let d = random_direction::<T, R>(rng);
    let g = T::lit(std::f64::consts::TAU * rng.random::<f64>());
    eigenstate(&d, 0).scale(Complex::from_polar(T::one(), g))
}

pub fn random_direction<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Direction<T> {
    let theta = T::lit((1.0 - 2.0 * rng.random::<f64>()).acos());
    let phi = T::lit(std::f64::consts::TAU * rng.random::<f64>());
    Direction::new(theta, phi).expect("sampled angles are in range")
}

/// Anything that assigns a complex amplitude to every chain of a fixed length.
pub trait ChainAmplitudes<T: Real> {
    fn steps(&self) -> usize;

    fn chain_amplitude(&self, chain: &Chain) -> Result<Complex<T>>;
}

/// Explicit per-analyzer eigenbases; allows amplitudes under any phase
/// convention.
#[derive(Debug, Clone, PartialEq)]
pub struct StepBases<T> {
    pub initial: QubitState<T>,
    pub bases: Vec<[QubitState<T>; 2]>,
}

impl<T: Real> StepBases<T> {
    /// Multiplies the eigenstate for `(step, bit)` by `e^{i·phases[step][bit]}`.
    pub fn rephased(&self, phases: &[[T; 2]]) -> Result<Self> {
        if phases.len() != self.bases.len() {
            return Err(Error::DimensionMismatch { expected: self.bases.len(), found: phases.len() });
        }
        let bases = self
            .bases
            .iter()
            .zip(phases)
            .map(|(b, p)| {
                [
                    b[0].scale(Complex::from_polar(T::one(), p[0])),
                    b[1].scale(Complex::from_polar(T::one(), p[1])),
                ]
            })
            .collect();
        Ok(Self { initial: self.initial, bases })
    }
}

impl<T: Real> ChainAmplitudes<T> for StepBases<T> {
    fn steps(&self) -> usize {
        self.bases.len()
    }

    fn chain_amplitude(&self, chain: &Chain) -> Result<Complex<T>> {
        if chain.len() != self.bases.len() {
            return Err(Error::LengthMismatch { expected: self.bases.len(), found: chain.len() });
        }
        let mut prev = self.initial;
        let mut amp = cone();
        for (step, basis) in self.bases.iter().enumerate() {
            let ket = basis[chain.bit(step) as usize];
            amp *= ket.inner(&prev);
            prev = ket;
        }
        Ok(amp)
    }
}

impl<T: Real> ChainAmplitudes<T> for ExperimentConfig<T> {
    fn steps(&self) -> usize {
        self.analyzers.len()
    }

    fn chain_amplitude(&self, chain: &Chain) -> Result<Complex<T>> {
        if chain.len() != self.steps() {
            return Err(Error::LengthMismatch { expected: self.steps(), found: chain.len() });
        }
        let mut prev = self.initial;
        let mut amp = cone();
        for (step, d) in self.analyzers.iter().enumerate() {
            let ket = eigenstate(d, chain.bit(step));
            amp *= ket.inner(&prev);
            prev = ket;
        }
        Ok(amp)
    }
}

/// `A(γ) = ∏ᵢ ⟨n̂ᵢ,γᵢ | n̂ᵢ₋₁,γᵢ₋₁⟩`, the first factor taken against the
/// initial state.
pub fn amplitude<T: Real>(cfg: &impl ChainAmplitudes<T>, chain: &Chain) -> Result<Complex<T>> {
    cfg.chain_amplitude(chain)
}

fn amplitudes_of<T: Real>(cfg: &impl ChainAmplitudes<T>, e: &Event) -> Result<Vec<(u8, Complex<T>)>> {
    if e.steps() != cfg.steps() {
        return Err(Error::LengthMismatch { expected: cfg.steps(), found: e.steps() });
    }
    e.iter().map(|ch| Ok((ch.final_bit(), cfg.chain_amplitude(ch)?))).collect()
}

/// `D(X;Y) = Σ_{x∈X, y∈Y} A(x) conj(A(y)) δ(xₙ, yₙ)`.
///
/// The delta splits the double sum by final beam, so this is evaluated as
/// `Σ_b S_X(b) conj(S_Y(b))` with `S_X(b)` the amplitude sum over chains of
/// `X` ending in `b`: linear in `|X| + |Y|`.
pub fn decoherence<T: Real>(cfg: &impl ChainAmplitudes<T>, x: &Event, y: &Event) -> Result<Complex<T>> {
    let sx = beam_sums(cfg, x)?;
    let sy = beam_sums(cfg, y)?;
    Ok(sx[0] * sy[0].conj() + sx[1] * sy[1].conj())
}

fn beam_sums<T: Real>(cfg: &impl ChainAmplitudes<T>, e: &Event) -> Result<[Complex<T>; 2]> {
    let mut sums = [czero(); 2];
    for (b, a) in amplitudes_of(cfg, e)? {
        sums[b as usize] += a;
    }
    Ok(sums)
}

/// Quantum measure `μ(E) = D(E;E)`.
///
/// Fails with [`Error::ImaginaryResidue`] if the diagonal is not real to within
/// [`Real::imag_residue_tol`].
pub fn measure<T: Real>(cfg: &impl ChainAmplitudes<T>, e: &Event) -> Result<T> {
    let d = decoherence(cfg, e, e)?;
    if d.im.abs() > T::imag_residue_tol() {
        return Err(Error::ImaginaryResidue { residue: d.im.to_f64_lossy() });
    }
    Ok(d.re)
}

/// Value of the order-`k` interference functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceReport<T> {
    pub order: usize,
    pub value: T,
}

/// `I₁, I₂, I₃` on pairwise disjoint events: the alternating sum of measures
/// over all non-empty sub-unions, sign `(-1)^{k-|S|}`.
pub fn interference<T: Real>(cfg: &impl ChainAmplitudes<T>, sets: &[Event]) -> Result<InterferenceReport<T>> {
    let order = sets.len();
    if !(1..=3).contains(&order) {
        return Err(Error::Domain(format!("interference order must be 1, 2 or 3, got {order}")));
    }
    for (a, b) in sets.iter().tuple_combinations() {
        if a.steps() != b.steps() {
            return Err(Error::LengthMismatch { expected: a.steps(), found: b.steps() });
        }
        if !a.is_disjoint(b) {
            return Err(Error::Domain(format!("events {a} and {b} are not disjoint")));
        }
    }
    let mut value = T::zero();
    for mask in 1u32..(1 << order) {
        let mut union = Event::empty(sets[0].steps())?;
        for (i, s) in sets.iter().enumerate() {
            if mask & (1 << i) != 0 {
                union = union.union(s)?;
            }
        }
        let mu = measure(cfg, &union)?;
        if (order as u32 - mask.count_ones()).is_multiple_of(2) {
            value += mu;
        } else {
            value -= mu;
        }
    }
    Ok(InterferenceReport { order, value })
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Every cardinality-`k` event over `n`-step chains, in lexicographic order.
pub fn enumerate_events(n: usize, k: usize) -> Result<impl Iterator<Item = Event>> {
    if n == 0 || n > 24 {
        return Err(Error::Resource(format!("cannot enumerate events over {n} steps")));
    }
    let total = 1usize << n;
    if k > total {
        return Err(Error::Domain(format!("k = {k} exceeds 2^{n} = {total}")));
    }
    let count = binomial(total as u128, k as u128)
        .ok_or_else(|| Error::Resource(format!("C({total}, {k}) overflows")))?;
    let work = count.saturating_mul(k.max(1) as u128);
    if work > MAX_ENUMERATION_WORK {
        return Err(Error::Resource(format!(
            "enumerating C({total}, {k}) = {count} events exceeds the cap of {MAX_ENUMERATION_WORK}"
        )));
    }
    Ok((0..total).combinations(k).map(move |idx| Event::from_indices(n, idx)))
}

/// All `2^(2ⁿ)` events ordered by cardinality, then lexicographically.
pub fn enumerate_all_events(n: usize) -> Result<Vec<Event>> {
    let total = 1usize << n.min(24);
    let mut out = Vec::new();
    for k in 0..=total {
        out.extend(enumerate_events(n, k)?);
    }
    Ok(out)
}

/// Complex helper used by presets and tests: `re + i·im` in the scalar type.
pub fn complex<T: Real>(re: f64, im: f64) -> Complex<T> {
    c(T::lit(re), T::lit(im))
}
