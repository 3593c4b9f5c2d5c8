//! Recovering `μ(E)` from an ancilla measurement.
//!
//! After coupling, the ancillas are projected onto the uniform phase-free
//! superposition `|E⟩ = k^{-1/2} Σ_{γ∈E} |γ⟩`. The probability of that outcome
//! is `μ(E)/k`, and the particle is left in `μ(E)^{-1/2} Σ_{γ∈E} A(γ)|γₙ⟩`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histories::{amplitude, measure, Event, ExperimentConfig};
use crate::scalar::{c, czero, Real};
use crate::simulator::{run_coupled, AncillaProjector, DensityMatrix, JointState};
use crate::spinor::QubitState;

/// Outcome of one measure-the-measure run, with the analytic value alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult<T> {
    /// `P(E)`, probability of the `|E⟩` outcome.
    pub probability: T,
    /// `k = |E|`.
    pub cardinality: usize,
    /// `k · P(E)`.
    pub inferred_measure: T,
    /// `μ(E)` from the chain amplitudes.
    pub oracle_measure: T,
    /// `|inferred - oracle|`.
    pub residual: T,
}

impl<T: Real> MeasureResult<T> {
    pub(crate) fn new(probability: T, cardinality: usize, oracle_measure: T) -> Self {
        let inferred_measure = probability * T::lit(cardinality as f64);
        Self {
            probability,
            cardinality,
            inferred_measure,
            oracle_measure,
            residual: (inferred_measure - oracle_measure).abs(),
        }
    }
}

fn uniform_vector<T: Real>(n: usize, indices: impl Iterator<Item = usize>, k: usize) -> Vec<Complex<T>> {
    let amp = c(T::one() / T::lit(k as f64).sqrt(), T::zero());
    let mut v = vec![czero(); 1 << n];
    for i in indices {
        v[i] = amp;
    }
    v
}

/// Unit vector `|E⟩` as an ancilla-register array.
pub fn event_vector<T: Real>(e: &Event) -> Result<Vec<Complex<T>>> {
    if e.is_empty() {
        return Err(Error::Domain("the empty event has measure 0 and no |E⟩ state".into()));
    }
    if e.steps() > crate::simulator::max_steps() {
        return Err(Error::Resource(format!("event over {} steps exceeds the simulation cap", e.steps())));
    }
    Ok(uniform_vector(e.steps(), e.iter().map(|ch| ch.index()), e.len()))
}

/// `|E⟩⟨E|`.
pub fn event_state<T: Real>(e: &Event) -> Result<AncillaProjector<T>> {
    AncillaProjector::rank1(event_vector(e)?)
}

/// `|Ē⟩⟨Ē|` with `|Ē⟩` the uniform superposition of chains not in `E`.
pub fn complement_state<T: Real>(e: &Event) -> Result<AncillaProjector<T>> {
    let comp = e.complement()?;
    if comp.is_empty() {
        return Err(Error::Domain("E = Ω has an empty complement".into()));
    }
    AncillaProjector::rank1(event_vector(&comp)?)
}

/// Runs the full protocol: couple, project on `|E⟩`, scale by `k`.
pub fn measure_the_measure<T: Real>(cfg: &ExperimentConfig<T>, e: &Event) -> Result<MeasureResult<T>> {
    cfg.check_event(e)?;
    let state = run_coupled(cfg)?;
    measure_on_state(cfg, &state, e)
}

/// As [`measure_the_measure`] but reusing an already coupled state.
pub fn measure_on_state<T: Real>(
    cfg: &ExperimentConfig<T>,
    state: &JointState<T>,
    e: &Event,
) -> Result<MeasureResult<T>> {
    cfg.check_event(e)?;
    let p = state.outcome_probability(&event_state(e)?)?;
    Ok(MeasureResult::new(p, e.len(), measure(cfg, e)?))
}

/// Outcome `E` of the two-outcome measurement `{Π_E, I - Π_E}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseOutcome<T> {
    pub probability: T,
    /// Particle state conditioned on this outcome; `None` when precluded.
    pub conditional_density: Option<DensityMatrix<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseMeasurement<T> {
    pub event: CoarseOutcome<T>,
    pub complement: CoarseOutcome<T>,
}

fn coarse_outcome<T: Real>(state: &JointState<T>, p: &AncillaProjector<T>) -> Result<CoarseOutcome<T>> {
    let projected = state.project(p)?;
    let probability = projected.norm_sqr();
    let conditional_density =
        (probability > T::zero_probability()).then(|| projected.reduced_density().normalized());
    Ok(CoarseOutcome { probability, conditional_density })
}

/// Two-outcome measurement with projectors `|E⟩⟨E|` and `I - |E⟩⟨E|`.
pub fn coarse_measurement<T: Real>(cfg: &ExperimentConfig<T>, e: &Event) -> Result<CoarseMeasurement<T>> {
    cfg.check_event(e)?;
    let state = run_coupled(cfg)?;
    let v = event_vector(e)?;
    Ok(CoarseMeasurement {
        event: coarse_outcome(&state, &AncillaProjector::rank1(v.clone())?)?,
        complement: coarse_outcome(&state, &AncillaProjector::complement(v)?)?,
    })
}

/// Particle state after the `|E⟩` outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostMeasurementState<T> {
    /// `μ(E)^{-1/2} Σ_{γ∈E} A(γ)|γₙ⟩`, components indexed by final beam.
    pub particle: QubitState<T>,
    /// `|⟨formula|collapsed⟩|` against the simulator's particle factor.
    pub fidelity: T,
}

/// Builds the post-measurement particle state from chain amplitudes and checks
/// it against the collapsed simulator state.
pub fn post_measurement_particle_state<T: Real>(
    cfg: &ExperimentConfig<T>,
    e: &Event,
) -> Result<PostMeasurementState<T>> {
    cfg.check_event(e)?;
    if e.is_empty() {
        return Err(Error::Precluded { probability: 0.0 });
    }
    let mu = measure(cfg, e)?;
    if !(mu > T::zero_probability()) {
        return Err(Error::Precluded { probability: mu.to_f64_lossy() });
    }
    let mut comps = [czero::<T>(); 2];
    for ch in e.iter() {
        comps[ch.final_bit() as usize] += amplitude(cfg, ch)?;
    }
    let scale = T::one() / mu.sqrt();
    let particle = QubitState::new(comps[0] * scale, comps[1] * scale);

    let v = event_vector(e)?;
    let collapsed = run_coupled(cfg)?.collapse(&AncillaProjector::rank1(v.clone())?)?;
    let factor = collapsed.particle_factor(&v).normalized()?;
    let fidelity = particle.fidelity(&factor);
    if (fidelity - T::one()).abs() > T::geometry_tol() {
        return Err(Error::Inconsistent(format!(
            "post-measurement state disagrees with collapse: |⟨formula|collapsed⟩| = {fidelity}"
        )));
    }
    Ok(PostMeasurementState { particle, fidelity })
}
