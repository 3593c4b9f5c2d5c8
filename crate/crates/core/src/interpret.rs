//! Which particle histories survive a given ancilla outcome, and what may be
//! said about an event `E` once that outcome is seen.
//!
//! "Happened" follows the preclusion convention: `E` happened when every joint
//! (particle, outcome) history of nonzero measure has its particle part in
//! `E`. This is a linguistic convention, not a theorem; the classifier records
//! it in every report.

use std::collections::BTreeSet;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histories::{measure, Chain, Event, ExperimentConfig};
use crate::protocol::event_vector;
use crate::scalar::{cone, czero, inner, Real};
use crate::simulator::{run_coupled, AncillaProjector, JointState};
use crate::synth::subspace_fourier;

pub const HAPPENED_CONVENTION: &str = "E is reported as happened when every joint (particle, outcome) history \
     of nonzero measure has its particle history in E, and as not happened when every such history lies outside E";

/// Particle histories with nonzero joint measure together with `outcome`,
/// optionally restricted to a final beam.
pub fn compatible_histories<T: Real>(
    cfg: &ExperimentConfig<T>,
    outcome: &AncillaProjector<T>,
    final_particle_bit: Option<u8>,
) -> Result<BTreeSet<Chain>> {
    let state = run_coupled(cfg)?;
    compatible_on_state(&state, outcome, final_particle_bit)
}

pub(crate) fn compatible_on_state<T: Real>(
    state: &JointState<T>,
    outcome: &AncillaProjector<T>,
    final_particle_bit: Option<u8>,
) -> Result<BTreeSet<Chain>> {
    let n = state.ancillas();
    if outcome.dim() != state.ancilla_dim() {
        return Err(Error::DimensionMismatch { expected: state.ancilla_dim(), found: outcome.dim() });
    }
    let mut out = BTreeSet::new();
    for idx in 0..state.ancilla_dim() {
        let chain = Chain::new(n, idx as u64)?;
        let fb = chain.final_bit();
        if final_particle_bit.is_some_and(|b| b != fb) {
            continue;
        }
        let weight = state.amplitude(fb, idx).norm_sqr() * outcome.weight_on_basis(idx);
        if weight > T::zero_probability() {
            out.insert(chain);
        }
    }
    Ok(out)
}

/// Particle event paired with an ancilla outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEvent<T> {
    pub particle: Event,
    pub outcome: AncillaProjector<T>,
}

/// `‖(I ⊗ P) Σ_{γ∈E} A(γ)|γₙ, γ⟩‖²`.
pub fn joint_measure<T: Real>(cfg: &ExperimentConfig<T>, joint: &JointEvent<T>) -> Result<T> {
    let state = run_coupled(cfg)?;
    joint_measure_on_state(cfg, &state, joint)
}

fn joint_measure_on_state<T: Real>(
    cfg: &ExperimentConfig<T>,
    state: &JointState<T>,
    joint: &JointEvent<T>,
) -> Result<T> {
    cfg.check_event(&joint.particle)?;
    let d = state.ancilla_dim();
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let idx = i % d;
            if joint.particle.contains(&Chain::new(cfg.steps(), idx as u64).expect("index fits")) {
                *z
            } else {
                czero()
            }
        })
        .collect::<Vec<_>>();
    // The restriction is not normalized, so go through project() on a raw copy.
    let restricted = RawState { n: state.ancillas(), amps };
    restricted.projected_norm(&joint.outcome)
}

struct RawState<T> {
    n: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> RawState<T> {
    fn projected_norm(&self, p: &AncillaProjector<T>) -> Result<T> {
        let d = 1usize << self.n;
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
        let a = p.apply(&self.amps[..d]);
        let b = p.apply(&self.amps[d..]);
        Ok(a.iter().chain(&b).map(|z| z.norm_sqr()).sum())
    }
}

/// True when the joint event has (numerically) zero measure.
pub fn preclusion_check<T: Real>(cfg: &ExperimentConfig<T>, joint: &JointEvent<T>) -> Result<bool> {
    Ok(joint_measure(cfg, joint)? <= T::zero_probability())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Happened,
    NotHappened,
    CannotTell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FinalStateKind {
    HistoriesInE,
    HistoriesNotInE,
    Altered,
    Entangled,
}

/// Geometry of the measured ancilla state relative to `span{|γ⟩ : γ ∈ E}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StateKind {
    /// `|E⟩` up to global phase.
    EventState,
    /// Inside the span but not `|E⟩`.
    InSpan,
    /// Neither inside nor orthogonal to the span.
    Straddling,
    /// Orthogonal to the span but not `|Ē⟩`.
    Orthogonal,
    /// `|Ē⟩` up to global phase.
    ComplementState,
    /// Projector of rank above one.
    Multiplet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProbabilityRelation {
    /// `P = μ(E)/k`.
    EventMeasureOverK,
    /// `P = μ(Ē)/(2ⁿ - k)`.
    ComplementMeasureOverRest,
    Unrelated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeClassification<T> {
    pub state_kind: StateKind,
    #[serde(rename = "happened")]
    pub verdict: Verdict,
    pub probability_relation: ProbabilityRelation,
    pub measure_related: bool,
    pub final_state_kind: FinalStateKind,
    pub final_system_description: String,
    /// Probability of this outcome.
    pub probability: T,
    /// `μ(E)/k` or `μ(Ē)/(2ⁿ-k)` when the outcome is measure related.
    pub related_measure: Option<T>,
    /// "outcome but not E" is precluded.
    pub complement_precluded: bool,
    /// "E but not outcome" is precluded; informational only, never used for
    /// the verdict. `None` when the complementary projector is not formed.
    pub converse_precluded: Option<bool>,
    pub convention: String,
}

fn complementary_projector<T: Real>(p: &AncillaProjector<T>) -> Option<AncillaProjector<T>> {
    match p {
        AncillaProjector::Rank1(v) => Some(AncillaProjector::Complement(v.clone())),
        AncillaProjector::Complement(v) => Some(AncillaProjector::Rank1(v.clone())),
        AncillaProjector::Local(_) => p.rank1_vector().map(AncillaProjector::Complement),
        AncillaProjector::Dense(m) => {
            let mut id = m.mapv(|z| -z);
            for i in 0..id.nrows() {
                id[[i, i]] += cone::<T>();
            }
            Some(AncillaProjector::Dense(id))
        }
    }
}

/// Places an outcome in the rows of the happened / not-happened table.
pub fn classify_outcome<T: Real>(
    cfg: &ExperimentConfig<T>,
    e: &Event,
    measured: &AncillaProjector<T>,
) -> Result<OutcomeClassification<T>> {
    cfg.check_event(e)?;
    let n = cfg.steps();
    let dim = 1usize << n;
    if measured.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: measured.dim() });
    }
    let tol = T::geometry_tol();
    let state = run_coupled(cfg)?;
    let probability = state.outcome_probability(measured)?;

    let (mut inside, mut outside) = (T::zero(), T::zero());
    for idx in 0..dim {
        let w = measured.weight_on_basis(idx);
        if e.contains(&Chain::new(n, idx as u64)?) {
            inside += w;
        } else {
            outside += w;
        }
    }
    let in_span = outside < tol;
    let orthogonal = inside < tol;

    let comp = e.complement()?;
    let matches = |target: &Event, v: &[Complex<T>]| -> Result<bool> {
        if target.is_empty() {
            return Ok(false);
        }
        Ok((inner(&event_vector::<T>(target)?, v).norm() - T::one()).abs() < tol)
    };

    let verdict_of = |in_span: bool, orthogonal: bool| {
        if e.is_empty() || orthogonal {
            Verdict::NotHappened
        } else if in_span {
            Verdict::Happened
        } else {
            Verdict::CannotTell
        }
    };

    let (state_kind, relation, final_state_kind, description) = match measured.rank1_vector() {
        None => (
            StateKind::Multiplet,
            ProbabilityRelation::Unrelated,
            FinalStateKind::Entangled,
            "particle remains entangled with the ancillas; described by a density matrix",
        ),
        Some(v) => {
            if !e.is_empty() && matches(e, &v)? {
                (
                    StateKind::EventState,
                    ProbabilityRelation::EventMeasureOverK,
                    FinalStateKind::HistoriesInE,
                    "evolved through the histories in E",
                )
            } else if in_span && !orthogonal {
                (
                    StateKind::InSpan,
                    ProbabilityRelation::Unrelated,
                    FinalStateKind::Altered,
                    "histories in E with altered weights or phases",
                )
            } else if orthogonal && matches(&comp, &v)? {
                (
                    StateKind::ComplementState,
                    ProbabilityRelation::ComplementMeasureOverRest,
                    FinalStateKind::HistoriesNotInE,
                    "evolved through the histories not in E",
                )
            } else if orthogonal {
                (
                    StateKind::Orthogonal,
                    ProbabilityRelation::Unrelated,
                    FinalStateKind::Altered,
                    "histories not in E with altered weights or phases",
                )
            } else {
                (
                    StateKind::Straddling,
                    ProbabilityRelation::Unrelated,
                    FinalStateKind::Altered,
                    "histories both in and not in E, altered",
                )
            }
        }
    };
    let verdict = verdict_of(in_span, orthogonal);

    let related_measure = match relation {
        ProbabilityRelation::EventMeasureOverK => Some(measure(cfg, e)? / T::lit(e.len() as f64)),
        ProbabilityRelation::ComplementMeasureOverRest => {
            Some(measure(cfg, &comp)? / T::lit(comp.len() as f64))
        }
        ProbabilityRelation::Unrelated => None,
    };

    let complement_precluded = joint_measure_on_state(
        cfg,
        &state,
        &JointEvent { particle: comp.clone(), outcome: measured.clone() },
    )? <= T::zero_probability();
    let converse_precluded = match complementary_projector(measured) {
        Some(not_outcome) => Some(
            joint_measure_on_state(cfg, &state, &JointEvent { particle: e.clone(), outcome: not_outcome })?
                <= T::zero_probability(),
        ),
        None => None,
    };

    Ok(OutcomeClassification {
        state_kind,
        verdict,
        measure_related: relation != ProbabilityRelation::Unrelated,
        probability_relation: relation,
        final_state_kind,
        final_system_description: description.to_string(),
        probability,
        related_measure,
        complement_precluded,
        converse_precluded,
        convention: HAPPENED_CONVENTION.to_string(),
    })
}

/// Measurement basis realised by the subspace Fourier transform of `e`
/// followed by computational-basis reads: `(outcome chain, U†|outcome⟩)`.
pub fn fourier_outcome_basis<T: Real>(e: &Event) -> Result<Vec<(Chain, Vec<Complex<T>>)>> {
    let u_dag = subspace_fourier::<T>(e)?.adjoint();
    let n = e.steps();
    (0..1usize << n)
        .map(|idx| {
            let mut basis = vec![czero(); 1 << n];
            basis[idx] = cone();
            Ok((Chain::new(n, idx as u64)?, u_dag.apply(&basis)))
        })
        .collect()
}
