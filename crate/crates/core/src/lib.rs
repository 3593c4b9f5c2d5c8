//! Consistent-histories measures for a spin-1/2 particle passing a chain of
//! Stern-Gerlach analyzers, and the ancilla-coupling protocol that measures
//! them.
//!
//! Everything is generic over [`Real`] (`f64` or `f32`); the `*64` / `*32`
//! aliases below pin the scalar.

// `!(x < tol)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod histories;
pub mod interpret;
pub mod protocol;
pub mod scalar;
pub mod simulator;
pub mod spinor;
pub mod synth;

pub use error::{Error, Result};
pub use histories::{
    amplitude, complex, decoherence, enumerate_all_events, enumerate_events, interference, measure, Chain,
    ChainAmplitudes, Event, ExperimentConfig, InterferenceReport, StepBases,
};
pub use interpret::{
    classify_outcome, compatible_histories, fourier_outcome_basis, joint_measure, preclusion_check,
    FinalStateKind, JointEvent, OutcomeClassification, ProbabilityRelation, StateKind, Verdict,
};
pub use protocol::{
    coarse_measurement, complement_state, event_state, event_vector, measure_on_state, measure_the_measure,
    post_measurement_particle_state, CoarseMeasurement, CoarseOutcome, MeasureResult, PostMeasurementState,
};
pub use scalar::Real;
pub use simulator::{max_steps, run_coupled, AncillaOperator, AncillaProjector, DensityMatrix, JointState};
pub use spinor::{eigenstate, overlap, project, Direction, QubitState};
pub use synth::{
    alpha_bounds, boolean_sum_plan, execute_plan, partition, plan_route, route_probability, subspace_fourier,
    subspace_fourier_ordered, Basis, GatePlan, MeasurementRoute, ResidualProjector, SubchainPartition,
};

pub type Complex64 = num_complex::Complex<f64>;
pub type Complex32 = num_complex::Complex<f32>;

pub type Direction64 = Direction<f64>;
pub type Direction32 = Direction<f32>;
pub type QubitState64 = QubitState<f64>;
pub type QubitState32 = QubitState<f32>;
pub type ExperimentConfig64 = ExperimentConfig<f64>;
pub type ExperimentConfig32 = ExperimentConfig<f32>;
pub type JointState64 = JointState<f64>;
pub type JointState32 = JointState<f32>;
pub type AncillaOperator64 = AncillaOperator<f64>;
pub type AncillaOperator32 = AncillaOperator<f32>;
pub type AncillaProjector64 = AncillaProjector<f64>;
pub type AncillaProjector32 = AncillaProjector<f32>;
pub type GatePlan64 = GatePlan<f64>;
pub type GatePlan32 = GatePlan<f32>;
pub type MeasureResult64 = MeasureResult<f64>;
pub type MeasureResult32 = MeasureResult<f32>;
pub type OutcomeClassification64 = OutcomeClassification<f64>;
