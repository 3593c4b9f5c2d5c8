//! Circuit reductions for the `|E⟩` measurement.
//!
//! Two routes are provided:
//!
//! * **Boolean sums.** Bit positions are grouped by column pattern over the
//!   chains of `E`. Inside a group every chain carries either a reference
//!   pattern or its complement, so chaining XOR gates
//!   `|b₁…b_l⟩ ↦ |b₁⊕b₂, b₂⊕b₃, …, b_l⟩` leaves only the last bit of each group
//!   varying. Everything else is measured in the computational basis; the
//!   `α` residual bits are measured jointly (a single `±` measurement when
//!   `α = 1`).
//! * **Subspace Fourier transform.** A DFT on the span of the chains of `E`,
//!   identity elsewhere, mapping `|E⟩` to the last chain.

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histories::{measure, Chain, Event, ExperimentConfig};
use crate::protocol::MeasureResult;
use crate::scalar::{c, czero, Real};
use crate::simulator::{apply_xor_gates, run_coupled, AncillaOperator, AncillaProjector, JointState};

/// Version tag written into serialized plans.
pub const PLAN_SCHEMA: u32 = 1;

/// Grouping of bit positions (0-based) for an event with `k ≥ 2` chains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubchainPartition {
    /// Positions where every chain agrees.
    pub common: Vec<usize>,
    /// Differing groups, each sorted ascending, ordered by first position.
    pub groups: Vec<Vec<usize>>,
    /// Number of differing groups.
    pub alpha: usize,
}

/// Groups positions whose columns over the chains of `e` are equal or
/// complementary.
pub fn partition(e: &Event) -> Result<SubchainPartition> {
    if e.len() < 2 {
        return Err(Error::Domain(format!("partition needs at least two chains, got {}", e.len())));
    }
    let chains = e.chains();
    let mut common = Vec::new();
    let mut keyed: Vec<(Vec<u8>, Vec<usize>)> = Vec::new();
    for pos in 0..e.steps() {
        let column: Vec<u8> = chains.iter().map(|ch| ch.bit(pos)).collect();
        if column.iter().all(|&b| b == column[0]) {
            common.push(pos);
            continue;
        }
        let key: Vec<u8> = column.iter().map(|&b| b ^ column[0]).collect();
        match keyed.iter_mut().find(|(k, _)| *k == key) {
            Some((_, positions)) => positions.push(pos),
            None => keyed.push((key, vec![pos])),
        }
    }
    let groups: Vec<Vec<usize>> = keyed.into_iter().map(|(_, p)| p).collect();
    Ok(SubchainPartition { common, alpha: groups.len(), groups })
}

/// `(⌈log₂ k⌉, min(2^(k-1) - 1, n))`.
pub fn alpha_bounds(k: usize, n: usize) -> (usize, usize) {
    let lower = if k <= 1 { 0 } else { (usize::BITS - (k - 1).leading_zeros()) as usize };
    let upper = if k == 0 {
        0
    } else if k > usize::BITS as usize - 1 {
        n
    } else {
        ((1usize << (k - 1)) - 1).min(n)
    };
    (lower, upper)
}

/// How an ancilla is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// Computational basis, compared against `expected`.
    #[serde(rename = "Z")]
    Computational,
    /// `(|+⟩, |−⟩)` basis, looking for `|+⟩`.
    #[serde(rename = "PM")]
    PlusMinus,
    /// Part of the joint residual measurement.
    #[serde(rename = "R")]
    Residual,
}

/// Joint measurement on the residual ancillas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualProjector<T> {
    /// Ancilla positions, ascending; the first one is the most significant bit
    /// of `vector`'s index.
    pub qubits: Vec<usize>,
    /// Unit vector over `2^qubits.len()` residual patterns.
    pub vector: Vec<Complex<T>>,
}

/// Synthesized measurement for one event.
///
/// Serialized as
/// `{"schema":1,"xor_gates":[[target,control],…],"bases":["Z","PM",…],
/// "residual":{"qubits":[…],"vector":[[re,im],…]},"expected":[0,1,null,…]}`.
/// Ancillas are numbered from 0 in analyzer order; `expected` holds `null` for
/// ancillas not read in the computational basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatePlan<T> {
    pub schema: u32,
    /// `(target, control)`, applied in order: `target ← target ⊕ control`.
    pub xor_gates: Vec<(usize, usize)>,
    pub bases: Vec<Basis>,
    pub residual: ResidualProjector<T>,
    pub expected: Vec<Option<u8>>,
}

impl<T: Real> GatePlan<T> {
    /// Number of ancillas the plan addresses.
    pub fn ancillas(&self) -> usize {
        self.bases.len()
    }

    pub fn alpha(&self) -> usize {
        self.residual.qubits.len()
    }

    /// Image of a chain under the XOR network.
    pub fn apply_gates(&self, chain: &Chain) -> Result<Chain> {
        Chain::new(chain.len(), apply_xor_gates(chain.len(), &self.xor_gates, chain.index()) as u64)
    }

    /// Structural checks: sizes, gate ranges, basis/expected agreement and a
    /// unit residual vector.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(format!("inconsistent plan: {msg}")));
        if self.schema != PLAN_SCHEMA {
            return bad(format!("unknown schema {}", self.schema));
        }
        if self.bases.len() != n || self.expected.len() != n {
            return bad(format!("plan addresses {} ancillas, configuration has {n}", self.bases.len()));
        }
        for &(t, c) in &self.xor_gates {
            if t >= n || c >= n || t == c {
                return bad(format!("gate ({t}, {c}) out of range"));
            }
        }
        let alpha = self.residual.qubits.len();
        if self.residual.vector.len() != 1 << alpha {
            return bad(format!("residual vector has {} entries for {alpha} qubits", self.residual.vector.len()));
        }
        for (q, (b, e)) in self.bases.iter().zip(&self.expected).enumerate() {
            let in_residual = self.residual.qubits.contains(&q);
            let ok = match b {
                Basis::Computational => e.is_some_and(|v| v <= 1) && !in_residual,
                Basis::PlusMinus | Basis::Residual => e.is_none() && in_residual,
            };
            if !ok {
                return bad(format!("ancilla {q} has basis {b:?} with expected {e:?}"));
            }
        }
        let ns: T = self.residual.vector.iter().map(|z| z.norm_sqr()).sum();
        if (ns - T::one()).abs() > T::geometry_tol() {
            return bad(format!("residual vector has squared norm {ns}"));
        }
        Ok(())
    }

    /// The XOR network as an ancilla permutation.
    pub fn unitary(&self) -> Result<AncillaOperator<T>> {
        AncillaOperator::xor_network(self.ancillas(), &self.xor_gates)
    }

    /// The measured outcome, as a unit vector on the full ancilla register
    /// (after the XOR network).
    pub fn outcome_vector(&self) -> Vec<Complex<T>> {
        let n = self.ancillas();
        (0..1usize << n)
            .map(|idx| {
                let bit = |q: usize| ((idx >> (n - 1 - q)) & 1) as u8;
                let fixed_ok = self
                    .expected
                    .iter()
                    .enumerate()
                    .all(|(q, e)| e.is_none_or(|v| bit(q) == v));
                if !fixed_ok {
                    return czero();
                }
                let r = self.residual.qubits.iter().fold(0usize, |acc, &q| (acc << 1) | bit(q) as usize);
                self.residual.vector[r]
            })
            .collect()
    }
}

/// Boolean-sum plan for `e`; singletons get a plain computational-basis read.
pub fn boolean_sum_plan<T: Real>(e: &Event) -> Result<GatePlan<T>> {
    let n = e.steps();
    if e.is_empty() {
        return Err(Error::Domain("the empty event needs no measurement plan".into()));
    }
    if e.len() == 1 {
        let ch = e.chains()[0];
        return Ok(GatePlan {
            schema: PLAN_SCHEMA,
            xor_gates: Vec::new(),
            bases: vec![Basis::Computational; n],
            residual: ResidualProjector { qubits: Vec::new(), vector: vec![c(T::one(), T::zero())] },
            expected: ch.bits().map(Some).collect(),
        });
    }

    let part = partition(e)?;
    let mut xor_gates = Vec::new();
    let mut residual_qubits = Vec::new();
    for group in &part.groups {
        for w in group.windows(2) {
            xor_gates.push((w[0], w[1]));
        }
        residual_qubits.push(*group.last().expect("groups are non-empty"));
    }
    residual_qubits.sort_unstable();

    let mapped: Vec<usize> = e.iter().map(|ch| apply_xor_gates(n, &xor_gates, ch.index())).collect();
    let bit = |idx: usize, q: usize| ((idx >> (n - 1 - q)) & 1) as u8;
    let mut expected = vec![None; n];
    for q in (0..n).filter(|q| !residual_qubits.contains(q)) {
        let v = bit(mapped[0], q);
        if mapped.iter().any(|&m| bit(m, q) != v) {
            return Err(Error::Inconsistent(format!("position {q} still varies after the XOR network")));
        }
        expected[q] = Some(v);
    }

    let alpha = residual_qubits.len();
    let amp = c(T::one() / T::lit(e.len() as f64).sqrt(), T::zero());
    let mut vector = vec![czero(); 1 << alpha];
    for &m in &mapped {
        let r = residual_qubits.iter().fold(0usize, |acc, &q| (acc << 1) | bit(m, q) as usize);
        if vector[r] != czero() {
            return Err(Error::Inconsistent("two chains share a residual pattern".into()));
        }
        vector[r] = amp;
    }

    let residual_basis = if alpha == 1 { Basis::PlusMinus } else { Basis::Residual };
    let bases = (0..n)
        .map(|q| if residual_qubits.contains(&q) { residual_basis } else { Basis::Computational })
        .collect();
    Ok(GatePlan {
        schema: PLAN_SCHEMA,
        xor_gates,
        bases,
        residual: ResidualProjector { qubits: residual_qubits, vector },
        expected,
    })
}

/// Fourier transform on the span of `chains` (in the given order), identity
/// elsewhere: `|γʲ⟩ ↦ k^{-1/2} Σ_l e^{2πi·jl/k} |γˡ⟩`, `j, l ∈ 1..=k`.
pub fn subspace_fourier_ordered<T: Real>(chains: &[Chain], n: usize) -> Result<AncillaOperator<T>> {
    if chains.is_empty() {
        return Err(Error::Domain("subspace Fourier transform needs at least one chain".into()));
    }
    if let Some(ch) = chains.iter().find(|ch| ch.len() != n) {
        return Err(Error::LengthMismatch { expected: n, found: ch.len() });
    }
    if n > crate::simulator::max_steps() {
        return Err(Error::Resource(format!("{n} ancillas exceed the simulation cap")));
    }
    let k = chains.len();
    let norm = T::one() / T::lit(k as f64).sqrt();
    let block = Array2::from_shape_fn((k, k), |(l, j)| {
        // 1-based indices; reduce the exponent mod k before converting.
        let e = ((j + 1) * (l + 1)) % k;
        Complex::from_polar(norm, T::lit(TAU * e as f64 / k as f64))
    });
    AncillaOperator::block(1 << n, chains.iter().map(Chain::index).collect(), block)
}

/// [`subspace_fourier_ordered`] with the chains of `e` in canonical order.
pub fn subspace_fourier<T: Real>(e: &Event) -> Result<AncillaOperator<T>> {
    subspace_fourier_ordered(&e.chains(), e.steps())
}

/// A concrete way of measuring `|E⟩`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementRoute<T> {
    BooleanSum(GatePlan<T>),
    /// Apply `operator`, then read all ancillas in the computational basis
    /// expecting `target`.
    Fourier { operator: AncillaOperator<T>, target: Chain },
}

impl<T: Real> MeasurementRoute<T> {
    pub fn fourier(e: &Event) -> Result<Self> {
        let target = *e.iter().last().ok_or_else(|| Error::Domain("empty event".into()))?;
        Ok(Self::Fourier { operator: subspace_fourier(e)?, target })
    }
}

/// Picks the Boolean-sum plan unless it cannot reduce the measurement
/// (`k > 2^(n-1)` or `α = n`), in which case the subspace Fourier route is used.
pub fn plan_route<T: Real>(e: &Event) -> Result<MeasurementRoute<T>> {
    let n = e.steps();
    let plan = boolean_sum_plan::<T>(e)?;
    let too_many = n >= 1 && e.len() > 1 << (n - 1);
    if e.len() >= 2 && (too_many || plan.alpha() == n) {
        return MeasurementRoute::fourier(e);
    }
    Ok(MeasurementRoute::BooleanSum(plan))
}

/// Probability of the route's target outcome on an already coupled state.
pub fn route_probability<T: Real>(state: &JointState<T>, route: &MeasurementRoute<T>) -> Result<T> {
    let n = state.ancillas();
    match route {
        MeasurementRoute::BooleanSum(plan) => {
            plan.validate(n)?;
            let evolved = state.apply_ancilla_unitary(&plan.unitary()?)?;
            evolved.outcome_probability(&AncillaProjector::rank1(plan.outcome_vector())?)
        }
        MeasurementRoute::Fourier { operator, target } => {
            if target.len() != n || operator.dim() != 1 << n {
                return Err(Error::Domain(format!("Fourier route does not match {n} ancillas")));
            }
            let evolved = state.apply_ancilla_unitary(operator)?;
            evolved.outcome_probability(&AncillaProjector::basis(n, target.index()))
        }
    }
}

/// Executes a route through the simulator and reports `k·P` against `μ(E)`.
pub fn execute_plan<T: Real>(
    cfg: &ExperimentConfig<T>,
    route: &MeasurementRoute<T>,
    e: &Event,
) -> Result<MeasureResult<T>> {
    cfg.check_event(e)?;
    if e.is_empty() {
        return Err(Error::Domain("the empty event needs no measurement plan".into()));
    }
    let state = run_coupled(cfg)?;
    let p = route_probability(&state, route)?;
    Ok(MeasureResult::new(p, e.len(), measure(cfg, e)?))
}
