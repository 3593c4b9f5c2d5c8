//! Dense state-vector simulation of the particle plus `n` ancillas.
//!
//! Basis ordering, shared by every module:
//!
//! ```text
//! index = particle_bit · 2ⁿ + (γ₁ γ₂ … γₙ read as a big-endian integer)
//! ```
//!
//! so ancilla `i` (0-based) sits at bit position `n - 1 - i` of the ancilla
//! register. After [`run_coupled`] the particle coordinate is the label of the
//! beam leaving the last analyzer, i.e. the particle is expressed in the last
//! analyzer's eigenbasis.

use std::env;

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histories::ExperimentConfig;
use crate::scalar::{cone, czero, inner, norm_sqr, Real};
use crate::spinor::{Direction, QubitState};

/// Default cap on the number of analyzers (and ancillas).
pub const DEFAULT_MAX_STEPS: usize = 20;

/// Environment variable overriding [`DEFAULT_MAX_STEPS`].
pub const MAX_STEPS_ENV: &str = "QMEASURE_MAX_N";

/// Dense ancilla operators and projectors are limited to this dimension.
pub const MAX_DENSE_DIM: usize = 1 << 12;

/// Current cap on `n`, honouring `QMEASURE_MAX_N`.
pub fn max_steps() -> usize {
    env::var(MAX_STEPS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .map(|v| v.min(30))
        .unwrap_or(DEFAULT_MAX_STEPS)
}

fn check_steps(n: usize) -> Result<()> {
    let cap = max_steps();
    if n > cap {
        return Err(Error::Resource(format!(
            "{n} ancillas exceed the dense-simulation cap of {cap} (set {MAX_STEPS_ENV} to raise it)"
        )));
    }
    Ok(())
}

/// Joint particle ⊗ ancilla-register state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState<T> {
    n: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> JointState<T> {
    /// `|particle⟩ ⊗ |0…0⟩`.
    pub fn product(particle: &QubitState<T>, n: usize) -> Result<Self> {
        check_steps(n)?;
        let dim = 1usize << n;
        let mut amps = vec![czero(); 2 * dim];
        amps[0] = particle.a0;
        amps[dim] = particle.a1;
        Ok(Self { n, amps })
    }

    /// Wraps raw amplitudes; the vector must have length `2^(n+1)` and unit norm.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        check_steps(n)?;
        if amps.len() != 2 << n {
            return Err(Error::DimensionMismatch { expected: 2 << n, found: amps.len() });
        }
        let s = Self { n, amps };
        if (s.norm_sqr() - T::one()).abs() > T::norm_tol() {
            return Err(Error::Domain(format!("joint state has squared norm {}", s.norm_sqr())));
        }
        Ok(s)
    }

    /// Number of ancillas.
    pub fn ancillas(&self) -> usize {
        self.n
    }

    pub fn ancilla_dim(&self) -> usize {
        1 << self.n
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    /// `⟨particle_bit, ancilla_index | ψ⟩`.
    pub fn amplitude(&self, particle_bit: u8, ancilla_index: usize) -> Complex<T> {
        self.amps[particle_bit as usize * self.ancilla_dim() + ancilla_index]
    }

    pub fn norm_sqr(&self) -> T {
        norm_sqr(&self.amps)
    }

    /// Ancilla-register block for a fixed particle bit.
    pub fn block(&self, particle_bit: u8) -> &[Complex<T>] {
        let d = self.ancilla_dim();
        &self.amps[particle_bit as usize * d..(particle_bit as usize + 1) * d]
    }

    fn map_blocks(&self, f: impl Fn(&[Complex<T>]) -> Vec<Complex<T>>) -> Self {
        let mut amps = f(self.block(0));
        amps.extend(f(self.block(1)));
        Self { n: self.n, amps }
    }

    /// Applies a single-qubit unitary (row-major 2×2) to the particle.
    pub fn apply_particle(&mut self, u: &[[Complex<T>; 2]; 2]) {
        let d = self.ancilla_dim();
        for a in 0..d {
            let (x0, x1) = (self.amps[a], self.amps[d + a]);
            self.amps[a] = u[0][0] * x0 + u[0][1] * x1;
            self.amps[d + a] = u[1][0] * x0 + u[1][1] * x1;
        }
    }

    /// CNOT with the particle (computational basis) as control and ancilla
    /// `step` as target.
    pub fn cnot(&mut self, step: usize) {
        assert!(step < self.n, "ancilla {step} out of range");
        let d = self.ancilla_dim();
        let mask = 1usize << (self.n - 1 - step);
        for a in 0..d {
            if a & mask == 0 {
                self.amps.swap(d + a, d + (a | mask));
            }
        }
    }

    /// Records the particle's beam at analyzer `step` in ancilla `step`:
    /// `V† · CNOT · V` with `V` rotating the `d` eigenbasis onto the
    /// computational basis.
    pub fn couple(&mut self, step: usize, d: &Direction<T>) {
        let (v, v_dag) = basis_change(d);
        self.apply_particle(&v);
        self.cnot(step);
        self.apply_particle(&v_dag);
    }

    /// Re-expresses the particle in the eigenbasis of `d` (bit `b` ↦ `|d,b⟩`).
    pub fn rotate_particle_to(&mut self, d: &Direction<T>) {
        self.apply_particle(&basis_change(d).0);
    }

    /// `(I_s ⊗ U)|ψ⟩`.
    pub fn apply_ancilla_unitary(&self, u: &AncillaOperator<T>) -> Result<Self> {
        if u.dim() != self.ancilla_dim() {
            return Err(Error::DimensionMismatch { expected: self.ancilla_dim(), found: u.dim() });
        }
        Ok(self.map_blocks(|b| u.apply(b)))
    }

    /// `(I_s ⊗ P)|ψ⟩`, unnormalized.
    pub fn project(&self, p: &AncillaProjector<T>) -> Result<Self> {
        if p.dim() != self.ancilla_dim() {
            return Err(Error::DimensionMismatch { expected: self.ancilla_dim(), found: p.dim() });
        }
        Ok(self.map_blocks(|b| p.apply(b)))
    }

    /// `‖(I_s ⊗ P)|ψ⟩‖²`.
    pub fn outcome_probability(&self, p: &AncillaProjector<T>) -> Result<T> {
        Ok(self.project(p)?.norm_sqr())
    }

    /// Post-measurement state for outcome `P`.
    ///
    /// For rank-one `P = |v⟩⟨v|` the result is checked to factor as
    /// `(particle) ⊗ |v⟩`.
    pub fn collapse(&self, p: &AncillaProjector<T>) -> Result<Self> {
        let projected = self.project(p)?;
        let prob = projected.norm_sqr();
        if !(prob > T::zero_probability()) {
            return Err(Error::Precluded { probability: prob.to_f64_lossy() });
        }
        let scale = T::one() / prob.sqrt();
        let out = Self { n: self.n, amps: projected.amps.iter().map(|z| z * scale).collect() };
        if let Some(v) = p.rank1_vector() {
            let particle = out.particle_factor(&v);
            let d = out.ancilla_dim();
            let worst = out
                .amps
                .iter()
                .enumerate()
                .map(|(i, z)| (z - particle.amplitude((i / d) as u8) * v[i % d]).norm())
                .fold(T::zero(), T::max);
            if worst > T::geometry_tol() {
                return Err(Error::Inconsistent(format!(
                    "rank-one collapse did not factorize (max deviation {worst})"
                )));
            }
        }
        Ok(out)
    }

    /// Particle factor `⟨v|ψ⟩` taken block-wise; unnormalized.
    pub fn particle_factor(&self, v: &[Complex<T>]) -> QubitState<T> {
        QubitState::new(inner(v, self.block(0)), inner(v, self.block(1)))
    }

    /// Partial trace over all ancillas.
    pub fn reduced_density(&self) -> DensityMatrix<T> {
        let (b0, b1) = (self.block(0), self.block(1));
        let m01 = inner(b1, b0);
        DensityMatrix {
            m: [[c_real(norm_sqr(b0)), m01], [m01.conj(), c_real(norm_sqr(b1))]],
        }
    }
}

fn c_real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// `(V, V†)` with `V = Σ_b |b⟩⟨d,b|`.
#[allow(clippy::type_complexity)]
fn basis_change<T: Real>(d: &Direction<T>) -> ([[Complex<T>; 2]; 2], [[Complex<T>; 2]; 2]) {
    let [e0, e1] = d.eigenbasis();
    let v = [[e0.a0.conj(), e0.a1.conj()], [e1.a0.conj(), e1.a1.conj()]];
    let v_dag = [[e0.a0, e1.a0], [e0.a1, e1.a1]];
    (v, v_dag)
}

/// Couples one ancilla per analyzer and returns the final joint state, with
/// `⟨γₙ, γ | ψ⟩ = A(γ)`.
pub fn run_coupled<T: Real>(cfg: &ExperimentConfig<T>) -> Result<JointState<T>> {
    let n = cfg.steps();
    let mut state = JointState::product(&cfg.initial, n)?;
    for (step, d) in cfg.analyzers.iter().enumerate() {
        state.couple(step, d);
    }
    if let Some(last) = cfg.analyzers.last() {
        state.rotate_particle_to(last);
    }
    Ok(state)
}

/// Unitary acting on the ancilla register only.
#[derive(Debug, Clone, PartialEq)]
pub enum AncillaOperator<T> {
    /// Full `2ⁿ × 2ⁿ` matrix.
    Dense(Array2<Complex<T>>),
    /// Basis permutation: `|i⟩ ↦ |perm[i]⟩`.
    Permutation(Vec<usize>),
    /// Unitary `block` on the listed basis states, identity elsewhere.
    /// Column `j` of `block` is the image of `|indices[j]⟩`.
    Block { dim: usize, indices: Vec<usize>, block: Array2<Complex<T>> },
}

fn unitarity_deviation<T: Real>(m: &Array2<Complex<T>>) -> T {
    let dag = m.t().mapv(|z| z.conj());
    let prod = dag.dot(m);
    prod.indexed_iter()
        .map(|((i, j), z)| if i == j { (z - cone::<T>()).norm() } else { z.norm() })
        .fold(T::zero(), T::max)
}

impl<T: Real> AncillaOperator<T> {
    pub fn identity(dim: usize) -> Self {
        Self::Permutation((0..dim).collect())
    }

    pub fn dense(m: Array2<Complex<T>>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c || !r.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: r.next_power_of_two(), found: c });
        }
        if r > MAX_DENSE_DIM {
            return Err(Error::Resource(format!("dense {r}×{r} ancilla operator exceeds {MAX_DENSE_DIM}")));
        }
        let dev = unitarity_deviation(&m);
        if !(dev < T::unitarity_tol()) {
            return Err(Error::NotUnitary { deviation: dev.to_f64_lossy() });
        }
        Ok(Self::Dense(m))
    }

    pub fn permutation(perm: Vec<usize>) -> Result<Self> {
        let dim = perm.len();
        if !dim.is_power_of_two() {
            return Err(Error::Domain(format!("permutation length {dim} is not a power of two")));
        }
        let mut seen = vec![false; dim];
        for &p in &perm {
            if p >= dim || std::mem::replace(&mut seen[p], true) {
                return Err(Error::NotUnitary { deviation: 1.0 });
            }
        }
        Ok(Self::Permutation(perm))
    }

    pub fn block(dim: usize, indices: Vec<usize>, block: Array2<Complex<T>>) -> Result<Self> {
        if !dim.is_power_of_two() {
            return Err(Error::Domain(format!("dimension {dim} is not a power of two")));
        }
        let k = indices.len();
        if block.dim() != (k, k) {
            return Err(Error::DimensionMismatch { expected: k, found: block.nrows() });
        }
        let mut seen = vec![false; dim];
        for &i in &indices {
            if i >= dim || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Domain(format!("block index {i} repeated or out of range")));
            }
        }
        let dev = unitarity_deviation(&block);
        if !(dev < T::unitarity_tol()) {
            return Err(Error::NotUnitary { deviation: dev.to_f64_lossy() });
        }
        Ok(Self::Block { dim, indices, block })
    }

    /// Chain of pairwise XOR gates `target ← target ⊕ control`, applied in
    /// order, on an `n`-ancilla register (ancilla numbering as in [`Chain`]).
    ///
    /// [`Chain`]: crate::histories::Chain
    pub fn xor_network(n: usize, gates: &[(usize, usize)]) -> Result<Self> {
        check_steps(n)?;
        for &(t, c) in gates {
            if t >= n || c >= n || t == c {
                return Err(Error::Domain(format!("invalid XOR gate target {t}, control {c} for {n} ancillas")));
            }
        }
        let perm = (0..1usize << n).map(|i| apply_xor_gates(n, gates, i)).collect();
        Ok(Self::Permutation(perm))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(m) => m.nrows(),
            Self::Permutation(p) => p.len(),
            Self::Block { dim, .. } => *dim,
        }
    }

    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.dim(), "operator dimension mismatch");
        match self {
            Self::Dense(m) => (0..m.nrows())
                .map(|i| (0..m.ncols()).fold(czero(), |acc, j| acc + m[[i, j]] * x[j]))
                .collect(),
            Self::Permutation(p) => {
                let mut out = vec![czero(); x.len()];
                for (i, &pi) in p.iter().enumerate() {
                    out[pi] = x[i];
                }
                out
            }
            Self::Block { indices, block, .. } => {
                let mut out = x.to_vec();
                for (r, &ir) in indices.iter().enumerate() {
                    out[ir] = indices
                        .iter()
                        .enumerate()
                        .fold(czero(), |acc, (c, &ic)| acc + block[[r, c]] * x[ic]);
                }
                out
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Self::Dense(m) => Self::Dense(m.t().mapv(|z| z.conj())),
            Self::Permutation(p) => {
                let mut inv = vec![0; p.len()];
                for (i, &pi) in p.iter().enumerate() {
                    inv[pi] = i;
                }
                Self::Permutation(inv)
            }
            Self::Block { dim, indices, block } => Self::Block {
                dim: *dim,
                indices: indices.clone(),
                block: block.t().mapv(|z| z.conj()),
            },
        }
    }

    /// Full matrix; errors above [`MAX_DENSE_DIM`].
    pub fn to_dense(&self) -> Result<Array2<Complex<T>>> {
        let dim = self.dim();
        if dim > MAX_DENSE_DIM {
            return Err(Error::Resource(format!("cannot densify a {dim}-dimensional operator")));
        }
        let mut m = Array2::from_elem((dim, dim), czero());
        for j in 0..dim {
            let mut e = vec![czero(); dim];
            e[j] = cone();
            for (i, z) in self.apply(&e).into_iter().enumerate() {
                m[[i, j]] = z;
            }
        }
        Ok(m)
    }

    /// `max |U†U - I|` over the non-trivial part of the operator.
    pub fn unitarity_deviation(&self) -> T {
        match self {
            Self::Dense(m) => unitarity_deviation(m),
            Self::Permutation(_) => T::zero(),
            Self::Block { block, .. } => unitarity_deviation(block),
        }
    }
}

pub(crate) fn apply_xor_gates(n: usize, gates: &[(usize, usize)], mut index: usize) -> usize {
    for &(t, c) in gates {
        let cbit = (index >> (n - 1 - c)) & 1;
        index ^= cbit << (n - 1 - t);
    }
    index
}

/// Orthogonal projector on the ancilla register.
#[derive(Debug, Clone, PartialEq)]
pub enum AncillaProjector<T> {
    /// `|v⟩⟨v|` for a unit vector `v`.
    Rank1(Vec<Complex<T>>),
    /// `I - |v⟩⟨v|`.
    Complement(Vec<Complex<T>>),
    /// Tensor product of per-ancilla projectors `|o⟩⟨o|`; `None` leaves that
    /// ancilla unmeasured.
    Local(Vec<Option<QubitState<T>>>),
    /// General Hermitian idempotent matrix.
    Dense(Array2<Complex<T>>),
}

fn check_unit<T: Real>(v: &[Complex<T>]) -> Result<()> {
    if !v.len().is_power_of_two() {
        return Err(Error::Domain(format!("vector length {} is not a power of two", v.len())));
    }
    let ns = norm_sqr(v);
    if !((ns - T::one()).abs() < T::geometry_tol()) {
        return Err(Error::NotProjector { deviation: (ns - T::one()).abs().to_f64_lossy() });
    }
    Ok(())
}

impl<T: Real> AncillaProjector<T> {
    pub fn rank1(v: Vec<Complex<T>>) -> Result<Self> {
        check_unit(&v)?;
        Ok(Self::Rank1(v))
    }

    pub fn complement(v: Vec<Complex<T>>) -> Result<Self> {
        check_unit(&v)?;
        Ok(Self::Complement(v))
    }

    pub fn local(outcomes: Vec<Option<QubitState<T>>>) -> Result<Self> {
        check_steps(outcomes.len())?;
        for o in outcomes.iter().flatten() {
            if !o.is_normalized() {
                return Err(Error::NotProjector { deviation: (o.norm_sqr() - T::one()).abs().to_f64_lossy() });
            }
        }
        Ok(Self::Local(outcomes))
    }

    /// Identity on `n` ancillas.
    pub fn identity(n: usize) -> Self {
        Self::Local(vec![None; n])
    }

    /// Projector onto the computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Self {
        Self::Local((0..n).map(|i| Some(QubitState::basis(((index >> (n - 1 - i)) & 1) as u8))).collect())
    }

    pub fn dense(m: Array2<Complex<T>>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c || !r.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: r, found: c });
        }
        if r > MAX_DENSE_DIM {
            return Err(Error::Resource(format!("dense {r}×{r} projector exceeds {MAX_DENSE_DIM}")));
        }
        let herm = m
            .indexed_iter()
            .map(|((i, j), z)| (z - m[[j, i]].conj()).norm())
            .fold(T::zero(), T::max);
        let sq = m.dot(&m);
        let idem = sq.iter().zip(m.iter()).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max);
        let dev = herm.max(idem);
        if !(dev < T::unitarity_tol()) {
            return Err(Error::NotProjector { deviation: dev.to_f64_lossy() });
        }
        Ok(Self::Dense(m))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Rank1(v) | Self::Complement(v) => v.len(),
            Self::Local(o) => 1 << o.len(),
            Self::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.dim(), "projector dimension mismatch");
        match self {
            Self::Rank1(v) => {
                let a = inner(v, x);
                v.iter().map(|vi| vi * a).collect()
            }
            Self::Complement(v) => {
                let a = inner(v, x);
                x.iter().zip(v).map(|(xi, vi)| xi - vi * a).collect()
            }
            Self::Local(outcomes) => {
                let n = outcomes.len();
                let mut out = x.to_vec();
                for (q, o) in outcomes.iter().enumerate() {
                    let Some(o) = o else { continue };
                    let mask = 1usize << (n - 1 - q);
                    for i in 0..out.len() {
                        if i & mask == 0 {
                            let a = o.a0.conj() * out[i] + o.a1.conj() * out[i | mask];
                            out[i] = o.a0 * a;
                            out[i | mask] = o.a1 * a;
                        }
                    }
                }
                out
            }
            Self::Dense(m) => (0..m.nrows())
                .map(|i| (0..m.ncols()).fold(czero(), |acc, j| acc + m[[i, j]] * x[j]))
                .collect(),
        }
    }

    /// `‖P|index⟩‖²`, the weight the projector gives a basis chain.
    pub fn weight_on_basis(&self, index: usize) -> T {
        match self {
            Self::Rank1(v) => v[index].norm_sqr(),
            Self::Complement(v) => T::one() - v[index].norm_sqr(),
            Self::Local(outcomes) => {
                let n = outcomes.len();
                outcomes
                    .iter()
                    .enumerate()
                    .filter_map(|(q, o)| o.map(|o| o.amplitude(((index >> (n - 1 - q)) & 1) as u8).norm_sqr()))
                    .fold(T::one(), |a, b| a * b)
            }
            Self::Dense(m) => m.column(index).iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// The unit vector `v` when the projector is `|v⟩⟨v|`.
    pub fn rank1_vector(&self) -> Option<Vec<Complex<T>>> {
        match self {
            Self::Rank1(v) => Some(v.clone()),
            Self::Local(outcomes) if outcomes.iter().all(Option::is_some) => {
                let mut v = vec![cone()];
                for o in outcomes.iter().flatten() {
                    v = v.iter().flat_map(|a| [*a * o.a0, *a * o.a1]).collect();
                }
                Some(v)
            }
            Self::Complement(v) if v.len() == 2 => {
                // I - |v⟩⟨v| on one qubit is rank one: the orthogonal vector.
                Some(vec![-v[1].conj(), v[0].conj()])
            }
            _ => None,
        }
    }

    pub fn is_rank1(&self) -> bool {
        self.rank1_vector().is_some()
    }
}

/// Reduced 2×2 density matrix of the particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> DensityMatrix<T> {
    pub fn pure(psi: &QubitState<T>) -> Self {
        Self { m: crate::spinor::outer(psi, psi) }
    }

    pub fn trace(&self) -> T {
        self.m[0][0].re + self.m[1][1].re
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> T {
        let mut s = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                s += (self.m[i][j] * self.m[j][i]).re;
            }
        }
        s
    }

    /// Eigenvalues in ascending order (`ρ` assumed Hermitian).
    pub fn eigenvalues(&self) -> [T; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let half = T::lit(0.5);
        let mid = (a + d) * half;
        let rad = (((a - d) * half).powi(2) + self.m[0][1].norm_sqr()).sqrt();
        [mid - rad, mid + rad]
    }

    /// Divides by the trace; used for conditional states.
    pub fn normalized(&self) -> Self {
        let t = self.trace();
        let mut m = self.m;
        for row in &mut m {
            for z in row.iter_mut() {
                *z /= t;
            }
        }
        Self { m }
    }

    /// Hermitian, unit trace and non-negative spectrum.
    pub fn is_valid(&self) -> bool {
        let herm = (self.m[0][1] - self.m[1][0].conj()).norm() < T::norm_tol()
            && self.m[0][0].im.abs() < T::norm_tol()
            && self.m[1][1].im.abs() < T::norm_tol();
        herm && (self.trace() - T::one()).abs() < T::norm_tol() && self.eigenvalues()[0] > -T::unitarity_tol()
    }
}
