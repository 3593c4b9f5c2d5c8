//! Spin-1/2 eigenstates for analyzer directions.
//!
//! Phase convention for the eigenstates of `n̂(θ, φ)`:
//!
//! ```text
//! |n̂,0⟩ =  cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩
//! |n̂,1⟩ = -e^{-iφ} sin(θ/2)|0⟩ + cos(θ/2)|1⟩
//! ```
//!
//! Measures and protocol probabilities do not depend on this choice; only
//! individual chain amplitudes pick up phases.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, czero, Real};

/// Cartesian vectors shorter than this cannot be turned into a direction.
pub const MIN_CARTESIAN_NORM: f64 = 1e-9;

/// Analyzer orientation as polar/azimuthal angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction<T> {
    theta: T,
    phi: T,
}

impl<T: Real> Direction<T> {
    /// Builds a direction, wrapping `phi` into `[0, 2π)`.
    ///
    /// `theta` must lie in `[0, π]`; values overshooting by less than `1e-12`
    /// relative are clamped.
    pub fn new(theta: T, phi: T) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::Config(format!(
                "direction angles must be finite, got theta={theta}, phi={phi}"
            )));
        }
        let pi = T::PI();
        let slack = T::norm_tol() * pi;
        if theta < -slack || theta > pi + slack {
            return Err(Error::Config(format!("theta={theta} outside [0, π]")));
        }
        let theta = theta.max(T::zero()).min(pi);
        let two_pi = pi + pi;
        let mut phi = phi % two_pi;
        if phi < T::zero() {
            phi += two_pi;
        }
        if phi >= two_pi {
            phi = T::zero();
        }
        Ok(Self { theta, phi })
    }

    /// Normalizes a Cartesian 3-vector.
    pub fn from_cartesian(x: T, y: T, z: T) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < T::lit(MIN_CARTESIAN_NORM) {
            return Err(Error::Config(format!(
                "cartesian direction ({x}, {y}, {z}) has norm {norm} below {MIN_CARTESIAN_NORM:e}"
            )));
        }
        let theta = (z / norm).max(-T::one()).min(T::one()).acos();
        let phi = y.atan2(x);
        Self::new(theta, phi)
    }

    pub fn z() -> Self {
        Self { theta: T::zero(), phi: T::zero() }
    }

    pub fn x() -> Self {
        Self { theta: T::FRAC_PI_2(), phi: T::zero() }
    }

    pub fn y() -> Self {
        Self { theta: T::FRAC_PI_2(), phi: T::FRAC_PI_2() }
    }

    pub fn minus_z() -> Self {
        Self { theta: T::PI(), phi: T::zero() }
    }

    pub fn minus_x() -> Self {
        Self { theta: T::FRAC_PI_2(), phi: T::PI() }
    }

    pub fn minus_y() -> Self {
        Self { theta: T::FRAC_PI_2(), phi: T::lit(1.5) * T::PI() }
    }

    /// Resolves a named axis: `Z`, `X`, `Y`, `-Z`, `-X`, `-Y` (case-insensitive,
    /// `+` prefix and the unicode minus accepted).
    pub fn from_alias(name: &str) -> Option<Self> {
        let upper = name.trim().to_ascii_uppercase().replace('−', "-");
        let name = upper.strip_prefix('+').unwrap_or(&upper);
        match name {
            "Z" => Some(Self::z()),
            "X" => Some(Self::x()),
            "Y" => Some(Self::y()),
            "-Z" => Some(Self::minus_z()),
            "-X" => Some(Self::minus_x()),
            "-Y" => Some(Self::minus_y()),
            _ => None,
        }
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn cartesian(&self) -> [T; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Both eigenstates, indexed by bit.
    pub fn eigenbasis(&self) -> [QubitState<T>; 2] {
        [eigenstate(self, 0), eigenstate(self, 1)]
    }
}

impl<T: Real> fmt::Display for Direction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(θ={}, φ={})", self.theta, self.phi)
    }
}

/// Pure state of a two-level system, `a0|0⟩ + a1|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState<T> {
    pub a0: Complex<T>,
    pub a1: Complex<T>,
}

impl<T: Real> QubitState<T> {
    pub fn new(a0: Complex<T>, a1: Complex<T>) -> Self {
        Self { a0, a1 }
    }

    pub fn from_real(a0: T, a1: T) -> Self {
        Self::new(c(a0, T::zero()), c(a1, T::zero()))
    }

    /// Computational basis state `|bit⟩`.
    pub fn basis(bit: u8) -> Self {
        match bit {
            0 => Self::from_real(T::one(), T::zero()),
            1 => Self::from_real(T::zero(), T::one()),
            _ => panic!("bit must be 0 or 1, got {bit}"),
        }
    }

    /// `(|0⟩ + |1⟩)/√2`.
    pub fn plus() -> Self {
        let h = T::FRAC_1_SQRT_2();
        Self::from_real(h, h)
    }

    /// `(|0⟩ - |1⟩)/√2`.
    pub fn minus() -> Self {
        let h = T::FRAC_1_SQRT_2();
        Self::from_real(h, -h)
    }

    pub fn amplitude(&self, bit: u8) -> Complex<T> {
        match bit {
            0 => self.a0,
            1 => self.a1,
            _ => panic!("bit must be 0 or 1, got {bit}"),
        }
    }

    pub fn norm_sqr(&self) -> T {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - T::one()).abs() < T::norm_tol()
    }

    /// Scales to unit norm; errors on the zero vector or non-finite input.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !n.is_finite() || n <= T::zero() {
            return Err(Error::Config(format!("cannot normalize qubit state with norm {n}")));
        }
        Ok(Self::new(self.a0 / n, self.a1 / n))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    /// `|⟨self|other⟩|`; equals one iff the states agree up to global phase.
    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm()
    }

    pub fn scale(&self, z: Complex<T>) -> Self {
        Self::new(self.a0 * z, self.a1 * z)
    }

    pub fn as_array(&self) -> [Complex<T>; 2] {
        [self.a0, self.a1]
    }
}

/// Eigenstate of the spin component along `d` with eigenvalue label `bit`.
pub fn eigenstate<T: Real>(d: &Direction<T>, bit: u8) -> QubitState<T> {
    let half = d.theta / (T::one() + T::one());
    let (s, co) = half.sin_cos();
    let (sp, cp) = d.phi.sin_cos();
    match bit {
        0 => QubitState::new(c(co, T::zero()), c(cp * s, sp * s)),
        // -e^{-iφ} sin(θ/2) = -(cos φ - i sin φ) s
        1 => QubitState::new(c(-cp * s, sp * s), c(co, T::zero())),
        _ => panic!("bit must be 0 or 1, got {bit}"),
    }
}

/// `⟨da, ba | db, bb⟩`.
pub fn overlap<T: Real>(da: &Direction<T>, ba: u8, db: &Direction<T>, bb: u8) -> Complex<T> {
    eigenstate(da, ba).inner(&eigenstate(db, bb))
}

/// `⟨d, bit | ψ⟩` for an arbitrary state.
pub fn project<T: Real>(d: &Direction<T>, bit: u8, psi: &QubitState<T>) -> Complex<T> {
    eigenstate(d, bit).inner(psi)
}

/// Outer product `|a⟩⟨b|` as a row-major 2×2 matrix.
pub(crate) fn outer<T: Real>(a: &QubitState<T>, b: &QubitState<T>) -> [[Complex<T>; 2]; 2] {
    let mut m = [[czero(); 2]; 2];
    let av = a.as_array();
    let bv = b.as_array();
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = av[i] * bv[j].conj();
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    fn close(a: Complex<f64>, re: f64, im: f64) -> bool {
        (a.re - re).abs() < TOL && (a.im - im).abs() < TOL
    }

    fn random_direction(rng: &mut impl Rng) -> Direction<f64> {
        let theta = (1.0 - 2.0 * rng.random::<f64>()).acos();
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        Direction::new(theta, phi).unwrap()
    }

    #[test]
    fn z_axis_identity() {
        let s = eigenstate(&Direction::<f64>::new(0.0, 0.0).unwrap(), 0);
        assert!(close(s.a0, 1.0, 0.0) && close(s.a1, 0.0, 0.0));
    }

    #[test]
    fn x_axis_eigenstates() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = Direction::<f64>::new(std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let plus = eigenstate(&d, 0);
        assert!(close(plus.a0, h, 0.0) && close(plus.a1, h, 0.0));
        let minus = eigenstate(&d, 1);
        assert!(close(minus.a0, -h, 0.0) && close(minus.a1, h, 0.0));
    }

    #[test]
    fn overlap_examples() {
        let z = Direction::<f64>::z();
        let x = Direction::<f64>::x();
        assert!(close(overlap(&z, 0, &z, 0), 1.0, 0.0));
        assert!(close(overlap(&z, 0, &z, 1), 0.0, 0.0));
        assert!(close(overlap(&x, 0, &z, 0), std::f64::consts::FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn aliases_resolve() {
        let pi = std::f64::consts::PI;
        let expect = [
            ("Z", 0.0, 0.0),
            ("x", pi / 2.0, 0.0),
            ("Y", pi / 2.0, pi / 2.0),
            ("-Z", pi, 0.0),
            ("−Y", pi / 2.0, 1.5 * pi),
        ];
        for (name, t, p) in expect {
            let d = Direction::<f64>::from_alias(name).unwrap();
            assert!((d.theta() - t).abs() < TOL && (d.phi() - p).abs() < TOL, "{name}");
        }
        assert!(Direction::<f64>::from_alias("W").is_none());
    }

    #[test]
    fn cartesian_input() {
        let d = Direction::<f64>::from_cartesian(0.0, 0.0, -3.0).unwrap();
        assert!((d.theta() - std::f64::consts::PI).abs() < TOL);
        let d = Direction::<f64>::from_cartesian(0.0, -2.0, 0.0).unwrap();
        let m = Direction::<f64>::minus_y();
        assert!((d.theta() - m.theta()).abs() < TOL && (d.phi() - m.phi()).abs() < TOL);
        assert!(Direction::<f64>::from_cartesian(1e-10, 0.0, 0.0).is_err());
    }

    #[test]
    fn invalid_angles_rejected() {
        assert!(Direction::<f64>::new(f64::NAN, 0.0).is_err());
        assert!(Direction::<f64>::new(4.0, 0.0).is_err());
        assert!(Direction::<f64>::new(-0.1, 0.0).is_err());
        let d = Direction::<f64>::new(1.0, -0.5).unwrap();
        assert!((d.phi() - (std::f64::consts::TAU - 0.5)).abs() < TOL);
    }

    #[test]
    fn random_directions_orthonormal_and_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let d = random_direction(&mut rng);
            let [e0, e1] = d.eigenbasis();
            assert!(e0.inner(&e1).norm() < TOL);
            assert!((e0.norm_sqr() - 1.0).abs() < TOL && (e1.norm_sqr() - 1.0).abs() < TOL);
            let p0 = outer(&e0, &e0);
            let p1 = outer(&e1, &e1);
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(close(p0[i][j] + p1[i][j], want, 0.0));
                }
            }
        }
    }

    #[test]
    fn overlap_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let da = random_direction(&mut rng);
            let db = random_direction(&mut rng);
            for bb in 0..2 {
                for ba in 0..2 {
                    let s = overlap(&da, ba, &db, bb).norm_sqr() + overlap(&da, 1 - ba, &db, bb).norm_sqr();
                    assert!((s - 1.0).abs() < TOL);
                }
            }
        }
    }

    #[test]
    fn f32_eigenstates_are_orthonormal() {
        let d = Direction::<f32>::new(1.1, 2.3).unwrap();
        let [e0, e1] = d.eigenbasis();
        assert!(e0.inner(&e1).norm() < 1e-6);
        assert!((e0.norm_sqr() - 1.0).abs() < 1e-6);
    }
}
