//! Two-level quantum mechanics in closed form.
//!
//! Everything here works on exact 2×2 complex matrices and 2-component
//! state vectors. Matrix exponentials are evaluated through the Pauli
//! decomposition `exp(-i m/2 n·σ) = cos(m/2) I - i sin(m/2) n·σ`, so no
//! series truncation or iterative solver is involved. ħ = 1 throughout.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used for amplitudes and matrix entries.
pub type ComplexScalar = Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance for structural checks (hermiticity, unitarity, trace).
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Tolerance on the norm of a state passed in from outside.
pub const NORM_TOL: f64 = 1e-8;

/// Dense 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub entries: [[Complex64; 2]; 2],
}

impl Matrix2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self {
            entries: [[a, b], [c, d]],
        }
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn pauli_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn pauli_y() -> Self {
        Self::new(ZERO, Complex64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn pauli_z() -> Self {
        Self::new(ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0))
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self::new(
            Complex64::new(m[0][0], 0.0),
            Complex64::new(m[0][1], 0.0),
            Complex64::new(m[1][0], 0.0),
            Complex64::new(m[1][1], 0.0),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let e = &self.entries;
        Self::new(e[0][0] * s, e[0][1] * s, e[1][0] * s, e[1][1] * s)
    }

    pub fn adjoint(&self) -> Self {
        let e = &self.entries;
        Self::new(e[0][0].conj(), e[1][0].conj(), e[0][1].conj(), e[1][1].conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(|z| z.is_finite())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (*self - self.adjoint()).max_abs() <= tol
    }

    pub fn mul_vec(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let e = &self.entries;
        [
            e[0][0] * v[0] + e[0][1] * v[1],
            e[1][0] * v[0] + e[1][1] * v[1],
        ]
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(self, rhs: Matrix2) -> Matrix2 {
        let (a, b) = (&self.entries, &rhs.entries);
        Matrix2::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;
    fn sub(self, rhs: Matrix2) -> Matrix2 {
        let (a, b) = (&self.entries, &rhs.entries);
        Matrix2::new(
            a[0][0] - b[0][0],
            a[0][1] - b[0][1],
            a[1][0] - b[1][0],
            a[1][1] - b[1][1],
        )
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let (a, b) = (&self.entries, &rhs.entries);
        Matrix2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Normalized state `c_1|0⟩ + c_2|1⟩` of a two-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    amplitudes: [Complex64; 2],
}

impl PureState {
    /// Builds a state from amplitudes that are already normalized.
    pub fn new(c1: Complex64, c2: Complex64) -> Result<Self> {
        if !(c1.is_finite() && c2.is_finite()) {
            return Err(Error::invalid("state amplitudes must be finite"));
        }
        let norm_sq = c1.norm_sqr() + c2.norm_sqr();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!(
                "state is not normalized (|c1|^2 + |c2|^2 = {norm_sq})"
            )));
        }
        Ok(Self {
            amplitudes: [c1, c2],
        })
    }

    /// Builds a state by rescaling arbitrary non-zero amplitudes.
    pub fn normalized(c1: Complex64, c2: Complex64) -> Result<Self> {
        let norm = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self {
            amplitudes: [c1 / norm, c2 / norm],
        })
    }

    /// |0⟩, the north pole.
    pub const fn ground() -> Self {
        Self {
            amplitudes: [ONE, ZERO],
        }
    }

    /// |1⟩, the south pole.
    pub const fn excited() -> Self {
        Self {
            amplitudes: [ZERO, ONE],
        }
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes[0].norm_sqr() + self.amplitudes[1].norm_sqr()
    }

    /// Multiplies both amplitudes by `e^{iα}`.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        let p = Complex64::from_polar(1.0, alpha);
        Self {
            amplitudes: [self.amplitudes[0] * p, self.amplitudes[1] * p],
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes[0].conj() * other.amplitudes[0]
            + self.amplitudes[1].conj() * other.amplitudes[1]
    }

    /// Projector |ψ⟩⟨ψ|.
    pub fn projector(&self) -> DensityMatrix {
        let [a, b] = self.amplitudes;
        DensityMatrix(Matrix2::new(
            a * a.conj(),
            a * b.conj(),
            b * a.conj(),
            b * b.conj(),
        ))
    }
}

/// Polar and phase angles of a point on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    theta: f64,
    phi: f64,
}

impl BlochPoint {
    /// `theta` must lie in `[0, π]`; `phi` is reduced modulo 2π.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::invalid("Bloch angles must be finite"));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(format!("theta = {theta} outside [0, pi]")));
        }
        Ok(Self {
            theta,
            phi: wrap_phase(phi),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Cartesian point `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn to_cartesian(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// A 2×2 unitary. Constructed only by the exponential builders or through
/// [`UnitaryOperator::from_matrix`], which checks `U†U = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryOperator(Matrix2);

impl UnitaryOperator {
    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn from_matrix(m: Matrix2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::invalid("unitary entries must be finite"));
        }
        let err = unitarity_error(&m);
        if err > STRUCTURE_TOL {
            return Err(Error::invalid(format!(
                "matrix is not unitary (max |U^dag U - I| = {err:e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.0
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn compose(&self, other: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator(self.0 * other.0)
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.0)
    }
}

fn unitarity_error(m: &Matrix2) -> f64 {
    (m.adjoint() * *m - Matrix2::identity()).max_abs()
}

/// A Hermitian 2×2 generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian(Matrix2);

impl Hamiltonian {
    pub fn new(m: Matrix2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::invalid("Hamiltonian entries must be finite"));
        }
        if !m.is_hermitian(STRUCTURE_TOL) {
            return Err(Error::invalid("Hamiltonian is not Hermitian"));
        }
        Ok(Self(m))
    }

    pub fn zero() -> Self {
        Self(Matrix2::zero())
    }

    /// Spin operator `I_z = σ_z / 2`.
    pub fn spin_z() -> Self {
        Self(Matrix2::pauli_z().scale(Complex64::new(0.5, 0.0)))
    }

    /// Spin operator `I_x = σ_x / 2`.
    pub fn spin_x() -> Self {
        Self(Matrix2::pauli_x().scale(Complex64::new(0.5, 0.0)))
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.0
    }

    /// Coefficients `(h_0, h_x, h_y, h_z)` with `H = h_0 I + h·σ`.
    pub fn pauli_coefficients(&self) -> [f64; 4] {
        let e = &self.0.entries;
        let h0 = 0.5 * (e[0][0].re + e[1][1].re);
        let hz = 0.5 * (e[0][0].re - e[1][1].re);
        let off = 0.5 * (e[0][1] + e[1][0].conj());
        [h0, off.re, -off.im, hz]
    }
}

/// A density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2);

impl DensityMatrix {
    pub fn new(m: Matrix2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::invalid("density matrix entries must be finite"));
        }
        if !m.is_hermitian(STRUCTURE_TOL) {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STRUCTURE_TOL || tr.im.abs() > STRUCTURE_TOL {
            return Err(Error::invalid(format!("density matrix trace {tr} != 1")));
        }
        let (lo, _) = hermitian_eigenvalues(&m);
        if lo < -STRUCTURE_TOL {
            return Err(Error::invalid(format!(
                "density matrix is not positive semidefinite (eigenvalue {lo:e})"
            )));
        }
        Ok(Self(m))
    }

    /// The maximally mixed state I/2.
    pub fn maximally_mixed() -> Self {
        Self(Matrix2::identity().scale(Complex64::new(0.5, 0.0)))
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.0
    }
}

/// Ascending eigenvalues of a Hermitian 2×2 matrix.
fn hermitian_eigenvalues(m: &Matrix2) -> (f64, f64) {
    let e = &m.entries;
    let mean = 0.5 * (e[0][0].re + e[1][1].re);
    let half_gap = 0.5 * (e[0][0].re - e[1][1].re);
    let radius = half_gap.hypot(e[0][1].norm());
    (mean - radius, mean + radius)
}

/// The three-switch control set: no control, positive impulse, negative impulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    members: Vec<(String, UnitaryOperator)>,
}

impl ControlSet {
    pub fn new(members: Vec<(String, UnitaryOperator)>) -> Result<Self> {
        if members.len() != 3 {
            return Err(Error::invalid(format!(
                "three-switch control needs exactly 3 unitaries, got {}",
                members.len()
            )));
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&UnitaryOperator> {
        self.members.get(index).map(|(_, u)| u)
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.members.get(index).map(|(l, _)| l.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &UnitaryOperator)> {
        self.members.iter().map(|(l, u)| (l.as_str(), u))
    }
}

/// Time slice of every control pulse.
pub const PULSE_DURATION: f64 = PI / 15.0;
/// Strength of the transverse impulse relative to the free term.
pub const IMPULSE_AMPLITUDE: f64 = 0.5;

/// `exp(-i (ax σx + ay σy + az σz) / 2)`.
pub fn pauli_exponential(ax: f64, ay: f64, az: f64) -> Result<UnitaryOperator> {
    if !(ax.is_finite() && ay.is_finite() && az.is_finite()) {
        return Err(Error::invalid("pauli_exponential arguments must be finite"));
    }
    let m = (ax * ax + ay * ay + az * az).sqrt();
    if m == 0.0 {
        return Ok(UnitaryOperator::identity());
    }
    let (s, c) = (0.5 * m).sin_cos();
    let (nx, ny, nz) = (ax / m, ay / m, az / m);
    // cos(m/2) I - i sin(m/2) (n·σ)
    let u = Matrix2::new(
        Complex64::new(c, -s * nz),
        Complex64::new(-s * ny, -s * nx),
        Complex64::new(s * ny, -s * nx),
        Complex64::new(c, s * nz),
    );
    Ok(UnitaryOperator(u))
}

/// `U1 = e^{-i I_z π/15}`, `U2 = e^{-i (I_z + 0.5 I_x) π/15}`,
/// `U3 = e^{-i (I_z - 0.5 I_x) π/15}`.
pub fn build_control_set() -> ControlSet {
    let dt = PULSE_DURATION;
    let pulse = |ix: f64| {
        pauli_exponential(ix * dt, 0.0, dt).expect("control pulse arguments are finite")
    };
    ControlSet {
        members: vec![
            ("U1".to_string(), pulse(0.0)),
            ("U2".to_string(), pulse(IMPULSE_AMPLITUDE)),
            ("U3".to_string(), pulse(-IMPULSE_AMPLITUDE)),
        ],
    }
}

/// Piecewise-constant propagator `exp(-i (h0 + u hc) dt)`.
pub fn build_propagator(
    h0: &Hamiltonian,
    hc: &Hamiltonian,
    u: f64,
    dt: f64,
) -> Result<UnitaryOperator> {
    if !u.is_finite() {
        return Err(Error::invalid("control amplitude must be finite"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let total = *h0.matrix() + hc.matrix().scale(Complex64::new(u, 0.0));
    let h = Hamiltonian::new(total)?;
    let [h_id, hx, hy, hz] = h.pauli_coefficients();
    let rotation = pauli_exponential(2.0 * hx * dt, 2.0 * hy * dt, 2.0 * hz * dt)?;
    let phase = Complex64::from_polar(1.0, -h_id * dt);
    Ok(UnitaryOperator(rotation.0.scale(phase)))
}

/// `U|ψ⟩`.
pub fn apply(u: &UnitaryOperator, s: &PureState) -> PureState {
    PureState {
        amplitudes: u.0.mul_vec(s.amplitudes),
    }
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn bloch_to_state(p: &BlochPoint) -> PureState {
    let (s, c) = (0.5 * p.theta).sin_cos();
    PureState {
        amplitudes: [
            Complex64::new(c, 0.0),
            Complex64::from_polar(s, p.phi),
        ],
    }
}

/// Inverse of [`bloch_to_state`] up to global phase. φ is 0 at the poles.
pub fn state_to_bloch(s: &PureState) -> Result<BlochPoint> {
    let norm_sq = s.norm_sqr();
    if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOL {
        return Err(Error::invalid(format!(
            "state_to_bloch needs a normalized state (norm^2 = {norm_sq})"
        )));
    }
    let [c1, c2] = s.amplitudes;
    let (r1, r2) = (c1.norm(), c2.norm());
    let theta = (2.0 * r2.atan2(r1)).clamp(0.0, PI);
    // Below this, one amplitude is zero to working precision and the
    // relative phase carries no information.
    const POLE: f64 = 1e-14;
    let phi = if r1 <= POLE || r2 <= POLE {
        0.0
    } else {
        wrap_phase(c2.arg() - c1.arg())
    };
    Ok(BlochPoint { theta, phi })
}

/// `|⟨a|b⟩|²`, clamped to `[0, 1]` against rounding.
pub fn fidelity_pure(a: &PureState, b: &PureState) -> f64 {
    a.inner(b).norm_sqr().clamp(0.0, 1.0)
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`, via its closed form for qubits.
pub fn fidelity_density(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    // For qubits (tr √(√ρ σ √ρ))² = tr(ρσ) + 2 √(det ρ det σ).
    let overlap = (rho.0 * sigma.0).trace().re;
    let det = |m: &Matrix2| {
        let [[a, b], [c, d]] = m.entries;
        (a * d - b * c).re.max(0.0)
    };
    (overlap + 2.0 * (det(&rho.0) * det(&sigma.0)).sqrt()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Principal square root of a Hermitian PSD 2×2 matrix through its
    /// spectral projectors. Eigenvalues within rounding of zero are clamped.
    fn psd_sqrt(m: &Matrix2) -> Matrix2 {
        let (lo, hi) = hermitian_eigenvalues(m);
        let (lo, hi) = (lo.max(0.0), hi.max(0.0));
        let gap = hi - lo;
        if gap <= f64::EPSILON * hi.max(1.0) {
            return Matrix2::identity().scale(Complex64::new(hi.sqrt(), 0.0));
        }
        let id = Matrix2::identity();
        let inv_gap = Complex64::new(1.0 / gap, 0.0);
        let p_hi = (*m - id.scale(Complex64::new(lo, 0.0))).scale(inv_gap);
        let p_lo = (id.scale(Complex64::new(hi, 0.0)) - *m).scale(inv_gap);
        p_hi.scale(Complex64::new(hi.sqrt(), 0.0)) + p_lo.scale(Complex64::new(lo.sqrt(), 0.0))
    }

    fn uhlmann(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
        let sqrt_rho = psd_sqrt(&rho.0);
        let inner = sqrt_rho * sigma.0 * sqrt_rho;
        let inner = (inner + inner.adjoint()).scale(Complex64::new(0.5, 0.0));
        let t = psd_sqrt(&inner).trace().re;
        t * t
    }

    /// Truncated Taylor series of exp(A), used as an independent oracle.
    fn expm_series(a: &Matrix2, terms: usize) -> Matrix2 {
        let mut sum = Matrix2::identity();
        let mut term = Matrix2::identity();
        for k in 1..terms {
            term = (term * *a).scale(Complex64::new(1.0 / k as f64, 0.0));
            sum = sum + term;
        }
        sum
    }

    fn series_pauli(ax: f64, ay: f64, az: f64) -> Matrix2 {
        let gen = Matrix2::pauli_x().scale(Complex64::new(ax, 0.0))
            + Matrix2::pauli_y().scale(Complex64::new(ay, 0.0))
            + Matrix2::pauli_z().scale(Complex64::new(az, 0.0));
        expm_series(&gen.scale(Complex64::new(0.0, -0.5)), 20)
    }

    fn close(a: &Matrix2, b: &Matrix2, tol: f64) -> bool {
        (*a - *b).max_abs() < tol
    }

    #[test]
    fn zero_exponent_is_identity() {
        let u = pauli_exponential(0.0, 0.0, 0.0).unwrap();
        assert_eq!(u.matrix(), &Matrix2::identity());
    }

    #[test]
    fn z_rotation_matches_diagonal_and_series() {
        let u = pauli_exponential(0.0, 0.0, 2.0 * PI / 15.0).unwrap();
        let expected = Matrix2::new(
            Complex64::from_polar(1.0, -PI / 15.0),
            ZERO,
            ZERO,
            Complex64::from_polar(1.0, PI / 15.0),
        );
        assert!(close(u.matrix(), &expected, 1e-15));
        assert!(close(u.matrix(), &series_pauli(0.0, 0.0, 2.0 * PI / 15.0), 1e-10));
    }

    #[test]
    fn half_turn_about_x() {
        let u = pauli_exponential(PI, 0.0, 0.0).unwrap();
        let expected = Matrix2::new(ZERO, -I, -I, ZERO);
        assert!(close(u.matrix(), &expected, 1e-15));
        assert!(close(u.matrix(), &series_pauli(PI, 0.0, 0.0), 1e-10));
    }

    #[test]
    fn non_finite_exponent_rejected() {
        assert!(matches!(
            pauli_exponential(f64::NAN, 0.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(pauli_exponential(0.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn control_set_properties() {
        let set = build_control_set();
        assert_eq!(set.len(), 3);
        for (_, u) in set.iter() {
            assert!(u.unitarity_error() < 1e-12);
        }
        let (u1, u2, u3) = (set.get(0).unwrap(), set.get(1).unwrap(), set.get(2).unwrap());
        // U1 |0> = e^{-iπ/30} |0>
        let out = apply(u1, &PureState::ground());
        assert_abs_diff_eq!(out.amplitudes()[0].re, (PI / 30.0).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitudes()[0].im, -(PI / 30.0).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_pure(&out, &PureState::ground()), 1.0, epsilon = 1e-15);
        // Impulses do not commute into free evolution.
        let diff = (u2.compose(u3).matrix().to_owned() - *u1.compose(u1).matrix()).max_abs();
        assert!(diff > 1e-3, "diff = {diff}");
        // Series oracle agreement for U2.
        let gen = (*Hamiltonian::spin_z().matrix()
            + Hamiltonian::spin_x().matrix().scale(Complex64::new(0.5, 0.0)))
        .scale(Complex64::new(0.0, -PULSE_DURATION));
        assert!(close(u2.matrix(), &expm_series(&gen, 20), 1e-12));
    }

    #[test]
    fn propagator_reproduces_pulses() {
        let set = build_control_set();
        let (hz, hx) = (Hamiltonian::spin_z(), Hamiltonian::spin_x());
        let u1 = build_propagator(&hz, &hx, 0.0, PULSE_DURATION).unwrap();
        let u2 = build_propagator(&hz, &hx, 0.5, PULSE_DURATION).unwrap();
        let u3 = build_propagator(&hz, &hx, -0.5, PULSE_DURATION).unwrap();
        assert!(close(u1.matrix(), set.get(0).unwrap().matrix(), 1e-12));
        assert!(close(u2.matrix(), set.get(1).unwrap().matrix(), 1e-12));
        assert!(close(u3.matrix(), set.get(2).unwrap().matrix(), 1e-12));
        let zero = build_propagator(&Hamiltonian::zero(), &Hamiltonian::zero(), 1.0, 1.0).unwrap();
        assert!(close(zero.matrix(), &Matrix2::identity(), 1e-15));
    }

    #[test]
    fn propagator_keeps_identity_phase() {
        // H = 0.3 I + 0.2 σy: the identity part shows up as e^{-i 0.3 dt}.
        let m = Matrix2::identity().scale(Complex64::new(0.3, 0.0))
            + Matrix2::pauli_y().scale(Complex64::new(0.2, 0.0));
        let h = Hamiltonian::new(m).unwrap();
        let u = build_propagator(&h, &Hamiltonian::zero(), 0.0, 0.7).unwrap();
        let oracle = expm_series(&m.scale(Complex64::new(0.0, -0.7)), 20);
        assert!(close(u.matrix(), &oracle, 1e-12));
    }

    #[test]
    fn propagator_rejects_bad_input() {
        let bad = Matrix2::new(ZERO, ONE, ZERO, ZERO);
        assert!(Hamiltonian::new(bad).is_err());
        let hz = Hamiltonian::spin_z();
        assert!(build_propagator(&hz, &hz, 0.0, 0.0).is_err());
        assert!(build_propagator(&hz, &hz, 0.0, -1.0).is_err());
    }

    #[test]
    fn bloch_examples() {
        let north = bloch_to_state(&BlochPoint::new(0.0, 0.0).unwrap());
        assert_eq!(north.amplitudes(), [ONE, ZERO]);
        let south = bloch_to_state(&BlochPoint::new(PI, 0.0).unwrap());
        assert_abs_diff_eq!(south.amplitudes()[0].norm(), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(south.amplitudes()[1].re, 1.0, epsilon = 1e-16);

        let init = bloch_to_state(&BlochPoint::new(PI / 60.0, PI / 30.0).unwrap());
        let [c1, c2] = init.amplitudes();
        assert_eq!(c1, Complex64::new((PI / 120.0).cos(), 0.0));
        let expected = Complex64::from_polar(1.0, PI / 30.0) * (PI / 120.0).sin();
        assert_abs_diff_eq!((c2 - expected).norm(), 0.0, epsilon = 1e-16);

        let p = state_to_bloch(&PureState::ground()).unwrap();
        assert_eq!((p.theta(), p.phi()), (0.0, 0.0));
    }

    #[test]
    fn target_round_trip_and_phase_invariance() {
        let target = BlochPoint::new(41.0 * PI / 60.0, 29.0 * PI / 30.0).unwrap();
        let s = bloch_to_state(&target);
        let back = state_to_bloch(&s).unwrap();
        assert_abs_diff_eq!(back.theta(), target.theta(), epsilon = 1e-10);
        assert_abs_diff_eq!(back.phi(), target.phi(), epsilon = 1e-10);
        let shifted = state_to_bloch(&s.with_global_phase(1.234)).unwrap();
        assert_abs_diff_eq!(shifted.theta(), target.theta(), epsilon = 1e-10);
        assert_abs_diff_eq!(shifted.phi(), target.phi(), epsilon = 1e-10);
    }

    #[test]
    fn bloch_rejects_bad_input() {
        assert!(BlochPoint::new(-0.1, 0.0).is_err());
        assert!(BlochPoint::new(PI + 0.1, 0.0).is_err());
        assert!(BlochPoint::new(f64::NAN, 0.0).is_err());
        assert_abs_diff_eq!(BlochPoint::new(1.0, -0.5).unwrap().phi(), TAU - 0.5, epsilon = 1e-15);
        let unnormalized = PureState {
            amplitudes: [Complex64::new(2.0, 0.0), ZERO],
        };
        assert!(matches!(state_to_bloch(&unnormalized), Err(Error::InvalidArgument(_))));
        assert!(PureState::new(ONE, ONE).is_err());
    }

    #[test]
    fn pure_fidelity_examples() {
        let (g, e) = (PureState::ground(), PureState::excited());
        assert_eq!(fidelity_pure(&g, &g), 1.0);
        assert_eq!(fidelity_pure(&g, &e), 0.0);

        let pi = BlochPoint::new(PI / 60.0, PI / 30.0).unwrap();
        let pt = BlochPoint::new(41.0 * PI / 60.0, 29.0 * PI / 30.0).unwrap();
        let f = fidelity_pure(&bloch_to_state(&pi), &bloch_to_state(&pt));
        // Independent route: angle between the Cartesian Bloch vectors.
        let (a, b) = (pi.to_cartesian(), pt.to_cartesian());
        let cos_angle: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_abs_diff_eq!(f, 0.5 * (1.0 + cos_angle), epsilon = 1e-14);
    }

    #[test]
    fn density_fidelity_examples() {
        let rho = PureState::ground().projector();
        let sigma = PureState::excited().projector();
        assert_abs_diff_eq!(fidelity_density(&rho, &rho), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_density(&rho, &sigma), 0.0, epsilon = 1e-12);
        let mixed = DensityMatrix::maximally_mixed();
        assert_abs_diff_eq!(fidelity_density(&rho, &mixed), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_density(&mixed, &mixed), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_matches_spectral_uhlmann() {
        let mix = |p: f64, s: &PureState| {
            let m = s.projector().0.scale(Complex64::new(p, 0.0))
                + DensityMatrix::maximally_mixed().0.scale(Complex64::new(1.0 - p, 0.0));
            DensityMatrix::new(m).unwrap()
        };
        for i in 0..50 {
            let t = i as f64 * 0.061;
            let a = bloch_to_state(&BlochPoint::new(t, 2.0 * t).unwrap());
            let b = bloch_to_state(&BlochPoint::new(PI - t / 2.0, 0.3 + t).unwrap());
            let (rho, sigma) = (mix(0.2 + 0.015 * i as f64, &a), mix(0.9 - 0.01 * i as f64, &b));
            assert_abs_diff_eq!(fidelity_density(&rho, &sigma), uhlmann(&rho, &sigma), epsilon = 1e-10);
            assert_abs_diff_eq!(fidelity_density(&rho, &sigma), fidelity_density(&sigma, &rho), epsilon = 1e-14);
        }
    }

    #[test]
    fn density_matrix_validation() {
        let not_psd = Matrix2::from_real([[1.5, 0.0], [0.0, -0.5]]);
        assert!(matches!(DensityMatrix::new(not_psd), Err(Error::InvalidArgument(_))));
        let bad_trace = Matrix2::from_real([[0.5, 0.0], [0.0, 0.4]]);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let not_herm = Matrix2::from_real([[0.5, 0.1], [0.0, 0.5]]);
        assert!(DensityMatrix::new(not_herm).is_err());
    }

    #[test]
    fn control_set_needs_three_members() {
        assert!(ControlSet::new(vec![("U1".into(), UnitaryOperator::identity())]).is_err());
    }
}
