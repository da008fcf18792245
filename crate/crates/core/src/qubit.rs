//! Qubit states, Bloch-sphere geometry, and generalized measurements.
//!
//! The detector model is a null-type weak measurement along an arbitrary
//! axis `n = (theta, phi)`. In the eigenbasis of `sigma_n` its two Kraus
//! operators are diagonal,
//!
//! ```text
//! M(+) = diag(1, sqrt(1 - eta)),    M(-) = diag(0, sqrt(eta)),
//! ```
//!
//! so a `+` readout leaves the `|+n>` component untouched and merely damps
//! the `|-n>` component, while a `-` readout projects onto `|-n>`. At
//! `eta = 1` the pair reduces to the projective measurement of `sigma_n`.
//! Rotating back to the lab frame is done with the unitary
//! [`rotation_matrix`], which maps `|+n>` to `|up>`.
//!
//! [`QubitState`] keeps trajectories numerically honest over thousands of
//! steps: the state vector itself stays normalized with `amp_up` real and
//! nonnegative, while the accumulated norm and phase live in a complex
//! `log_weight`, so the exact unnormalized history is always recoverable as
//! `exp(log_weight) * (amp_up, amp_down)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

pub(crate) type C64 = Complex64;

/// Amplitudes with squared norm below this are treated as annihilated.
const ANNIHILATION_FLOOR: f64 = 1e-300;

/// Below this magnitude `amp_up` no longer fixes the gauge reliably and the
/// phase convention falls back to `amp_down`.
const GAUGE_FLOOR: f64 = 1e-12;

/// Measurement axis on the Bloch sphere, in polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    /// Polar angle in `[0, pi]`.
    pub theta: f64,
    /// Azimuthal angle.
    pub phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Self {
        Direction { theta, phi }
    }

    /// Cartesian unit vector `(sin t cos p, sin t sin p, cos t)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = (math::sin(self.theta), math::cos(self.theta));
        [st * math::cos(self.phi), st * math::sin(self.phi), ct]
    }

    /// The opposite axis `-n`, i.e. `(pi - theta, phi + pi)`.
    pub fn antipode(&self) -> Self {
        Direction {
            theta: math::PI - self.theta,
            phi: self.phi + math::PI,
        }
    }
}

/// Point on the Bloch sphere traced by a trajectory.
///
/// Same coordinates as [`Direction`], but with the azimuth normalized to
/// `[0, 2pi)` and pinned to `0` at the poles, where it is undefined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochPoint {
    pub theta: f64,
    pub phi: f64,
}

impl BlochPoint {
    pub fn new(theta: f64, phi: f64) -> Self {
        let phi = if theta == 0.0 || theta == math::PI {
            0.0
        } else {
            let p = phi - math::TAU * math::floor(phi / math::TAU);
            if p >= math::TAU {
                0.0
            } else {
                p
            }
        };
        BlochPoint { theta, phi }
    }

    /// Recovers the point from a Cartesian vector (need not be normalized).
    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = math::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        let theta = math::acos(v[2] / r);
        let phi = if v[0] == 0.0 && v[1] == 0.0 {
            0.0
        } else {
            math::atan2(v[1], v[0])
        };
        BlochPoint::new(theta, phi)
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        Direction::new(self.theta, self.phi).unit_vector()
    }
}

/// Outcome of a single generalized measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Readout {
    Plus,
    Minus,
}

impl Readout {
    pub fn sign(self) -> f64 {
        match self {
            Readout::Plus => 1.0,
            Readout::Minus => -1.0,
        }
    }
}

impl core::fmt::Display for Readout {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Readout::Plus => write!(f, "+"),
            Readout::Minus => write!(f, "-"),
        }
    }
}

/// Pure qubit state with a split normalization.
///
/// The stored pair `(amp_up, amp_down)` is always normalized, with `amp_up`
/// real and nonnegative (or, when `amp_up` vanishes, `amp_down` real and
/// positive). The complex `log_weight` accumulates every norm and phase
/// factor stripped during normalization, so that
///
/// ```text
/// exp(log_weight) * (amp_up, amp_down)
/// ```
///
/// is exactly the unnormalized vector produced by the sequence of operators
/// applied so far. Magnitudes like `exp(-c N)` that would underflow a plain
/// amplitude stay finite in the log.
#[derive(Clone, Debug)]
pub struct QubitState {
    amp_up: C64,
    amp_down: C64,
    log_weight: C64,
}

impl QubitState {
    /// Builds a state from raw amplitudes, normalizing into the canonical
    /// gauge and recording the stripped factor in `log_weight`.
    pub fn from_amplitudes(amp_up: C64, amp_down: C64) -> Result<Self> {
        let mut state = QubitState {
            amp_up,
            amp_down,
            log_weight: C64::new(0.0, 0.0),
        };
        state.renormalize()?;
        Ok(state)
    }

    /// `|up>`, the north pole.
    pub fn up() -> Self {
        QubitState {
            amp_up: C64::new(1.0, 0.0),
            amp_down: C64::new(0.0, 0.0),
            log_weight: C64::new(0.0, 0.0),
        }
    }

    /// `|down>`, the south pole.
    pub fn down() -> Self {
        QubitState {
            amp_up: C64::new(0.0, 0.0),
            amp_down: C64::new(1.0, 0.0),
            log_weight: C64::new(0.0, 0.0),
        }
    }

    /// `|+n>`, the eigenstate of `sigma_n` with eigenvalue `+1`:
    /// `cos(t/2)|up> + e^{i p} sin(t/2)|down>`.
    pub fn plus_eigenstate(n: Direction) -> Self {
        let (c, s) = (math::cos(n.theta / 2.0), math::sin(n.theta / 2.0));
        let phase = C64::new(0.0, n.phi).exp();
        QubitState::from_amplitudes(C64::new(c, 0.0), phase * s)
            .expect("eigenstate amplitudes are normalized")
    }

    /// `|-n>`, the eigenstate of `sigma_n` with eigenvalue `-1`:
    /// `sin(t/2)|up> - e^{i p} cos(t/2)|down>`.
    pub fn minus_eigenstate(n: Direction) -> Self {
        let (c, s) = (math::cos(n.theta / 2.0), math::sin(n.theta / 2.0));
        let phase = C64::new(0.0, n.phi).exp();
        QubitState::from_amplitudes(C64::new(s, 0.0), -phase * c)
            .expect("eigenstate amplitudes are normalized")
    }

    /// The pure state sitting at a Bloch point.
    pub fn from_bloch(p: &BlochPoint) -> Self {
        QubitState::plus_eigenstate(Direction::new(p.theta, p.phi))
    }

    pub fn amp_up(&self) -> C64 {
        self.amp_up
    }

    pub fn amp_down(&self) -> C64 {
        self.amp_down
    }

    /// Accumulated `log` of the stripped normalization factor.
    pub fn log_weight(&self) -> C64 {
        self.log_weight
    }

    /// The stripped factor itself; underflows to zero only below
    /// `exp(-708)`.
    pub fn weight(&self) -> C64 {
        self.log_weight.exp()
    }

    /// Normalized amplitudes as a plain vector.
    pub fn as_vector(&self) -> [C64; 2] {
        [self.amp_up, self.amp_down]
    }

    /// `<self|other>` between the normalized parts (weights excluded).
    pub fn overlap(&self, other: &QubitState) -> C64 {
        self.amp_up.conj() * other.amp_up + self.amp_down.conj() * other.amp_down
    }

    /// Where the state sits on the Bloch sphere.
    pub fn bloch_coords(&self) -> BlochPoint {
        let (ru, rd) = (self.amp_up.norm(), self.amp_down.norm());
        let theta = 2.0 * math::atan2(rd, ru);
        if ru == 0.0 || rd == 0.0 {
            BlochPoint { theta, phi: 0.0 }
        } else {
            BlochPoint::new(theta, self.amp_down.arg() - self.amp_up.arg())
        }
    }

    /// Applies a bare operator, renormalizing into the canonical gauge and
    /// pushing the stripped factor into `log_weight`. Returns the squared
    /// norm of the raw image, i.e. the Born probability when `op` is a Kraus
    /// operator acting on a normalized state.
    pub fn apply(&mut self, op: &Operator2) -> Result<f64> {
        let [a, b] = op.apply(&[self.amp_up, self.amp_down]);
        self.amp_up = a;
        self.amp_down = b;
        self.renormalize()
    }

    fn renormalize(&mut self) -> Result<f64> {
        let norm_sq = self.amp_up.norm_sqr() + self.amp_down.norm_sqr();
        if norm_sq < ANNIHILATION_FLOOR {
            return Err(Error::ImpossibleReadout { step: 0 });
        }
        let norm = math::sqrt(norm_sq);
        let gauge = if self.amp_up.norm() > GAUGE_FLOOR * norm {
            self.amp_up.arg()
        } else {
            self.amp_down.arg()
        };
        let undo = C64::new(0.0, -gauge).exp();
        self.amp_up = self.amp_up * undo / norm;
        self.amp_down = self.amp_down * undo / norm;
        // The gauge rotation can leave crumbs like 1e-17i on the pivot
        // amplitude; its imaginary part is zero by construction.
        if self.amp_up.norm() > GAUGE_FLOOR {
            self.amp_up = C64::new(self.amp_up.norm(), 0.0);
        } else {
            self.amp_down = C64::new(self.amp_down.norm(), 0.0);
        }
        self.log_weight += C64::new(math::ln(norm), gauge);
        Ok(norm_sq)
    }
}

/// Complex 2x2 operator, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator2 {
    pub m: [[C64; 2]; 2],
}

impl Operator2 {
    pub fn new(m: [[C64; 2]; 2]) -> Self {
        Operator2 { m }
    }

    pub fn identity() -> Self {
        Operator2::from_diag(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn from_diag(a: C64, b: C64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Operator2 {
            m: [[a, zero], [zero, b]],
        }
    }

    pub fn adjoint(&self) -> Self {
        Operator2 {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    pub fn conjugate(&self) -> Self {
        Operator2 {
            m: [
                [self.m[0][0].conj(), self.m[0][1].conj()],
                [self.m[1][0].conj(), self.m[1][1].conj()],
            ],
        }
    }

    pub fn determinant(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, v: &[C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn scaled(&self, z: C64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e *= z;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Operator2) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let d = (self.m[i][j] - other.m[i][j]).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

impl core::ops::Mul for Operator2 {
    type Output = Operator2;

    fn mul(self, rhs: Operator2) -> Operator2 {
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        Operator2 { m }
    }
}

impl core::ops::Add for Operator2 {
    type Output = Operator2;

    fn add(self, rhs: Operator2) -> Operator2 {
        let mut m = self.m;
        for (row, rhs_row) in m.iter_mut().zip(&rhs.m) {
            for (cell, r) in row.iter_mut().zip(rhs_row) {
                *cell += *r;
            }
        }
        Operator2 { m }
    }
}

/// Complex 4x4 operator on a pair of two-level systems, row-major, with the
/// first tensor factor as the slow index: `(AxB)[2i+k][2j+l] = A[i][j] B[k][l]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator4 {
    pub m: [[C64; 4]; 4],
}

impl Operator4 {
    pub fn identity() -> Self {
        let zero = C64::new(0.0, 0.0);
        let mut m = [[zero; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = C64::new(1.0, 0.0);
        }
        Operator4 { m }
    }

    /// Kronecker product `a (x) b`.
    pub fn kron(a: &Operator2, b: &Operator2) -> Self {
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        m[2 * i + k][2 * j + l] = a.m[i][j] * b.m[k][l];
                    }
                }
            }
        }
        Operator4 { m }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.m[j][i].conj();
            }
        }
        Operator4 { m }
    }

    pub fn apply(&self, v: &[C64; 4]) -> [C64; 4] {
        let mut out = [C64::new(0.0, 0.0); 4];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, x) in v.iter().enumerate() {
                *o += self.m[i][j] * x;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Operator4) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let d = (self.m[i][j] - other.m[i][j]).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

impl core::ops::Mul for Operator4 {
    type Output = Operator4;

    fn mul(self, rhs: Operator4) -> Operator4 {
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                for k in 0..4 {
                    *e += self.m[i][k] * rhs.m[k][j];
                }
            }
        }
        Operator4 { m }
    }
}

impl core::ops::Add for Operator4 {
    type Output = Operator4;

    fn add(self, rhs: Operator4) -> Operator4 {
        let mut m = self.m;
        for (row, rhs_row) in m.iter_mut().zip(&rhs.m) {
            for (cell, r) in row.iter_mut().zip(rhs_row) {
                *cell += *r;
            }
        }
        Operator4 { m }
    }
}

/// Unitary carrying the eigenbasis of `sigma_n` to the computational basis:
///
/// ```text
/// R(n) = [ cos(t/2)           e^{-i p} sin(t/2) ]
///        [ sin(t/2)          -e^{-i p} cos(t/2) ]
/// ```
///
/// so that `R(n)|+n> = |up>` and `R(n)|-n> = |down>`, both exactly, with no
/// stray phase on either image. Unitary, but not Hermitian for `phi != 0`.
pub fn rotation_matrix(n: Direction) -> Operator2 {
    let (c, s) = (math::cos(n.theta / 2.0), math::sin(n.theta / 2.0));
    let phase = C64::new(0.0, -n.phi).exp();
    Operator2::new([
        [C64::new(c, 0.0), phase * s],
        [C64::new(s, 0.0), -phase * c],
    ])
}

/// Kraus pair of the null-type measurement along the z axis.
pub fn kraus_axis(eta: f64, readout: Readout) -> Result<Operator2> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::StrengthOutOfRange { eta });
    }
    let op = match readout {
        Readout::Plus => {
            Operator2::from_diag(C64::new(1.0, 0.0), C64::new(math::sqrt(1.0 - eta), 0.0))
        }
        Readout::Minus => Operator2::from_diag(C64::new(0.0, 0.0), C64::new(math::sqrt(eta), 0.0)),
    };
    Ok(op)
}

/// Kraus operator of the measurement along an arbitrary axis,
/// `M(n, r) = R(n)^dag M(z, r) R(n)`. Hermitian and positive semidefinite,
/// with eigenvectors `|+n>`, `|-n>`.
pub fn kraus(n: Direction, eta: f64, readout: Readout) -> Result<Operator2> {
    let r = rotation_matrix(n);
    Ok(r.adjoint() * kraus_axis(eta, readout)? * r)
}

/// Applies one generalized measurement with a known readout. Returns the
/// collapsed (renormalized) state and the Born probability of that readout.
pub fn apply_measurement(
    state: &QubitState,
    n: Direction,
    eta: f64,
    readout: Readout,
) -> Result<(QubitState, f64)> {
    let op = kraus(n, eta, readout)?;
    let mut next = state.clone();
    let probability = next.apply(&op)?;
    Ok((next, probability))
}

/// Point a fraction `s` of the way along the great-circle arc from `a` to
/// `b`. Antipodal endpoints are rejected: every great circle through them is
/// equally short.
pub fn geodesic_interpolate(a: &BlochPoint, b: &BlochPoint, s: f64) -> Result<BlochPoint> {
    let u = a.unit_vector();
    let v = b.unit_vector();
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let cross_norm = math::sqrt(cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]);
    let arc = math::atan2(cross_norm, dot);
    if arc > math::PI - 1e-9 {
        return Err(Error::AntipodalPoints);
    }
    if arc < 1e-15 {
        return Ok(*a);
    }
    let (wa, wb) = (
        math::sin((1.0 - s) * arc) / math::sin(arc),
        math::sin(s * arc) / math::sin(arc),
    );
    Ok(BlochPoint::from_vector([
        wa * u[0] + wb * v[0],
        wa * u[1] + wb * v[1],
        wa * u[2] + wb * v[2],
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn approx(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn rotation_is_unitary_and_involutive_on_eigenstates() {
        let n = Direction::new(1.1, 2.3);
        let r = rotation_matrix(n);
        let id = r.adjoint() * r;
        assert!(id.max_abs_diff(&Operator2::identity()) < 1e-15);

        let plus = QubitState::plus_eigenstate(n);
        let up = r.apply(&plus.as_vector());
        assert!(approx(up[0], c(1.0, 0.0), 1e-15));
        assert!(approx(up[1], c(0.0, 0.0), 1e-15));

        let minus = QubitState::minus_eigenstate(n);
        let down = r.apply(&minus.as_vector());
        assert!(approx(down[0], c(0.0, 0.0), 1e-15));
        assert!(approx(down[1], c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn projective_kraus_along_x() {
        let n = Direction::new(PI / 2.0, 0.0);
        let m = kraus(n, 1.0, Readout::Minus).unwrap();
        let expected = Operator2::new([
            [c(0.5, 0.0), c(-0.5, 0.0)],
            [c(-0.5, 0.0), c(0.5, 0.0)],
        ]);
        assert!(m.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn kraus_pair_resolves_identity() {
        for &(theta, phi, eta) in &[
            (0.0, 0.0, 0.3),
            (0.7, 1.9, 0.001),
            (PI / 2.0, 4.0, 0.5),
            (2.8, 5.9, 1.0),
        ] {
            let n = Direction::new(theta, phi);
            let mp = kraus(n, eta, Readout::Plus).unwrap();
            let mm = kraus(n, eta, Readout::Minus).unwrap();
            let sum = mp.adjoint() * mp + mm.adjoint() * mm;
            assert!(
                sum.max_abs_diff(&Operator2::identity()) < 1e-14,
                "POVM completeness failed at theta={theta}, phi={phi}, eta={eta}"
            );
            // Null-type operators are Hermitian.
            assert!(mp.max_abs_diff(&mp.adjoint()) < 1e-14);
            assert!(mm.max_abs_diff(&mm.adjoint()) < 1e-14);
        }
    }

    #[test]
    fn kraus_eigenvectors_are_axis_eigenstates() {
        let n = Direction::new(0.9, 0.4);
        let eta = 0.37;
        let mp = kraus(n, eta, Readout::Plus).unwrap();
        let plus = QubitState::plus_eigenstate(n);
        let minus = QubitState::minus_eigenstate(n);

        let image = mp.apply(&plus.as_vector());
        assert!(approx(image[0], plus.amp_up(), 1e-14));
        assert!(approx(image[1], plus.amp_down(), 1e-14));

        let image = mp.apply(&minus.as_vector());
        let damp = math::sqrt(1.0 - eta);
        assert!(approx(image[0], minus.amp_up() * damp, 1e-14));
        assert!(approx(image[1], minus.amp_down() * damp, 1e-14));
    }

    #[test]
    fn strength_outside_unit_interval_is_rejected() {
        assert!(matches!(
            kraus_axis(1.5, Readout::Plus),
            Err(Error::StrengthOutOfRange { .. })
        ));
        assert!(matches!(
            kraus_axis(-0.1, Readout::Minus),
            Err(Error::StrengthOutOfRange { .. })
        ));
    }

    #[test]
    fn readout_probabilities_sum_to_one() {
        let state = QubitState::from_amplitudes(c(0.3, 0.4), c(-0.5, 0.7)).unwrap();
        let n = Direction::new(2.2, 0.8);
        let eta = 0.42;
        let (_, p_plus) = apply_measurement(&state, n, eta, Readout::Plus).unwrap();
        let (_, p_minus) = apply_measurement(&state, n, eta, Readout::Minus).unwrap();
        assert!((p_plus + p_minus - 1.0).abs() < 1e-14);
    }

    #[test]
    fn impossible_readout_is_an_error() {
        let up = QubitState::up();
        let z = Direction::new(0.0, 0.0);
        assert!(matches!(
            apply_measurement(&up, z, 0.8, Readout::Minus),
            Err(Error::ImpossibleReadout { .. })
        ));
    }

    #[test]
    fn log_weight_recovers_unnormalized_vector() {
        let mut state = QubitState::from_amplitudes(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let mut exact = [c(0.6, 0.0), c(0.0, 0.8)];
        exact = [exact[0] / 1.0, exact[1] / 1.0];
        let n = Direction::new(1.3, 2.1);
        for step in 0..40 {
            let eta = 0.1 + 0.02 * (step % 7) as f64;
            let op = kraus(n, eta, Readout::Plus).unwrap();
            exact = op.apply(&exact);
            state.apply(&op).unwrap();
        }
        let w = state.weight();
        assert!(approx(w * state.amp_up(), exact[0], 1e-12));
        assert!(approx(w * state.amp_down(), exact[1], 1e-12));
        // Canonical gauge: amp_up stays real and nonnegative.
        assert_eq!(state.amp_up().im, 0.0);
        assert!(state.amp_up().re >= 0.0);
    }

    #[test]
    fn bloch_round_trip() {
        for &(theta, phi) in &[(0.0, 0.0), (0.4, 5.1), (PI / 2.0, 3.3), (2.9, 0.02), (PI, 0.0)] {
            let p = BlochPoint::new(theta, phi);
            let q = QubitState::from_bloch(&p).bloch_coords();
            assert!((p.theta - q.theta).abs() < 1e-12);
            let dphi = math::wrap_angle(p.phi - q.phi);
            assert!(dphi.abs() < 1e-12, "phi mismatch at ({theta}, {phi})");
        }
    }

    #[test]
    fn azimuth_pinned_at_poles() {
        assert_eq!(BlochPoint::new(0.0, 1.7).phi, 0.0);
        assert_eq!(BlochPoint::new(PI, -2.0).phi, 0.0);
        assert_eq!(QubitState::up().bloch_coords().phi, 0.0);
    }

    #[test]
    fn geodesic_midpoint_of_quarter_arc() {
        let pole = BlochPoint::new(0.0, 0.0);
        let equator = BlochPoint::new(PI / 2.0, 0.0);
        let mid = geodesic_interpolate(&pole, &equator, 0.5).unwrap();
        assert!((mid.theta - PI / 4.0).abs() < 1e-12);
        assert!(mid.phi.abs() < 1e-12);
    }

    #[test]
    fn geodesic_endpoints_are_fixed() {
        let a = BlochPoint::new(1.0, 0.3);
        let b = BlochPoint::new(2.0, 4.4);
        let s0 = geodesic_interpolate(&a, &b, 0.0).unwrap();
        let s1 = geodesic_interpolate(&a, &b, 1.0).unwrap();
        assert!((s0.theta - a.theta).abs() < 1e-12 && math::wrap_angle(s0.phi - a.phi).abs() < 1e-12);
        assert!((s1.theta - b.theta).abs() < 1e-12 && math::wrap_angle(s1.phi - b.phi).abs() < 1e-12);
    }

    #[test]
    fn antipodal_geodesic_is_rejected() {
        let a = BlochPoint::new(0.7, 1.0);
        let b = BlochPoint::new(PI - 0.7, 1.0 + PI);
        assert!(matches!(
            geodesic_interpolate(&a, &b, 0.5),
            Err(Error::AntipodalPoints)
        ));
    }

    #[test]
    fn kron_matches_blockwise_definition() {
        let a = Operator2::new([[c(1.0, 1.0), c(0.0, 2.0)], [c(3.0, 0.0), c(0.5, -1.0)]]);
        let b = Operator2::new([[c(0.0, 1.0), c(2.0, 0.0)], [c(1.0, -1.0), c(0.0, 0.0)]]);
        let k = Operator4::kron(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert!(approx(k.m[2 * i + p][2 * j + q], a.m[i][j] * b.m[p][q], 1e-15));
                    }
                }
            }
        }
        // Mixed-product rule (A x B)(C x D) = AC x BD.
        let c2 = Operator2::new([[c(0.2, 0.0), c(1.0, 1.0)], [c(0.0, -2.0), c(1.0, 0.0)]]);
        let d2 = Operator2::new([[c(1.0, 0.0), c(0.0, 0.5)], [c(2.0, 2.0), c(-1.0, 0.0)]]);
        let lhs = k * Operator4::kron(&c2, &d2);
        let rhs = Operator4::kron(&(a * c2), &(b * d2));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}
