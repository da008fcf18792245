//! Pancharatnam phases of measurement-induced trajectories.
//!
//! A protocol is a ring of generalized measurements: the qubit starts in
//! `|+n_0>` with `n_0 = (theta, 0)`, is measured weakly along the axes
//! `n_k = (theta, 2 pi k / N)`, and is finally measured projectively along
//! `n_N = n_0`, keeping only runs with a final `+`. The surviving amplitude
//!
//! ```text
//! <psi_0| M_{N-1} ... M_1 |psi_0> = sqrt(P) e^{i chi}
//! ```
//!
//! defines the geometric phase `chi` of the readout sequence and the
//! probability `P` of observing it. Because every Kraus operator here is
//! Hermitian and positive semidefinite, each stepwise overlap
//! `<psi_k | psi_{k-1}>` is real and positive, so `chi` reduces to the
//! Pancharatnam phase of the closing overlap — the phase is geometric, fixed
//! by the trajectory alone.
//!
//! For the uniform ring with total strength `c` (per-step `eta = 4c/N`) the
//! amplitude of the all-`+` record has a quasicontinuous limit
//!
//! ```text
//! sqrt(P) e^{i chi} = -e^{-c} [ cosh(tau) + z sinh(tau)/tau ],
//! z = c + i pi cos(theta),    tau = sqrt(z^2 - pi^2 sin^2(theta)),
//! ```
//!
//! implemented in [`postselected_closed_form`]; the finite-`N` product in
//! [`sequence_amplitude`] converges to it at rate `O(1/N)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::qubit::{
    apply_measurement, BlochPoint, Direction, QubitState, Readout, C64,
};

/// Below this sequence probability the numerical phase no longer means much.
pub const PHASE_RELIABLE_FLOOR: f64 = 1e-12;

/// Overlap magnitude below which consecutive chain states count as
/// orthogonal.
const ORTHOGONALITY_FLOOR: f64 = 1e-12;

/// Principal argument in `[-pi, pi)`: the usual `atan2` branch with `+pi`
/// folded to `-pi`, so that real-negative amplitudes always report the same
/// phase.
pub(crate) fn principal_phase(z: C64) -> f64 {
    let a = math::atan2(z.im, z.re);
    if a >= math::PI {
        -math::PI
    } else {
        a
    }
}

/// A complex amplitude together with its polar readings.
#[derive(Clone, Copy, Debug)]
pub struct PhaseAmplitude {
    /// The amplitude itself; may underflow to zero for deeply damped
    /// sequences even when `probability` is still representable.
    pub amplitude: C64,
    /// `|amplitude|^2`.
    pub probability: f64,
    /// Principal phase in `[-pi, pi)`.
    pub phase: f64,
    /// False when `probability` is below [`PHASE_RELIABLE_FLOOR`]; the phase
    /// value is then numerical noise.
    pub phase_reliable: bool,
}

impl PhaseAmplitude {
    pub fn from_amplitude(z: C64) -> Self {
        let probability = z.norm_sqr();
        PhaseAmplitude {
            amplitude: z,
            probability,
            phase: if probability == 0.0 {
                0.0
            } else {
                principal_phase(z)
            },
            phase_reliable: probability >= PHASE_RELIABLE_FLOOR,
        }
    }

    /// Builds from a complex logarithm `log(z)`, keeping the probability
    /// finite in the log domain even when `exp` would underflow.
    pub fn from_log_amplitude(lw: C64) -> Self {
        let phase = math::wrap_angle(lw.im);
        let amplitude = C64::new(lw.re, phase).exp();
        let probability = math::exp(2.0 * lw.re);
        PhaseAmplitude {
            amplitude,
            probability,
            phase,
            phase_reliable: probability >= PHASE_RELIABLE_FLOOR,
        }
    }

    /// An exactly vanished amplitude (annihilated sequence).
    pub fn zero() -> Self {
        PhaseAmplitude {
            amplitude: C64::new(0.0, 0.0),
            probability: 0.0,
            phase: 0.0,
            phase_reliable: false,
        }
    }
}

/// One measurement of the protocol: an axis and a strength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolStep {
    pub axis: Direction,
    pub strength: f64,
}

/// A closed ring of generalized measurements, optionally postselected on a
/// final projective `+`.
///
/// Invariants enforced at construction: at least three steps, every strength
/// in `[0, 1]`, and — when postselected — a final step that is projective
/// (`eta = 1`) along the initial axis, so that the final `+` readout closes
/// the trajectory at the initial state.
#[derive(Clone, Debug)]
pub struct MeasurementProtocol {
    initial: Direction,
    steps: Vec<ProtocolStep>,
    final_postselect: bool,
}

impl MeasurementProtocol {
    /// The uniform ring at polar angle `theta`: `n - 1` measurements of
    /// strength `eta = 4c/n` at azimuths `2 pi k / n`, closed by a projective
    /// measurement along the initial axis `(theta, 0)`.
    pub fn parallel(c: f64, theta: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewSteps { steps: n });
        }
        let eta = 4.0 * c / n as f64;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::StrengthOutOfRange { eta });
        }
        let initial = Direction::new(theta, 0.0);
        let mut steps = Vec::with_capacity(n);
        for k in 1..n {
            let axis = Direction::new(theta, math::TAU * k as f64 / n as f64);
            steps.push(ProtocolStep {
                axis,
                strength: eta,
            });
        }
        steps.push(ProtocolStep {
            axis: initial,
            strength: 1.0,
        });
        Ok(MeasurementProtocol {
            initial,
            steps,
            final_postselect: true,
        })
    }

    /// An arbitrary ring. `initial` fixes the reference state `|+initial>`;
    /// when `final_postselect` is set the last step must be projective along
    /// `initial`.
    pub fn from_steps(
        initial: Direction,
        steps: Vec<ProtocolStep>,
        final_postselect: bool,
    ) -> Result<Self> {
        if steps.len() < 3 {
            return Err(Error::TooFewSteps { steps: steps.len() });
        }
        for step in &steps {
            if !(0.0..=1.0).contains(&step.strength) {
                return Err(Error::StrengthOutOfRange {
                    eta: step.strength,
                });
            }
        }
        if final_postselect {
            let last = steps.last().expect("length checked above");
            let aligned = (last.axis.theta - initial.theta).abs() < 1e-12
                && math::wrap_angle(last.axis.phi - initial.phi).abs() < 1e-12;
            if last.strength != 1.0 || !aligned {
                return Err(Error::FinalReadoutNotPlus);
            }
        }
        Ok(MeasurementProtocol {
            initial,
            steps,
            final_postselect,
        })
    }

    /// Total number of measurements, the final one included.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[ProtocolStep] {
        &self.steps
    }

    /// The measurements before the closing one.
    pub fn weak_steps(&self) -> &[ProtocolStep] {
        &self.steps[..self.steps.len() - 1]
    }

    pub fn initial_direction(&self) -> Direction {
        self.initial
    }

    /// The reference state `|+n_0>` the ring starts from and closes onto.
    pub fn initial_state(&self) -> QubitState {
        QubitState::plus_eigenstate(self.initial)
    }

    pub fn final_postselect(&self) -> bool {
        self.final_postselect
    }
}

/// Pancharatnam phase and amplitude of a chain of states:
/// the argument of `<s_{n-1}|s_{n-2}> ... <s_1|s_0>`, times the closing
/// overlap `<s_0|s_{n-1}>` when `closed` is set.
///
/// Consecutive orthogonal states make the phase undefined and are an error.
pub fn pancharatnam_phase(states: &[QubitState], closed: bool) -> Result<PhaseAmplitude> {
    if states.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut lw = C64::new(0.0, 0.0);
    for (k, pair) in states.windows(2).enumerate() {
        let o = pair[1].overlap(&pair[0]);
        if o.norm() < ORTHOGONALITY_FLOOR {
            return Err(Error::OrthogonalStates { index: k });
        }
        lw += C64::new(math::ln(o.norm()), principal_phase(o));
    }
    if closed {
        let o = states[0].overlap(&states[states.len() - 1]);
        if o.norm() < ORTHOGONALITY_FLOOR {
            return Err(Error::OrthogonalStates {
                index: states.len() - 1,
            });
        }
        lw += C64::new(math::ln(o.norm()), principal_phase(o));
    }
    Ok(PhaseAmplitude::from_log_amplitude(lw))
}

/// Exact amplitude `<psi_0| M_N ... M_1 |psi_0>` of one readout record.
///
/// `readouts` must give one readout per protocol step; a postselected
/// protocol only accepts a final `+`. Annihilated sequences (a readout of
/// probability zero) are an error carrying the offending step index.
pub fn sequence_amplitude(
    protocol: &MeasurementProtocol,
    readouts: &[Readout],
) -> Result<PhaseAmplitude> {
    if readouts.len() != protocol.len() {
        return Err(Error::ReadoutCountMismatch {
            expected: protocol.len(),
            got: readouts.len(),
        });
    }
    if protocol.final_postselect() && *readouts.last().expect("non-empty") == Readout::Minus {
        return Err(Error::FinalReadoutNotPlus);
    }
    let reference = protocol.initial_state();
    let mut state = reference.clone();
    for (k, (step, &r)) in protocol.steps().iter().zip(readouts).enumerate() {
        state = apply_measurement(&state, step.axis, step.strength, r)
            .map_err(|e| match e {
                Error::ImpossibleReadout { .. } => Error::ImpossibleReadout { step: k },
                other => other,
            })?
            .0;
    }
    let closing = reference.overlap(&state);
    if closing.norm() == 0.0 {
        return Ok(PhaseAmplitude::zero());
    }
    let lw = state.log_weight() + C64::new(math::ln(closing.norm()), principal_phase(closing));
    Ok(PhaseAmplitude::from_log_amplitude(lw))
}

/// Quasicontinuous (`N -> infinity`) amplitude of the all-`+` postselected
/// record of the uniform ring:
///
/// ```text
/// -e^{-c} [ cosh(tau) + z sinh(tau)/tau ],   z = c + i pi cos(theta),
/// tau^2 = z^2 - pi^2 sin^2(theta).
/// ```
///
/// Both `cosh(tau)` and `sinh(tau)/tau` are even in `tau`, so the square-root
/// branch is immaterial; near `tau = 0` (the point `c = pi`, `theta = pi/2`)
/// the Taylor series in `tau^2` takes over. Large `c` is evaluated in a
/// scaled form that never overflows.
pub fn postselected_closed_form(c: f64, theta: f64) -> PhaseAmplitude {
    let z = C64::new(c, math::PI * math::cos(theta));
    let s = math::PI * math::sin(theta);
    let tau_sq = z * z - C64::new(s * s, 0.0);

    if tau_sq.norm() < 1e-8 {
        // cosh(tau) = sum tau^{2k} / (2k)!, sinh(tau)/tau = sum tau^{2k} / (2k+1)!
        let mut ch = C64::new(0.0, 0.0);
        let mut shc = C64::new(0.0, 0.0);
        let mut pow = C64::new(1.0, 0.0);
        let mut fact = 1.0f64;
        for k in 0..6u32 {
            let two_k = 2 * k as u64;
            if two_k > 0 {
                fact *= (two_k - 1) as f64 * two_k as f64;
            }
            ch += pow / fact;
            shc += pow / (fact * (two_k + 1) as f64);
            pow *= tau_sq;
        }
        let amp = -math::exp(-c) * (ch + z * shc);
        return PhaseAmplitude::from_amplitude(amp);
    }

    let tau = tau_sq.sqrt();
    if tau.re > 300.0 {
        // cosh + z sinh/tau = e^{tau} [ (1 + z/tau)/2 + e^{-2 tau} (1 - z/tau)/2 ]
        let half_plus = (C64::new(1.0, 0.0) + z / tau) / 2.0;
        let half_minus = (C64::new(1.0, 0.0) - z / tau) / 2.0;
        let amp = -(tau - c).exp() * (half_plus + (-2.0 * tau).exp() * half_minus);
        return PhaseAmplitude::from_amplitude(amp);
    }

    let amp = -math::exp(-c) * (tau.cosh() + z * tau.sinh() / tau);
    PhaseAmplitude::from_amplitude(amp)
}

/// Oriented solid angle enclosed by the geodesic polygon through `vertices`,
/// in `(-2 pi, 2 pi]`.
///
/// Computed from the turning angles: at each vertex the signed exterior
/// angle `eps` between the arriving and departing great-circle tangents is
/// accumulated, and the enclosed angle is `2 pi - sum(eps)`, folded by
/// `4 pi` into the oriented range. Counterclockwise circuits (seen from
/// outside the sphere) are positive; a full great circle gives `2 pi`; a
/// degenerate back-and-forth path gives `0`.
///
/// Consecutive duplicate vertices are ignored; consecutive antipodal
/// vertices are an error (no unique edge).
pub fn solid_angle(vertices: &[BlochPoint]) -> Result<f64> {
    let mut pts: Vec<[f64; 3]> = Vec::with_capacity(vertices.len());
    for v in vertices {
        let u = v.unit_vector();
        if let Some(prev) = pts.last() {
            if dist_sq(prev, &u) < 1e-24 {
                continue;
            }
        }
        pts.push(u);
    }
    while pts.len() > 1 && dist_sq(&pts[0], pts.last().expect("non-empty")) < 1e-24 {
        pts.pop();
    }
    if pts.len() < 2 {
        return Ok(0.0);
    }

    let n = pts.len();
    let mut turn_sum = 0.0;
    for k in 0..n {
        let prev = &pts[(k + n - 1) % n];
        let here = &pts[k];
        let next = &pts[(k + 1) % n];
        let t_in = edge_tangent(prev, here)?;
        let t_out = departing_tangent(here, next)?;
        let cross = [
            t_in[1] * t_out[2] - t_in[2] * t_out[1],
            t_in[2] * t_out[0] - t_in[0] * t_out[2],
            t_in[0] * t_out[1] - t_in[1] * t_out[0],
        ];
        let sin_turn = cross[0] * here[0] + cross[1] * here[1] + cross[2] * here[2];
        let cos_turn = t_in[0] * t_out[0] + t_in[1] * t_out[1] + t_in[2] * t_out[2];
        turn_sum += math::atan2(sin_turn, cos_turn);
    }

    let mut omega = math::TAU - turn_sum;
    while omega > math::TAU {
        omega -= 2.0 * math::TAU;
    }
    while omega <= -math::TAU {
        omega += 2.0 * math::TAU;
    }
    Ok(omega)
}

fn dist_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Unit tangent at `b` of the geodesic arriving from `a`.
fn edge_tangent(a: &[f64; 3], b: &[f64; 3]) -> Result<[f64; 3]> {
    let normal = unit_cross(a, b)?;
    Ok([
        normal[1] * b[2] - normal[2] * b[1],
        normal[2] * b[0] - normal[0] * b[2],
        normal[0] * b[1] - normal[1] * b[0],
    ])
}

/// Unit tangent at `a` of the geodesic departing toward `b`.
fn departing_tangent(a: &[f64; 3], b: &[f64; 3]) -> Result<[f64; 3]> {
    let normal = unit_cross(a, b)?;
    Ok([
        normal[1] * a[2] - normal[2] * a[1],
        normal[2] * a[0] - normal[0] * a[2],
        normal[0] * a[1] - normal[1] * a[0],
    ])
}

fn unit_cross(a: &[f64; 3], b: &[f64; 3]) -> Result<[f64; 3]> {
    let c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let norm = math::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    if norm < 1e-12 {
        return Err(Error::AntipodalPoints);
    }
    Ok([c[0] / norm, c[1] / norm, c[2] / norm])
}
