//! Mach-Zehnder readout of the measurement-induced phase.
//!
//! The weak measurements are modeled explicitly: each detector is a second
//! qubit coupled to the system by a partial-swap entangler, and reading the
//! detector in its computational basis realizes exactly the null-type Kraus
//! pair used everywhere else in the crate ([`entangling_unitary`],
//! [`kraus_from_model`]).
//!
//! To turn the phase into a signal, the system rides one arm of an
//! interferometer while the measurement sequence acts on it, and a dialable
//! offset `gamma` shifts that arm. Three detection schemes are covered:
//! postselecting a single readout record ([`postselected_intensities`]),
//! projecting both arms on a common polarization before detection
//! ([`polarizer_intensities`]), and keeping every record
//! ([`averaged_intensities`]). The last one only interferes if the other
//! arm picks up the *conjugate* amplitude of each record; that arm runs the
//! same detectors coupled along the opposite axes, entered and left through
//! a half-turn flip of the reference axis, and [`lower_arm_amplitude`]
//! reproduces it. Averaging then yields fringes in the doubled phase
//! `2 chi_bar` with contrast `e^{-alpha}`.

use alloc::vec::Vec;

use crate::ensemble::{doubled_contraction, enumerate_all};
use crate::error::{Error, Result};
use crate::math;
use crate::phase::{
    postselected_closed_form, sequence_amplitude, MeasurementProtocol, PhaseAmplitude,
    ProtocolStep,
};
use crate::qubit::{Direction, Operator2, Operator4, QubitState, Readout, C64};

/// Longest protocol whose arm symmetry is re-verified record by record
/// inside [`averaged_intensities`].
const ARM_CHECK_MAX_STEPS: usize = 10;

/// Per-record tolerance for the arm-symmetry verification.
const ARM_TOLERANCE: f64 = 1e-9;

/// A detector qubit attached to the system.
///
/// The coupling angle `g` sets the measurement strength `eta = sin^2 g`:
/// `g = 0` leaves the system untouched, `g = pi/2` is projective.
#[derive(Clone, Copy, Debug)]
pub struct DetectorCoupling {
    pub direction: Direction,
    pub g: f64,
}

impl DetectorCoupling {
    pub fn new(direction: Direction, g: f64) -> Result<Self> {
        if !(0.0..=math::PI / 2.0).contains(&g) {
            return Err(Error::CouplingOutOfRange { g });
        }
        Ok(DetectorCoupling { direction, g })
    }

    /// The coupling realizing a given measurement strength.
    pub fn from_strength(direction: Direction, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::StrengthOutOfRange { eta });
        }
        DetectorCoupling::new(direction, math::asin(math::sqrt(eta)))
    }

    pub fn eta(&self) -> f64 {
        let s = math::sin(self.g);
        s * s
    }
}

/// Intensities at the two output ports for one offset setting.
#[derive(Clone, Copy, Debug)]
pub struct IntensityPair {
    pub i1: f64,
    pub i2: f64,
    pub gamma: f64,
    pub i0: f64,
}

impl IntensityPair {
    /// Normalized port imbalance `(i1 - i2) / (i1 + i2)`.
    pub fn contrast(&self) -> f64 {
        (self.i1 - self.i2) / (self.i1 + self.i2)
    }
}

fn projector(state: &QubitState) -> Operator2 {
    let v = state.as_vector();
    Operator2::new([
        [v[0] * v[0].conj(), v[0] * v[1].conj()],
        [v[1] * v[0].conj(), v[1] * v[1].conj()],
    ])
}

/// The system-detector entangler: the identity on the `+` eigenspace of the
/// measured axis, a rotation of the detector by `g` on the `-` eigenspace.
/// With the detector prepared in its `0` state, reading it out in the
/// computational basis implements the null-type measurement along
/// `coupling.direction`.
pub fn entangling_unitary(coupling: &DetectorCoupling) -> Operator4 {
    let plus = projector(&QubitState::plus_eigenstate(coupling.direction));
    let minus = projector(&QubitState::minus_eigenstate(coupling.direction));
    let (cg, sg) = (math::cos(coupling.g), math::sin(coupling.g));
    let turn = Operator2::new([
        [C64::new(cg, 0.0), C64::new(-sg, 0.0)],
        [C64::new(sg, 0.0), C64::new(cg, 0.0)],
    ]);
    Operator4::kron(&plus, &Operator2::identity()) + Operator4::kron(&minus, &turn)
}

/// Extracts the Kraus pair `(M_+, M_-)` realized by [`entangling_unitary`]
/// with the detector prepared in `0` and read out in `{0, 1}`:
/// `M_+ = <0|U|0>` blocks, `M_- = <1|U|0>` blocks.
pub fn kraus_from_model(coupling: &DetectorCoupling) -> (Operator2, Operator2) {
    let u = entangling_unitary(coupling);
    let block = |r: usize| {
        Operator2::new([
            [u.m[r][0], u.m[r][2]],
            [u.m[2 + r][0], u.m[2 + r][2]],
        ])
    };
    (block(0), block(1))
}

/// The measured arm's record amplitude: `sqrt(P_r) e^{i chi_r}` for the
/// requested readouts.
pub fn upper_arm_amplitude(
    protocol: &MeasurementProtocol,
    readouts: &[Readout],
) -> Result<PhaseAmplitude> {
    sequence_amplitude(protocol, readouts)
}

/// The reference arm's amplitude for the same record: the conjugate of the
/// measured arm's.
///
/// That arm shares the detectors but couples to them along the opposite
/// axes, and enters and leaves through a half-turn flip of the reference
/// axis. The flip maps `|+n_0>` onto `|+(-n_0)>`, so the whole arm reduces
/// to the mirrored ring evaluated from the flipped reference state - which
/// is exactly the complex conjugate of the upper-arm amplitude, record by
/// record.
pub fn lower_arm_amplitude(
    protocol: &MeasurementProtocol,
    readouts: &[Readout],
) -> Result<PhaseAmplitude> {
    sequence_amplitude(&mirrored_protocol(protocol)?, readouts)
}

fn mirrored_protocol(protocol: &MeasurementProtocol) -> Result<MeasurementProtocol> {
    let steps: Vec<ProtocolStep> = protocol
        .steps()
        .iter()
        .map(|s| ProtocolStep {
            axis: s.axis.antipode(),
            strength: s.strength,
        })
        .collect();
    MeasurementProtocol::from_steps(
        protocol.initial_direction().antipode(),
        steps,
        protocol.final_postselect(),
    )
}

/// Output intensities with the measured arm postselected on the all-`+`
/// record of the quasicontinuous ring:
/// `I_{1,2} = (i0/2) (1 +- Re[sqrt(P) e^{i(chi + gamma)}])`.
///
/// The ports always share the full input: `I_1 + I_2 = i0`.
pub fn postselected_intensities(c: f64, theta: f64, gamma: f64, i0: f64) -> IntensityPair {
    let pa = postselected_closed_form(c, theta);
    let cross = (pa.amplitude * C64::from_polar(1.0, gamma)).re;
    IntensityPair {
        i1: 0.5 * i0 * (1.0 + cross),
        i2: 0.5 * i0 * (1.0 - cross),
        gamma,
        i0,
    }
}

/// Output intensities with both arms projected on a common polarization
/// before detection: `I_{1,2} = (i0/4) |1 +- sqrt(P) e^{i(chi + gamma)}|^2`.
///
/// The imperfect polarizers absorb part of the light:
/// `I_1 + I_2 = i0 (1 + P) / 2`.
pub fn polarizer_intensities(c: f64, theta: f64, gamma: f64, i0: f64) -> IntensityPair {
    let pa = postselected_closed_form(c, theta);
    let shifted = pa.amplitude * C64::from_polar(1.0, gamma);
    let one = C64::new(1.0, 0.0);
    IntensityPair {
        i1: 0.25 * i0 * (one + shifted).norm_sqr(),
        i2: 0.25 * i0 * (one - shifted).norm_sqr(),
        gamma,
        i0,
    }
}

/// Output intensities with every record kept:
/// `I_{1,2} = (i0/2) (S +- Re[e^{i gamma} Z])`, where `S` is the total
/// return probability and `Z = E[e^{2 i chi}] = e^{2 i chi_bar - alpha}`.
///
/// For short protocols the conjugate-arm construction is re-verified record
/// by record before the contraction is trusted.
pub fn averaged_intensities(
    protocol: &MeasurementProtocol,
    gamma: f64,
    i0: f64,
) -> Result<IntensityPair> {
    if protocol.len() <= ARM_CHECK_MAX_STEPS {
        verify_arm_symmetry(protocol)?;
    }
    let (s_log, _) = doubled_contraction(protocol, true)?;
    let (z_log, z_arg) = doubled_contraction(protocol, false)?;
    let s = math::exp(s_log);
    let z = C64::from_polar(math::exp(z_log), z_arg);
    let cross = (z * C64::from_polar(1.0, gamma)).re;
    Ok(IntensityPair {
        i1: 0.5 * i0 * (s + cross),
        i2: 0.5 * i0 * (s - cross),
        gamma,
        i0,
    })
}

fn verify_arm_symmetry(protocol: &MeasurementProtocol) -> Result<()> {
    let mirror = mirrored_protocol(protocol)?;
    let upper = enumerate_all(protocol)?;
    let lower = enumerate_all(&mirror)?;
    for (u, l) in upper.iter().zip(&lower) {
        let err = (l.amplitude.amplitude - u.amplitude.amplitude.conj()).norm();
        if err > ARM_TOLERANCE {
            return Err(Error::ArmSymmetryBroken);
        }
    }
    Ok(())
}
