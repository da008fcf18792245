//! Error type shared by all modules.

use core::fmt;

/// Everything that can go wrong when building protocols or evaluating phases.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A measurement strength outside `[0, 1]` was requested.
    StrengthOutOfRange { eta: f64 },
    /// A protocol needs at least three steps to enclose any solid angle.
    TooFewSteps { steps: usize },
    /// A readout list does not match the protocol length.
    ReadoutCountMismatch { expected: usize, got: usize },
    /// A postselected protocol was driven with a final `-` readout.
    FinalReadoutNotPlus,
    /// A readout with probability zero was requested at the given step.
    ImpossibleReadout { step: usize },
    /// A Pancharatnam chain needs at least one state.
    EmptyChain,
    /// Consecutive states in a Pancharatnam chain are orthogonal, so their
    /// relative phase carries no information.
    OrthogonalStates { index: usize },
    /// Antipodal points have no unique connecting geodesic.
    AntipodalPoints,
    /// Exhaustive readout enumeration was requested for a protocol too long
    /// to enumerate.
    TooManySequences { steps: usize },
    /// The readout-averaged amplitude is indistinguishable from zero, so the
    /// averaged phase is undefined.
    VisibilityLost,
    /// Refinement could not bridge a phase jump near the given polar angle;
    /// the postselection probability vanishes there.
    PhaseUndefinedNear { theta: f64 },
    /// The requested strength sits too close to the critical one for the
    /// winding to be well defined.
    NearCriticalStrength { c: f64, critical: f64 },
    /// A plaquette carries flux too close to the branch cut; the curvature
    /// grid is too coarse.
    GridTooCoarse { flux: f64 },
    /// The root bracket does not straddle a sign change.
    NoSignChange { lo: f64, hi: f64 },
    /// The averaged phase loses visibility near the given polar angle, so the
    /// winding number is undefined there.
    WindingUndefinedNear { theta: f64 },
    /// No visibility zero was found inside the search box.
    NoCriticalPointInBox { min_visibility: f64 },
    /// The lower interferometer arm failed to reproduce the conjugate of the
    /// upper-arm amplitude.
    ArmSymmetryBroken,
    /// A detector coupling angle outside `[0, pi/2]` was requested.
    CouplingOutOfRange { g: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::StrengthOutOfRange { eta } => {
                write!(f, "measurement strength eta = {eta} outside [0, 1]")
            }
            Error::TooFewSteps { steps } => {
                write!(f, "protocol has {steps} steps, need at least 3")
            }
            Error::ReadoutCountMismatch { expected, got } => {
                write!(f, "expected {expected} readouts, got {got}")
            }
            Error::FinalReadoutNotPlus => {
                write!(f, "postselected protocol requires a final '+' readout")
            }
            Error::ImpossibleReadout { step } => {
                write!(f, "readout at step {step} has probability zero")
            }
            Error::EmptyChain => {
                write!(f, "state chain is empty")
            }
            Error::OrthogonalStates { index } => {
                write!(
                    f,
                    "states {index} and {} are orthogonal; relative phase undefined",
                    index + 1
                )
            }
            Error::AntipodalPoints => {
                write!(f, "antipodal points have no unique geodesic")
            }
            Error::TooManySequences { steps } => {
                write!(
                    f,
                    "{steps}-step protocol has too many readout sequences to enumerate (max 16 steps)"
                )
            }
            Error::VisibilityLost => {
                write!(f, "averaged amplitude has vanishing magnitude; phase undefined")
            }
            Error::PhaseUndefinedNear { theta } => {
                write!(
                    f,
                    "postselection probability vanishes near theta = {theta}; phase undefined there"
                )
            }
            Error::NearCriticalStrength { c, critical } => {
                write!(
                    f,
                    "strength c = {c} lies within 1e-3 of the critical value {critical}; \
                     the phase winding is not defined at criticality"
                )
            }
            Error::GridTooCoarse { flux } => {
                write!(
                    f,
                    "plaquette flux {flux} too close to +/-pi; refine the curvature grid"
                )
            }
            Error::NoSignChange { lo, hi } => {
                write!(f, "no sign change over bracket [{lo}, {hi}]")
            }
            Error::WindingUndefinedNear { theta } => {
                write!(
                    f,
                    "averaged-phase visibility vanishes near theta = {theta}; winding undefined"
                )
            }
            Error::NoCriticalPointInBox { min_visibility } => {
                write!(
                    f,
                    "no visibility zero in search box (best visibility {min_visibility:.3e})"
                )
            }
            Error::ArmSymmetryBroken => {
                write!(
                    f,
                    "lower-arm amplitude is not the conjugate of the upper-arm amplitude"
                )
            }
            Error::CouplingOutOfRange { g } => {
                write!(f, "detector coupling g = {g} outside [0, pi/2]")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
