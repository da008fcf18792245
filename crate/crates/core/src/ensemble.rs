//! Readout ensembles: sampling, enumeration, and averaging.
//!
//! Each run of a protocol yields a random readout record `r_1 ... r_N` with
//! Born probability `P_r = |<psi_0| M_N ... M_1 |psi_0>|^2` (final readout
//! included). Averaging the squared phase factor over records defines the
//! ensemble phase `chi_bar` and its decoherence-like suppression `alpha`:
//!
//! ```text
//! e^{2 i chi_bar - alpha} = sum_r P_r e^{2 i chi_r} = E[ e^{2 i chi} ].
//! ```
//!
//! Three routes to that average live here:
//!
//! * [`averaged_phase_exact`] contracts the doubled-space transfer matrix
//!   `prod_k sum_r M_k(r) (x) M_k(r)` — polynomial cost, no sampling noise;
//! * [`enumerate_all`] walks every readout record of a short protocol;
//! * [`averaged_phase_mc`] samples trajectories with the Born rule.
//!
//! Sampling is reproducible and embarrassingly parallel: every realization
//! draws from its own counter-derived stream of a [`SeededStreams`] family,
//! so realization `i` is the same bit-for-bit whether computed alone, in a
//! serial sweep, or on any number of threads. Records carry the realization
//! index; [`summarize_records`] folds them in index order, which keeps the
//! reduction independent of scheduling too. Rejected records (final `-`)
//! enter the average as exact zeros and are excluded from phase histograms,
//! where the phase does not exist.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::math;
use crate::phase::{principal_phase, MeasurementProtocol, PhaseAmplitude};
use crate::qubit::{kraus, BlochPoint, Operator4, QubitState, Readout, C64};

/// Longest protocol whose `2^(N-1)` readout records we are willing to walk.
pub const MAX_ENUMERATED_STEPS: usize = 16;

/// Stream index reserved for bootstrap resampling; realization indices must
/// stay below it.
const BOOTSTRAP_STREAM: u64 = u64::MAX;

/// Bootstrap resamples behind the standard errors.
const BOOTSTRAP_RESAMPLES: usize = 200;

/// Averaged amplitudes with `log` magnitude below this count as lost.
const LOG_VISIBILITY_FLOOR: f64 = -690.0;

/// A counter-based family of independent random streams.
///
/// Stream `i` is the ChaCha stream `i` of a cipher keyed by the master seed:
/// realizations can be computed in any order, on any number of threads, or
/// re-run individually, always producing the same draws.
#[derive(Clone, Copy, Debug)]
pub struct SeededStreams {
    master: u64,
}

impl SeededStreams {
    pub fn new(master: u64) -> Self {
        SeededStreams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// The generator for one realization.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(index);
        rng
    }
}

/// Uniform draw in `[0, 1)` with 53 random bits.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Unbiased-enough index draw in `[0, n)` (multiply-shift).
fn uniform_index(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    ((rng.next_u64() as u128 * n as u128) >> 64) as u64
}

/// One sampled run of a protocol.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    /// Which realization stream produced this record.
    pub index: u64,
    /// All `N` readouts, final one included.
    pub readouts: Vec<Readout>,
    /// Amplitude of the realized record, `sqrt(P) e^{i chi}`; exactly zero
    /// for rejected records.
    pub amplitude: PhaseAmplitude,
    /// Whether the final readout was `+`.
    pub accepted: bool,
    /// Bloch-sphere trajectory (initial state first), when tracing was
    /// requested.
    pub states: Option<Vec<BlochPoint>>,
}

impl TrajectoryRecord {
    /// This record's contribution to `E[e^{2 i chi}]`: a unit phasor for
    /// accepted records, zero for rejected ones.
    pub fn doubled_phasor(&self) -> C64 {
        if self.accepted {
            C64::from_polar(1.0, 2.0 * self.amplitude.phase)
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

/// Ensemble-level readings of the averaged phase.
#[derive(Clone, Debug)]
pub struct EnsembleSummary {
    /// Averaged phase, defined mod `pi`, reported in `[-pi/2, pi/2)`.
    pub chi_bar: f64,
    /// Suppression exponent: `|E[e^{2 i chi}]| = e^{-alpha}`.
    pub alpha: f64,
    /// Number of sampled realizations (zero for exact contractions).
    pub n_realizations: u64,
    /// Fraction of accepted records (exact acceptance probability for exact
    /// contractions).
    pub accept_rate: f64,
    /// Bootstrap standard errors, present for sampled ensembles.
    pub chi_bar_stderr: Option<f64>,
    pub alpha_stderr: Option<f64>,
    /// Histogram of accepted-record phases, when requested.
    pub histogram: Option<PhaseHistogram>,
}

/// Counts of accepted-record phases over uniform bins of `[-pi, pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseHistogram {
    /// `bins + 1` edges from `-pi` to `pi`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl PhaseHistogram {
    fn new(bins: usize) -> Self {
        assert!(bins >= 1, "histogram needs at least one bin");
        let edges = (0..=bins)
            .map(|k| -math::PI + math::TAU * k as f64 / bins as f64)
            .collect();
        PhaseHistogram {
            edges,
            counts: vec![0; bins],
        }
    }

    fn record(&mut self, phase: f64) {
        let bins = self.counts.len();
        let pos = (phase + math::PI) / math::TAU * bins as f64;
        let mut idx = math::floor(pos) as isize;
        if idx < 0 {
            idx = 0;
        }
        if idx as usize >= bins {
            idx = bins as isize - 1;
        }
        self.counts[idx as usize] += 1;
    }

    /// Index of the most populated bin (ties to the lower bin).
    pub fn mode_bin(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    /// The bin a given phase falls into.
    pub fn bin_of(&self, phase: f64) -> usize {
        let bins = self.counts.len();
        let pos = (math::wrap_angle(phase) + math::PI) / math::TAU * bins as f64;
        (math::floor(pos) as usize).min(bins - 1)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Walks a protocol with prescribed readouts, returning every intermediate
/// normalized state: `N + 1` entries starting at the initial state.
pub fn trajectory_states(
    protocol: &MeasurementProtocol,
    readouts: &[Readout],
) -> Result<Vec<QubitState>> {
    if readouts.len() != protocol.len() {
        return Err(Error::ReadoutCountMismatch {
            expected: protocol.len(),
            got: readouts.len(),
        });
    }
    let mut states = Vec::with_capacity(protocol.len() + 1);
    states.push(protocol.initial_state());
    for (k, (step, &r)) in protocol.steps().iter().zip(readouts).enumerate() {
        let (next, _) = crate::qubit::apply_measurement(
            states.last().expect("non-empty"),
            step.axis,
            step.strength,
            r,
        )
        .map_err(|e| match e {
            Error::ImpossibleReadout { .. } => Error::ImpossibleReadout { step: k },
            other => other,
        })?;
        states.push(next);
    }
    Ok(states)
}

/// Samples one realization from its own random stream.
pub fn sample_trajectory(
    protocol: &MeasurementProtocol,
    streams: &SeededStreams,
    index: u64,
) -> TrajectoryRecord {
    run_trajectory(protocol, streams, index, false)
}

/// Like [`sample_trajectory`], additionally recording the Bloch trajectory.
pub fn sample_trajectory_traced(
    protocol: &MeasurementProtocol,
    streams: &SeededStreams,
    index: u64,
) -> TrajectoryRecord {
    run_trajectory(protocol, streams, index, true)
}

fn run_trajectory(
    protocol: &MeasurementProtocol,
    streams: &SeededStreams,
    index: u64,
    trace: bool,
) -> TrajectoryRecord {
    let mut rng = streams.stream(index);
    let reference = protocol.initial_state();
    let mut state = reference.clone();
    let mut readouts = Vec::with_capacity(protocol.len());
    let mut states = trace.then(|| {
        let mut s = Vec::with_capacity(protocol.len() + 1);
        s.push(state.bloch_coords());
        s
    });

    for step in protocol.steps() {
        let plus = kraus(step.axis, step.strength, Readout::Plus)
            .expect("strength validated at protocol construction");
        let raw = plus.apply(&state.as_vector());
        let p_plus = raw[0].norm_sqr() + raw[1].norm_sqr();
        // Draw in [0, 1): a deterministic readout never sees the other
        // branch, and the losing branch always has probability >= 2^-53.
        let readout = if uniform(&mut rng) < p_plus {
            Readout::Plus
        } else {
            Readout::Minus
        };
        let op = kraus(step.axis, step.strength, readout).expect("strength validated");
        state
            .apply(&op)
            .expect("a drawn readout has nonzero probability");
        readouts.push(readout);
        if let Some(s) = states.as_mut() {
            s.push(state.bloch_coords());
        }
    }

    let accepted = *readouts.last().expect("protocols have steps") == Readout::Plus;
    let amplitude = if accepted {
        let closing = reference.overlap(&state);
        let lw =
            state.log_weight() + C64::new(math::ln(closing.norm()), principal_phase(closing));
        PhaseAmplitude::from_log_amplitude(lw)
    } else {
        PhaseAmplitude::zero()
    };

    TrajectoryRecord {
        index,
        readouts,
        amplitude,
        accepted,
        states,
    }
}

/// One branch of the exhaustive readout walk: a record of the weak readouts,
/// the amplitude of that record closed with a final `+`, and the total Born
/// mass of the weak record across both final readouts.
#[derive(Clone, Debug)]
pub struct EnumeratedSequence {
    pub readouts: Vec<Readout>,
    pub amplitude: PhaseAmplitude,
    pub weak_probability: f64,
}

/// Walks all `2^(N-1)` weak-readout records of a protocol.
///
/// The `weak_probability` fields sum to one (completeness of the first
/// `N - 1` measurements); `|amplitude|^2` sums to the acceptance
/// probability. Annihilated branches come back with exactly zero mass.
pub fn enumerate_all(protocol: &MeasurementProtocol) -> Result<Vec<EnumeratedSequence>> {
    let n = protocol.len();
    if n > MAX_ENUMERATED_STEPS {
        return Err(Error::TooManySequences { steps: n });
    }
    let weak = n - 1;
    let reference = protocol.initial_state();
    let mut out = Vec::with_capacity(1usize << weak);

    for mask in 0u32..(1u32 << weak) {
        let readouts: Vec<Readout> = (0..weak)
            .map(|k| {
                if mask >> k & 1 == 0 {
                    Readout::Plus
                } else {
                    Readout::Minus
                }
            })
            .collect();

        let mut state = reference.clone();
        let mut alive = true;
        for (step, &r) in protocol.weak_steps().iter().zip(&readouts) {
            let op = kraus(step.axis, step.strength, r).expect("strength validated");
            if state.apply(&op).is_err() {
                alive = false;
                break;
            }
        }

        let (amplitude, weak_probability) = if alive {
            let weak_probability = math::exp(2.0 * state.log_weight().re);
            let closing = reference.overlap(&state);
            let amplitude = if closing.norm() == 0.0 {
                PhaseAmplitude::zero()
            } else {
                PhaseAmplitude::from_log_amplitude(
                    state.log_weight()
                        + C64::new(math::ln(closing.norm()), principal_phase(closing)),
                )
            };
            (amplitude, weak_probability)
        } else {
            (PhaseAmplitude::zero(), 0.0)
        };

        out.push(EnumeratedSequence {
            readouts,
            amplitude,
            weak_probability,
        });
    }
    Ok(out)
}

/// Contraction of the doubled-space transfer product
/// `<psi_0 (x) psi_0"| prod_k sum_r M_k(r) (x) M_k(r)" |psi_0 (x) psi_0">`,
/// where `"` marks an optional complex conjugation of the second copy.
/// Returns `(ln |result|, arg result)`; magnitudes are accumulated in the
/// log, so deeply suppressed ensembles stay representable.
pub(crate) fn doubled_contraction(
    protocol: &MeasurementProtocol,
    conjugate_copy: bool,
) -> Result<(f64, f64)> {
    let psi = protocol.initial_state();
    let a = psi.as_vector();
    let b = if conjugate_copy {
        [a[0].conj(), a[1].conj()]
    } else {
        a
    };
    let mut v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let mut log_mag = 0.0f64;

    for step in protocol.weak_steps() {
        let mp = kraus(step.axis, step.strength, Readout::Plus).expect("strength validated");
        let mm = kraus(step.axis, step.strength, Readout::Minus).expect("strength validated");
        let (cp, cm) = if conjugate_copy {
            (mp.conjugate(), mm.conjugate())
        } else {
            (mp, mm)
        };
        let transfer = Operator4::kron(&mp, &cp) + Operator4::kron(&mm, &cm);
        v = transfer.apply(&v);
        let norm = math::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
        if norm == 0.0 || log_mag + math::ln(norm) < LOG_VISIBILITY_FLOOR {
            return Err(Error::VisibilityLost);
        }
        log_mag += math::ln(norm);
        for z in v.iter_mut() {
            *z /= norm;
        }
    }

    // Close with the projector onto the doubled reference state.
    let closing = a[0].conj() * b[0].conj() * v[0]
        + a[0].conj() * b[1].conj() * v[1]
        + a[1].conj() * b[0].conj() * v[2]
        + a[1].conj() * b[1].conj() * v[3];
    let mag = closing.norm();
    if mag == 0.0 || log_mag + math::ln(mag) < LOG_VISIBILITY_FLOOR {
        return Err(Error::VisibilityLost);
    }
    Ok((log_mag + math::ln(mag), principal_phase(closing)))
}

/// Exact ensemble average over all readout records via the doubled-space
/// transfer matrix. Cost is linear in the protocol length.
pub fn averaged_phase_exact(protocol: &MeasurementProtocol) -> Result<EnsembleSummary> {
    let (log_mag, arg) = doubled_contraction(protocol, false)?;
    let (accept_log, _) = doubled_contraction(protocol, true)?;
    Ok(EnsembleSummary {
        chi_bar: math::wrap_half_angle(arg / 2.0),
        alpha: -log_mag,
        n_realizations: 0,
        accept_rate: math::exp(accept_log),
        chi_bar_stderr: None,
        alpha_stderr: None,
        histogram: None,
    })
}

/// Folds sampled records into an [`EnsembleSummary`], always in realization-
/// index order. Bootstrap standard errors use the reserved stream of the
/// same family, so the whole summary is a pure function of (protocol
/// records, master seed).
pub fn summarize_records(
    records: &[TrajectoryRecord],
    bins: Option<usize>,
    streams: &SeededStreams,
) -> Result<EnsembleSummary> {
    let n = records.len() as u64;
    if n == 0 {
        return Err(Error::VisibilityLost);
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| records[i].index);

    let mut phasors = Vec::with_capacity(records.len());
    let mut sum = C64::new(0.0, 0.0);
    let mut accepted = 0u64;
    let mut histogram = bins.map(PhaseHistogram::new);
    for &i in &order {
        let r = &records[i];
        let z = r.doubled_phasor();
        phasors.push(z);
        sum += z;
        if r.accepted {
            accepted += 1;
            if let Some(h) = histogram.as_mut() {
                h.record(r.amplitude.phase);
            }
        }
    }
    let mean = sum / n as f64;
    if mean.norm() < math::exp(LOG_VISIBILITY_FLOOR) {
        return Err(Error::VisibilityLost);
    }
    let chi_bar = math::wrap_half_angle(principal_phase(mean) / 2.0);
    let alpha = -math::ln(mean.norm());

    // Bootstrap the standard errors from the reserved stream.
    let mut rng = streams.stream(BOOTSTRAP_STREAM);
    let mut chi_sq = 0.0f64;
    let mut alpha_sq = 0.0f64;
    let mut valid = 0u32;
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut s = C64::new(0.0, 0.0);
        for _ in 0..phasors.len() {
            s += phasors[uniform_index(&mut rng, n) as usize];
        }
        let m = s / n as f64;
        if m.norm() < math::exp(LOG_VISIBILITY_FLOOR) {
            continue;
        }
        let chi_b = math::wrap_half_angle(principal_phase(m) / 2.0);
        let d = math::wrap_half_angle(chi_b - chi_bar);
        chi_sq += d * d;
        let da = -math::ln(m.norm()) - alpha;
        alpha_sq += da * da;
        valid += 1;
    }
    let (chi_stderr, alpha_stderr) = if valid > 1 {
        (
            math::sqrt(chi_sq / (valid - 1) as f64),
            math::sqrt(alpha_sq / (valid - 1) as f64),
        )
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(EnsembleSummary {
        chi_bar,
        alpha,
        n_realizations: n,
        accept_rate: accepted as f64 / n as f64,
        chi_bar_stderr: Some(chi_stderr),
        alpha_stderr: Some(alpha_stderr),
        histogram,
    })
}

/// Monte-Carlo estimate of the averaged phase from `n_realizations` sampled
/// trajectories.
pub fn averaged_phase_mc(
    protocol: &MeasurementProtocol,
    n_realizations: u64,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    mc_summary(protocol, n_realizations, None, master_seed)
}

/// Monte-Carlo ensemble with a phase histogram of the accepted records.
pub fn phase_histogram(
    protocol: &MeasurementProtocol,
    n_realizations: u64,
    bins: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    mc_summary(protocol, n_realizations, Some(bins), master_seed)
}

fn mc_summary(
    protocol: &MeasurementProtocol,
    n_realizations: u64,
    bins: Option<usize>,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    let streams = SeededStreams::new(master_seed);
    let records: Vec<TrajectoryRecord> = (0..n_realizations)
        .map(|i| sample_trajectory(protocol, &streams, i))
        .collect();
    summarize_records(&records, bins, &streams)
}
