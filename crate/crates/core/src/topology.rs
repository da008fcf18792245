//! Topological structure of the measurement-induced phase.
//!
//! Swept in the polar angle at fixed total strength `c`, the postselected
//! phase `chi(theta)` starts at `0` (the trajectory at the pole encloses
//! nothing) and ends at `theta = pi` having accumulated `2 pi C` with an
//! integer `C`: the Chern number of the phase field on the
//! `(theta, time)` sphere. Weak measuring (`c` below a critical strength)
//! gives `C = 0`; strong measuring gives `C = -1`, the projective
//! (Pancharatnam) value. The transition happens at the strength where the
//! postselection probability of the equator trajectory vanishes exactly —
//! phases are undefined at a zero amplitude, which is the only way an
//! integer can change.
//!
//! Two independent routes to `C` are implemented: unfolding `chi(theta)`
//! and taking endpoints ([`chern_number`]), and summing Berry-curvature
//! plaquette fluxes over a closed state grid ([`chern_via_curvature`]).
//! The readout-averaged phase `chi_bar` undergoes the same kind of
//! transition with its own critical point ([`winding_number_averaged`],
//! [`averaged_critical_point`]); being defined mod `pi`, its winding counts
//! in units of `pi` over the quarter sweep `theta in [0, pi/2]`.

use alloc::vec::Vec;

use crate::ensemble::{averaged_phase_exact, doubled_contraction, trajectory_states};
use crate::error::{Error, Result};
use crate::math;
use crate::phase::{postselected_closed_form, MeasurementProtocol};
use crate::qubit::{geodesic_interpolate, QubitState, Readout, C64};

/// Postselection probability below which a sampled point's phase is noise.
pub const PROBABILITY_FLOOR: f64 = 1e-8;

/// Default bracket for the critical-strength root; the equator response is
/// negative at `1` and positive at `4` for every protocol in this family.
pub const CRITICAL_BRACKET: (f64, f64) = (1.0, 4.0);

/// Default bisection tolerance for [`critical_strength`].
pub const CRITICAL_TOLERANCE: f64 = 1e-10;

/// Protocol length used for averaged-phase topology scans.
pub const AVERAGED_STEPS: usize = 500;

/// Default search box for [`averaged_critical_point`].
pub const AVERAGED_SEARCH_C: (f64, f64) = (2.5, 4.5);
pub const AVERAGED_SEARCH_THETA: (f64, f64) = (0.5, 1.5);

/// Narrowest bridgeable interval during unfolding.
const MIN_INTERVAL: f64 = 1e-12;

/// Hard cap on refinement nodes per curve.
const MAX_NODES: usize = 200_000;

/// Plaquette fluxes beyond this magnitude indicate links near a zero.
const FLUX_LIMIT: f64 = 0.95 * math::PI;

/// The continuous phase curve `chi(theta)` of the all-`+` postselected
/// record, reconstructed from principal values by jump-accumulation.
#[derive(Clone, Debug)]
pub struct UnfoldedPhaseCurve {
    /// Sampled polar angles, ascending; refinement inserts midpoints.
    pub thetas: Vec<f64>,
    /// Principal phases in `[-pi, pi)`.
    pub principal: Vec<f64>,
    /// Unfolded phases; `NaN` at flagged points.
    pub unfolded: Vec<f64>,
    /// Postselection probabilities.
    pub probability: Vec<f64>,
    /// True where the probability sits below [`PROBABILITY_FLOOR`] and the
    /// point was excluded from unfolding.
    pub flagged: Vec<bool>,
}

impl UnfoldedPhaseCurve {
    /// Index of a sampled angle, if present (to within `1e-12`).
    pub fn index_of(&self, theta: f64) -> Option<usize> {
        let i = self
            .thetas
            .partition_point(|&t| t < theta - 1e-12);
        (i < self.thetas.len() && (self.thetas[i] - theta).abs() < 1e-12).then_some(i)
    }

    /// Whether any sampled point was excluded.
    pub fn has_flagged(&self) -> bool {
        self.flagged.iter().any(|&f| f)
    }
}

/// Chern number read off a phase curve or curvature sum.
#[derive(Clone, Copy, Debug)]
pub struct ChernResult {
    /// Nearest integer.
    pub chern: i32,
    /// The raw winding `(chi(pi) - chi(0)) / 2 pi` (or flux sum over
    /// `2 pi`).
    pub raw: f64,
    /// `|raw - chern|`.
    pub residual: f64,
    /// False when the residual exceeds `0.05` and the integer should not be
    /// trusted.
    pub reliable: bool,
}

impl ChernResult {
    fn from_raw(raw: f64) -> Self {
        let chern = math::round(raw) as i32;
        let residual = math::abs(raw - chern as f64);
        ChernResult {
            chern,
            raw,
            residual,
            reliable: residual < 0.05,
        }
    }
}

/// Winding of the readout-averaged phase over `theta in [0, pi/2]`.
#[derive(Clone, Debug)]
pub struct WindingResult {
    /// Integer winding in units of `pi`.
    pub winding: i32,
    /// The raw ratio `(chi_bar(pi/2) - chi_bar(0)) / pi`.
    pub raw: f64,
    /// Sampled polar angles after refinement.
    pub thetas: Vec<f64>,
    /// Unfolded averaged phases along `thetas`.
    pub chi_bar: Vec<f64>,
}

/// Zero of the averaged-phase visibility located by [`averaged_critical_point`].
#[derive(Clone, Copy, Debug)]
pub struct AveragedCriticalPoint {
    pub c: f64,
    pub theta: f64,
    /// `e^{-alpha}` at the reported point.
    pub visibility: f64,
}

struct Node {
    theta: f64,
    principal: f64,
    probability: f64,
    flagged: bool,
}

fn eval_node(c: f64, theta: f64) -> Node {
    let pa = postselected_closed_form(c, theta);
    Node {
        theta,
        principal: pa.phase,
        probability: pa.probability,
        flagged: pa.probability < PROBABILITY_FLOOR,
    }
}

/// Unfolds `chi(theta)` on a caller-supplied ascending grid, inserting
/// midpoints until every retained adjacent pair jumps by less than
/// `tolerance` (mod `2 pi`). Points with postselection probability below
/// [`PROBABILITY_FLOOR`] are flagged, excluded, and bridged from both
/// sides; an unbridgeable gap is an error naming the angle.
pub fn unfold_phase_on_grid(
    c: f64,
    seed_thetas: &[f64],
    tolerance: f64,
) -> Result<UnfoldedPhaseCurve> {
    assert!(!seed_thetas.is_empty(), "need at least one angle");
    assert!(
        seed_thetas.windows(2).all(|w| w[0] < w[1]),
        "angles must be strictly ascending"
    );
    assert!(tolerance > 0.0 && tolerance < math::PI);

    let mut nodes: Vec<Node> = seed_thetas.iter().map(|&t| eval_node(c, t)).collect();

    loop {
        // Adjacent pairs of *retained* nodes; flagged nodes in between are
        // bridged over.
        let mut split_at: Option<(f64, f64)> = None;
        let mut prev: Option<usize> = None;
        for i in 0..nodes.len() {
            if nodes[i].flagged {
                continue;
            }
            if let Some(p) = prev {
                let jump = math::wrap_angle(nodes[i].principal - nodes[p].principal);
                if math::abs(jump) > tolerance {
                    if nodes[i].theta - nodes[p].theta < MIN_INTERVAL {
                        return Err(Error::PhaseUndefinedNear {
                            theta: 0.5 * (nodes[i].theta + nodes[p].theta),
                        });
                    }
                    split_at = Some((nodes[p].theta, nodes[i].theta));
                    break;
                }
            }
            prev = Some(i);
        }

        let Some((lo, hi)) = split_at else { break };
        if nodes.len() >= MAX_NODES {
            return Err(Error::PhaseUndefinedNear {
                theta: 0.5 * (lo + hi),
            });
        }
        let mid = 0.5 * (lo + hi);
        let pos = nodes.partition_point(|n| n.theta < mid);
        nodes.insert(pos, eval_node(c, mid));
    }

    let mut unfolded = Vec::with_capacity(nodes.len());
    let mut carry: Option<(f64, f64)> = None; // (previous principal, previous unfolded)
    for n in &nodes {
        if n.flagged {
            unfolded.push(f64::NAN);
            continue;
        }
        let value = match carry {
            None => n.principal,
            Some((prev_principal, prev_unfolded)) => {
                prev_unfolded + math::wrap_angle(n.principal - prev_principal)
            }
        };
        unfolded.push(value);
        carry = Some((n.principal, value));
    }
    if carry.is_none() {
        return Err(Error::PhaseUndefinedNear {
            theta: nodes[nodes.len() / 2].theta,
        });
    }

    Ok(UnfoldedPhaseCurve {
        thetas: nodes.iter().map(|n| n.theta).collect(),
        principal: nodes.iter().map(|n| n.principal).collect(),
        unfolded,
        probability: nodes.iter().map(|n| n.probability).collect(),
        flagged: nodes.iter().map(|n| n.flagged).collect(),
    })
}

/// Unfolds `chi(theta)` over `[0, theta_max]` from a uniform 129-point seed.
pub fn unfold_phase(c: f64, theta_max: f64, tolerance: f64) -> Result<UnfoldedPhaseCurve> {
    assert!(theta_max > 0.0 && theta_max <= math::PI + 1e-12);
    let seed: Vec<f64> = (0..=128)
        .map(|k| theta_max * k as f64 / 128.0)
        .collect();
    unfold_phase_on_grid(c, &seed, tolerance)
}

/// Chern number from the endpoints of the unfolded curve,
/// `C = (chi(pi) - chi(0)) / 2 pi`.
///
/// Undefined at the critical strength, where the curve breaks; strengths
/// within `1e-3` of it are rejected.
pub fn chern_number(c: f64) -> Result<ChernResult> {
    reject_near_critical(c)?;
    let curve = unfold_phase(c, math::PI, math::PI / 2.0)?;
    let first = curve
        .unfolded
        .iter()
        .find(|v| !v.is_nan())
        .expect("unfold guarantees an accepted node");
    let last = curve
        .unfolded
        .iter()
        .rev()
        .find(|v| !v.is_nan())
        .expect("unfold guarantees an accepted node");
    Ok(ChernResult::from_raw((last - first) / math::TAU))
}

fn reject_near_critical(c: f64) -> Result<()> {
    let critical = critical_strength(CRITICAL_BRACKET, CRITICAL_TOLERANCE)
        .expect("the default bracket straddles the root");
    if math::abs(c - critical) < 1e-3 {
        return Err(Error::NearCriticalStrength { c, critical });
    }
    Ok(())
}

/// Chern number as the total Berry-curvature flux through the
/// `(theta, time)` sphere, via plaquette link products.
///
/// The state grid has `grid_n + 1` rows at `theta_i = i pi / grid_n` and
/// `2 grid_n` cyclic columns: the first `grid_n` are the all-`+` trajectory
/// states of the `grid_n`-step ring, the rest close the loop along the
/// geodesic back to the initial state. `grid_n` must be at least 64 and
/// exceed `4 c`, else the per-step strength `4 c / grid_n` leaves `[0, 1]`
/// and the row protocols are rejected. Each plaquette contributes
/// `arg [ U_t(i,j) U_theta(i,j+1) U_t(i+1,j)* U_theta(i,j)* ]`; the sum is
/// `2 pi C` exactly, and any single flux near `+-pi` means the grid cannot
/// resolve the curvature (links too close to a zero) and is an error.
pub fn chern_via_curvature(c: f64, grid_n: usize) -> Result<ChernResult> {
    assert!(grid_n >= 64, "need at least 64 cells per axis");
    reject_near_critical(c)?;

    let rows = grid_n + 1;
    let cols = 2 * grid_n;
    let mut grid: Vec<Vec<QubitState>> = Vec::with_capacity(rows);
    for i in 0..rows {
        let theta = math::PI * i as f64 / grid_n as f64;
        let protocol = MeasurementProtocol::parallel(c, theta, grid_n)?;
        let readouts = alloc::vec![Readout::Plus; grid_n];
        let trajectory = trajectory_states(&protocol, &readouts)?;

        let mut row: Vec<QubitState> = trajectory[..grid_n].to_vec();
        let back = trajectory[grid_n - 1].bloch_coords();
        let home = trajectory[0].bloch_coords();
        for m in 1..=grid_n {
            let s = m as f64 / (grid_n + 1) as f64;
            let p = geodesic_interpolate(&back, &home, s)?;
            row.push(QubitState::from_bloch(&p));
        }
        grid.push(row);
    }

    let link = |a: &QubitState, b: &QubitState| -> Result<C64> {
        let o = a.overlap(b);
        let m = o.norm();
        if m < 1e-12 {
            return Err(Error::GridTooCoarse { flux: f64::NAN });
        }
        Ok(o / m)
    };

    let mut total = 0.0;
    for i in 0..grid_n {
        for j in 0..cols {
            let jn = (j + 1) % cols;
            let u_t = link(&grid[i][j], &grid[i][jn])?;
            let u_theta_right = link(&grid[i][jn], &grid[i + 1][jn])?;
            let u_t_up = link(&grid[i + 1][j], &grid[i + 1][jn])?;
            let u_theta_left = link(&grid[i][j], &grid[i + 1][j])?;
            let plaquette = u_t * u_theta_right * u_t_up.conj() * u_theta_left.conj();
            let flux = crate::phase::principal_phase(plaquette);
            if math::abs(flux) > FLUX_LIMIT {
                return Err(Error::GridTooCoarse { flux });
            }
            total += flux;
        }
    }
    Ok(ChernResult::from_raw(total / math::TAU))
}

/// Real response of the equator trajectory, `cosh(tau) + c sinh(tau)/tau`
/// at `theta = pi/2`, where `tau^2 = c^2 - pi^2`. Negative below the
/// critical strength, positive above; its zero is where the postselection
/// probability of the all-`+` record vanishes.
fn equator_response(c: f64) -> f64 {
    let w = c * c - math::PI * math::PI;
    if math::abs(w) < 1e-12 {
        // tau -> 0: cosh -> 1, sinh(tau)/tau -> 1.
        return 1.0 + c;
    }
    if w < 0.0 {
        let s = math::sqrt(-w);
        math::cos(s) + c * math::sin(s) / s
    } else {
        let t = math::sqrt(w);
        math::cosh(t) + c * math::sinh(t) / t
    }
}

/// Critical measurement strength: the zero of the equator response inside
/// `bracket`, found by bisection to within `tolerance`.
pub fn critical_strength(bracket: (f64, f64), tolerance: f64) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    assert!(lo < hi && tolerance > 0.0);
    let f_lo = equator_response(lo);
    let f_hi = equator_response(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        let f_mid = equator_response(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_hi > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Winding number of the readout-averaged phase over `theta in [0, pi/2]`,
/// in units of `pi` (the phase is only defined mod `pi`).
///
/// Evaluates the exact ensemble average of the [`AVERAGED_STEPS`]-step ring
/// on a refining grid; points where the visibility `e^{-alpha}` drops below
/// `1e-8` make the winding undefined and are an error.
pub fn winding_number_averaged(c: f64, n_theta: usize) -> Result<WindingResult> {
    assert!(n_theta >= 3, "need at least three sample angles");
    let eval = |theta: f64| -> Result<f64> {
        let protocol = MeasurementProtocol::parallel(c, theta, AVERAGED_STEPS)?;
        let summary = averaged_phase_exact(&protocol).map_err(|e| match e {
            Error::VisibilityLost => Error::WindingUndefinedNear { theta },
            other => other,
        })?;
        if summary.alpha > -math::ln(1e-8) {
            return Err(Error::WindingUndefinedNear { theta });
        }
        Ok(summary.chi_bar)
    };

    let mut thetas: Vec<f64> = (0..n_theta)
        .map(|k| math::PI / 2.0 * k as f64 / (n_theta - 1) as f64)
        .collect();
    let mut values: Vec<f64> = thetas.iter().map(|&t| eval(t)).collect::<Result<_>>()?;

    // Refine until adjacent samples move by less than pi/4 (mod pi).
    let mut i = 0;
    while i + 1 < thetas.len() {
        let jump = math::wrap_half_angle(values[i + 1] - values[i]);
        if math::abs(jump) > math::PI / 4.0 {
            if thetas[i + 1] - thetas[i] < 1e-9 || thetas.len() >= MAX_NODES {
                return Err(Error::WindingUndefinedNear {
                    theta: 0.5 * (thetas[i] + thetas[i + 1]),
                });
            }
            let mid = 0.5 * (thetas[i] + thetas[i + 1]);
            thetas.insert(i + 1, mid);
            values.insert(i + 1, eval(mid)?);
        } else {
            i += 1;
        }
    }

    let mut unfolded = Vec::with_capacity(values.len());
    unfolded.push(values[0]);
    for i in 1..values.len() {
        let step = math::wrap_half_angle(values[i] - values[i - 1]);
        unfolded.push(unfolded[i - 1] + step);
    }
    let raw = (unfolded[unfolded.len() - 1] - unfolded[0]) / math::PI;
    Ok(WindingResult {
        winding: math::round(raw) as i32,
        raw,
        thetas,
        chi_bar: unfolded,
    })
}

/// Locates the visibility zero of the readout-averaged amplitude inside a
/// `(c, theta)` box by nested grid refinement.
///
/// The averaged amplitude of the [`AVERAGED_STEPS`]-step ring is evaluated
/// on a `13 x 13` grid, the box shrinks around the minimum of `e^{-alpha}`,
/// and the process repeats until the box is pointlike. A final visibility
/// above `1e-3` means no zero lives in the box.
pub fn averaged_critical_point(
    c_range: (f64, f64),
    theta_range: (f64, f64),
) -> Result<AveragedCriticalPoint> {
    averaged_critical_point_impl(c_range, theta_range, AVERAGED_STEPS, 12)
}

fn averaged_critical_point_impl(
    c_range: (f64, f64),
    theta_range: (f64, f64),
    n_steps: usize,
    rounds: usize,
) -> Result<AveragedCriticalPoint> {
    assert!(c_range.0 < c_range.1 && theta_range.0 < theta_range.1);
    const GRID: usize = 13;

    let log_visibility = |c: f64, theta: f64| -> Result<f64> {
        let protocol = MeasurementProtocol::parallel(c, theta, n_steps)?;
        match doubled_contraction(&protocol, false) {
            Ok((log_mag, _)) => Ok(log_mag),
            Err(Error::VisibilityLost) => Ok(f64::NEG_INFINITY),
            Err(other) => Err(other),
        }
    };

    let (mut c_lo, mut c_hi) = c_range;
    let (mut t_lo, mut t_hi) = theta_range;
    let mut best = (f64::INFINITY, c_lo, t_lo);

    for _ in 0..rounds {
        best = (f64::INFINITY, best.1, best.2);
        for i in 0..GRID {
            let c = c_lo + (c_hi - c_lo) * i as f64 / (GRID - 1) as f64;
            for j in 0..GRID {
                let theta = t_lo + (t_hi - t_lo) * j as f64 / (GRID - 1) as f64;
                let lv = log_visibility(c, theta)?;
                if lv < best.0 {
                    best = (lv, c, theta);
                }
            }
        }
        // Shrink to +-2 grid cells around the minimum, clamped to the
        // original box.
        let c_cell = (c_hi - c_lo) / (GRID - 1) as f64;
        let t_cell = (t_hi - t_lo) / (GRID - 1) as f64;
        c_lo = math::clamp(best.1 - 2.0 * c_cell, c_range.0, c_range.1);
        c_hi = math::clamp(best.1 + 2.0 * c_cell, c_range.0, c_range.1);
        t_lo = math::clamp(best.2 - 2.0 * t_cell, theta_range.0, theta_range.1);
        t_hi = math::clamp(best.2 + 2.0 * t_cell, theta_range.0, theta_range.1);
    }

    let visibility = math::exp(best.0);
    if visibility >= 1e-3 {
        return Err(Error::NoCriticalPointInBox {
            min_visibility: visibility,
        });
    }
    Ok(AveragedCriticalPoint {
        c: best.1,
        theta: best.2,
        visibility,
    })
}
