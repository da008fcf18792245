//! Acceptance checks: one test per published behavior of the measurement
//! ring, from the closed-form amplitude through the topological transition
//! to the sampled ensembles and the interferometer read-out. Each test
//! prints the figures it judged so a failing bound reports the measured
//! value alongside the required one.

use std::f64::consts::PI;
use std::time::Instant;

use geomphase::ensemble::{averaged_phase_exact, averaged_phase_mc, enumerate_all, phase_histogram};
use geomphase::interferometer::{
    kraus_from_model, lower_arm_amplitude, polarizer_intensities, postselected_intensities,
    upper_arm_amplitude, DetectorCoupling,
};
use geomphase::phase::{postselected_closed_form, sequence_amplitude};
use geomphase::qubit::kraus;
use geomphase::topology::{
    averaged_critical_point, chern_number, chern_via_curvature, critical_strength, unfold_phase,
    unfold_phase_on_grid, winding_number_averaged,
};
use geomphase::{Direction, MeasurementProtocol, Readout};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn all_plus(n: usize) -> Vec<Readout> {
    vec![Readout::Plus; n]
}

/// The finite-step all-`+` amplitude of the parallel ring.
fn product_amplitude(c: f64, theta: f64, n: usize) -> Complex64 {
    let protocol = MeasurementProtocol::parallel(c, theta, n).unwrap();
    sequence_amplitude(&protocol, &all_plus(n))
        .unwrap()
        .amplitude
}

#[test]
fn criterion_01_product_converges_to_closed_form() {
    let start = Instant::now();
    let mut worst = (0.0f64, 0.0, 0.0);
    let mut worst_ratio = 0.0f64;
    for &c in &[0.5, 1.0, 2.0, 3.0, 5.0] {
        for &theta in &[PI / 8.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0] {
            let exact = postselected_closed_form(c, theta).amplitude;
            let coarse = (product_amplitude(c, theta, 2000) - exact).norm();
            let fine = (product_amplitude(c, theta, 4000) - exact).norm();
            assert!(
                coarse < 5e-3,
                "|product(2000) - closed form| = {coarse:.3e} at c = {c}, theta = {theta:.4}"
            );
            assert!(
                fine <= 0.6 * coarse,
                "error ratio {:.3} at c = {c}, theta = {theta:.4} decays slower than 1/N",
                fine / coarse
            );
            if coarse > worst.0 {
                worst = (coarse, c, theta);
            }
            worst_ratio = worst_ratio.max(fine / coarse);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "worst |product(2000) - closed form| = {:.3e} (c = {}, theta = {:.4}); \
         worst halving ratio = {worst_ratio:.4}; {elapsed:?}",
        worst.0, worst.1, worst.2
    );
}

#[test]
fn criterion_02_strong_coupling_saturates_the_projective_phase() {
    let curve = unfold_phase(20.0, PI, PI / 2.0).unwrap();
    assert!(!curve.has_flagged());
    let mut max_residual = 0.0f64;
    let mut at_theta = 0.0f64;
    for (&theta, &chi) in curve.thetas.iter().zip(&curve.unfolded) {
        let residual = (chi - PI * (theta.cos() - 1.0)).abs();
        if residual > max_residual {
            max_residual = residual;
            at_theta = theta;
        }
    }
    println!("max |chi(theta) - pi(cos theta - 1)| = {max_residual:.4e} at theta = {at_theta:.4}");
    assert!(
        max_residual < 0.01,
        "max |chi(theta) - pi(cos theta - 1)| = {max_residual:.4e} at theta = {at_theta:.4} \
         exceeds 1e-2: the residual of the null-type ring decays as \
         pi^3 cos(theta) sin^2(theta) / (2 c^2), whose peak is ~1.5e-2 at c = 20; \
         meeting 1e-2 needs c >~ 35"
    );
}

#[test]
fn criterion_03_equator_phase_is_binary() {
    for &c in &[0.5, 1.0, 2.0, 2.5, 3.0, 5.0] {
        let chi = postselected_closed_form(c, PI / 2.0).phase;
        let off = chi.abs().min((chi + PI).abs());
        assert!(
            off < 1e-9,
            "chi(pi/2) = {chi:.3e} at c = {c} is neither 0 nor -pi"
        );
    }
    println!("chi(pi/2) is 0 or -pi to 1e-9 for c in {{0.5, 1, 2, 2.5, 3, 5}}");
}

#[test]
fn criterion_04_critical_strength_bracket() {
    let root = critical_strength((2.0, 2.5), 1e-13).unwrap();
    assert!(
        (2.10..=2.20).contains(&root),
        "root {root} outside [2.10, 2.20]"
    );
    assert!(
        (root - 2.15).abs() <= 0.05,
        "root {root} farther than 0.05 from 2.15"
    );
    let at_root = postselected_closed_form(root, PI / 2.0).probability;
    assert!(at_root < 1e-15, "P(pi/2) = {at_root:.3e} at the root");
    let below = postselected_closed_form(root - 0.05, PI / 2.0).phase;
    let above = postselected_closed_form(root + 0.05, PI / 2.0).phase;
    assert!(
        below.abs() < 1e-12 && (above + PI).abs() < 1e-12,
        "phase does not flip 0 -> -pi across the root: {below:.3e} / {above:.3e}"
    );
    println!("critical strength = {root:.12}, P(pi/2) there = {at_root:.3e}");
}

#[test]
fn criterion_05_chern_numbers_by_two_methods() {
    let start = Instant::now();
    for &(c, expected) in &[(1.0, 0), (3.0, -1)] {
        let endpoint = chern_number(c).unwrap();
        assert!(
            endpoint.chern == expected && endpoint.reliable,
            "endpoint method at c = {c}: {endpoint:?}"
        );
        let plaquette = chern_via_curvature(c, 128).unwrap();
        assert!(
            plaquette.chern == expected,
            "plaquette method at c = {c}: {plaquette:?}"
        );
        assert!(
            plaquette.residual < 1e-6,
            "plaquette sum at c = {c} off an integer by {:.3e}",
            plaquette.residual
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("C = 0 at c = 1 and C = -1 at c = 3 by both methods; {elapsed:?}");
}

#[test]
fn criterion_06_monotonicity_flips_across_the_transition() {
    let grid: Vec<f64> = (0..200).map(|j| PI * j as f64 / 199.0).collect();
    let steps = |c: f64| -> Vec<f64> {
        let curve = unfold_phase_on_grid(c, &grid, PI / 2.0).unwrap();
        let values: Vec<f64> = grid
            .iter()
            .map(|&t| curve.unfolded[curve.index_of(t).unwrap()])
            .collect();
        values.windows(2).map(|w| w[1] - w[0]).collect()
    };

    let above = steps(3.0);
    assert!(
        above.iter().all(|&d| d < 0.0),
        "chi(theta) is not strictly decreasing at c = 3: {} non-decreasing steps",
        above.iter().filter(|&&d| d >= 0.0).count()
    );
    let below = steps(1.0);
    let increasing = below.iter().filter(|&&d| d > 0.0).count();
    assert!(increasing > 0, "no increasing step at c = 1");
    println!("c = 3: all 199 steps decrease; c = 1: {increasing} steps increase");
}

#[test]
fn criterion_07_enumeration_transfer_and_sampling_agree() {
    let start = Instant::now();
    for &c in &[0.5, 1.0, 2.0] {
        let protocol = MeasurementProtocol::parallel(c, PI / 4.0, 10).unwrap();

        let sequences = enumerate_all(&protocol).unwrap();
        let total: f64 = sequences.iter().map(|s| s.weak_probability).sum();
        assert!((total - 1.0).abs() < 1e-12, "sum P = {total} at c = {c}");

        let summed: Complex64 = sequences
            .iter()
            .map(|s| s.amplitude.amplitude * s.amplitude.amplitude)
            .sum();
        let exact = averaged_phase_exact(&protocol).unwrap();
        let contracted = Complex64::from_polar((-exact.alpha).exp(), 2.0 * exact.chi_bar);
        assert!(
            (summed - contracted).norm() < 1e-12,
            "enumeration vs transfer matrix at c = {c}: {:.3e}",
            (summed - contracted).norm()
        );

        let mc = averaged_phase_mc(&protocol, 100_000, 0).unwrap();
        let chi_pull = (mc.chi_bar - exact.chi_bar).abs() / mc.chi_bar_stderr.unwrap();
        let alpha_pull = (mc.alpha - exact.alpha).abs() / mc.alpha_stderr.unwrap();
        assert!(
            chi_pull < 4.0 && alpha_pull < 4.0,
            "Monte Carlo off by {chi_pull:.2} / {alpha_pull:.2} sigma at c = {c}"
        );
        println!(
            "c = {c}: sum P - 1 = {:+.1e}, enum vs transfer = {:.1e}, \
             MC pulls = {chi_pull:.2} / {alpha_pull:.2} sigma",
            total - 1.0,
            (summed - contracted).norm()
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("{elapsed:?}");
}

#[test]
fn criterion_08_averaged_phase_limits() {
    let weak =
        averaged_phase_exact(&MeasurementProtocol::parallel(0.05, PI / 4.0, 500).unwrap()).unwrap();
    let strong =
        averaged_phase_exact(&MeasurementProtocol::parallel(20.0, PI / 4.0, 500).unwrap()).unwrap();
    let target = PI * ((PI / 4.0).cos() - 1.0);
    println!(
        "c = 0.05: chi_bar = {:+.3e}, alpha = {:.3e} (acceptance {:.6}); \
         c = 20: chi_bar = {:+.6} vs {target:+.6}, alpha = {:.3e}",
        weak.chi_bar, weak.alpha, weak.accept_rate, strong.chi_bar, strong.alpha
    );

    assert!(weak.chi_bar.abs() < 0.02, "chi_bar = {}", weak.chi_bar);
    assert!(
        (strong.chi_bar - target).abs() < 0.02,
        "chi_bar = {} vs {target}",
        strong.chi_bar
    );
    assert!(
        weak.alpha < 0.02 && strong.alpha < 0.02,
        "alpha = {:.4e} at c = 0.05 and {:.4e} at c = 20, both required below 2e-2: \
         with rejected records carrying zero weight the exponent obeys \
         alpha >= -ln(acceptance) = {:.3e} already at c = 0.05, and at c = 20 \
         the accepted single-flip records hold it near pi^2 sin^2(theta) / c = {:.3e}",
        weak.alpha,
        strong.alpha,
        -weak.accept_rate.ln(),
        PI * PI * (PI / 4.0).sin().powi(2) / 20.0
    );
}

#[test]
fn criterion_09_averaged_critical_point_localized() {
    let start = Instant::now();
    let point = averaged_critical_point((2.5, 4.5), (0.5, 1.5)).unwrap();
    assert!(
        (point.c - 3.35).abs() < 0.3,
        "c = {} outside 3.35 +- 0.3",
        point.c
    );
    assert!(
        (point.theta - PI / 3.0).abs() < 0.15,
        "theta = {} outside pi/3 +- 0.15",
        point.theta
    );
    assert!(
        point.visibility < 1e-4,
        "visibility = {:.3e} at the reported point",
        point.visibility
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "visibility zero at (c, theta) = ({:.6}, {:.6}), visibility = {:.2e}; {elapsed:?}",
        point.c, point.theta, point.visibility
    );
}

#[test]
fn criterion_10_averaged_winding_numbers() {
    let below = winding_number_averaged(0.5, 33).unwrap();
    assert!(below.winding == 0, "m = {} at c = 0.5", below.winding);
    let above = winding_number_averaged(20.0, 33).unwrap();
    assert!(above.winding == -1, "m = {} at c = 20", above.winding);
    println!(
        "m = {} at c = 0.5 (raw {:+.3e}); m = {} at c = 20 (raw {:+.6})",
        below.winding, below.raw, above.winding, above.raw
    );
}

#[test]
fn criterion_11_detector_model_reproduces_the_kraus_pair() {
    let mut max_diff = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            for k in 0..5 {
                let n = Direction::new(
                    PI * (i + 1) as f64 / 6.0,
                    2.0 * PI * j as f64 / 5.0,
                );
                let g = PI / 2.0 * k as f64 / 4.0;
                let coupling = DetectorCoupling::new(n, g).unwrap();
                let (plus, minus) = kraus_from_model(&coupling);
                let eta = coupling.eta();
                max_diff = max_diff
                    .max(plus.max_abs_diff(&kraus(n, eta, Readout::Plus).unwrap()))
                    .max(minus.max_abs_diff(&kraus(n, eta, Readout::Minus).unwrap()));
            }
        }
    }
    assert!(max_diff < 1e-12, "max entry deviation {max_diff:.3e}");
    println!("detector blocks match the Kraus pair to {max_diff:.3e} over 125 couplings");
}

#[test]
fn criterion_12_reference_arm_conjugates_the_record() {
    let protocol = MeasurementProtocol::parallel(1.3, 0.7, 8).unwrap();
    let mut max_diff = 0.0f64;
    for mask in 0u32..128 {
        let mut readouts: Vec<Readout> = (0..7)
            .map(|b| {
                if mask >> b & 1 == 0 {
                    Readout::Plus
                } else {
                    Readout::Minus
                }
            })
            .collect();
        readouts.push(Readout::Plus);
        let upper = upper_arm_amplitude(&protocol, &readouts).unwrap();
        let lower = lower_arm_amplitude(&protocol, &readouts).unwrap();
        max_diff = max_diff.max((lower.amplitude - upper.amplitude.conj()).norm());
    }
    assert!(max_diff < 1e-12, "max |lower - conj(upper)| = {max_diff:.3e}");
    println!("lower arm = conj(upper arm) to {max_diff:.3e} over all 128 records");
}

#[test]
fn criterion_13_phase_histogram_structure() {
    let protocol = MeasurementProtocol::parallel(0.5, PI / 4.0, 500).unwrap();
    let summary = phase_histogram(&protocol, 4000, 64, 0).unwrap();
    let hist = summary.histogram.as_ref().unwrap();
    let counts = &hist.counts;

    let deterministic = sequence_amplitude(&protocol, &all_plus(500)).unwrap().phase;
    let mode = hist.mode_bin();
    assert!(
        mode == hist.bin_of(deterministic),
        "mode bin {mode} is not the all-+ bin {}",
        hist.bin_of(deterministic)
    );

    // A secondary maximum must rise above Poisson fluctuations of its
    // surroundings, not merely above its immediate neighbors.
    let significant_peak = |i: usize| -> Option<f64> {
        if i < 2 || i + 2 >= counts.len() {
            return None;
        }
        let c = counts[i] as f64;
        let baseline =
            (counts[i - 2] + counts[i - 1] + counts[i + 1] + counts[i + 2]) as f64 / 4.0;
        let threshold = baseline + 4.0 * baseline.max(1.0).sqrt();
        (counts[i] > counts[i - 1] && counts[i] > counts[i + 1] && c > threshold)
            .then_some(c - threshold)
    };
    let below: Vec<usize> = (0..mode.saturating_sub(1))
        .filter(|&i| significant_peak(i).is_some())
        .collect();
    let above: Vec<usize> = (mode + 2..counts.len())
        .filter(|&i| significant_peak(i).is_some())
        .collect();

    println!(
        "mode bin {mode} ({} of {} accepted records, all-+ phase {deterministic:+.4}); \
         significant secondary peaks below: {below:?}, above: {above:?}",
        counts[mode],
        hist.total()
    );
    assert!(
        !below.is_empty(),
        "no secondary maximum below the mode: every bin at more negative chi sits \
         at Poisson-level counts; the genuine secondary peak lies above, at bins {:?} \
         ({} counts at bin {}), where records with a single `-` readout near the \
         ring's midpoint land - a lone flip there shifts the phase towards positive chi",
        above,
        above.first().map(|&i| counts[i]).unwrap_or(0),
        above.first().copied().unwrap_or(0),
    );
}

#[test]
fn criterion_14_interferometer_conservation() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let c = rng.gen_range(0.05..6.0);
        let theta = rng.gen_range(0.01..PI - 0.01);
        let gamma = rng.gen_range(-PI..PI);
        let i0 = rng.gen_range(0.1..10.0);

        let ports = postselected_intensities(c, theta, gamma, i0);
        worst.0 = worst.0.max((ports.i1 + ports.i2 - i0).abs());

        let filtered = polarizer_intensities(c, theta, gamma, i0);
        let probability = postselected_closed_form(c, theta).probability;
        worst.1 = worst
            .1
            .max((filtered.i1 + filtered.i2 - i0 * (1.0 + probability) / 2.0).abs());
    }
    assert!(worst.0 < 1e-12, "I1 + I2 - I0 reaches {:.3e}", worst.0);
    assert!(
        worst.1 < 1e-12,
        "I1 + I2 - I0 (1 + P) / 2 reaches {:.3e}",
        worst.1
    );
    println!(
        "postselected ports conserve I0 to {:.1e}; filtered ports match I0(1+P)/2 to {:.1e}",
        worst.0, worst.1
    );
}
