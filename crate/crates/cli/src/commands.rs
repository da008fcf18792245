//! The five commands. Each builds a [`Table`], writes it, and returns the
//! process exit code: 0 clean, 2 with flagged points, 3 on a topology
//! failure, 4 when a search finds nothing.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use anyhow::{ensure, Result};
use rayon::prelude::*;

use geomphase::ensemble::{
    averaged_phase_exact, sample_trajectory, summarize_records, SeededStreams, TrajectoryRecord,
};
use geomphase::interferometer::{
    averaged_intensities, polarizer_intensities, postselected_intensities,
};
use geomphase::phase::postselected_closed_form;
use geomphase::topology::{
    averaged_critical_point, chern_number, chern_via_curvature, critical_strength,
    unfold_phase_on_grid,
};
use geomphase::{Error, MeasurementProtocol};

use crate::config::{RunConfig, Sweep};
use crate::table::{write_table, Cell, Table};
use crate::Scheme;

/// Curvature-grid side used by the plaquette Chern method.
const PLAQUETTE_GRID: usize = 128;

/// Postselected all-`+` phase over the configured sweep. The phase column
/// is `NaN` wherever the postselection probability vanishes; such points
/// flag the run (exit 2) but do not stop it.
pub fn postselected(cfg: &RunConfig) -> Result<u8> {
    let cs = cfg.c.expect("validated").points()?;
    let thetas = cfg.theta.points()?;
    let theta_swept = cfg.theta.is_swept();
    let mut table = Table::new(if theta_swept {
        &["c", "theta", "probability", "chi", "chi_unfolded"]
    } else {
        &["c", "theta", "probability", "chi"]
    });
    let mut flagged = 0usize;

    if theta_swept {
        let curves: Vec<_> = cs
            .par_iter()
            .map(|&c| unfold_phase_on_grid(c, &thetas, FRAC_PI_2))
            .collect();
        for (&c, curve) in cs.iter().zip(&curves) {
            match curve {
                Ok(curve) => {
                    let mut dead = 0usize;
                    for &theta in &thetas {
                        let i = curve.index_of(theta).expect("seed grid point retained");
                        dead += curve.flagged[i] as usize;
                        table.push(vec![
                            Cell::Num(c),
                            Cell::Num(theta),
                            Cell::Num(curve.probability[i]),
                            Cell::Num(if curve.flagged[i] {
                                f64::NAN
                            } else {
                                curve.principal[i]
                            }),
                            Cell::Num(curve.unfolded[i]),
                        ]);
                    }
                    if dead > 0 {
                        table.note(format!(
                            "phase undefined at {dead} angles for c = {c}: \
                             postselection probability vanishes there"
                        ));
                        flagged += dead;
                    }
                }
                Err(e) => {
                    table.note(format!("unfolding failed for c = {c}: {e}"));
                    for &theta in &thetas {
                        let pa = postselected_closed_form(c, theta);
                        table.push(vec![
                            Cell::Num(c),
                            Cell::Num(theta),
                            Cell::Num(pa.probability),
                            Cell::Num(if pa.phase_reliable { pa.phase } else { f64::NAN }),
                            Cell::Num(f64::NAN),
                        ]);
                    }
                    flagged += 1;
                }
            }
        }
    } else {
        for &c in &cs {
            for &theta in &thetas {
                let pa = postselected_closed_form(c, theta);
                if !pa.phase_reliable {
                    table.note(format!(
                        "phase undefined at c = {c}, theta = {theta}: P = {:.3e}",
                        pa.probability
                    ));
                    flagged += 1;
                }
                table.push(vec![
                    Cell::Num(c),
                    Cell::Num(theta),
                    Cell::Num(pa.probability),
                    Cell::Num(if pa.phase_reliable { pa.phase } else { f64::NAN }),
                ]);
            }
        }
    }

    table
        .summary
        .push(("points".into(), Cell::Int(table.rows.len() as i64)));
    table.summary.push(("flagged".into(), Cell::Int(flagged as i64)));
    write_table(cfg, &table)?;
    Ok(if flagged > 0 { 2 } else { 0 })
}

/// Sampled phase histogram plus the readout-averaged summary, one block per
/// strength. Realizations are drawn from per-index random streams, so the
/// output is a pure function of (config, seed) at any thread count.
pub fn distribution(cfg: &RunConfig) -> Result<u8> {
    let cs = cfg.c.expect("validated").points()?;
    let theta = match cfg.theta {
        Sweep::Fixed(t) => t,
        Sweep::Range { .. } => unreachable!("validated"),
    };
    let streams = SeededStreams::new(cfg.seed);
    let mut table = Table::new(&["c", "bin_center", "count"]);
    let multi = cs.len() > 1;
    let key = |name: &str, c: f64| {
        if multi {
            format!("{name}(c={c})")
        } else {
            name.to_string()
        }
    };
    let mut lost = false;

    for &c in &cs {
        let protocol = MeasurementProtocol::parallel(c, theta, cfg.steps)?;
        let records: Vec<TrajectoryRecord> = (0..cfg.realizations)
            .into_par_iter()
            .map(|i| sample_trajectory(&protocol, &streams, i))
            .collect();
        match summarize_records(&records, Some(cfg.bins), &streams) {
            Ok(summary) => {
                let hist = summary.histogram.as_ref().expect("requested");
                for (j, &count) in hist.counts.iter().enumerate() {
                    table.push(vec![
                        Cell::Num(c),
                        Cell::Num(0.5 * (hist.edges[j] + hist.edges[j + 1])),
                        Cell::Int(count as i64),
                    ]);
                }
                table.summary.push((key("chi_bar", c), Cell::Num(summary.chi_bar)));
                table.summary.push((key("alpha", c), Cell::Num(summary.alpha)));
                table
                    .summary
                    .push((key("accept_rate", c), Cell::Num(summary.accept_rate)));
                table.summary.push((
                    key("chi_bar_stderr", c),
                    Cell::Num(summary.chi_bar_stderr.expect("sampled")),
                ));
                table.summary.push((
                    key("alpha_stderr", c),
                    Cell::Num(summary.alpha_stderr.expect("sampled")),
                ));
            }
            Err(Error::VisibilityLost) => {
                // The accepted records still have phases; only their mean
                // phasor is numerically dead, so the averaged readings are
                // undefined while the histogram is not.
                lost = true;
                let mut counts = vec![0u64; cfg.bins];
                let mut accepted = 0u64;
                for r in &records {
                    if r.accepted {
                        accepted += 1;
                        let pos = (r.amplitude.phase + PI) / TAU * cfg.bins as f64;
                        let j = (pos.floor() as isize).clamp(0, cfg.bins as isize - 1);
                        counts[j as usize] += 1;
                    }
                }
                for (j, &count) in counts.iter().enumerate() {
                    table.push(vec![
                        Cell::Num(c),
                        Cell::Num(-PI + TAU * (j as f64 + 0.5) / cfg.bins as f64),
                        Cell::Int(count as i64),
                    ]);
                }
                table.summary.push((key("chi_bar", c), Cell::Num(f64::NAN)));
                table
                    .summary
                    .push((key("alpha", c), Cell::Num(f64::INFINITY)));
                table.summary.push((
                    key("accept_rate", c),
                    Cell::Num(accepted as f64 / cfg.realizations as f64),
                ));
                table
                    .summary
                    .push((key("chi_bar_stderr", c), Cell::Num(f64::NAN)));
                table
                    .summary
                    .push((key("alpha_stderr", c), Cell::Num(f64::NAN)));
                table.note(format!(
                    "averaged amplitude vanished at c = {c}; chi_bar and alpha undefined"
                ));
            }
            Err(e) => return Err(e.into()),
        }
    }

    write_table(cfg, &table)?;
    Ok(if lost { 2 } else { 0 })
}

/// Chern number of the postselected phase for each strength, by the
/// endpoint method and by plaquette curvature summation; the two must
/// agree. `residual` is the plaquette sum's distance from its integer.
pub fn chern(cfg: &RunConfig) -> Result<u8> {
    let cs = cfg.c.expect("validated").points()?;
    let mut table = Table::new(&["c", "chern_endpoint", "chern_plaquette", "residual"]);
    let mut code = 0u8;

    let results: Vec<_> = cs
        .par_iter()
        .map(|&c| (chern_number(c), chern_via_curvature(c, PLAQUETTE_GRID)))
        .collect();
    for (&c, (endpoint, plaquette)) in cs.iter().zip(&results) {
        match (endpoint, plaquette) {
            (Ok(e), Ok(p)) => {
                if e.chern != p.chern || !e.reliable {
                    table.note(format!(
                        "methods disagree at c = {c}: endpoint gives {} (raw winding {:.6}), \
                         plaquette gives {} (residual {:.3e})",
                        e.chern, e.raw, p.chern, p.residual
                    ));
                    code = 3;
                }
                table.push(vec![
                    Cell::Num(c),
                    Cell::Int(e.chern as i64),
                    Cell::Int(p.chern as i64),
                    Cell::Num(p.residual),
                ]);
            }
            (Err(e), _) | (_, Err(e)) => {
                table.note(chern_failure(c, e));
                code = 3;
            }
        }
    }

    write_table(cfg, &table)?;
    Ok(code)
}

fn chern_failure(c: f64, e: &Error) -> String {
    match e {
        Error::NearCriticalStrength { critical, .. } => format!(
            "Chern number undefined at c = {c}: within 1e-3 of the critical strength \
             {critical}, where the postselected probability vanishes at theta = pi/2 \
             and the phase curve breaks"
        ),
        Error::PhaseUndefinedNear { theta } => {
            format!("Chern number undefined at c = {c}: the phase curve breaks at theta = {theta}")
        }
        other => format!("Chern number failed at c = {c}: {other}"),
    }
}

/// Both critical strengths: the exact root of the postselected equator
/// response inside the `--c-range` bracket, and the visibility zero of the
/// readout-averaged amplitude inside the `--c-range` x `--theta-range` box.
pub fn critical(cfg: &RunConfig) -> Result<u8> {
    let mut table = Table::new(&[]);
    let mut code = 0u8;

    let bracket = cfg.c.map(|s| s.bounds()).unwrap_or((2.0, 4.5));
    match critical_strength(bracket, 1e-12) {
        Ok(root) => {
            let equator = postselected_closed_form(root, FRAC_PI_2);
            table
                .summary
                .push(("postselected_root".into(), Cell::Num(root)));
            table.summary.push((
                "postselected_root_probability".into(),
                Cell::Num(equator.probability),
            ));
        }
        Err(e) => {
            table.note(format!(
                "postselected root search failed over [{}, {}]: {e}",
                bracket.0, bracket.1
            ));
            code = 4;
        }
    }

    let box_c = cfg.c.map(|s| s.bounds()).unwrap_or((2.5, 4.5));
    let box_theta = cfg.theta.bounds();
    match averaged_critical_point(box_c, box_theta) {
        Ok(point) => {
            table.summary.push(("averaged_c".into(), Cell::Num(point.c)));
            table
                .summary
                .push(("averaged_theta".into(), Cell::Num(point.theta)));
            table
                .summary
                .push(("averaged_visibility".into(), Cell::Num(point.visibility)));
        }
        Err(e) => {
            table.note(format!(
                "averaged search failed over c in [{}, {}], theta in [{}, {}]: {e}",
                box_c.0, box_c.1, box_theta.0, box_theta.1
            ));
            code = 4;
        }
    }

    write_table(cfg, &table)?;
    Ok(code)
}

/// Port intensities over the gamma sweep for one read-out scheme. The
/// scheme's conservation law is checked on every row before anything is
/// written.
pub fn interferometer(cfg: &RunConfig) -> Result<u8> {
    let scheme = cfg.scheme.expect("validated");
    let c = match cfg.c {
        Some(Sweep::Fixed(v)) => v,
        _ => unreachable!("validated"),
    };
    let theta = match cfg.theta {
        Sweep::Fixed(t) => t,
        Sweep::Range { .. } => unreachable!("validated"),
    };
    let gammas = cfg.gamma.expect("defaulted").points()?;
    let i0 = cfg.i0;
    let tolerance = 1e-9 * i0;
    let mut table = Table::new(&["gamma", "i1", "i2"]);
    let mut code = 0u8;

    match scheme {
        Scheme::Postselected => {
            for &gamma in &gammas {
                let ports = postselected_intensities(c, theta, gamma, i0);
                ensure!(
                    (ports.i1 + ports.i2 - i0).abs() <= tolerance,
                    "port conservation violated at gamma = {gamma}: I1 + I2 = {}, I0 = {i0}",
                    ports.i1 + ports.i2
                );
                table.push(vec![
                    Cell::Num(gamma),
                    Cell::Num(ports.i1),
                    Cell::Num(ports.i2),
                ]);
            }
            let pa = postselected_closed_form(c, theta);
            table
                .summary
                .push(("probability".into(), Cell::Num(pa.probability)));
            table.summary.push(("chi".into(), Cell::Num(pa.phase)));
        }
        Scheme::Polarizer => {
            let pa = postselected_closed_form(c, theta);
            let total = i0 * (1.0 + pa.probability) / 2.0;
            for &gamma in &gammas {
                let ports = polarizer_intensities(c, theta, gamma, i0);
                ensure!(
                    (ports.i1 + ports.i2 - total).abs() <= tolerance,
                    "filtered conservation violated at gamma = {gamma}: \
                     I1 + I2 = {}, I0 (1 + P) / 2 = {total}",
                    ports.i1 + ports.i2
                );
                table.push(vec![
                    Cell::Num(gamma),
                    Cell::Num(ports.i1),
                    Cell::Num(ports.i2),
                ]);
            }
            table
                .summary
                .push(("probability".into(), Cell::Num(pa.probability)));
        }
        Scheme::Averaged => {
            let protocol = MeasurementProtocol::parallel(c, theta, cfg.steps)?;
            match averaged_phase_exact(&protocol) {
                Ok(summary) => {
                    for &gamma in &gammas {
                        let ports = averaged_intensities(&protocol, gamma, i0)?;
                        ensure!(
                            (ports.i1 + ports.i2 - i0 * summary.accept_rate).abs() <= tolerance,
                            "averaged conservation violated at gamma = {gamma}: \
                             I1 + I2 = {}, I0 S = {}",
                            ports.i1 + ports.i2,
                            i0 * summary.accept_rate
                        );
                        table.push(vec![
                            Cell::Num(gamma),
                            Cell::Num(ports.i1),
                            Cell::Num(ports.i2),
                        ]);
                    }
                    table
                        .summary
                        .push(("accept_rate".into(), Cell::Num(summary.accept_rate)));
                    table
                        .summary
                        .push(("chi_bar".into(), Cell::Num(summary.chi_bar)));
                    table.summary.push(("alpha".into(), Cell::Num(summary.alpha)));
                }
                Err(Error::VisibilityLost) => {
                    for &gamma in &gammas {
                        table.push(vec![
                            Cell::Num(gamma),
                            Cell::Num(f64::NAN),
                            Cell::Num(f64::NAN),
                        ]);
                    }
                    table.note(format!(
                        "averaged fringe visibility is zero at c = {c}, theta = {theta}; \
                         port intensities undefined"
                    ));
                    code = 2;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    write_table(cfg, &table)?;
    Ok(code)
}
