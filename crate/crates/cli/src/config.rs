//! Flag resolution: raw command-line strings plus an optional `key=value`
//! file become one validated [`RunConfig`]. Flags always win over the file;
//! the file wins over built-in defaults.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};

use crate::{CommonArgs, Format, Scheme};

/// Environment variable prepended to relative `--output` paths.
pub const OUTPUT_DIR_VAR: &str = "GEOMPHASE_OUTPUT_DIR";
/// Environment variable consulted when `--threads` is absent.
pub const THREADS_VAR: &str = "GEOMPHASE_THREADS";

/// A parameter that is either pinned or swept over an inclusive range.
#[derive(Clone, Copy, Debug)]
pub enum Sweep {
    Fixed(f64),
    /// `start:stop:count`; a count of zero means only the bounds were
    /// given, which is enough for brackets and search boxes but not for
    /// sampling.
    Range { start: f64, stop: f64, count: usize },
}

impl Sweep {
    pub fn is_swept(&self) -> bool {
        matches!(self, Sweep::Range { .. })
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Sweep::Fixed(v) => (v, v),
            Sweep::Range { start, stop, .. } => (start, stop),
        }
    }

    /// The sampled values, endpoints included.
    pub fn points(&self) -> Result<Vec<f64>> {
        match *self {
            Sweep::Fixed(v) => Ok(vec![v]),
            Sweep::Range { start, .. } if self.count() == 1 => Ok(vec![start]),
            Sweep::Range { start, stop, count } => {
                ensure!(
                    count >= 1,
                    "range {start}:{stop} needs a point count (start:stop:count)"
                );
                Ok((0..count)
                    .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                    .collect())
            }
        }
    }

    fn count(&self) -> usize {
        match *self {
            Sweep::Fixed(_) => 1,
            Sweep::Range { count, .. } => count,
        }
    }

    pub fn echo(&self) -> String {
        match *self {
            Sweep::Fixed(v) => format!("{v}"),
            Sweep::Range { start, stop, count: 0 } => format!("{start}:{stop}"),
            Sweep::Range { start, stop, count } => format!("{start}:{stop}:{count}"),
        }
    }
}

/// Everything a command needs, after defaults and file merging.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: &'static str,
    pub c: Option<Sweep>,
    pub theta: Sweep,
    pub gamma: Option<Sweep>,
    pub steps: usize,
    pub realizations: u64,
    pub seed: u64,
    pub bins: usize,
    pub i0: f64,
    pub scheme: Option<Scheme>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
}

impl RunConfig {
    /// The full configuration as ordered `(key, value)` pairs for output
    /// headers, restricted to the fields the command consumes. Execution
    /// details (thread count, output path) stay out: files must be
    /// byte-identical across thread counts.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let mut pairs = vec![("command", self.command.to_string())];
        if let Some(c) = &self.c {
            pairs.push(("c", c.echo()));
        }
        match self.command {
            "postselected" => pairs.push(("theta", self.theta.echo())),
            "distribution" => {
                pairs.push(("theta", self.theta.echo()));
                pairs.push(("steps", self.steps.to_string()));
                pairs.push(("realizations", self.realizations.to_string()));
                pairs.push(("seed", self.seed.to_string()));
                pairs.push(("bins", self.bins.to_string()));
            }
            "chern" => {}
            "critical" => pairs.push(("theta", self.theta.echo())),
            "interferometer" => {
                let scheme = self.scheme.expect("resolved");
                pairs.push(("scheme", format!("{scheme:?}").to_lowercase()));
                pairs.push(("theta", self.theta.echo()));
                if let Some(g) = &self.gamma {
                    pairs.push(("gamma", g.echo()));
                }
                if self.scheme == Some(Scheme::Averaged) {
                    pairs.push(("steps", self.steps.to_string()));
                }
                pairs.push(("i0", self.i0.to_string()));
            }
            _ => unreachable!("unknown command"),
        }
        pairs.push(("format", format!("{:?}", self.format).to_lowercase()));
        pairs
    }
}

/// An angle in radians: a decimal, or a fraction of pi such as `pi`,
/// `pi/4`, `3pi/4`, `0.5pi`, `-pi/3`, `2pi`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim();
    if let Some(at) = t.find("pi") {
        let coefficient = match &t[..at] {
            "" | "+" => 1.0,
            "-" => -1.0,
            head => head
                .parse::<f64>()
                .with_context(|| format!("bad pi coefficient in angle '{s}'"))?,
        };
        let tail = &t[at + 2..];
        let denominator = if tail.is_empty() {
            1.0
        } else if let Some(d) = tail.strip_prefix('/') {
            let d: f64 = d
                .parse()
                .with_context(|| format!("bad pi denominator in angle '{s}'"))?;
            ensure!(d != 0.0, "zero denominator in angle '{s}'");
            d
        } else {
            bail!("unrecognized angle '{s}'");
        };
        Ok(coefficient * PI / denominator)
    } else {
        t.parse()
            .with_context(|| format!("unrecognized angle '{s}'"))
    }
}

/// `start:stop` or `start:stop:count`, each bound parsed by `elem`.
fn parse_range(s: &str, elem: impl Fn(&str) -> Result<f64>) -> Result<Sweep> {
    let parts: Vec<&str> = s.split(':').collect();
    ensure!(
        parts.len() == 2 || parts.len() == 3,
        "range '{s}' is not start:stop:count"
    );
    let start = elem(parts[0])?;
    let stop = elem(parts[1])?;
    ensure!(start <= stop, "range '{s}' runs backwards");
    let count = if parts.len() == 3 {
        let count: usize = parts[2]
            .parse()
            .with_context(|| format!("bad point count in range '{s}'"))?;
        ensure!(count >= 1, "range '{s}' has no points");
        count
    } else {
        0
    };
    Ok(Sweep::Range { start, stop, count })
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .with_context(|| format!("not a number: '{s}'"))
}

/// The `key = value` defaults file: `#` comments and blank lines ignored,
/// unknown keys rejected.
fn parse_file(path: &PathBuf) -> Result<HashMap<String, String>> {
    const KEYS: &[&str] = &[
        "c",
        "c-range",
        "theta",
        "theta-range",
        "gamma",
        "gamma-range",
        "steps",
        "n",
        "realizations",
        "seed",
        "bins",
        "i0",
        "scheme",
        "output",
        "format",
        "threads",
    ];
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected key = value, got '{line}'",
                path.display(),
                lineno + 1
            );
        };
        let key = key.trim();
        ensure!(
            KEYS.contains(&key),
            "{}:{}: unknown key '{key}'",
            path.display(),
            lineno + 1
        );
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// One field's flag / file / default cascade.
struct Cascade {
    file: Option<HashMap<String, String>>,
}

impl Cascade {
    fn string(&self, flag: Option<&String>, key: &str) -> Option<String> {
        flag.cloned()
            .or_else(|| self.file.as_ref()?.get(key).cloned())
    }

    fn parsed<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::error::Error + Send + Sync + 'static,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.as_ref().and_then(|f| f.get(key)) {
            Some(raw) => Ok(Some(
                raw.parse()
                    .with_context(|| format!("config key {key} = '{raw}'"))?,
            )),
            None => Ok(None),
        }
    }

    /// `--x` / `--x-range` pair resolved into one sweep.
    fn sweep(
        &self,
        scalar_flag: Option<&String>,
        range_flag: Option<&String>,
        key: &str,
        elem: impl Fn(&str) -> Result<f64> + Copy,
    ) -> Result<Option<Sweep>> {
        let scalar = self.string(scalar_flag, key);
        let range = self.string(range_flag, &format!("{key}-range"));
        match (scalar, range) {
            (Some(s), None) => Ok(Some(Sweep::Fixed(elem(&s)?))),
            (None, Some(r)) => Ok(Some(parse_range(&r, elem)?)),
            (None, None) => Ok(None),
            (Some(_), Some(_)) => bail!("--{key} and --{key}-range are mutually exclusive"),
        }
    }
}

/// Merges flags, config file, environment, and defaults into a validated
/// [`RunConfig`] for `command`.
pub fn resolve(
    command: &'static str,
    args: &CommonArgs,
    scheme: Option<Scheme>,
) -> Result<RunConfig> {
    let cascade = Cascade {
        file: args.config.as_ref().map(parse_file).transpose()?,
    };

    let c = cascade.sweep(
        args.c.as_ref(),
        args.c_range.as_ref(),
        "c",
        parse_float,
    )?;
    if let Some(c) = &c {
        let (lo, _) = c.bounds();
        ensure!(lo >= 0.0, "measurement strength c must be nonnegative");
    }
    let theta = cascade.sweep(
        args.theta.as_ref(),
        args.theta_range.as_ref(),
        "theta",
        parse_angle,
    )?;
    if let Some(theta) = &theta {
        let (lo, hi) = theta.bounds();
        ensure!(
            (0.0..=PI + 1e-12).contains(&lo) && hi <= PI + 1e-12,
            "theta must stay inside [0, pi]"
        );
    }
    let gamma = cascade.sweep(
        args.gamma.as_ref(),
        args.gamma_range.as_ref(),
        "gamma",
        parse_angle,
    )?;

    let steps = cascade
        .parsed(args.steps, "steps")?
        .or(cascade.parsed(None, "n")?)
        .unwrap_or(500);
    ensure!(steps >= 3, "a ring needs at least 3 measurements");
    let realizations = cascade.parsed(args.realizations, "realizations")?.unwrap_or(4000);
    let seed = cascade.parsed(args.seed, "seed")?.unwrap_or(0);
    let bins = cascade.parsed(args.bins, "bins")?.unwrap_or(64);
    ensure!(bins >= 1, "need at least one histogram bin");
    let i0 = cascade.parsed(args.i0, "i0")?.unwrap_or(1.0);
    ensure!(i0 > 0.0, "input intensity i0 must be positive");
    let scheme = match scheme {
        Some(s) => Some(s),
        None => cascade
            .string(None, "scheme")
            .map(|s| Scheme::from_config(&s))
            .transpose()?,
    };
    let output = match &args.output {
        Some(p) => Some(p.clone()),
        None => cascade.string(None, "output").map(PathBuf::from),
    };
    let format = match args.format {
        Some(f) => f,
        None => cascade
            .string(None, "format")
            .map(|s| Format::from_config(&s))
            .transpose()?
            .unwrap_or(Format::Csv),
    };
    let threads = match args.threads {
        Some(t) => t,
        None => match std::env::var(THREADS_VAR) {
            Ok(raw) => raw
                .parse()
                .with_context(|| format!("{THREADS_VAR} = '{raw}'"))?,
            Err(_) => cascade.parsed(None, "threads")?.unwrap_or(0),
        },
    };

    // Per-command requirements and defaults.
    let needs_c = matches!(
        command,
        "postselected" | "distribution" | "chern" | "interferometer"
    );
    if needs_c && c.is_none() {
        bail!("{command} needs --c or --c-range");
    }
    if command == "critical" && matches!(c, Some(Sweep::Fixed(_))) {
        bail!("critical takes --c-range (a bracket), not --c");
    }
    let theta = match (command, theta) {
        ("critical", Some(t @ Sweep::Range { .. })) => t,
        ("critical", Some(Sweep::Fixed(_))) => {
            bail!("critical takes --theta-range (a search box side), not --theta")
        }
        ("critical", None) => Sweep::Range {
            start: 0.5,
            stop: 1.5,
            count: 0,
        },
        (_, Some(t)) => t,
        (_, None) => Sweep::Fixed(PI / 4.0),
    };
    match command {
        "distribution" => {
            ensure!(
                realizations >= 100,
                "distribution needs at least 100 realizations"
            );
            ensure!(!theta.is_swept(), "distribution takes a single theta");
        }
        "interferometer" => {
            ensure!(scheme.is_some(), "interferometer needs --scheme");
            ensure!(
                !c.expect("checked above").is_swept(),
                "interferometer takes a single c"
            );
            ensure!(!theta.is_swept(), "interferometer takes a single theta");
        }
        _ => {}
    }
    let gamma = match (command, gamma) {
        ("interferometer", Some(g)) => Some(g),
        ("interferometer", None) => Some(Sweep::Range {
            start: 0.0,
            stop: 2.0 * PI,
            count: 65,
        }),
        (_, g) => g,
    };

    Ok(RunConfig {
        command,
        c,
        theta,
        gamma,
        steps,
        realizations,
        seed,
        bins,
        i0,
        scheme,
        output,
        format,
        threads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_parse_in_both_spellings() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("-pi/3").unwrap(), -PI / 3.0);
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        assert!(parse_angle("pit").is_err());
        assert!(parse_angle("pi/0").is_err());
    }

    #[test]
    fn ranges_are_inclusive_and_ordered() {
        let sweep = parse_range("0:pi:5", parse_angle).unwrap();
        let points = sweep.points().unwrap();
        assert_eq!(points.len(), 5);
        assert_eq!(points[0], 0.0);
        assert_eq!(points[4], PI);
        assert!(parse_range("2:1:5", parse_float).is_err());
        assert!(parse_range("1:2:0", parse_float).is_err());
        let bare = parse_range("2.0:4.5", parse_float).unwrap();
        assert_eq!(bare.bounds(), (2.0, 4.5));
        assert!(bare.points().is_err());
    }
}
