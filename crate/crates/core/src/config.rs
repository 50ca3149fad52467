//! TOML run configuration.
//!
//! Every key is optional and falls back to the built-in default; unknown keys
//! are rejected. Diagnostics carry the 1-based line of the offending value.
//! [`RunConfig::to_toml`] writes the fully resolved configuration, which
//! parses back to an equal value.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::analysis::PeakLabel;
use crate::error::{Error, Result};
use crate::model::{calibrate_spike, mode_matched_omega, PhysicalParams, TrapGeometry};
use crate::simulation::{Numerics, Scenario};

/// Environment variable consulted when no thread count is given.
pub const THREADS_ENV: &str = "RINGSPLIT_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhysicalConfig {
    /// Atomic mass units.
    pub m1: f64,
    pub m2: f64,
    pub n1: f64,
    pub n2: f64,
    /// Metres.
    pub a11: f64,
    pub a22: f64,
    /// In units of `a11`.
    pub a12: f64,
    /// Transverse trap frequency `omega_perp / 2 pi` in Hz.
    pub f_perp: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrapConfig {
    pub r0: f64,
    pub d0: f64,
    pub sigma: f64,
    /// Radial frequency in units of `omega_perp`.
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericsConfig {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub n_steps: u64,
    pub sample_every: u64,
    /// Reserved; the dynamics are deterministic.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub r0_values: Vec<f64>,
    /// In units of `a11`.
    pub a12_values: Vec<f64>,
    pub target: String,
    pub levels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: String,
    /// Density snapshot times in units of `1/omega_perp`.
    pub snapshot_times: Vec<f64>,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub physical: PhysicalConfig,
    pub trap: TrapConfig,
    pub numerics: NumericsConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

type S<T> = Option<Spanned<T>>;

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    physical: RawPhysical,
    #[serde(default)]
    trap: RawTrap,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysical {
    m1: S<f64>,
    m2: S<f64>,
    n1: S<f64>,
    n2: S<f64>,
    a11: S<f64>,
    a22: S<f64>,
    a12: S<f64>,
    f_perp: S<f64>,
    lambda: S<f64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrap {
    r0: S<f64>,
    d0: S<f64>,
    sigma: S<f64>,
    omega: S<f64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    n: S<i64>,
    dx: S<f64>,
    dt: S<f64>,
    n_steps: S<i64>,
    sample_every: S<i64>,
    seed: S<i64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    r0_values: S<Vec<f64>>,
    a12_values: S<Vec<f64>>,
    target: S<String>,
    levels: S<Vec<f64>>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: S<String>,
    snapshot_times: S<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PhysicalParams::default();
        let g = TrapGeometry::default();
        let n = Numerics::default();
        RunConfig {
            physical: PhysicalConfig {
                m1: p.m1,
                m2: p.m2,
                n1: p.n1,
                n2: p.n2,
                a11: p.a11,
                a22: p.a22,
                a12: 0.3,
                f_perp: p.omega_perp / (2.0 * std::f64::consts::PI),
                lambda: p.lambda,
            },
            trap: TrapConfig {
                r0: g.r0,
                d0: g.d0,
                sigma: g.sigma,
                omega: g.omega,
            },
            numerics: NumericsConfig {
                n: n.n,
                dx: n.dx,
                dt: n.dt,
                n_steps: n.n_steps,
                sample_every: n.sample_every,
                seed: 0,
            },
            sweep: SweepConfig {
                r0_values: vec![10.0, 11.0, 12.0, 13.0, 14.0],
                a12_values: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
                target: PeakLabel::One.name().to_string(),
                levels: vec![0.9, 0.95, 0.98],
            },
            output: OutputConfig {
                dir: "out".into(),
                snapshot_times: Vec::new(),
            },
        }
    }
}

/// Maps byte offsets to 1-based line numbers.
struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn of(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err(&self, span: Range<usize>, msg: impl Into<String>) -> Error {
        Error::Config {
            line: self.of(span),
            msg: msg.into(),
        }
    }
}

fn take<T: Clone>(v: &S<T>, default: T) -> (T, Range<usize>) {
    match v {
        Some(s) => (s.get_ref().clone(), s.span()),
        None => (default, 0..0),
    }
}

impl RunConfig {
    /// Parses and validates TOML text.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let lines = Lines(text);
        let raw: RawFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| lines.of(s)).unwrap_or(0);
            Error::Config {
                line,
                msg: e.message().trim().to_string(),
            }
        })?;
        resolve(raw, &lines)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    /// Resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Writes the resolved configuration next to an output file.
    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn physical_params(&self) -> PhysicalParams {
        let p = &self.physical;
        PhysicalParams {
            m1: p.m1,
            m2: p.m2,
            n1: p.n1,
            n2: p.n2,
            a11: p.a11,
            a22: p.a22,
            a12: p.a12 * p.a11,
            omega_perp: 2.0 * std::f64::consts::PI * p.f_perp,
            lambda: p.lambda,
        }
    }

    pub fn scenario(&self) -> Scenario {
        let t = &self.trap;
        let n = &self.numerics;
        Scenario {
            physical: self.physical_params(),
            geometry: TrapGeometry {
                omega: t.omega,
                sigma: t.sigma,
                r0: t.r0,
                d0: t.d0,
            },
            numerics: Numerics {
                n: n.n,
                dx: n.dx,
                dt: n.dt,
                n_steps: n.n_steps,
                sample_every: n.sample_every,
            },
        }
    }

    pub fn target(&self) -> PeakLabel {
        PeakLabel::parse(&self.sweep.target).expect("validated on parse")
    }
}

fn positive(lines: &Lines, name: &str, (v, span): (f64, Range<usize>)) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(lines.err(span, format!("{name} must be positive and finite, got {v}")))
    }
}

fn resolve(raw: RawFile, lines: &Lines) -> Result<RunConfig> {
    let d = RunConfig::default();
    let rp = &raw.physical;
    let a11 = positive(lines, "physical.a11", take(&rp.a11, d.physical.a11))?;
    let a22 = positive(lines, "physical.a22", take(&rp.a22, d.physical.a22))?;
    for (name, v, span) in [("a11", a11, take(&rp.a11, 0.0).1), ("a22", a22, take(&rp.a22, 0.0).1)] {
        if v > 1e-6 {
            return Err(lines.err(span, format!("physical.{name} = {v} is not a length in metres")));
        }
    }
    let (a12, a12_span) = take(&rp.a12, d.physical.a12);
    if !(0.0..=100.0).contains(&a12) {
        return Err(lines.err(a12_span, format!("physical.a12 is a ratio to a11 in [0, 100], got {a12}")));
    }
    let physical = PhysicalConfig {
        m1: positive(lines, "physical.m1", take(&rp.m1, d.physical.m1))?,
        m2: positive(lines, "physical.m2", take(&rp.m2, d.physical.m2))?,
        n1: positive(lines, "physical.n1", take(&rp.n1, d.physical.n1))?,
        n2: positive(lines, "physical.n2", take(&rp.n2, d.physical.n2))?,
        a11,
        a22,
        a12,
        f_perp: positive(lines, "physical.f_perp", take(&rp.f_perp, d.physical.f_perp))?,
        lambda: positive(lines, "physical.lambda", take(&rp.lambda, d.physical.lambda))?,
    };

    let rt = &raw.trap;
    let r0 = positive(lines, "trap.r0", take(&rt.r0, d.trap.r0))?;
    let d0 = positive(lines, "trap.d0", take(&rt.d0, d.trap.d0))?;
    // the waist follows r0 unless given
    let sigma = positive(lines, "trap.sigma", take(&rt.sigma, r0 * d.trap.sigma / d.trap.r0))?;
    let omega = positive(lines, "trap.omega", take(&rt.omega, mode_matched_omega(r0, d0, sigma)))?;
    if let Err(e) = calibrate_spike(omega, sigma, r0) {
        let span = rt
            .sigma
            .as_ref()
            .or(rt.r0.as_ref())
            .or(rt.omega.as_ref())
            .map(|s| s.span())
            .unwrap_or(0..0);
        return Err(lines.err(span, format!("trap: {e}")));
    }
    let trap = TrapConfig { r0, d0, sigma, omega };

    let rn = &raw.numerics;
    let (n, n_span) = take(&rn.n, d.numerics.n as i64);
    if n < 8 || (n as u64).count_ones() != 1 {
        return Err(lines.err(n_span, format!("numerics.n must be a power of two >= 8, got {n}")));
    }
    let (n_steps, steps_span) = take(&rn.n_steps, d.numerics.n_steps as i64);
    if n_steps < 0 {
        return Err(lines.err(steps_span, format!("numerics.n_steps must be >= 0, got {n_steps}")));
    }
    let (every, every_span) = take(&rn.sample_every, d.numerics.sample_every as i64);
    if every < 1 {
        return Err(lines.err(every_span, format!("numerics.sample_every must be >= 1, got {every}")));
    }
    let (seed, seed_span) = take(&rn.seed, 0);
    if seed < 0 {
        return Err(lines.err(seed_span, format!("numerics.seed must be >= 0, got {seed}")));
    }
    let numerics = NumericsConfig {
        n: n as usize,
        dx: positive(lines, "numerics.dx", take(&rn.dx, d.numerics.dx))?,
        dt: positive(lines, "numerics.dt", take(&rn.dt, d.numerics.dt))?,
        n_steps: n_steps as u64,
        sample_every: every as u64,
        seed: seed as u64,
    };

    let rs = &raw.sweep;
    let (r0_values, span) = take(&rs.r0_values, d.sweep.r0_values.clone());
    if r0_values.is_empty() || r0_values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(lines.err(span, "sweep.r0_values must be a non-empty list of positive radii"));
    }
    let (a12_values, span) = take(&rs.a12_values, d.sweep.a12_values.clone());
    if a12_values.is_empty() || a12_values.iter().any(|v| !(*v >= 0.0 && *v <= 100.0)) {
        return Err(lines.err(span, "sweep.a12_values must be a non-empty list of ratios in [0, 100]"));
    }
    let (target, span) = take(&rs.target, d.sweep.target.clone());
    let target = PeakLabel::parse(&target)
        .ok_or_else(|| lines.err(span, format!("sweep.target must be one of S1/2, S1, S3/2, S2, got {target:?}")))?
        .name()
        .to_string();
    let (levels, span) = take(&rs.levels, d.sweep.levels.clone());
    if levels.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
        return Err(lines.err(span, "sweep.levels must lie in (0, 1]"));
    }
    let sweep = SweepConfig {
        r0_values,
        a12_values,
        target,
        levels,
    };

    let ro = &raw.output;
    let (dir, _) = take(&ro.dir, d.output.dir.clone());
    let (snapshot_times, span) = take(&ro.snapshot_times, Vec::new());
    if snapshot_times.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(lines.err(span, "output.snapshot_times must be non-negative"));
    }
    let output = OutputConfig { dir, snapshot_times };

    Ok(RunConfig {
        physical,
        trap,
        numerics,
        sweep,
        output,
    })
}

/// Thread count from an explicit value, then the environment, then 1.
pub fn resolve_threads(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&n| n > 0)
        .unwrap_or(1)
}
