//! Closed-form revival formulas, revival-time studies and the separability
//! parameter sweep.
//!
//! The interference-maxima expressions behind the revival law carry
//! unspecified proportionality constants, so only their consequences are
//! exposed here: the free width, the fringe separation and the revival times.

use std::f64::consts::PI;

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Species;
use crate::observables::{detect_peaks, measure_revival_time, TimeSeries, DEFAULT_PROMINENCE};
use crate::simulation::Scenario;

/// `pi r0^2 p` for species 1 and `(m2/m1) pi r0^2 p` for species 2.
pub fn analytic_revival_time(r0: f64, species: Species, p: u32, mass_ratio: f64) -> f64 {
    let base = PI * r0 * r0 * f64::from(p);
    if species == 0 {
        base
    } else {
        mass_ratio * base
    }
}

/// `(m2/m1 - 1) pi r0^2`.
pub fn analytic_revival_difference(r0: f64, mass_ratio: f64) -> f64 {
    (mass_ratio - 1.0) * PI * r0 * r0
}

/// Width of a freely expanding Gaussian of initial width `w_i` after time `t`.
pub fn free_width(w_i: f64, t: f64, species: Species, mass_ratio: f64) -> f64 {
    let speed = if species == 0 { 2.0 } else { 2.0 / mass_ratio };
    (w_i * w_i + (speed * t / w_i).powi(2)).sqrt()
}

/// Effective fringe separation `4 pi t / D` (divided by `m2/m1` for species 2)
/// of two packets initially a distance `d` apart.
pub fn fringe_separation(t: f64, d: f64, species: Species, mass_ratio: f64) -> f64 {
    let base = 4.0 * PI * t / d;
    if species == 0 {
        base
    } else {
        base / mass_ratio
    }
}

/// Time at which the fringe separation equals `2 pi r0 p` with `D = 2 pi r0`,
/// obtained by inverting [`fringe_separation`].
pub fn revival_from_fringes(r0: f64, species: Species, p: u32, mass_ratio: f64) -> f64 {
    let d = 2.0 * PI * r0;
    let target = 2.0 * PI * r0 * f64::from(p);
    // fringe_separation is linear in t
    target / fringe_separation(1.0, d, species, mass_ratio)
}

/// Default fractional window around the analytic guess when measuring
/// revivals of interacting runs.
pub const REVIVAL_WINDOW: f64 = 0.15;

/// Revival times of both species measured from a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RevivalPair {
    pub t1: f64,
    pub t2: f64,
}

impl RevivalPair {
    pub fn difference(&self) -> f64 {
        self.t2 - self.t1
    }
}

/// Measures both revival times of a series around their analytic guesses.
pub fn measure_revivals(series: &TimeSeries, r0: f64, mass_ratio: f64, window: f64) -> Result<RevivalPair> {
    let g1 = analytic_revival_time(r0, 0, 1, mass_ratio);
    let g2 = analytic_revival_time(r0, 1, 1, mass_ratio);
    let t1 = measure_revival_time(&series.t, &series.ac1, g1, window)?;
    let t2 = measure_revival_time(&series.t, &series.ac2, g2, window)?;
    Ok(RevivalPair { t1, t2 })
}

/// Scenario long enough to see both first revivals inside the window.
fn revival_run(base: &Scenario, r0: f64, a12: f64, window: f64) -> Scenario {
    let s = base.with_r0(r0).with_a12_ratio(a12);
    let t_end = analytic_revival_time(r0, 1, 1, s.physical.mass_ratio()) * (1.0 + window) + 5.0;
    s.with_duration(t_end)
}

fn run_revivals(base: &Scenario, r0: f64, a12: f64, window: f64) -> Result<RevivalPair> {
    let s = revival_run(base, r0, a12, window);
    let out = s.run(None)?;
    measure_revivals(&out.series, r0, s.physical.mass_ratio(), window)
}

/// One point of a revival-difference curve; failed points keep their error.
#[derive(Debug)]
pub struct CurvePoint {
    pub r0: f64,
    pub revivals: Result<RevivalPair>,
}

/// Measured `T_R2 - T_R1` for each radius at interspecies ratio `a12`.
pub fn revival_difference_curve(base: &Scenario, r0_list: &[f64], a12: f64) -> Vec<CurvePoint> {
    r0_list
        .iter()
        .map(|&r0| {
            let revivals = run_revivals(base, r0, a12, REVIVAL_WINDOW);
            if let Err(e) = &revivals {
                warn!("revival measurement failed at r0 = {r0}, a12 = {a12}: {e}");
            }
            CurvePoint { r0, revivals }
        })
        .collect()
}

/// Both species' revival times for each interspecies ratio at fixed `r0`.
pub fn revival_vs_interaction(base: &Scenario, r0: f64, a12_list: &[f64]) -> Vec<(f64, Result<RevivalPair>)> {
    a12_list
        .iter()
        .map(|&a12| (a12, run_revivals(base, r0, a12, REVIVAL_WINDOW)))
        .collect()
}

/// Least-squares `c` in `y = c x^2` and the coefficient of determination.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let num: f64 = x.iter().zip(y).map(|(x, y)| x * x * y).sum();
    let den: f64 = x.iter().map(|x| x.powi(4)).sum();
    let c = num / den;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(x, y)| (y - c * x * x).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (c, r2)
}

/// Separability peak labels at `k/2` multiples of the species-2 revival.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PeakLabel {
    Half,
    One,
    ThreeHalves,
    Two,
}

impl PeakLabel {
    pub const ALL: [PeakLabel; 4] = [PeakLabel::Half, PeakLabel::One, PeakLabel::ThreeHalves, PeakLabel::Two];

    /// Multiple of `T_R2` the label refers to.
    pub fn multiple(self) -> f64 {
        match self {
            PeakLabel::Half => 0.5,
            PeakLabel::One => 1.0,
            PeakLabel::ThreeHalves => 1.5,
            PeakLabel::Two => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PeakLabel::Half => "S1/2",
            PeakLabel::One => "S1",
            PeakLabel::ThreeHalves => "S3/2",
            PeakLabel::Two => "S2",
        }
    }

    pub fn parse(s: &str) -> Option<PeakLabel> {
        match s.trim() {
            "S1/2" | "S_1/2" | "half" => Some(PeakLabel::Half),
            "S1" | "S_1" | "one" => Some(PeakLabel::One),
            "S3/2" | "S_3/2" | "three_halves" => Some(PeakLabel::ThreeHalves),
            "S2" | "S_2" | "two" => Some(PeakLabel::Two),
            _ => None,
        }
    }
}

/// A labelled separability maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparabilityPeak {
    pub label: PeakLabel,
    pub t: f64,
    pub value: f64,
    /// Full width of the region around the peak where `S >= 0.9 * value`.
    pub width90: f64,
}

/// The four labelled peaks, in time order. Missing labels are absent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeparabilityPeaks {
    pub peaks: Vec<SeparabilityPeak>,
}

impl SeparabilityPeaks {
    pub fn get(&self, label: PeakLabel) -> Option<&SeparabilityPeak> {
        self.peaks.iter().find(|p| p.label == label)
    }
}

/// Half-width of the search window around each `k/2 T_R2`, as a fraction
/// of `T_R2`.
pub const LABEL_WINDOW: f64 = 0.05;

fn width_at_fraction(t: &[f64], y: &[f64], index: usize, level: f64) -> f64 {
    let mut a = index;
    while a > 0 && y[a] >= level {
        a -= 1;
    }
    let left = if y[a] >= level {
        t[a]
    } else {
        t[a] + (level - y[a]) / (y[a + 1] - y[a]) * (t[a + 1] - t[a])
    };
    let mut b = index;
    while b + 1 < y.len() && y[b] >= level {
        b += 1;
    }
    let right = if y[b] >= level {
        t[b]
    } else {
        t[b - 1] + (level - y[b - 1]) / (y[b] - y[b - 1]) * (t[b] - t[b - 1])
    };
    right - left
}

/// Labels the most prominent separability peak near each `k/2 T_R2`.
///
/// Within `t_r2 * (k/2 +- LABEL_WINDOW)` the highest detected peak wins.
pub fn separability_scan(series: &TimeSeries, t_r2: f64) -> Result<SeparabilityPeaks> {
    let peaks = detect_peaks(&series.t, &series.s, DEFAULT_PROMINENCE)?;
    let mut out = SeparabilityPeaks::default();
    for label in PeakLabel::ALL {
        let centre = label.multiple() * t_r2;
        let (lo, hi) = (centre - LABEL_WINDOW * t_r2, centre + LABEL_WINDOW * t_r2);
        let best = peaks
            .iter()
            .filter(|p| p.t >= lo && p.t <= hi)
            .fold(None, |best: Option<&crate::observables::Peak>, p| match best {
                Some(b) if b.height >= p.height => Some(b),
                _ => Some(p),
            });
        if let Some(p) = best {
            out.peaks.push(SeparabilityPeak {
                label,
                t: p.t,
                value: p.height.min(1.0),
                width90: width_at_fraction(&series.t, &series.s, p.index, 0.9 * p.height),
            });
        }
    }
    Ok(out)
}

/// Outcome of one sweep cell.
#[derive(Clone, Debug, PartialEq)]
pub enum CellResult {
    Ok { value: f64, t: f64 },
    Failed(String),
}

impl CellResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            CellResult::Ok { value, .. } => Some(*value),
            CellResult::Failed(_) => None,
        }
    }
}

/// Separability yield over `(r0, a12)`; `cells[i][j]` belongs to
/// `r0_values[i]`, `a12_values[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub r0_values: Vec<f64>,
    pub a12_values: Vec<f64>,
    pub target: PeakLabel,
    pub cells: Vec<Vec<CellResult>>,
}

impl SweepResult {
    /// Yield table with failed cells as NaN.
    pub fn yield_table(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|c| c.value().unwrap_or(f64::NAN)).collect())
            .collect()
    }

    /// `a12` with the highest yield for each radius (`None` if all failed).
    pub fn argmax_a12(&self) -> Vec<(f64, Option<f64>)> {
        self.r0_values
            .iter()
            .zip(&self.cells)
            .map(|(&r0, row)| {
                let best = row
                    .iter()
                    .zip(&self.a12_values)
                    .filter_map(|(c, &a)| c.value().map(|v| (v, a)))
                    .fold(None, |best: Option<(f64, f64)>, (v, a)| match best {
                        Some((bv, _)) if bv >= v => best,
                        _ => Some((v, a)),
                    });
                (r0, best.map(|(_, a)| a))
            })
            .collect()
    }
}

/// Iso-yield contours with `r0` along x and `a12` along y.
pub fn sweep_contours(result: &SweepResult, levels: &[f64]) -> Vec<crate::contour::ContourSet> {
    crate::contour::extract_contours(&result.r0_values, &result.a12_values, &result.yield_table(), levels)
}

/// Evaluates one sweep cell: runs long enough to reach the target label and
/// returns its separability.
pub fn sweep_cell(base: &Scenario, r0: f64, a12: f64, target: PeakLabel) -> Result<(f64, f64)> {
    let s = base.with_r0(r0).with_a12_ratio(a12);
    let t_r2 = analytic_revival_time(r0, 1, 1, s.physical.mass_ratio());
    let s = s.with_duration(t_r2 * (target.multiple() + LABEL_WINDOW) + 2.0);
    let out = s.run(None)?;
    let peaks = separability_scan(&out.series, t_r2)?;
    let p = peaks.get(target).ok_or_else(|| {
        Error::Degenerate(format!("no separability peak near {} at r0 = {r0}, a12 = {a12}", target.name()))
    })?;
    Ok((p.value, p.t))
}

/// Runs every `(r0, a12)` cell, at most `threads` at a time.
pub fn sweep(
    base: &Scenario,
    r0_values: &[f64],
    a12_values: &[f64],
    target: PeakLabel,
    threads: usize,
) -> Result<SweepResult> {
    if r0_values.is_empty() || a12_values.is_empty() {
        return Err(Error::InvalidParameter("sweep ranges must be non-empty".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..r0_values.len())
        .flat_map(|i| (0..a12_values.len()).map(move |j| (i, j)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<((usize, usize), CellResult)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, j)| {
                let (r0, a12) = (r0_values[i], a12_values[j]);
                let cell = match sweep_cell(base, r0, a12, target) {
                    Ok((value, t)) => CellResult::Ok { value, t },
                    Err(e) => CellResult::Failed(e.to_string()),
                };
                info!("sweep cell r0 = {r0}, a12 = {a12}: {cell:?}");
                ((i, j), cell)
            })
            .collect()
    });
    let mut cells = vec![vec![CellResult::Failed("not run".into()); a12_values.len()]; r0_values.len()];
    for ((i, j), c) in results {
        cells[i][j] = c;
    }
    Ok(SweepResult {
        r0_values: r0_values.to_vec(),
        a12_values: a12_values.to_vec(),
        target,
        cells,
    })
}
