//! Fast invariant self-checks run by the `check` subcommand.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::analysis::{analytic_revival_difference, analytic_revival_time};
use crate::error::Result;
use crate::grid::{forward_transform, inverse_transform, make_grid, ComplexField2D};
use crate::model::{PhysicalParams, TrapGeometry};
use crate::observables::{autocorrelation, separability};
use crate::simulation::{Numerics, Scenario};

/// Outcome of one self-check.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, value: f64, tol: f64, what: &str) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: value.is_finite() && value <= tol,
        detail: format!("{what} = {value:.3e} (tolerance {tol:.1e})"),
    }
}

fn gaussian(grid: std::sync::Arc<crate::grid::Grid2D>, cx: f64, w: f64) -> ComplexField2D {
    let mut f = ComplexField2D::from_fn(grid, |x, y| {
        Complex64::new((-((x - cx).powi(2) + y * y) / (2.0 * w * w)).exp(), 0.0)
    });
    f.normalize().expect("non-zero Gaussian");
    f
}

fn fft_round_trip() -> Result<CheckOutcome> {
    let grid = make_grid(64, 0.3)?;
    let f = ComplexField2D::from_fn(grid, |x, y| Complex64::new((-(x * x + y * y) / 4.0).exp(), (0.3 * x).sin()));
    let back = inverse_transform(&forward_transform(&f));
    let err = f
        .values
        .iter()
        .zip(back.values.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(outcome("fft round trip", err, 1e-12, "max error"))
}

fn gaussian_identities() -> Result<Vec<CheckOutcome>> {
    let grid = make_grid(256, 0.1)?;
    let (w, s) = (1.0, 2.0);
    let a = gaussian(grid.clone(), -s / 2.0, w);
    let b = gaussian(grid, s / 2.0, w);
    let ac = autocorrelation(&a, &b)?;
    let sep = separability(&a, &b)?;
    Ok(vec![
        outcome(
            "gaussian overlap",
            (ac - (-s * s / (2.0 * w * w)).exp()).abs(),
            1e-6,
            "|AC - exp(-s^2/2w^2)|",
        ),
        outcome(
            "gaussian separability",
            (sep - (1.0 - (-s * s / (w * w)).exp())).abs(),
            1e-6,
            "|S - (1 - exp(-s^2/w^2))|",
        ),
    ])
}

fn short_run() -> Result<Vec<CheckOutcome>> {
    let scenario = Scenario {
        physical: PhysicalParams {
            a12: 0.3 * 2.698e-9,
            ..Default::default()
        },
        geometry: TrapGeometry::mode_matched(6.0, 0.75, 6.0),
        numerics: Numerics {
            n: 128,
            dx: 0.25,
            dt: 0.0915,
            n_steps: 400,
            sample_every: 40,
        },
    };
    let out = scenario.run(None)?;
    let ts = &out.series;
    let norm = ts
        .norm1
        .iter()
        .chain(&ts.norm2)
        .map(|n| (n - 1.0).abs())
        .fold(0.0, f64::max);
    let e0 = ts.energy[0];
    let drift = ts.energy.iter().map(|e| ((e - e0) / e0).abs()).fold(0.0, f64::max);
    Ok(vec![
        outcome("norm conservation", norm, 1e-8, "max |norm - 1|"),
        outcome("energy conservation", drift, 1e-4, "max relative drift"),
    ])
}

fn revival_oracle() -> CheckOutcome {
    let mr = 87.0 / 85.0;
    let err = [
        (analytic_revival_time(12.0, 0, 1, mr) - 452.389).abs(),
        (analytic_revival_time(12.0, 1, 1, mr) - 463.034).abs(),
        (analytic_revival_difference(12.0, mr) - 10.645).abs(),
        (analytic_revival_time(1.0, 0, 1, mr) - PI).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    outcome("revival oracle", err, 1e-3, "max deviation")
}

/// Runs every self-check.
pub fn run_all() -> Result<Vec<CheckOutcome>> {
    let mut out = vec![fft_round_trip()?, revival_oracle()];
    out.extend(gaussian_identities()?);
    out.extend(short_run()?);
    Ok(out)
}
