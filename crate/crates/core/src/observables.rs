//! Autocorrelation, separability, densities and peak analysis.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::ComplexField2D;

/// Sampled observables of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub ac1: Vec<f64>,
    pub ac2: Vec<f64>,
    pub s: Vec<f64>,
    pub norm1: Vec<f64>,
    pub norm2: Vec<f64>,
    pub energy: Vec<f64>,
}

impl TimeSeries {
    pub fn with_capacity(n: usize) -> Self {
        TimeSeries {
            t: Vec::with_capacity(n),
            ac1: Vec::with_capacity(n),
            ac2: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
            norm1: Vec::with_capacity(n),
            norm2: Vec::with_capacity(n),
            energy: Vec::with_capacity(n),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, t: f64, ac1: f64, ac2: f64, s: f64, norm1: f64, norm2: f64, energy: f64) {
        self.t.push(t);
        self.ac1.push(ac1);
        self.ac2.push(ac2);
        self.s.push(s);
        self.norm1.push(norm1);
        self.norm2.push(norm2);
        self.energy.push(energy);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Autocorrelation series of one species.
    pub fn ac(&self, species: usize) -> &[f64] {
        if species == 0 {
            &self.ac1
        } else {
            &self.ac2
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        let cols = [&self.ac1, &self.ac2, &self.s, &self.norm1, &self.norm2, &self.energy];
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::Degenerate("time series columns differ in length".into()));
        }
        if self.t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Degenerate("sample times are not strictly increasing".into()));
        }
        let tol = 1e-10;
        for (name, col) in [("ac1", &self.ac1), ("ac2", &self.ac2), ("S", &self.s)] {
            if let Some(v) = col.iter().find(|v| !(-tol..=1.0 + tol).contains(*v)) {
                return Err(Error::Degenerate(format!("{name} value {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn inner_product(a: &ComplexField2D, b: &ComplexField2D) -> num_complex::Complex64 {
    let sum: num_complex::Complex64 = a
        .values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    sum * a.grid.cell_area()
}

/// `|<psi0 | psit>|^2` by rectangle-rule quadrature.
pub fn autocorrelation(psi0: &ComplexField2D, psit: &ComplexField2D) -> Result<f64> {
    if !psi0.same_grid(psit) {
        return Err(Error::GridMismatch);
    }
    Ok(autocorrelation_unchecked(psi0, psit))
}

pub(crate) fn autocorrelation_unchecked(psi0: &ComplexField2D, psit: &ComplexField2D) -> f64 {
    inner_product(psi0, psit).norm_sqr()
}

/// `S = 1 - (int n1 n2)^2 / (int n1^2 int n2^2)`.
pub fn separability(psi1: &ComplexField2D, psi2: &ComplexField2D) -> Result<f64> {
    if !psi1.same_grid(psi2) {
        return Err(Error::GridMismatch);
    }
    separability_unchecked(psi1, psi2)
}

pub(crate) fn separability_unchecked(psi1: &ComplexField2D, psi2: &ComplexField2D) -> Result<f64> {
    let (mut cross, mut q1, mut q2) = (0.0, 0.0, 0.0);
    for (a, b) in psi1.values.iter().zip(psi2.values.iter()) {
        let n1 = a.norm_sqr();
        let n2 = b.norm_sqr();
        cross += n1 * n2;
        q1 += n1 * n1;
        q2 += n2 * n2;
    }
    // the cell area cancels between numerator and denominator
    let denom = q1 * q2;
    if !(denom > 0.0) {
        return Err(Error::Degenerate("separability of an identically zero density".into()));
    }
    Ok(1.0 - cross * cross / denom)
}

/// Pointwise `|psi|^2`.
pub fn density(psi: &ComplexField2D) -> Array2<f64> {
    psi.values.mapv(|c| c.norm_sqr())
}

/// One local maximum of a sampled series.
#[derive(Clone, Debug, PartialEq)]
pub struct Peak {
    /// Vertex time from 3-point parabolic refinement.
    pub t: f64,
    pub height: f64,
    pub prominence: f64,
    /// Width at half prominence.
    pub width: f64,
    /// Index of the sample the peak was found at.
    pub index: usize,
    /// Fractional-revival tag `(p, q)` once matched to a prediction.
    pub label: Option<(u32, u32)>,
}

/// Peaks sorted by time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Peak> {
        self.peaks.iter()
    }

    pub fn highest(&self) -> Option<&Peak> {
        self.peaks
            .iter()
            .fold(None, |best: Option<&Peak>, p| match best {
                Some(b) if b.height >= p.height => Some(b),
                _ => Some(p),
            })
    }

    /// Tags the peak nearest to each predicted time within `tolerance`.
    pub fn label_nearest(&mut self, predictions: &[(f64, (u32, u32))], tolerance: f64) {
        for &(tp, label) in predictions {
            let best = self
                .peaks
                .iter_mut()
                .filter(|p| (p.t - tp).abs() <= tolerance)
                .min_by(|a, b| (a.t - tp).abs().total_cmp(&(b.t - tp).abs()));
            if let Some(p) = best {
                p.label = Some(label);
            }
        }
    }
}

/// Vertex `(t, y)` of the parabola through three points.
pub fn parabolic_vertex(t: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d0 = (y[1] - y[0]) / (t[1] - t[0]);
    let d1 = (y[2] - y[1]) / (t[2] - t[1]);
    let a = (d1 - d0) / (t[2] - t[0]);
    if a >= 0.0 || !a.is_finite() {
        return (t[1], y[1]);
    }
    // y = y1 + b (x - t1) + a (x - t1)^2 with b the slope at t1
    let b = d0 + a * (t[1] - t[0]);
    let shift = -b / (2.0 * a);
    let half = 0.5 * (t[2] - t[0]);
    let shift = shift.clamp(-half, half);
    (t[1] + shift, y[1] + b * shift + a * shift * shift)
}

/// Linear interpolation of the time where the series crosses `level`
/// between samples `i` and `j`.
fn crossing(t: &[f64], y: &[f64], i: usize, j: usize, level: f64) -> f64 {
    let (y0, y1) = (y[i], y[j]);
    if y1 == y0 {
        return t[i];
    }
    t[i] + (level - y0) / (y1 - y0) * (t[j] - t[i])
}

/// Local maxima whose prominence exceeds `min_prominence` times the series
/// range (max - min).
///
/// Plateaus report their earliest sample. Prominence follows the usual
/// definition: height above the higher of the two lowest points separating
/// the peak from higher terrain (or the series ends).
pub fn detect_peaks(t: &[f64], y: &[f64], min_prominence: f64) -> Result<PeakSet> {
    if t.len() != y.len() {
        return Err(Error::Degenerate("time and value series differ in length".into()));
    }
    if t.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 samples, got {}", t.len())));
    }
    if !(min_prominence > 0.0 && min_prominence < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "min_prominence must lie in (0, 1), got {min_prominence}"
        )));
    }
    let n = y.len();
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let threshold = min_prominence * (hi - lo);
    let mut peaks = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if y[i] > y[i - 1] {
            // walk across a possible plateau
            let start = i;
            let mut end = i;
            while end + 1 < n && y[end + 1] == y[i] {
                end += 1;
            }
            if end + 1 < n && y[end + 1] < y[i] {
                if let Some(p) = build_peak(t, y, start, end, threshold) {
                    peaks.push(p);
                }
            }
            i = end + 1;
        } else {
            i += 1;
        }
    }
    Ok(PeakSet { peaks })
}

fn build_peak(t: &[f64], y: &[f64], start: usize, end: usize, threshold: f64) -> Option<Peak> {
    let h = y[start];
    let n = y.len();
    let mut left_min = h;
    let mut l = start;
    while l > 0 && y[l - 1] <= h {
        l -= 1;
        left_min = left_min.min(y[l]);
    }
    let mut right_min = h;
    let mut r = end;
    while r + 1 < n && y[r + 1] <= h {
        r += 1;
        right_min = right_min.min(y[r]);
    }
    let base = left_min.max(right_min);
    let prominence = h - base;
    if !(prominence > threshold) {
        return None;
    }
    let (tv, hv) = if start == end {
        parabolic_vertex([t[start - 1], t[start], t[start + 1]], [y[start - 1], y[start], y[start + 1]])
    } else {
        (t[start], h)
    };
    let level = h - 0.5 * prominence;
    let mut a = start;
    while a > 0 && y[a] > level {
        a -= 1;
    }
    let t_left = if y[a] > level { t[a] } else { crossing(t, y, a, a + 1, level) };
    let mut b = end;
    while b + 1 < n && y[b] > level {
        b += 1;
    }
    let t_right = if y[b] > level { t[b] } else { crossing(t, y, b - 1, b, level) };
    Some(Peak {
        t: tv,
        height: hv,
        prominence,
        width: t_right - t_left,
        index: start,
        label: None,
    })
}

/// Default peak prominence as a fraction of the series range.
pub const DEFAULT_PROMINENCE: f64 = 0.05;

/// Time of the highest peak inside `[guess (1 - window), guess (1 + window)]`.
pub fn measure_revival_time(t: &[f64], y: &[f64], guess: f64, window: f64) -> Result<f64> {
    if !(window > 0.0 && window <= 0.5) {
        return Err(Error::InvalidParameter(format!("window must lie in (0, 0.5], got {window}")));
    }
    let (first, last) = match (t.first(), t.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Degenerate("empty series".into())),
    };
    if !(guess >= first && guess <= last) {
        return Err(Error::InvalidParameter(format!(
            "analytic guess {guess} outside series span [{first}, {last}]"
        )));
    }
    let lo = guess * (1.0 - window);
    let hi = guess * (1.0 + window);
    let peaks = detect_peaks(t, y, DEFAULT_PROMINENCE)?;
    let in_window = PeakSet {
        peaks: peaks.peaks.into_iter().filter(|p| p.t >= lo && p.t <= hi).collect(),
    };
    in_window
        .highest()
        .map(|p| p.t)
        .ok_or(Error::RevivalNotFound { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    /// Normalized `exp(-((x-cx)^2 + (y-cy)^2) / (2 w^2))`, i.e. density of
    /// standard deviation `w / sqrt(2)`.
    fn gaussian(grid: std::sync::Arc<crate::grid::Grid2D>, cx: f64, cy: f64, w: f64) -> ComplexField2D {
        let norm = 1.0 / (PI * w * w).sqrt();
        ComplexField2D::from_fn(grid, |x, y| {
            Complex64::new(norm * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w * w)).exp(), 0.0)
        })
    }

    #[test]
    fn autocorrelation_identities() {
        let g = make_grid(128, 0.125).unwrap();
        let a = gaussian(g.clone(), 0.3, -0.2, 1.0);
        assert_relative_eq!(autocorrelation(&a, &a).unwrap(), 1.0, epsilon = 1e-10);
        let mut rotated = a.clone();
        rotated.values.mapv_inplace(|c| c * Complex64::from_polar(1.0, 0.77));
        assert_relative_eq!(autocorrelation(&a, &rotated).unwrap(), 1.0, epsilon = 1e-10);
        let shifted = gaussian(g, 2.3, -0.2, 1.0);
        assert_relative_eq!(autocorrelation(&a, &shifted).unwrap(), (-2.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn autocorrelation_rejects_grid_mismatch() {
        let a = gaussian(make_grid(32, 0.5).unwrap(), 0.0, 0.0, 1.0);
        let b = gaussian(make_grid(32, 0.4).unwrap(), 0.0, 0.0, 1.0);
        assert!(matches!(autocorrelation(&a, &b), Err(Error::GridMismatch)));
        assert!(matches!(separability(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn separability_identities() {
        let g = make_grid(128, 0.125).unwrap();
        let a = gaussian(g.clone(), 0.0, 0.0, 1.0);
        let mut b = a.clone();
        b.values.mapv_inplace(|c| c * Complex64::from_polar(1.0, -1.3));
        assert!(separability(&a, &b).unwrap().abs() < 1e-10);

        // densities exp(-x^2/w^2) offset by s give Delta = exp(-s^2 / w^2)
        let c = gaussian(g.clone(), 1.0, 0.0, 1.0);
        assert_relative_eq!(separability(&a, &c).unwrap(), 1.0 - (-1.0f64).exp(), epsilon = 1e-10);

        let mut left = ComplexField2D::zeros(g.clone());
        let mut right = ComplexField2D::zeros(g.clone());
        left.values[[10, 10]] = Complex64::new(1.0, 0.0);
        right.values[[100, 10]] = Complex64::new(0.0, 2.0);
        assert_relative_eq!(separability(&left, &right).unwrap(), 1.0, epsilon = 1e-10);

        let zero = ComplexField2D::zeros(g);
        assert!(separability(&zero, &a).is_err());
    }

    #[test]
    fn separability_is_symmetric() {
        let g = make_grid(64, 0.25).unwrap();
        let a = gaussian(g.clone(), 1.1, 0.4, 1.3);
        let b = gaussian(g, -0.5, 0.9, 0.8);
        let ab = separability(&a, &b).unwrap();
        let ba = separability(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-14);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn density_integrates_to_one() {
        let g = make_grid(64, 0.25).unwrap();
        let a = gaussian(g.clone(), 0.0, 0.0, 1.0);
        let d = density(&a);
        assert_relative_eq!(crate::grid::integrate(&g, &d), 1.0, epsilon = 1e-8);
        let mut b = a.clone();
        b.values.mapv_inplace(|c| c * Complex64::new(0.0, 1.0));
        assert_eq!(density(&b), d);
    }

    #[test]
    fn monotone_series_has_no_peaks() {
        let t: Vec<f64> = (0..50).map(f64::from).collect();
        let y: Vec<f64> = t.iter().map(|x| x.sqrt()).collect();
        assert!(detect_peaks(&t, &y, 0.05).unwrap().is_empty());
    }

    #[test]
    fn parabola_vertex_exact() {
        let t: Vec<f64> = (0..21).map(|i| i as f64 * 0.37).collect();
        let y: Vec<f64> = t.iter().map(|x| 2.0 - 0.8 * (x - 3.21).powi(2)).collect();
        let peaks = detect_peaks(&t, &y, 0.05).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks.peaks[0].t - 3.21).abs() < 1e-12);
        assert!((peaks.peaks[0].height - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_peaks_sorted_and_plateau_earliest() {
        let t: Vec<f64> = (0..9).map(f64::from).collect();
        let y = [0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.5, 0.5, 0.0];
        let peaks = detect_peaks(&t, &y, 0.05).unwrap();
        let times: Vec<f64> = peaks.iter().map(|p| p.t).collect();
        assert_eq!(times, vec![1.0, 4.0, 6.0]);
    }

    #[test]
    fn peak_width_and_prominence() {
        let t: Vec<f64> = (0..401).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|x| (-(x - 10.0).powi(2) / 2.0).exp()).collect();
        let peaks = detect_peaks(&t, &y, 0.05).unwrap();
        assert_eq!(peaks.len(), 1);
        let p = &peaks.peaks[0];
        assert_relative_eq!(p.prominence, 1.0, epsilon = 1e-10);
        // FWHM of exp(-x^2/2) is 2 sqrt(2 ln 2)
        assert_relative_eq!(p.width, 2.0 * (2.0 * 2f64.ln()).sqrt(), epsilon = 2e-3);
    }

    #[test]
    fn small_bumps_filtered_by_prominence() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|x| (-(x - 10.0).powi(2)).exp() + 0.01 * (7.0 * x).sin())
            .collect();
        let peaks = detect_peaks(&t, &y, 0.05).unwrap();
        assert_eq!(peaks.len(), 1);
    }

    #[test]
    fn detect_peaks_input_errors() {
        assert!(detect_peaks(&[0.0, 1.0], &[0.0, 1.0], 0.1).is_err());
        assert!(detect_peaks(&[0.0, 1.0, 2.0], &[0.0, 1.0], 0.1).is_err());
        assert!(detect_peaks(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], 1.5).is_err());
    }

    #[test]
    fn revival_measurement() {
        let t: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|x| 0.9 * (-(x - 452.4).powi(2) / 8.0).exp() + 0.4 * (-(x - 300.0).powi(2) / 8.0).exp())
            .collect();
        let tr = measure_revival_time(&t, &y, 452.39, 0.15).unwrap();
        assert!((tr - 452.4).abs() < 0.5);
        let err = measure_revival_time(&t, &y, 700.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::RevivalNotFound { .. }));
        assert!(measure_revival_time(&t, &y, 5000.0, 0.1).is_err());
        assert!(measure_revival_time(&t, &y, 400.0, 0.8).is_err());
    }

    #[test]
    fn peak_labels() {
        let t: Vec<f64> = (0..100).map(f64::from).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|x| (-(x - 25.0).powi(2)).exp() + (-(x - 50.0).powi(2)).exp())
            .collect();
        let mut peaks = detect_peaks(&t, &y, 0.05).unwrap();
        peaks.label_nearest(&[(24.0, (1, 2)), (52.0, (1, 1)), (90.0, (3, 2))], 3.0);
        assert_eq!(peaks.peaks[0].label, Some((1, 2)));
        assert_eq!(peaks.peaks[1].label, Some((1, 1)));
    }
}
