//! Uniform periodic 2D grid, discrete Fourier transforms and quadrature.
//!
//! Fields are stored as `Array2` of shape `(n_x, n_y)` in standard (row-major)
//! layout: element `[i, j]` sits at `(x_min + i*dx, y_min + j*dy)`.
//!
//! DFT convention: the forward transform is unnormalized,
//! `F[k] = sum_n f[n] exp(-2 pi i k n / N)`, and the inverse carries the full
//! `1/(n_x n_y)` factor. Parseval then reads
//! `sum |f|^2 dx dy = (dx dy / (n_x n_y)) sum |F|^2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest density allowed on the domain boundary before wrap-around is
/// considered significant.
pub const BOUNDARY_DENSITY_WARN: f64 = 1e-10;

/// A centered, periodic, uniform 2D grid with its DFT wavenumber tables.
#[derive(Clone, PartialEq)]
pub struct Grid2D {
    pub n_x: usize,
    pub n_y: usize,
    pub dx: f64,
    pub dy: f64,
    pub x_min: f64,
    pub y_min: f64,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("n_x", &self.n_x)
            .field("n_y", &self.n_y)
            .field("dx", &self.dx)
            .field("dy", &self.dy)
            .finish()
    }
}

/// Signed DFT frequency index for bin `j` of an `n`-point transform.
fn signed_frequency(j: usize, n: usize) -> f64 {
    if j < n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

fn wavenumbers(n: usize, step: f64) -> Vec<f64> {
    let scale = 2.0 * PI / (n as f64 * step);
    (0..n).map(|j| scale * signed_frequency(j, n)).collect()
}

/// Builds a square `n x n` grid with spacing `step`, centered on the origin.
pub fn make_grid(n: usize, step: f64) -> Result<Arc<Grid2D>> {
    Grid2D::new(n, n, step, step).map(Arc::new)
}

impl Grid2D {
    pub fn new(n_x: usize, n_y: usize, dx: f64, dy: f64) -> Result<Self> {
        for n in [n_x, n_y] {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "point count {n} must be a power of two and at least 8"
                )));
            }
        }
        for step in [dx, dy] {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "grid step {step} must be positive and finite"
                )));
            }
        }
        Ok(Grid2D {
            n_x,
            n_y,
            dx,
            dy,
            x_min: -(n_x as f64) * dx / 2.0,
            y_min: -(n_y as f64) * dy / 2.0,
            kx: wavenumbers(n_x, dx),
            ky: wavenumbers(n_y, dy),
        })
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_x, self.n_y)
    }

    pub fn extent_x(&self) -> f64 {
        self.n_x as f64 * self.dx
    }

    pub fn extent_y(&self) -> f64 {
        self.n_y as f64 * self.dy
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy
    }

    /// Index of the grid point nearest to `(x, y)`, if inside the domain.
    pub fn nearest_index(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let i = ((x - self.x_min) / self.dx).round();
        let j = ((y - self.y_min) / self.dy).round();
        if i < 0.0 || j < 0.0 || i >= self.n_x as f64 || j >= self.n_y as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// Checks that a ring of radius `r0` plus its dispersing cloud fits.
    pub fn check_fits_ring(&self, r0: f64) -> Result<()> {
        let extent = self.extent_x().min(self.extent_y());
        if extent < 4.0 * r0 {
            return Err(Error::InvalidGrid(format!(
                "domain extent {extent:.4} is smaller than 4*r0 = {:.4}",
                4.0 * r0
            )));
        }
        Ok(())
    }

    /// Samples `f(x, y)` on every grid point.
    pub fn sample<T, F>(&self, mut f: F) -> Array2<T>
    where
        F: FnMut(f64, f64) -> T,
    {
        Array2::from_shape_fn((self.n_x, self.n_y), |(i, j)| f(self.x(i), self.y(j)))
    }

    /// Table of `kx^2 + ky^2` in natural (untransposed) layout.
    pub fn k_squared(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n_x, self.n_y), |(i, j)| {
            self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j]
        })
    }
}

/// Complex samples on a grid: a wavefunction or its spectrum.
#[derive(Clone, Debug)]
pub struct ComplexField2D {
    pub values: Array2<Complex64>,
    pub grid: Arc<Grid2D>,
}

impl ComplexField2D {
    pub fn zeros(grid: Arc<Grid2D>) -> Self {
        ComplexField2D {
            values: Array2::zeros(grid.shape()),
            grid,
        }
    }

    pub fn from_fn<F>(grid: Arc<Grid2D>, f: F) -> Self
    where
        F: FnMut(f64, f64) -> Complex64,
    {
        let values = grid.sample(f);
        ComplexField2D { values, grid }
    }

    pub fn from_values(grid: Arc<Grid2D>, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::GridMismatch);
        }
        Ok(ComplexField2D {
            values: values.as_standard_layout().into_owned(),
            grid,
        })
    }

    pub fn same_grid(&self, other: &ComplexField2D) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// `sum |psi|^2 dx dy`.
    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// Rescales so that the norm squared is one.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_squared();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Degenerate(format!("cannot normalize field with norm {n}")));
        }
        let s = 1.0 / n.sqrt();
        self.values.mapv_inplace(|c| c * s);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest `|psi|^2` found on the outermost ring of grid points.
    pub fn max_boundary_density(&self) -> f64 {
        let (nx, ny) = self.grid.shape();
        let v = &self.values;
        let mut m = 0.0f64;
        for i in 0..nx {
            m = m.max(v[[i, 0]].norm_sqr()).max(v[[i, ny - 1]].norm_sqr());
        }
        for j in 0..ny {
            m = m.max(v[[0, j]].norm_sqr()).max(v[[nx - 1, j]].norm_sqr());
        }
        m
    }
}

/// Rectangle-rule quadrature `sum f dx dy`.
pub fn integrate(grid: &Grid2D, f: &Array2<f64>) -> f64 {
    f.sum() * grid.cell_area()
}

/// Reusable 2D FFT plans plus scratch storage for one grid.
///
/// The `*_transposed` pair keeps the spectrum in `(n_y, n_x)` layout, which
/// saves two transposes per kinetic substep. Callers that use it must index
/// their spectral multipliers the same way.
pub struct Fft2 {
    n_x: usize,
    n_y: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fft2({}x{})", self.n_x, self.n_y)
    }
}

const TRANSPOSE_BLOCK: usize = 32;

/// Out-of-place blocked transpose of a `rows x cols` row-major matrix.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for rb in (0..rows).step_by(TRANSPOSE_BLOCK) {
        for cb in (0..cols).step_by(TRANSPOSE_BLOCK) {
            for r in rb..(rb + TRANSPOSE_BLOCK).min(rows) {
                for c in cb..(cb + TRANSPOSE_BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

impl Fft2 {
    pub fn new(grid: &Grid2D) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(grid.n_x);
        let fwd_y = planner.plan_fft_forward(grid.n_y);
        let inv_x = planner.plan_fft_inverse(grid.n_x);
        let inv_y = planner.plan_fft_inverse(grid.n_y);
        let scratch_len = [&fwd_x, &fwd_y, &inv_x, &inv_y]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0)
            .max(grid.len());
        Fft2 {
            n_x: grid.n_x,
            n_y: grid.n_y,
            fwd_x,
            fwd_y,
            inv_x,
            inv_y,
            buffer: vec![Complex64::new(0.0, 0.0); grid.len()],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    /// Unnormalized forward transform; output in `(n_y, n_x)` layout.
    pub fn forward_transposed(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n_x * self.n_y);
        self.fwd_y.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.buffer, self.n_x, self.n_y);
        self.fwd_x.process_with_scratch(&mut self.buffer, &mut self.scratch);
        data.copy_from_slice(&self.buffer);
    }

    /// Inverse of [`Fft2::forward_transposed`] without the `1/N` factor.
    pub fn inverse_from_transposed_unscaled(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n_x * self.n_y);
        self.inv_x.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.buffer, self.n_y, self.n_x);
        self.inv_y.process_with_scratch(&mut self.buffer, &mut self.scratch);
        data.copy_from_slice(&self.buffer);
    }

    /// Unnormalized forward transform in natural `(n_x, n_y)` layout.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.forward_transposed(data);
        transpose(data, &mut self.buffer, self.n_y, self.n_x);
        data.copy_from_slice(&self.buffer);
    }

    /// Inverse transform, including the `1/(n_x n_y)` factor.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        transpose(data, &mut self.buffer, self.n_x, self.n_y);
        data.copy_from_slice(&self.buffer);
        self.inverse_from_transposed_unscaled(data);
        let s = 1.0 / (self.n_x * self.n_y) as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }
}

/// Spectrum of `f` under the unnormalized forward convention.
pub fn forward_transform(f: &ComplexField2D) -> ComplexField2D {
    let mut out = f.clone();
    let mut fft = Fft2::new(&f.grid);
    fft.forward(out.values.as_slice_mut().expect("standard layout"));
    out
}

/// Field whose forward transform is `spectrum`.
pub fn inverse_transform(spectrum: &ComplexField2D) -> ComplexField2D {
    let mut out = spectrum.clone();
    let mut fft = Fft2::new(&spectrum.grid);
    fft.inverse(out.values.as_slice_mut().expect("standard layout"));
    out
}

/// Spectral-side weight that turns `sum |F|^2` into `integral |f|^2`.
pub fn parseval_weight(grid: &Grid2D) -> f64 {
    grid.cell_area() / grid.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lcg_field(grid: Arc<Grid2D>, seed: u64) -> ComplexField2D {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        ComplexField2D::from_fn(grid, |_, _| Complex64::new(next(), next()))
    }

    fn max_abs(a: &Array2<Complex64>) -> f64 {
        a.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn default_grid_extent() {
        let g = make_grid(512, 0.1841).unwrap();
        assert_relative_eq!(g.extent_x(), 94.2592, epsilon = 1e-9);
        assert_eq!(g.dx, 0.1841);
        assert_relative_eq!(g.x_min, -47.1296, epsilon = 1e-9);
    }

    #[test]
    fn wavenumbers_follow_dft_ordering() {
        let g = make_grid(8, 1.0).unwrap();
        let expected: Vec<f64> = [0., 1., 2., 3., -4., -3., -2., -1.]
            .iter()
            .map(|f| 2.0 * PI / 8.0 * f)
            .collect();
        for (k, e) in g.kx.iter().zip(&expected) {
            assert_relative_eq!(*k, *e, epsilon = 1e-15);
        }
        assert_eq!(g.kx[0], 0.0);
    }

    #[test]
    fn sixteen_point_grid() {
        let g = make_grid(16, 0.5).unwrap();
        assert_eq!(g.extent_x(), 8.0);
        assert_relative_eq!(g.kx[1] - g.kx[0], 2.0 * PI / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        let err = make_grid(100, 0.1).unwrap_err();
        assert!(err.to_string().contains("power of two"), "{err}");
        assert!(make_grid(4, 0.1).is_err());
        assert!(make_grid(16, 0.0).is_err());
        assert!(make_grid(16, -1.0).is_err());
        assert!(make_grid(16, f64::NAN).is_err());
    }

    #[test]
    fn ring_fit_check() {
        let g = make_grid(256, 0.25).unwrap();
        assert!(g.check_fits_ring(16.0).is_ok());
        assert!(g.check_fits_ring(16.1).is_err());
    }

    #[test]
    fn constant_field_spectrum_is_dc_only() {
        let g = make_grid(16, 0.5).unwrap();
        let f = ComplexField2D::from_fn(g.clone(), |_, _| Complex64::new(2.0, 0.0));
        let s = forward_transform(&f);
        assert_relative_eq!(s.values[[0, 0]].re, 2.0 * 256.0, epsilon = 1e-10);
        for ((i, j), c) in s.values.indexed_iter() {
            if (i, j) != (0, 0) {
                assert!(c.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let g = make_grid(16, 0.5).unwrap();
        let mut f = ComplexField2D::zeros(g.clone());
        let (i0, j0) = g.nearest_index(0.0, 0.0).unwrap();
        f.values[[i0, j0]] = Complex64::new(1.0, 0.0);
        let s = forward_transform(&f);
        for c in s.values.iter() {
            assert_relative_eq!(c.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn round_trip_random_fields() {
        for n in [8, 16, 64, 128] {
            let g = make_grid(n, 0.3).unwrap();
            let f = lcg_field(g, n as u64);
            let back = inverse_transform(&forward_transform(&f));
            let err = max_abs(&(&back.values - &f.values)) / max_abs(&f.values);
            assert!(err < 1e-12, "n={n} err={err}");
        }
    }

    #[test]
    fn rectangular_round_trip() {
        let g = Arc::new(Grid2D::new(32, 8, 0.2, 0.7).unwrap());
        let f = lcg_field(g, 3);
        let back = inverse_transform(&forward_transform(&f));
        assert!(max_abs(&(&back.values - &f.values)) < 1e-12);
    }

    #[test]
    fn gaussian_round_trip_and_zero_field() {
        let g = make_grid(64, 0.25).unwrap();
        let f = ComplexField2D::from_fn(g.clone(), |x, y| {
            Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0)
        });
        let back = inverse_transform(&forward_transform(&f));
        assert!(max_abs(&(&back.values - &f.values)) < 1e-12);

        let z = ComplexField2D::zeros(g);
        assert_eq!(max_abs(&inverse_transform(&z).values), 0.0);
    }

    #[test]
    fn single_mode_spectrum_is_plane_wave() {
        let g = make_grid(32, 0.5).unwrap();
        let mut s = ComplexField2D::zeros(g.clone());
        s.values[[3, 30]] = Complex64::new(g.len() as f64, 0.0);
        let f = inverse_transform(&s);
        let (kx, ky) = (g.kx[3], g.ky[30]);
        for ((i, j), c) in f.values.indexed_iter() {
            // the grid origin is offset by x_min, which contributes a constant phase
            let phase = kx * (g.x(i) - g.x_min) + ky * (g.y(j) - g.y_min);
            let expect = Complex64::from_polar(1.0, phase);
            assert!((c - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_on_random_field() {
        let g = make_grid(64, 0.17).unwrap();
        let f = lcg_field(g.clone(), 99);
        let s = forward_transform(&f);
        let spectral: f64 = s.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * parseval_weight(&g);
        assert_relative_eq!(spectral, f.norm_squared(), max_relative = 1e-10);
    }

    #[test]
    fn transposed_pair_is_consistent() {
        let g = Arc::new(Grid2D::new(16, 32, 0.5, 0.25).unwrap());
        let f = lcg_field(g.clone(), 5);
        let natural = forward_transform(&f);
        let mut fft = Fft2::new(&g);
        let mut data = f.values.as_slice().unwrap().to_vec();
        fft.forward_transposed(&mut data);
        for i in 0..16 {
            for j in 0..32 {
                assert!((data[j * 16 + i] - natural.values[[i, j]]).norm() < 1e-10);
            }
        }
        fft.inverse_from_transposed_unscaled(&mut data);
        let scale = 1.0 / g.len() as f64;
        for (a, b) in data.iter().zip(f.values.iter()) {
            assert!((a * scale - b).norm() < 1e-12);
        }
    }

    #[test]
    fn quadrature_cases() {
        let g = make_grid(64, 0.25).unwrap();
        let ones = Array2::from_elem(g.shape(), 1.0);
        assert_relative_eq!(integrate(&g, &ones), 16.0 * 16.0, epsilon = 1e-10);

        let w: f64 = 1.3;
        let gauss = g.sample(|x, y| 2.0 / (PI * w * w) * (-2.0 * (x * x + y * y) / (w * w)).exp());
        assert_relative_eq!(integrate(&g, &gauss), 1.0, epsilon = 1e-8);

        let odd = g.sample(|x, y| x * (-(x * x + y * y)).exp() * (1.0 + y * y));
        // the unpaired x_min column sits where the integrand is below 1e-27
        assert!(integrate(&g, &odd).abs() < 1e-12);
    }
}
