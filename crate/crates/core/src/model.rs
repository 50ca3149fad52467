//! Physical parameters, dimensionless model, ring trap and initial state.
//!
//! Lengths are in units of `a_perp = sqrt(hbar / (2 m1 omega_perp))`, times in
//! `1/omega_perp` and energies in `hbar omega_perp`. Wavefunctions are
//! normalized to one; atom numbers enter only through the couplings.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField2D, Grid2D};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Species index, `0` for the lighter reference isotope and `1` for the other.
pub type Species = usize;

/// Experimental inputs in SI units (masses in atomic mass units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub m1: f64,
    pub m2: f64,
    pub n1: f64,
    pub n2: f64,
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    /// Transverse trap angular frequency (rad/s).
    pub omega_perp: f64,
    /// Aspect ratio entering the quasi-2D couplings.
    pub lambda: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            m1: 85.0,
            m2: 87.0,
            n1: 1000.0,
            n2: 1000.0,
            a11: 2.698e-9,
            a22: 2.698e-9,
            a12: 0.0,
            omega_perp: 2.0 * PI * 130.0,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("n1", self.n1),
            ("n2", self.n2),
            ("omega_perp", self.omega_perp),
            ("lambda", self.lambda),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("a11", self.a11), ("a22", self.a22), ("a12", self.a12)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.a12 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "a12 must be non-negative, got {}",
                self.a12
            )));
        }
        Ok(())
    }

    pub fn mass_ratio(&self) -> f64 {
        self.m2 / self.m1
    }
}

/// Length and time units `(a_perp [m], 1/omega_perp [s])`.
pub fn derive_units(p: &PhysicalParams) -> (f64, f64) {
    let m1 = p.m1 * ATOMIC_MASS_UNIT;
    let a_perp = (HBAR / (2.0 * m1 * p.omega_perp)).sqrt();
    (a_perp, 1.0 / p.omega_perp)
}

/// Dimensionless couplings
/// `g_ij = sqrt(2 pi lambda) (m1 + m2) a_ij N_j / (m2 a_perp)`.
pub fn coupling_matrix(p: &PhysicalParams) -> Result<[[f64; 2]; 2]> {
    let (a_perp, _) = derive_units(p);
    coupling_matrix_with_length(p, a_perp)
}

/// Same as [`coupling_matrix`] but with an explicit length unit.
pub fn coupling_matrix_with_length(p: &PhysicalParams, a_perp: f64) -> Result<[[f64; 2]; 2]> {
    if !(p.lambda > 0.0 && p.lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {}",
            p.lambda
        )));
    }
    let pre = (2.0 * PI * p.lambda).sqrt() * (p.m1 + p.m2) / (p.m2 * a_perp);
    let a = [[p.a11, p.a12], [p.a12, p.a22]];
    let n = [p.n1, p.n2];
    let mut g = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g[i][j] = pre * a[i][j] * n[j];
        }
    }
    Ok(g)
}

/// Gaussian spike amplitude that puts the species-1 radial minimum at `r0`.
///
/// `V0 = (omega^2 sigma^2 / 8) exp(2 r0^2 / sigma^2)`.
pub fn calibrate_spike(omega: f64, sigma: f64, r0: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NoRingMinimum(format!("spike waist sigma = {sigma} must be positive")));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::NoRingMinimum(format!("ring radius r0 = {r0} must be positive")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::NoRingMinimum(format!(
            "radial trap ratio omega = {omega} must be positive"
        )));
    }
    if 2.0 * r0 * r0 <= sigma * sigma / 2.0 {
        return Err(Error::NoRingMinimum(format!(
            "sigma = {sigma} too wide for r0 = {r0} (need 2 r0^2 > sigma^2 / 2)"
        )));
    }
    let v0 = omega * omega * sigma * sigma / 8.0 * (2.0 * r0 * r0 / (sigma * sigma)).exp();
    if !v0.is_finite() {
        return Err(Error::NoRingMinimum(format!(
            "spike amplitude overflows for sigma = {sigma}, r0 = {r0}"
        )));
    }
    Ok(v0)
}

/// Default quasi-2D aspect ratio.
pub const DEFAULT_LAMBDA: f64 = 0.005;

/// Trap and initial-state geometry in dimensionless units.
///
/// `omega` is the radial trap frequency in units of the transverse one.
#[derive(Clone, Debug, PartialEq)]
pub struct TrapGeometry {
    pub omega: f64,
    pub sigma: f64,
    pub r0: f64,
    pub d0: f64,
}

impl TrapGeometry {
    /// Geometry whose radial curvature at the ring, `2 omega^2 r0^2 / sigma^2`,
    /// equals `4 / d0^4`, the curvature for which a Gaussian of width `d0`
    /// is the radial ground state.
    pub fn mode_matched(r0: f64, d0: f64, sigma: f64) -> Self {
        TrapGeometry {
            omega: mode_matched_omega(r0, d0, sigma),
            sigma,
            r0,
            d0,
        }
    }
}

/// `omega` giving radial curvature `4 / d0^4` at `r0`.
pub fn mode_matched_omega(r0: f64, d0: f64, sigma: f64) -> f64 {
    std::f64::consts::SQRT_2 * sigma / (r0 * d0 * d0)
}

impl Default for TrapGeometry {
    fn default() -> Self {
        TrapGeometry::mode_matched(12.0, 0.75, 12.0)
    }
}

/// Fully resolved dimensionless model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    /// Mass ratios `m_i / m1`; `rho[0] == 1`.
    pub rho: [f64; 2],
    pub g: [[f64; 2]; 2],
    pub omega: f64,
    pub v0: f64,
    pub sigma: f64,
    pub r0: f64,
    pub d0: f64,
    pub a_perp: f64,
    pub t_unit: f64,
}

impl ModelSpec {
    /// Builds the model and calibrates the spike so the ring minimum is at `r0`.
    pub fn new(p: &PhysicalParams, geom: &TrapGeometry) -> Result<Self> {
        p.validate()?;
        if !(geom.d0 > 0.0 && geom.d0.is_finite()) {
            return Err(Error::InvalidParameter(format!("d0 must be positive, got {}", geom.d0)));
        }
        let (a_perp, t_unit) = derive_units(p);
        let g = coupling_matrix_with_length(p, a_perp)?;
        let v0 = calibrate_spike(geom.omega, geom.sigma, geom.r0)?;
        Ok(ModelSpec {
            rho: [1.0, p.mass_ratio()],
            g,
            omega: geom.omega,
            v0,
            sigma: geom.sigma,
            r0: geom.r0,
            d0: geom.d0,
            a_perp,
            t_unit,
        })
    }

    /// Coefficient `m1 / (2 m_i)` of the Laplacian for `species`.
    pub fn kinetic_coefficient(&self, species: Species) -> f64 {
        0.5 / self.rho[species]
    }

    /// Radial profile `V_i(r)`.
    pub fn potential_at(&self, species: Species, r: f64) -> f64 {
        let r2 = r * r;
        0.25 * self.rho[species] * self.omega * self.omega * r2
            + self.v0 * (-2.0 * r2 / (self.sigma * self.sigma)).exp()
    }

    /// Radial curvature `V_1''(r0)` of the calibrated trap.
    pub fn radial_curvature(&self) -> f64 {
        2.0 * self.omega * self.omega * self.r0 * self.r0 / (self.sigma * self.sigma)
    }

    pub fn initial_state_spec(&self) -> InitialStateSpec {
        InitialStateSpec::diametric(self.r0, self.d0)
    }
}

/// Samples `V_i(x, y) = rho_i omega^2 r^2 / 4 + V0 exp(-2 r^2 / sigma^2)`.
pub fn ring_potential(grid: &Grid2D, spec: &ModelSpec, species: Species) -> Array2<f64> {
    grid.sample(|x, y| spec.potential_at(species, (x * x + y * y).sqrt()))
}

/// Gaussian peak positions and waist for the initial cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialStateSpec {
    pub centers: Vec<(f64, f64)>,
    pub d0: f64,
}

impl InitialStateSpec {
    /// Two peaks at `(+r0, 0)` and `(-r0, 0)`.
    pub fn diametric(r0: f64, d0: f64) -> Self {
        InitialStateSpec {
            centers: vec![(r0, 0.0), (-r0, 0.0)],
            d0,
        }
    }

    pub fn validate(&self, r0: f64) -> Result<()> {
        for &(cx, cy) in &self.centers {
            if ((cx * cx + cy * cy).sqrt() - r0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "initial peak ({cx}, {cy}) does not lie on the ring r0 = {r0}"
                )));
            }
        }
        if self.centers.is_empty() {
            return Err(Error::InvalidParameter("no initial peak centers".into()));
        }
        Ok(())
    }

    /// Equal-weight sum of Gaussians `exp(-|r - c|^2 / d0^2)`, normalized.
    pub fn build(&self, grid: Arc<Grid2D>) -> Result<ComplexField2D> {
        let inv = 1.0 / (self.d0 * self.d0);
        let mut psi = ComplexField2D::from_fn(grid, |x, y| {
            let v: f64 = self
                .centers
                .iter()
                .map(|&(cx, cy)| (-((x - cx).powi(2) + (y - cy).powi(2)) * inv).exp())
                .sum();
            Complex64::new(v, 0.0)
        });
        psi.normalize()?;
        Ok(psi)
    }
}

/// Identical dual-peak states for both species.
pub fn initial_state(
    grid: Arc<Grid2D>,
    spec: &ModelSpec,
) -> Result<(ComplexField2D, ComplexField2D)> {
    let resolution = grid.dx.max(grid.dy);
    if spec.d0 < 3.0 * resolution {
        return Err(Error::InvalidParameter(format!(
            "initial waist d0 = {} under-resolved by grid step {resolution} (need d0 >= 3 dx)",
            spec.d0
        )));
    }
    grid.check_fits_ring(spec.r0)?;
    let init = spec.initial_state_spec();
    init.validate(spec.r0)?;
    let psi = init.build(grid)?;
    Ok((psi.clone(), psi))
}
