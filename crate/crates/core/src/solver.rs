//! Strang-split step Fourier propagator for the coupled two-species equation
//!
//! `i d(psi_i)/dt = [-(m1 / 2 m_i) lap + sum_j g_ij |psi_j|^2 + V_i] psi_i`.
//!
//! One step is a kinetic half step in Fourier space, a full potential plus
//! mean-field phase rotation in position space using both densities frozen at
//! the midpoint, and a second kinetic half step. Inside [`evolve`] the
//! trailing half step of one step is fused with the leading half step of the
//! next, except where a sample is taken.

use std::sync::Arc;

use log::warn;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{parseval_weight, ComplexField2D, Fft2, Grid2D, BOUNDARY_DENSITY_WARN};
use crate::model::{ring_potential, ModelSpec};
use crate::observables::{autocorrelation_unchecked, separability_unchecked, TimeSeries};

/// Wavefunctions of both species plus everything cached for a fixed `dt`.
pub struct PropagatorState {
    pub psi: [ComplexField2D; 2],
    pub step_count: u64,
    dt: f64,
    grid: Arc<Grid2D>,
    g: [[f64; 2]; 2],
    kinetic_coeff: [f64; 2],
    /// `exp(-i c_i k^2 dt/2) / N`, transposed spectral layout.
    kinetic_half: [Vec<Complex64>; 2],
    /// `exp(-i c_i k^2 dt) / N`, transposed spectral layout.
    kinetic_full: [Vec<Complex64>; 2],
    /// `kx^2 + ky^2`, transposed spectral layout.
    k_squared: Vec<f64>,
    potential: [Array2<f64>; 2],
    fft: Fft2,
    spectrum: Vec<Complex64>,
}

impl std::fmt::Debug for PropagatorState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PropagatorState")
            .field("grid", &self.grid)
            .field("dt", &self.dt)
            .field("step_count", &self.step_count)
            .finish()
    }
}

fn transposed_k_squared(grid: &Grid2D) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    for ky in &grid.ky {
        for kx in &grid.kx {
            out.push(kx * kx + ky * ky);
        }
    }
    out
}

fn kinetic_table(k2: &[f64], coeff: f64, tau: f64, scale: f64) -> Vec<Complex64> {
    k2.iter()
        .map(|&k| Complex64::from_polar(scale, -coeff * k * tau))
        .collect()
}

impl PropagatorState {
    /// Prepares a propagator for time step `dt` (any finite value; negative
    /// steps run backwards).
    pub fn new(
        spec: &ModelSpec,
        psi1: ComplexField2D,
        psi2: ComplexField2D,
        dt: f64,
    ) -> Result<Self> {
        if !psi1.same_grid(&psi2) {
            return Err(Error::GridMismatch);
        }
        if !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step {dt} must be finite")));
        }
        let grid = psi1.grid.clone();
        let potential = [ring_potential(&grid, spec, 0), ring_potential(&grid, spec, 1)];
        let coeff = [spec.kinetic_coefficient(0), spec.kinetic_coefficient(1)];
        Ok(Self::with_potentials(grid, spec.g, coeff, potential, [psi1, psi2], dt))
    }

    fn with_potentials(
        grid: Arc<Grid2D>,
        g: [[f64; 2]; 2],
        kinetic_coeff: [f64; 2],
        potential: [Array2<f64>; 2],
        psi: [ComplexField2D; 2],
        dt: f64,
    ) -> Self {
        let k_squared = transposed_k_squared(&grid);
        let scale = 1.0 / grid.len() as f64;
        let half = |c| kinetic_table(&k_squared, c, 0.5 * dt, scale);
        let full = |c| kinetic_table(&k_squared, c, dt, scale);
        PropagatorState {
            kinetic_half: [half(kinetic_coeff[0]), half(kinetic_coeff[1])],
            kinetic_full: [full(kinetic_coeff[0]), full(kinetic_coeff[1])],
            fft: Fft2::new(&grid),
            spectrum: vec![Complex64::new(0.0, 0.0); grid.len()],
            k_squared,
            psi,
            step_count: 0,
            dt,
            grid,
            g,
            kinetic_coeff,
            potential,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    /// Elapsed time, always `step_count * dt`.
    pub fn t(&self) -> f64 {
        self.step_count as f64 * self.dt
    }

    pub fn potential(&self, species: usize) -> &Array2<f64> {
        &self.potential[species]
    }

    fn kinetic(&mut self, full: bool) {
        for s in 0..2 {
            let data = self.psi[s].values.as_slice_mut().expect("standard layout");
            self.fft.forward_transposed(data);
            let table = if full { &self.kinetic_full[s] } else { &self.kinetic_half[s] };
            data.iter_mut().zip(table).for_each(|(c, m)| *c *= m);
            self.fft.inverse_from_transposed_unscaled(data);
        }
    }

    /// Phase rotation by `(sum_j g_ij n_j + V_i) dt` with both densities
    /// evaluated before either field is touched.
    fn nonlinear(&mut self) -> Result<()> {
        let dt = self.dt;
        let g = self.g;
        let [a, b] = &mut self.psi;
        let a = a.values.as_slice_mut().expect("standard layout");
        let b = b.values.as_slice_mut().expect("standard layout");
        let v1 = self.potential[0].as_slice().expect("standard layout");
        let v2 = self.potential[1].as_slice().expect("standard layout");
        let mut finite = true;
        for (((p1, p2), &u1), &u2) in a.iter_mut().zip(b.iter_mut()).zip(v1).zip(v2) {
            let n1 = p1.norm_sqr();
            let n2 = p2.norm_sqr();
            finite &= (n1 + n2).is_finite();
            let (s1, c1) = ((g[0][0] * n1 + g[0][1] * n2 + u1) * dt).sin_cos();
            let (s2, c2) = ((g[1][0] * n1 + g[1][1] * n2 + u2) * dt).sin_cos();
            *p1 *= Complex64::new(c1, -s1);
            *p2 *= Complex64::new(c2, -s2);
        }
        if finite {
            Ok(())
        } else {
            Err(Error::BlowUp {
                step: self.step_count,
                t: self.t(),
            })
        }
    }

    fn check_finite(&self) -> Result<()> {
        if self.psi.iter().all(|p| p.is_finite()) {
            Ok(())
        } else {
            Err(Error::BlowUp {
                step: self.step_count,
                t: self.t(),
            })
        }
    }

    /// One full Strang step.
    pub fn step(&mut self) -> Result<()> {
        self.kinetic(false);
        self.nonlinear()?;
        self.kinetic(false);
        self.step_count += 1;
        self.check_finite()
    }

    /// Advances `n` steps with fused interior half steps.
    pub fn advance(&mut self, n: u64) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        self.kinetic(false);
        for k in 0..n {
            self.nonlinear()?;
            self.step_count += 1;
            // trailing half step fused with the next leading half step
            self.kinetic(k + 1 < n);
        }
        self.check_finite()
    }

    /// `integral |grad psi|^2` for one species, computed spectrally.
    fn gradient_norm(&mut self, species: usize) -> f64 {
        self.spectrum.copy_from_slice(self.psi[species].values.as_slice().expect("standard layout"));
        self.fft.forward_transposed(&mut self.spectrum);
        let sum: f64 = self
            .spectrum
            .iter()
            .zip(&self.k_squared)
            .map(|(c, k2)| c.norm_sqr() * k2)
            .sum();
        sum * parseval_weight(&self.grid)
    }

    /// Energy split into kinetic, trap and interaction parts.
    pub fn energy_terms(&mut self) -> EnergyTerms {
        let da = self.grid.cell_area();
        let kinetic = self.kinetic_coeff[0] * self.gradient_norm(0)
            + self.kinetic_coeff[1] * self.gradient_norm(1);
        let n1 = self.psi[0].values.mapv(|c| c.norm_sqr());
        let n2 = self.psi[1].values.mapv(|c| c.norm_sqr());
        let potential = ((&n1 * &self.potential[0]).sum() + (&n2 * &self.potential[1]).sum()) * da;
        let self_int = 0.5 * (self.g[0][0] * (&n1 * &n1).sum() + self.g[1][1] * (&n2 * &n2).sum()) * da;
        let cross = 0.5 * (self.g[0][1] + self.g[1][0]) * (&n1 * &n2).sum() * da;
        EnergyTerms {
            kinetic,
            potential,
            interaction: self_int + cross,
        }
    }

    /// Total mean-field energy of both species.
    pub fn energy(&mut self) -> f64 {
        self.energy_terms().total()
    }

    pub fn norms(&self) -> [f64; 2] {
        [self.psi[0].norm_squared(), self.psi[1].norm_squared()]
    }
}

/// Parts of the mean-field energy functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyTerms {
    pub kinetic: f64,
    pub potential: f64,
    pub interaction: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }
}

/// Energy of an arbitrary pair of fields under `spec`.
pub fn energy(spec: &ModelSpec, psi1: &ComplexField2D, psi2: &ComplexField2D) -> Result<f64> {
    let mut state = PropagatorState::new(spec, psi1.clone(), psi2.clone(), 0.0)?;
    Ok(state.energy())
}

/// Step size, run length and sampling stride.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: u64,
    pub sample_every: u64,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter("sample_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn expected_samples(&self) -> usize {
        1 + (self.n_steps / self.sample_every) as usize
    }
}

/// Hook invoked at every sample with `(t, psi1, psi2)`.
pub type SampleHook<'a> = dyn FnMut(f64, &ComplexField2D, &ComplexField2D) -> Result<()> + 'a;

/// Runs `config.n_steps` steps, sampling observables every `sample_every`.
///
/// Autocorrelations are taken against the state passed in.
pub fn evolve(
    state: &mut PropagatorState,
    config: &EvolutionConfig,
    mut hook: Option<&mut SampleHook<'_>>,
) -> Result<TimeSeries> {
    config.validate()?;
    if (state.dt - config.dt).abs() > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "propagator cached for dt = {} but config asks for {}",
            state.dt, config.dt
        )));
    }
    let initial = [state.psi[0].clone(), state.psi[1].clone()];
    let mut series = TimeSeries::with_capacity(config.expected_samples());
    let mut warned = false;

    let mut record = |state: &mut PropagatorState, series: &mut TimeSeries| -> Result<()> {
        let t = state.t();
        let ac1 = autocorrelation_unchecked(&initial[0], &state.psi[0]);
        let ac2 = autocorrelation_unchecked(&initial[1], &state.psi[1]);
        let s = separability_unchecked(&state.psi[0], &state.psi[1])?;
        let [norm1, norm2] = state.norms();
        let energy = state.energy();
        series.push(t, ac1, ac2, s, norm1, norm2, energy);
        if !warned {
            let edge = state.psi[0].max_boundary_density().max(state.psi[1].max_boundary_density());
            if edge > BOUNDARY_DENSITY_WARN {
                warn!("boundary density {edge:.3e} at t = {t:.4}: periodic wrap-around is no longer negligible");
                warned = true;
            }
        }
        if let Some(h) = hook.as_deref_mut() {
            h(t, &state.psi[0], &state.psi[1])?;
        }
        Ok(())
    };

    record(state, &mut series)?;
    let mut done = 0;
    while done + config.sample_every <= config.n_steps {
        state
            .advance(config.sample_every)
            .map_err(|e| e.context("evolution aborted"))?;
        done += config.sample_every;
        record(state, &mut series)?;
    }
    state
        .advance(config.n_steps - done)
        .map_err(|e| e.context("evolution aborted"))?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::model::{initial_state, PhysicalParams, TrapGeometry};

    const MR: f64 = 87.0 / 85.0;

    /// Free model: no trap, couplings `g`.
    fn free_spec(g: [[f64; 2]; 2]) -> ModelSpec {
        ModelSpec {
            rho: [1.0, MR],
            g,
            omega: 0.0,
            v0: 0.0,
            sigma: 1.0,
            r0: 1.0,
            d0: 0.75,
            a_perp: 1.0,
            t_unit: 1.0,
        }
    }

    fn gaussian(grid: Arc<Grid2D>, cx: f64, w: f64) -> ComplexField2D {
        let mut f = ComplexField2D::from_fn(grid, |x, y| {
            Complex64::new((-((x - cx).powi(2) + y * y) / (w * w)).exp(), 0.0)
        });
        f.normalize().unwrap();
        f
    }

    fn ring_state(n: usize, dx: f64, r0: f64, lambda: f64, dt: f64) -> PropagatorState {
        let p = PhysicalParams {
            lambda,
            a12: 0.3 * 2.698e-9,
            ..Default::default()
        };
        let spec = ModelSpec::new(&p, &TrapGeometry::mode_matched(r0, 0.75, r0)).unwrap();
        let (a, b) = initial_state(make_grid(n, dx).unwrap(), &spec).unwrap();
        PropagatorState::new(&spec, a, b, dt).unwrap()
    }

    fn max_diff(a: &ComplexField2D, b: &ComplexField2D) -> f64 {
        a.values
            .iter()
            .zip(b.values.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// `2 sqrt(<x^2>)`, the `1/e^2` radius of a density `exp(-2 x^2 / w^2)`.
    fn rms_width_x(psi: &ComplexField2D) -> f64 {
        let g = &psi.grid;
        let mut m2 = 0.0;
        for ((i, _), c) in psi.values.indexed_iter() {
            m2 += g.x(i).powi(2) * c.norm_sqr();
        }
        2.0 * (m2 * g.cell_area() / psi.norm_squared()).sqrt()
    }

    #[test]
    fn free_expansion_follows_width_law() {
        // the domain is wide enough that the packet never wraps up to t = 20
        let grid = make_grid(1024, 0.4).unwrap();
        let w = 0.75;
        let spec = free_spec([[0.0; 2]; 2]);
        let mut st = PropagatorState::new(&spec, gaussian(grid.clone(), 0.0, w), gaussian(grid, 0.0, w), 2.5).unwrap();
        for _ in 0..8 {
            st.advance(1).unwrap();
            let t = st.t();
            for s in 0..2 {
                let speed = 2.0 / spec.rho[s];
                let expected = (w * w + (speed * t / w).powi(2)).sqrt();
                let got = rms_width_x(&st.psi[s]);
                assert!((got / expected - 1.0).abs() < 1e-4, "t={t} species {s}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let mut st = ring_state(64, 0.25, 3.0, 1.0, 0.0);
        let before = st.psi.clone();
        st.advance(10).unwrap();
        st.step().unwrap();
        for s in 0..2 {
            assert!(max_diff(&before[s], &st.psi[s]) < 1e-14);
        }
        assert_eq!(st.t(), 0.0);
    }

    #[test]
    fn time_reversal_returns_initial_field() {
        let mut fwd = ring_state(128, 0.25, 6.0, 1.0, 0.0915);
        let start = fwd.psi.clone();
        fwd.advance(200).unwrap();
        let spec = ModelSpec::new(
            &PhysicalParams {
                lambda: 1.0,
                a12: 0.3 * 2.698e-9,
                ..Default::default()
            },
            &TrapGeometry::mode_matched(6.0, 0.75, 6.0),
        )
        .unwrap();
        let [a, b] = fwd.psi.clone();
        let mut back = PropagatorState::new(&spec, a, b, -0.0915).unwrap();
        back.advance(200).unwrap();
        for s in 0..2 {
            let d = max_diff(&start[s], &back.psi[s]);
            assert!(d < 1e-10, "species {s}: {d}");
        }
    }

    #[test]
    fn fused_advance_matches_single_steps() {
        let mut a = ring_state(64, 0.25, 3.0, 1.0, 0.05);
        let mut b = ring_state(64, 0.25, 3.0, 1.0, 0.05);
        a.advance(7).unwrap();
        for _ in 0..7 {
            b.step().unwrap();
        }
        assert_eq!(a.step_count, b.step_count);
        for s in 0..2 {
            assert!(max_diff(&a.psi[s], &b.psi[s]) < 1e-12);
        }
    }

    #[test]
    fn second_order_convergence() {
        let t_end = 1.0;
        let run = |dt: f64| {
            let mut st = ring_state(128, 0.25, 6.0, 1.0, dt);
            st.advance((t_end / dt).round() as u64).unwrap();
            st.psi
        };
        let dt = 0.02;
        let reference = run(dt / 8.0);
        let err = |psi: &[ComplexField2D; 2]| max_diff(&psi[0], &reference[0]).max(max_diff(&psi[1], &reference[1]));
        let factor = err(&run(dt)) / err(&run(dt / 2.0));
        assert!((3.5..=4.5).contains(&factor), "error reduction factor {factor}");
    }

    #[test]
    fn norm_is_conserved() {
        let mut st = ring_state(128, 0.25, 6.0, 1.0, 0.0915);
        st.advance(1000).unwrap();
        for n in st.norms() {
            assert!((n - 1.0).abs() < 1e-10, "norm {n}");
        }
    }

    #[test]
    fn plane_wave_energy() {
        let grid = make_grid(32, 0.5).unwrap();
        let area = grid.extent_x() * grid.extent_y();
        let k = 2.0 * std::f64::consts::PI * 3.0 / grid.extent_x();
        let wave = ComplexField2D::from_fn(grid.clone(), |x, _| Complex64::from_polar(1.0 / area.sqrt(), k * x));
        let zero = ComplexField2D::zeros(grid);
        let spec = free_spec([[0.0; 2]; 2]);
        let e1 = energy(&spec, &wave, &zero).unwrap();
        assert!((e1 - 0.5 * k * k).abs() < 1e-12 * k * k, "{e1}");
        let e2 = energy(&spec, &zero, &wave).unwrap();
        assert!((e2 - 0.5 * k * k / MR).abs() < 1e-12 * k * k, "{e2}");
    }

    #[test]
    fn potential_term_is_linear_in_spike_height() {
        let grid = make_grid(64, 0.25).unwrap();
        let a = gaussian(grid.clone(), 1.0, 1.5);
        let b = gaussian(grid, -0.5, 1.0);
        let mut spec = free_spec([[0.0; 2]; 2]);
        spec.sigma = 3.0;
        spec.v0 = 7.0;
        let mut one = PropagatorState::new(&spec, a.clone(), b.clone(), 0.1).unwrap();
        spec.v0 = 14.0;
        let mut two = PropagatorState::new(&spec, a, b, 0.1).unwrap();
        let (p1, p2) = (one.energy_terms().potential, two.energy_terms().potential);
        assert!(p1 > 0.0);
        assert!((p2 - 2.0 * p1).abs() < 1e-12 * p2);
        assert!((one.energy_terms().kinetic - two.energy_terms().kinetic).abs() < 1e-12);
    }

    #[test]
    fn stationary_state_keeps_energy() {
        // harmonic ground states of V_i = rho_i omega^2 r^2 / 4; both oscillate at omega / sqrt 2
        let grid = make_grid(64, 0.25).unwrap();
        let mut spec = free_spec([[0.0; 2]; 2]);
        spec.omega = 2.0;
        let big_omega = spec.omega / std::f64::consts::SQRT_2;
        let ground = |rho: f64| {
            let mut f = ComplexField2D::from_fn(grid.clone(), |x, y| {
                Complex64::new((-0.5 * rho * big_omega * (x * x + y * y)).exp(), 0.0)
            });
            f.normalize().unwrap();
            f
        };
        // the splitting error oscillates as dt^2: about 9e-6 at dt = 0.0915
        for (dt, steps, tol) in [(0.0915, 100, 2e-5), (0.0915 / 4.0, 400, 1e-6)] {
            let mut st = PropagatorState::new(&spec, ground(1.0), ground(MR), dt).unwrap();
            let start = st.energy();
            assert!((start - 2.0 * big_omega).abs() < 1e-10, "{start}");
            for _ in 0..10 {
                st.advance(steps).unwrap();
                let drift = ((st.energy() - start) / start).abs();
                assert!(drift < tol, "dt = {dt}: drift {drift}");
            }
        }
    }

    #[test]
    fn mass_ratio_dilates_free_autocorrelation() {
        // without trap and interactions species 2 evolves as species 1 slowed by m2/m1
        let grid = make_grid(128, 0.25).unwrap();
        let pair = |g: &Arc<Grid2D>| {
            let mut f = ComplexField2D::from_fn(g.clone(), |x, y| {
                Complex64::new(
                    (-((x - 3.0).powi(2) + y * y) / 0.5625).exp() + (-((x + 3.0).powi(2) + y * y) / 0.5625).exp(),
                    0.0,
                )
            });
            f.normalize().unwrap();
            f
        };
        let init = pair(&grid);
        let spec = free_spec([[0.0; 2]; 2]);
        let mut s1 = PropagatorState::new(&spec, init.clone(), init.clone(), 0.05).unwrap();
        let mut s2 = PropagatorState::new(&spec, init.clone(), init.clone(), 0.05 * MR).unwrap();
        for _ in 0..20 {
            s1.advance(5).unwrap();
            s2.advance(5).unwrap();
            let a1 = autocorrelation_unchecked(&init, &s1.psi[0]);
            let a2 = autocorrelation_unchecked(&init, &s2.psi[1]);
            assert!((a1 - a2).abs() < 1e-10, "{a1} vs {a2}");
        }
    }

    #[test]
    fn evolve_sampling_contract() {
        let mut st = ring_state(64, 0.25, 3.0, 1.0, 0.05);
        let cfg = EvolutionConfig {
            dt: 0.05,
            n_steps: 0,
            sample_every: 3,
        };
        assert_eq!(evolve(&mut st, &cfg, None).unwrap().len(), 1);

        let mut st = ring_state(64, 0.25, 3.0, 1.0, 0.05);
        let cfg = EvolutionConfig {
            dt: 0.05,
            n_steps: 10,
            sample_every: 10,
        };
        let ts = evolve(&mut st, &cfg, None).unwrap();
        assert_eq!(ts.t, vec![0.0, 0.5]);

        let mut st = ring_state(64, 0.25, 3.0, 1.0, 0.05);
        let cfg = EvolutionConfig {
            dt: 0.05,
            n_steps: 11,
            sample_every: 3,
        };
        let mut calls = 0;
        let mut hook = |_: f64, _: &ComplexField2D, _: &ComplexField2D| -> Result<()> {
            calls += 1;
            Ok(())
        };
        let ts = evolve(&mut st, &cfg, Some(&mut hook)).unwrap();
        assert_eq!(ts.len(), cfg.expected_samples());
        assert_eq!(calls, 4);
        assert_eq!(st.step_count, 11);
        assert_eq!(st.t(), 11.0 * 0.05);
    }

    #[test]
    fn evolve_rejects_mismatched_step() {
        let mut st = ring_state(64, 0.25, 3.0, 1.0, 0.05);
        let cfg = EvolutionConfig {
            dt: 0.1,
            n_steps: 1,
            sample_every: 1,
        };
        assert!(evolve(&mut st, &cfg, None).is_err());
        let bad = EvolutionConfig {
            dt: 0.05,
            n_steps: 1,
            sample_every: 0,
        };
        assert!(evolve(&mut st, &bad, None).is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let run = || {
            let mut st = ring_state(64, 0.25, 3.0, 1.0, 0.05);
            let cfg = EvolutionConfig {
                dt: 0.05,
                n_steps: 40,
                sample_every: 4,
            };
            evolve(&mut st, &cfg, None).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn blow_up_is_reported() {
        let grid = make_grid(32, 0.25).unwrap();
        let spec = free_spec([[1e308, 0.0], [0.0, 1e308]]);
        let a = gaussian(grid.clone(), 0.0, 1.0);
        let mut st = PropagatorState::new(&spec, a.clone(), a, 1e10).unwrap();
        let mut bad = st.psi[0].clone();
        bad.values[[0, 0]] = Complex64::new(f64::INFINITY, 0.0);
        st.psi[0] = bad;
        assert!(matches!(st.advance(1), Err(Error::BlowUp { step: 0, .. })));
    }
}
