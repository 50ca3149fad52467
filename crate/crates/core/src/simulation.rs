//! A complete run description and the glue that executes it.

use std::sync::Arc;

use crate::error::Result;
use crate::grid::{make_grid, ComplexField2D, Grid2D};
use crate::model::{initial_state, ModelSpec, PhysicalParams, TrapGeometry};
use crate::observables::TimeSeries;
use crate::solver::{evolve, EvolutionConfig, PropagatorState};

/// Grid and time-stepping choices.
#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub n_steps: u64,
    pub sample_every: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            n: 512,
            dx: 0.1841,
            dt: 0.0915,
            n_steps: 16384,
            sample_every: 2,
        }
    }
}

/// Everything needed to reproduce one evolution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scenario {
    pub physical: PhysicalParams,
    pub geometry: TrapGeometry,
    pub numerics: Numerics,
}

/// Result of [`Scenario::run`].
#[derive(Debug)]
pub struct RunOutput {
    pub spec: ModelSpec,
    pub series: TimeSeries,
}

impl Scenario {
    pub fn model(&self) -> Result<ModelSpec> {
        ModelSpec::new(&self.physical, &self.geometry)
    }

    pub fn grid(&self) -> Result<Arc<Grid2D>> {
        make_grid(self.numerics.n, self.numerics.dx)
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.numerics.dt,
            n_steps: self.numerics.n_steps,
            sample_every: self.numerics.sample_every,
        }
    }

    /// Same scenario with `a12 = ratio * a11`.
    pub fn with_a12_ratio(&self, ratio: f64) -> Scenario {
        let mut s = self.clone();
        s.physical.a12 = ratio * s.physical.a11;
        s
    }

    /// Same scenario with a new ring radius. A spike waist tied to the old
    /// radius is rescaled with it.
    pub fn with_r0(&self, r0: f64) -> Scenario {
        let mut s = self.clone();
        let sigma_ratio = s.geometry.sigma / s.geometry.r0;
        s.geometry.r0 = r0;
        s.geometry.sigma = sigma_ratio * r0;
        s
    }

    /// Sets `n_steps` so the run covers at least time `t_end`.
    pub fn with_duration(&self, t_end: f64) -> Scenario {
        let mut s = self.clone();
        s.numerics.n_steps = (t_end / s.numerics.dt).ceil() as u64;
        s
    }

    pub fn initial_state(&self) -> Result<(ModelSpec, ComplexField2D, ComplexField2D)> {
        let spec = self.model()?;
        let (a, b) = initial_state(self.grid()?, &spec)?;
        Ok((spec, a, b))
    }

    /// Runs the full evolution, calling `hook` at every sample.
    pub fn run(
        &self,
        hook: Option<&mut crate::solver::SampleHook<'_>>,
    ) -> Result<RunOutput> {
        let (spec, a, b) = self.initial_state()?;
        let mut state = PropagatorState::new(&spec, a, b, self.numerics.dt)?;
        let series = evolve(&mut state, &self.evolution(), hook)?;
        Ok(RunOutput { spec, series })
    }
}
