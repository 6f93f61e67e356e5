//! Monte Carlo machinery: reproducible Brownian paths with fine/coarse
//! coupling, mean-square error measures, multilevel level estimators and an
//! interacting-particle oracle.

mod errors;
mod mlmc;
mod particles;
mod path;
mod rng;
pub mod stats;

pub use errors::{error_exact, error_measures, error_two_grid, ErrorEstimate, ErrorMeasures};
pub use mlmc::{combine_levels, level_samples, mlmc_level_estimate, single_level_estimate, LevelEstimate, MlmcEstimate, PathFunctional};
pub use particles::{particle_oracle, Absorption, ParticleEstimate};
pub use path::{sample_path, step_count, BrownianPath};
pub use rng::{Purpose, StreamKey};

use crate::error::{Result, SpdeError};
use crate::grid::Grid;
use crate::model::{dirac_hat_projection, ModelParams};
use crate::operators::Boundary;
use crate::scheme::{Observe, SchemeParams, SolutionField, Stepper};
use crate::Real;

/// `(h_l, k_l) = (h0 2^-l, k0 4^-l)`; the mesh ratio `k_l/h_l^2` is the same on every level.
pub fn level_sequence<T: Real>(level: u32, h0: T, k0: T) -> (T, T) {
    let two = T::lit(2.0);
    let h = h0 / two.powi(level as i32);
    let k = k0 / T::lit(4.0).powi(level as i32);
    (h, k)
}

/// Family of nested discretisations: level `l` has `base_intervals 2^l` cells
/// and timestep `k0 4^-l`. With `alpha < 1` the cells are uniform in
/// `y = x^alpha` on `[0, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelLayout<T> {
    pub x_lo: T,
    pub x_hi: T,
    pub base_intervals: usize,
    pub k0: T,
    pub alpha: T,
}

impl<T: Real> LevelLayout<T> {
    pub fn uniform(x_lo: T, x_hi: T, base_intervals: usize, k0: T) -> Self {
        LevelLayout {
            x_lo,
            x_hi,
            base_intervals,
            k0,
            alpha: T::one(),
        }
    }

    pub fn stretched(x_hi: T, base_intervals: usize, k0: T, alpha: T) -> Self {
        LevelLayout {
            x_lo: T::zero(),
            x_hi,
            base_intervals,
            k0,
            alpha,
        }
    }

    pub fn intervals(&self, level: u32) -> usize {
        self.base_intervals << level
    }

    /// Coarsest spacing in the computational coordinate.
    pub fn h0(&self) -> T {
        (self.x_hi.powf(self.alpha) - self.x_lo) / T::from_usize_lossy(self.base_intervals)
    }

    pub fn level(&self, level: u32) -> (T, T) {
        level_sequence(level, self.h0(), self.k0)
    }

    pub fn timestep(&self, level: u32) -> T {
        self.level(level).1
    }

    pub fn grid(&self, level: u32, params: &ModelParams<T>) -> Result<Grid<T>> {
        let j = self.intervals(level);
        if self.alpha == T::one() {
            Grid::uniform(self.x_lo, self.x_hi, j)
        } else {
            if self.x_lo != T::zero() {
                return Err(SpdeError::domain("stretched layouts start at x = 0"));
            }
            Grid::stretched(self.x_hi, j, self.alpha, params)
        }
    }
}

/// A model, a scheme and a level family: everything needed to solve one
/// Brownian path on any level from Dirac data at `params.x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experiment<T> {
    pub params: ModelParams<T>,
    pub scheme: SchemeParams<T>,
    pub layout: LevelLayout<T>,
}

impl<T: Real> Experiment<T> {
    pub fn new(params: ModelParams<T>, scheme: SchemeParams<T>, layout: LevelLayout<T>) -> Result<Self> {
        params.validate()?;
        if layout.base_intervals < 2 || !(layout.k0 > T::zero()) {
            return Err(SpdeError::domain("layout needs at least 2 base intervals and k0 > 0"));
        }
        step_count(params.horizon, layout.k0)?;
        Ok(Experiment { params, scheme, layout })
    }

    pub fn initial_field(&self, grid: &Grid<T>) -> Result<SolutionField<T>> {
        let mut v = dirac_hat_projection(grid, self.params.x0)?;
        let last = grid.intervals();
        match self.scheme.bc {
            Boundary::DirichletZero => {
                v.values_mut()[0] = T::zero();
                v.values_mut()[last] = T::zero();
            }
            Boundary::Periodic => {
                // Node J is node 0 again.
                let wrapped = v.values()[last];
                v.values_mut()[0] += wrapped;
                v.values_mut()[last] = v.values()[0];
            }
        }
        Ok(v)
    }

    /// Brownian path of sample `index` on `level`.
    pub fn path(&self, level: u32, index: u64, seed: u64) -> Result<BrownianPath<T>> {
        let key = StreamKey::new(seed).level(level).purpose(Purpose::Brownian).index(index);
        sample_path(self.params.horizon, self.layout.timestep(level), key)
    }

    /// Solves one path on `level`; `path.k()` must be that level's timestep.
    pub fn solve(
        &self,
        level: u32,
        path: &BrownianPath<T>,
        observe: &Observe<T>,
    ) -> Result<(Grid<T>, Vec<SolutionField<T>>)> {
        let k = self.layout.timestep(level);
        if (path.k() - k).abs() > T::lit(1e-12) * k {
            return Err(SpdeError::domain(format!(
                "path timestep {} does not match level {level} timestep {k}",
                path.k()
            )));
        }
        let grid = self.layout.grid(level, &self.params)?;
        let v0 = self.initial_field(&grid)?;
        let states = {
            let mut stepper = Stepper::new(&grid, self.scheme, &self.params, k)?;
            stepper.run(&v0, path.draws(), observe)?
        };
        Ok((grid, states))
    }
}
