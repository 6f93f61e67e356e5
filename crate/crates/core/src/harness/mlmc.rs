//! Multilevel Monte Carlo level estimators.
//!
//! `Y_0` estimates `E[P_0]`; for `l >= 1`, `Y_l` averages `P_l - P_{l-1}` over
//! paths that drive both levels with the same Brownian trajectory (the coarse
//! path is the fine path coarsened by 4) and are independent across levels. The
//! combined estimator `sum_l Y_l` has variance `sum_l V_l / N_l`.

use rayon::prelude::*;

use super::stats::{compensated_sum, SampleStats};
use super::Experiment;
use crate::error::{Result, SpdeError};
use crate::grid::Grid;
use crate::scheme::{Observe, SolutionField};
use crate::Real;

/// A real-valued functional of one solved trajectory.
pub trait PathFunctional<T>: Sync {
    /// Times at which the solution is handed to [`PathFunctional::evaluate`].
    fn observation_times(&self) -> Vec<T>;

    fn evaluate(&self, grid: &Grid<T>, observed: &[SolutionField<T>]) -> Result<T>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelEstimate<T> {
    pub level: u32,
    pub samples: usize,
    pub mean: T,
    /// Single-sample variance `V_l`.
    pub variance: T,
    pub std_error: T,
}

impl<T: Real> LevelEstimate<T> {
    fn from_samples(level: u32, xs: &[f64]) -> Self {
        let s = SampleStats::from_samples(xs);
        LevelEstimate {
            level,
            samples: s.n,
            mean: T::lit(s.mean),
            variance: T::lit(s.variance),
            std_error: T::lit(s.std_error()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlmcEstimate<T> {
    pub levels: Vec<LevelEstimate<T>>,
    /// `sum_l mean(Y_l)`.
    pub estimate: T,
    /// `sum_l V_l / N_l`.
    pub variance: T,
}

pub fn combine_levels<T: Real>(levels: &[LevelEstimate<T>]) -> MlmcEstimate<T> {
    let estimate = compensated_sum(levels.iter().map(|l| l.mean.to_f64_lossy()));
    let variance = compensated_sum(
        levels
            .iter()
            .map(|l| l.variance.to_f64_lossy() / l.samples as f64),
    );
    MlmcEstimate {
        levels: levels.to_vec(),
        estimate: T::lit(estimate),
        variance: T::lit(variance),
    }
}

fn evaluate_on<T: Real, P: PathFunctional<T>>(
    exp: &Experiment<T>,
    level: u32,
    path: &super::BrownianPath<T>,
    payoff: &P,
    times: &Observe<T>,
) -> Result<T> {
    let (grid, states) = exp.solve(level, path, times)?;
    payoff.evaluate(&grid, &states)
}

/// Per-sample values of `P_l - P_{l-1}` (or `P_0` on level 0), in sample order.
pub fn level_samples<T: Real, P: PathFunctional<T>>(
    exp: &Experiment<T>,
    level: u32,
    n_samples: usize,
    payoff: &P,
    seed: u64,
) -> Result<Vec<T>> {
    let times = Observe::Times(payoff.observation_times());
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let path = exp.path(level, i, seed)?;
            let fine = evaluate_on(exp, level, &path, payoff, &times)?;
            if level == 0 {
                return Ok(fine);
            }
            let coarse = evaluate_on(exp, level - 1, &path.coarsen()?, payoff, &times)?;
            Ok(fine - coarse)
        })
        .collect()
}

/// `Y_l` with `N_l = n_samples` coupled paths.
pub fn mlmc_level_estimate<T: Real, P: PathFunctional<T>>(
    exp: &Experiment<T>,
    level: u32,
    n_samples: usize,
    payoff: &P,
    seed: u64,
) -> Result<LevelEstimate<T>> {
    if n_samples < 2 {
        return Err(SpdeError::domain(format!("need at least 2 samples, got {n_samples}")));
    }
    let xs: Vec<f64> = level_samples(exp, level, n_samples, payoff, seed)?
        .into_iter()
        .map(|x| x.to_f64_lossy())
        .collect();
    Ok(LevelEstimate::from_samples(level, &xs))
}

/// Plain estimator of `E[P_l]` on a single level (no coupling).
pub fn single_level_estimate<T: Real, P: PathFunctional<T>>(
    exp: &Experiment<T>,
    level: u32,
    n_samples: usize,
    payoff: &P,
    seed: u64,
) -> Result<LevelEstimate<T>> {
    if n_samples < 2 {
        return Err(SpdeError::domain(format!("need at least 2 samples, got {n_samples}")));
    }
    let times = Observe::Times(payoff.observation_times());
    let xs: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let path = exp.path(level, i, seed)?;
            evaluate_on(exp, level, &path, payoff, &times).map(|x| x.to_f64_lossy())
        })
        .collect::<Result<_>>()?;
    Ok(LevelEstimate::from_samples(level, &xs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::LevelLayout;
    use crate::model::ModelParams;
    use crate::operators::Boundary;
    use crate::scheme::SchemeParams;

    struct Constant(f64);

    impl PathFunctional<f64> for Constant {
        fn observation_times(&self) -> Vec<f64> {
            vec![]
        }
        fn evaluate(&self, _: &Grid<f64>, _: &[SolutionField<f64>]) -> Result<f64> {
            Ok(self.0)
        }
    }

    struct TerminalMass {
        horizon: f64,
        bc: Boundary,
    }

    impl PathFunctional<f64> for TerminalMass {
        fn observation_times(&self) -> Vec<f64> {
            vec![self.horizon]
        }
        fn evaluate(&self, grid: &Grid<f64>, observed: &[SolutionField<f64>]) -> Result<f64> {
            Ok(observed[0].mass(grid, self.bc))
        }
    }

    /// Value of the solution at x = 6, interpolated in the computational coordinate.
    struct PointValue;

    impl PathFunctional<f64> for PointValue {
        fn observation_times(&self) -> Vec<f64> {
            vec![1.0]
        }
        fn evaluate(&self, grid: &Grid<f64>, observed: &[SolutionField<f64>]) -> Result<f64> {
            let y = grid.to_computational(6.0);
            let t = (y - grid.comp_nodes()[0]) / grid.h();
            let j = t.floor() as usize;
            let w = t - j as f64;
            let v = observed[0].values();
            Ok((1.0 - w) * v[j] + w * v[j + 1])
        }
    }

    fn experiment(bc: Boundary) -> Experiment<f64> {
        let p = ModelParams::<f64>::new(0.081, 0.2, 5.0, 0.0, 16.0, 1.0).unwrap();
        Experiment::new(p, SchemeParams::crank_nicolson(bc), LevelLayout::<f64>::uniform(0.0, 16.0, 10, 0.25)).unwrap()
    }

    #[test]
    fn constant_payoff_has_zero_corrections() {
        let e = experiment(Boundary::DirichletZero);
        let y = mlmc_level_estimate(&e, 2, 8, &Constant(3.5), 1).unwrap();
        assert_eq!(y.mean, 0.0);
        assert_eq!(y.variance, 0.0);
        let y0 = mlmc_level_estimate(&e, 0, 8, &Constant(3.5), 1).unwrap();
        assert_eq!(y0.mean, 3.5);
    }

    #[test]
    fn periodic_terminal_mass_is_one() {
        let e = experiment(Boundary::Periodic);
        let payoff = TerminalMass {
            horizon: 1.0,
            bc: Boundary::Periodic,
        };
        let y0 = mlmc_level_estimate(&e, 0, 16, &payoff, 2).unwrap();
        assert!((y0.mean - 1.0).abs() < 1e-13);
        assert!(y0.variance < 1e-26);
    }

    #[test]
    fn combined_variance_is_sum_of_level_variances() {
        let levels = [
            LevelEstimate { level: 0, samples: 100, mean: 1.0f64, variance: 4.0, std_error: 0.2 },
            LevelEstimate { level: 1, samples: 25, mean: 0.1f64, variance: 0.5, std_error: 0.141 },
        ];
        let c = combine_levels(&levels);
        assert!((c.estimate - 1.1).abs() < 1e-15);
        assert!((c.variance - (0.04 + 0.02)).abs() < 1e-15);
    }

    #[test]
    fn telescoping_matches_direct_estimate() {
        let e = experiment(Boundary::DirichletZero);
        let n = 400;
        let levels: Vec<_> = (0..3)
            .map(|l| mlmc_level_estimate(&e, l, n, &PointValue, 100 + l as u64).unwrap())
            .collect();
        let combined = combine_levels(&levels);
        let direct = single_level_estimate(&e, 2, n, &PointValue, 999).unwrap();
        let se = (combined.variance + direct.std_error * direct.std_error).sqrt();
        assert!((combined.estimate - direct.mean).abs() < 3.0 * se, "{} vs {}", combined.estimate, direct.mean);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let e = experiment(Boundary::DirichletZero);
        let a = mlmc_level_estimate(&e, 1, 32, &PointValue, 4).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mlmc_level_estimate(&e, 1, 32, &PointValue, 4).unwrap());
        assert_eq!(a, b);
    }
}
