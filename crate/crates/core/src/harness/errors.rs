//! Mean-square `L2` error measures.
//!
//! Against the closed form:
//! `E(h, k)^2 = E[ sum_j (v_j^N - v(Nk, x_j))^2 h ]`.
//! Against the next coarser level `(2h, 4k)` driven by the same path:
//! `e(h, k)^2 = E[ sum_{j <= J/2} (f_{2j}^N - c_j^{N/4})^2 h ]`.

use rayon::prelude::*;

use super::stats::SampleStats;
use super::Experiment;
use crate::error::{Result, SpdeError};
use crate::model::exact_solution;
use crate::operators::Boundary;
use crate::scheme::Observe;
use crate::Real;

/// Monte Carlo mean of a per-path squared error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl ErrorEstimate {
    fn from_samples(xs: &[f64]) -> Self {
        let s = SampleStats::from_samples(xs);
        ErrorEstimate {
            value: s.mean,
            std_error: s.std_error(),
            samples: s.n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMeasures {
    pub level: u32,
    /// `E_l^2`, when the closed form applies.
    pub exact: Option<ErrorEstimate>,
    /// `e_l^2`, when `level >= 1`.
    pub two_grid: Option<ErrorEstimate>,
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 1 {
        return Err(SpdeError::domain("need at least one sample"));
    }
    Ok(())
}

/// Both error measures from one set of fine solves. The closed-form measure is
/// skipped when `with_exact` is false (e.g. for absorbing boundaries, where no
/// closed form is available).
pub fn error_measures<T: Real>(
    exp: &Experiment<T>,
    level: u32,
    samples: usize,
    seed: u64,
    with_exact: bool,
) -> Result<ErrorMeasures> {
    check_samples(samples)?;
    if with_exact && exp.layout.alpha != T::one() {
        return Err(SpdeError::domain("the closed-form error needs a uniform grid"));
    }
    let fine_grid = exp.layout.grid(level, &exp.params)?;
    if level >= 1 {
        let coarse_grid = exp.layout.grid(level - 1, &exp.params)?;
        if !fine_grid.nests(&coarse_grid) {
            return Err(SpdeError::domain("fine and coarse grids are not nested"));
        }
    }
    let horizon = exp.params.horizon;

    let per_path: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|m| -> Result<(f64, f64)> {
            let path = exp.path(level, m, seed)?;
            let (grid, states) = exp.solve(level, &path, &Observe::Terminal)?;
            let fine = states[0].values();
            let h = grid.h();
            let exact = if with_exact {
                let m_t = path.terminal();
                let mut acc = T::zero();
                for (&x, &v) in grid.nodes().iter().zip(fine) {
                    let d = v - exact_solution(&exp.params, horizon, m_t, x)?;
                    acc += d * d;
                }
                (acc * h).to_f64_lossy()
            } else {
                f64::NAN
            };
            let two_grid = if level >= 1 {
                let coarse_path = path.coarsen()?;
                let (_, cstates) = exp.solve(level - 1, &coarse_path, &Observe::Terminal)?;
                let coarse = cstates[0].values();
                let mut acc = T::zero();
                for (j, &c) in coarse.iter().enumerate() {
                    let d = fine[2 * j] - c;
                    acc += d * d;
                }
                (acc * h).to_f64_lossy()
            } else {
                f64::NAN
            };
            Ok((exact, two_grid))
        })
        .collect::<Result<_>>()?;

    let exact = with_exact.then(|| {
        let xs: Vec<f64> = per_path.iter().map(|p| p.0).collect();
        ErrorEstimate::from_samples(&xs)
    });
    let two_grid = (level >= 1).then(|| {
        let xs: Vec<f64> = per_path.iter().map(|p| p.1).collect();
        ErrorEstimate::from_samples(&xs)
    });
    Ok(ErrorMeasures { level, exact, two_grid })
}

/// `E_l^2` against the closed-form whole-line solution.
pub fn error_exact<T: Real>(exp: &Experiment<T>, level: u32, samples: usize, seed: u64) -> Result<ErrorEstimate> {
    if exp.scheme.bc != Boundary::DirichletZero {
        return Err(SpdeError::domain("the closed-form error is defined for the truncated whole-line problem"));
    }
    let m = error_measures(exp, level, samples, seed, true)?;
    Ok(m.exact.expect("requested"))
}

/// `e_l^2` between level `l` and level `l - 1` on a shared path.
pub fn error_two_grid<T: Real>(exp: &Experiment<T>, level: u32, samples: usize, seed: u64) -> Result<ErrorEstimate> {
    if level == 0 {
        return Err(SpdeError::domain("the two-grid error needs level >= 1"));
    }
    let m = error_measures(exp, level, samples, seed, false)?;
    Ok(m.two_grid.expect("level >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::LevelLayout;
    use crate::model::ModelParams;
    use crate::scheme::SchemeParams;

    fn heat_experiment() -> Experiment<f64> {
        let p = ModelParams::<f64>::new(0.0, 0.0, 0.1, -8.0, 8.0, 1.0).unwrap();
        Experiment::new(
            p,
            SchemeParams::crank_nicolson(Boundary::DirichletZero),
            LevelLayout::<f64>::uniform(-8.0, 8.0, 32, 1.0 / 64.0),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_limit_is_small_and_converges() {
        let e = heat_experiment();
        let e0 = error_exact(&e, 0, 1, 0).unwrap();
        let e2 = error_exact(&e, 2, 1, 0).unwrap();
        assert!(e0.value < 1e-3, "{}", e0.value);
        assert!(e2.value < e0.value / 100.0, "{} {}", e0.value, e2.value);
        assert_eq!(e0.std_error, 0.0);
    }

    #[test]
    fn std_error_shrinks_with_samples() {
        let p = ModelParams::<f64>::new(0.081, 0.2, 5.0, -16.0 / 3.0, 16.0, 1.0).unwrap();
        let e = Experiment::new(
            p,
            SchemeParams::explicit(Boundary::DirichletZero),
            LevelLayout::<f64>::uniform(-16.0 / 3.0, 16.0, 16, 0.25),
        )
        .unwrap();
        let a = error_exact(&e, 1, 400, 11).unwrap();
        let b = error_exact(&e, 1, 1600, 11).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!(ratio > 1.5 && ratio < 2.7, "ratio {ratio}");
    }

    #[test]
    fn two_grid_needs_a_coarse_level() {
        let e = heat_experiment();
        assert!(error_two_grid(&e, 0, 2, 0).is_err());
        let v = error_two_grid(&e, 1, 1, 0).unwrap();
        assert!(v.value > 0.0 && v.value < 1e-4);
    }

    #[test]
    fn seeds_make_errors_reproducible() {
        let p = ModelParams::<f64>::new(0.081, 0.2, 5.0, -16.0 / 3.0, 16.0, 1.0).unwrap();
        let e = Experiment::new(
            p,
            SchemeParams::crank_nicolson(Boundary::DirichletZero),
            LevelLayout::<f64>::uniform(-16.0 / 3.0, 16.0, 16, 0.25),
        )
        .unwrap();
        let a = error_measures(&e, 2, 64, 5, true).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| error_measures(&e, 2, 64, 5, true).unwrap());
        assert_eq!(a, b);
    }
}
