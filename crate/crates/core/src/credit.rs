//! Basket loss, tranche notional and the discounted spread-payment leg.
//!
//! On `[0, x_hi]` with absorption at 0 the surviving mass is
//! `h sum_{j=1}^{J-1} w_j g'(y_j)` and the loss is one minus it. A tranche
//! `[a, d]` has outstanding notional `Z = max(d - L, 0) - max(a - L, 0)` and the
//! per-path spread leg is `sum_i exp(-r T_i) (Z_{T_{i-1}} - Z_{T_i})` with
//! `T_i = i q`.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Result, SpdeError};
use crate::grid::Grid;
use crate::harness::{mlmc_level_estimate, step_count, Experiment, LevelEstimate, LevelLayout, PathFunctional};
use crate::model::ModelParams;
use crate::operators::Boundary;
use crate::scheme::{SchemeParams, SolutionField};
use crate::Real;

/// Excursions of the raw loss outside `[0, 1]` smaller than this are rounding.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Loss decrease tolerated between observation dates before it is counted as a
/// monotonicity violation.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrancheSpec<T> {
    pub attachment: T,
    pub detachment: T,
    /// Continuously compounded interest rate per year.
    pub rate: T,
    /// Payment interval in years.
    pub interval: T,
    pub payments: usize,
}

impl<T: Real> TrancheSpec<T> {
    pub fn new(attachment: T, detachment: T, rate: T, interval: T, payments: usize) -> Result<Self> {
        if !(attachment >= T::zero() && attachment < detachment && detachment <= T::one()) {
            return Err(SpdeError::domain(format!(
                "tranche needs 0 <= a < d <= 1, got [{attachment}, {detachment}]"
            )));
        }
        if !(rate >= T::zero()) {
            return Err(SpdeError::domain("interest rate must be non-negative"));
        }
        if !(interval > T::zero()) || payments == 0 {
            return Err(SpdeError::domain("need a positive payment interval and at least one payment"));
        }
        Ok(TrancheSpec {
            attachment,
            detachment,
            rate,
            interval,
            payments,
        })
    }

    /// Equity tranche `[0, 3%]`, 4.2% rate, 20 quarterly payments.
    pub fn reference() -> Self {
        TrancheSpec {
            attachment: T::zero(),
            detachment: T::lit(0.03),
            rate: T::lit(0.042),
            interval: T::lit(0.25),
            payments: 20,
        }
    }

    pub fn maturity(&self) -> T {
        self.interval * T::from_usize_lossy(self.payments)
    }

    /// `T_0, ..., T_n`.
    pub fn payment_times(&self) -> Vec<T> {
        (0..=self.payments)
            .map(|i| self.interval * T::from_usize_lossy(i))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss<T> {
    pub value: T,
    /// The raw quadrature fell outside `[0, 1]` by more than [`CLAMP_TOLERANCE`].
    pub clamped: bool,
}

/// Interior Riemann-sum loss `1 - h sum_{j=1}^{J-1} w_j g'(y_j)`, clamped to `[0, 1]`.
pub fn loss<T: Real>(field: &SolutionField<T>, grid: &Grid<T>) -> Loss<T> {
    let j_max = grid.intervals();
    let survived: T = (1..j_max)
        .map(|j| field.values()[j] * grid.jacobian(grid.comp_nodes()[j]))
        .sum::<T>()
        * grid.h();
    let raw = T::one() - survived;
    let value = raw.max(T::zero()).min(T::one());
    Loss {
        value,
        clamped: (value - raw).abs() > T::lit(CLAMP_TOLERANCE),
    }
}

/// `Z = max(d - L, 0) - max(a - L, 0)`.
pub fn tranche_notional<T: Real>(loss: T, tranche: &TrancheSpec<T>) -> T {
    (tranche.detachment - loss).max(T::zero()) - (tranche.attachment - loss).max(T::zero())
}

/// Discounted sum of notional decrements over the payment dates.
pub fn spread_leg<T: Real>(z_values: &[T], tranche: &TrancheSpec<T>) -> Result<T> {
    if z_values.len() != tranche.payments + 1 {
        return Err(SpdeError::domain(format!(
            "expected {} notional values, got {}",
            tranche.payments + 1,
            z_values.len()
        )));
    }
    Ok(z_values
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let t = tranche.interval * T::from_usize_lossy(i + 1);
            (-tranche.rate * t).exp() * (w[0] - w[1])
        })
        .sum())
}

/// Spread leg as a path functional, with diagnostics on the loss quadrature.
#[derive(Debug)]
pub struct SpreadLegPayoff<T> {
    pub tranche: TrancheSpec<T>,
    clamp_events: AtomicUsize,
    monotonicity_violations: AtomicUsize,
}

impl<T: Real> SpreadLegPayoff<T> {
    pub fn new(tranche: TrancheSpec<T>) -> Self {
        SpreadLegPayoff {
            tranche,
            clamp_events: AtomicUsize::new(0),
            monotonicity_violations: AtomicUsize::new(0),
        }
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events.load(Ordering::Relaxed)
    }

    /// Observation intervals over which the loss fell by more than
    /// [`MONOTONICITY_TOLERANCE`].
    pub fn monotonicity_violations(&self) -> usize {
        self.monotonicity_violations.load(Ordering::Relaxed)
    }
}

impl<T: Real> PathFunctional<T> for SpreadLegPayoff<T> {
    fn observation_times(&self) -> Vec<T> {
        self.tranche.payment_times()
    }

    fn evaluate(&self, grid: &Grid<T>, observed: &[SolutionField<T>]) -> Result<T> {
        let mut z = Vec::with_capacity(observed.len());
        let mut prev: Option<T> = None;
        for field in observed {
            let l = loss(field, grid);
            if l.clamped {
                self.clamp_events.fetch_add(1, Ordering::Relaxed);
            }
            if let Some(p) = prev {
                if l.value < p - T::lit(MONOTONICITY_TOLERANCE) {
                    self.monotonicity_violations.fetch_add(1, Ordering::Relaxed);
                }
            }
            prev = Some(l.value);
            z.push(tranche_notional(l.value, &self.tranche));
        }
        spread_leg(&z, &self.tranche)
    }
}

/// Spatial discretisation of the absorbing-boundary problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind<T> {
    Uniform,
    /// Uniform in `y = x^alpha`.
    Stretched(T),
}

impl<T: Real> GridKind<T> {
    pub fn alpha(&self) -> T {
        match *self {
            GridKind::Uniform => T::one(),
            GridKind::Stretched(a) => a,
        }
    }
}

/// Absorbing-boundary pricing problem on `[0, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreditSetup<T> {
    pub params: ModelParams<T>,
    pub scheme: SchemeParams<T>,
    pub tranche: TrancheSpec<T>,
    pub kind: GridKind<T>,
    /// Cells on level 0; level `l` has `base_intervals 2^l` in either coordinate.
    pub base_intervals: usize,
    pub k0: T,
}

impl<T: Real> CreditSetup<T> {
    /// `mu = 0.081`, `rho = 0.2`, Dirac at 5 on `[0, 16]`, `T = 5`, `h0 = 8/5`,
    /// `k0 = 1/4`, Crank-Nicolson with `sigma = -1`.
    pub fn reference(kind: GridKind<T>) -> Self {
        let tranche = TrancheSpec::reference();
        CreditSetup {
            params: ModelParams {
                mu: T::lit(0.081),
                rho: T::lit(0.2),
                x0: T::lit(5.0),
                x_lo: T::zero(),
                x_hi: T::lit(16.0),
                horizon: tranche.maturity(),
            },
            scheme: SchemeParams::crank_nicolson(Boundary::DirichletZero),
            tranche,
            kind,
            base_intervals: 10,
            k0: T::lit(0.25),
        }
    }

    pub fn experiment(&self) -> Result<Experiment<T>> {
        if self.params.x_lo != T::zero() {
            return Err(SpdeError::domain("the absorbing barrier sits at x = 0"));
        }
        if self.scheme.bc != Boundary::DirichletZero {
            return Err(SpdeError::domain("the absorbing boundary problem needs Dirichlet data"));
        }
        let mismatch = (self.params.horizon - self.tranche.maturity()).abs();
        if mismatch > T::lit(1e-12) * self.params.horizon {
            return Err(SpdeError::domain("model horizon must equal the tranche maturity"));
        }
        let layout = match self.kind {
            GridKind::Uniform => LevelLayout::uniform(T::zero(), self.params.x_hi, self.base_intervals, self.k0),
            GridKind::Stretched(alpha) => {
                LevelLayout::stretched(self.params.x_hi, self.base_intervals, self.k0, alpha)
            }
        };
        Experiment::new(self.params, self.scheme, layout)
    }

    fn check_level(&self, level: u32) -> Result<Experiment<T>> {
        let exp = self.experiment()?;
        let k = exp.layout.timestep(level);
        step_count(self.tranche.interval, k).map_err(|_| {
            SpdeError::domain(format!(
                "timestep {k} of level {level} does not divide the payment interval {}",
                self.tranche.interval
            ))
        })?;
        Ok(exp)
    }

    /// `Y_l` for the spread leg, plus the payoff carrying the quadrature diagnostics.
    pub fn price_level(
        &self,
        level: u32,
        n_samples: usize,
        seed: u64,
    ) -> Result<(LevelEstimate<T>, SpreadLegPayoff<T>)> {
        let exp = self.check_level(level)?;
        if level >= 1 {
            self.check_level(level - 1)?;
        }
        let payoff = SpreadLegPayoff::new(self.tranche);
        let est = mlmc_level_estimate(&exp, level, n_samples, &payoff, seed)?;
        Ok((est, payoff))
    }
}
