//! Mean-square stability of Fourier modes.
//!
//! Inserting `V_j^n = X_n exp(i j phi)` into the scheme (with `mu = 0`) gives the
//! scalar recursion
//!
//! ```text
//! X_{n+1} = X_n [1 + k a (1-theta) - sqrt(k) i c Z - k rho a ((1-sigma) - Z^2)] / [1 - k a theta + k rho a sigma]
//! a = -(2/h^2) sin^2(phi/2),  c = (sqrt(rho)/h) sin(phi)
//! ```
//!
//! whose mean-square amplification is [`amplification`]. The scheme is stable for
//! every mode iff `(k/h^2) f < 1` with `f = 1 - 2 (theta - rho sigma - rho^2)`.

use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Result, SpdeError};
use crate::harness::{stats::SampleStats, StreamKey, Purpose};
use crate::model::check_rho;
use crate::Real;

/// Number of points of the `(0, pi]` sweep used as a numerical cross-check.
pub const SWEEP_POINTS: usize = 1024;

/// `f(rho; theta, sigma) = 1 - 2 (theta - rho sigma - rho^2)`.
pub fn stability_function<T: Real>(rho: T, theta: T, sigma: T) -> Result<T> {
    check_rho(rho)?;
    let two = T::lit(2.0);
    Ok(T::one() - two * (theta - rho * sigma - rho * rho))
}

/// Largest stable `k/h^2`, or `None` when the scheme is unconditionally stable.
pub fn stability_limit<T: Real>(rho: T, theta: T, sigma: T) -> Result<Option<T>> {
    let f = stability_function(rho, theta, sigma)?;
    Ok(if f <= T::zero() { None } else { Some(T::one() / f) })
}

fn symbols<T: Real>(phi: T, h: T, rho: T) -> (T, T) {
    let half = T::lit(0.5);
    let a = -T::lit(2.0) / (h * h) * (half * phi).sin().powi(2);
    let c = rho.sqrt() / h * phi.sin();
    (a, c)
}

/// Mean-square amplification `G(phi) = E|X_{n+1}|^2 / E|X_n|^2`.
pub fn amplification<T: Real>(phi: T, k: T, h: T, rho: T, theta: T, sigma: T) -> Result<T> {
    if !(k > T::zero() && h > T::zero()) {
        return Err(SpdeError::domain("k and h must be positive"));
    }
    if phi.abs() > T::PI() + T::epsilon() {
        return Err(SpdeError::domain(format!("|phi| must not exceed pi, got {phi}")));
    }
    let (a, c) = symbols(phi, h, rho);
    let denom = T::one() - k * a * (theta - rho * sigma);
    if denom.abs() < T::epsilon() {
        return Err(SpdeError::domain("amplification denominator vanishes"));
    }
    let lead = T::one() + k * a * (T::one() - theta + rho * sigma);
    let num = lead * lead + k * c * c + T::lit(2.0) * k * k * rho * rho * a * a;
    Ok(num / (denom * denom))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    pub f_value: T,
    /// Bound on `k/h^2`; `None` stands for +infinity.
    pub max_ratio: Option<T>,
    pub unconditional: bool,
    /// Closed-form verdict for the given `(k, h)`.
    pub stable: bool,
    pub ratio: T,
    /// `max G(phi)` over the sweep.
    pub sweep_sup: T,
    /// `(phi, G(phi))` on `SWEEP_POINTS` uniform points of `(0, pi]`.
    pub samples: Vec<(T, T)>,
}

impl<T: Real> StabilityReport<T> {
    /// Whether the sweep and the closed form reach the same verdict.
    pub fn sweep_agrees(&self) -> bool {
        (self.sweep_sup < T::one()) == self.stable
    }
}

/// `sup` of `G` over the standard sweep.
pub fn sweep_sup<T: Real>(k: T, h: T, rho: T, theta: T, sigma: T) -> Result<T> {
    let mut sup = T::neg_infinity();
    for (_, g) in sweep(k, h, rho, theta, sigma)? {
        sup = sup.max(g);
    }
    Ok(sup)
}

fn sweep<T: Real>(k: T, h: T, rho: T, theta: T, sigma: T) -> Result<Vec<(T, T)>> {
    (1..=SWEEP_POINTS)
        .map(|i| {
            let phi = T::PI() * T::from_usize_lossy(i) / T::from_usize_lossy(SWEEP_POINTS);
            amplification(phi, k, h, rho, theta, sigma).map(|g| (phi, g))
        })
        .collect()
}

pub fn classify<T: Real>(rho: T, theta: T, sigma: T, k: T, h: T) -> Result<StabilityReport<T>> {
    let f_value = stability_function(rho, theta, sigma)?;
    let unconditional = f_value <= T::zero();
    let max_ratio = (!unconditional).then(|| T::one() / f_value);
    let ratio = k / (h * h);
    let stable = max_ratio.map_or(true, |m| ratio < m);
    let samples = sweep(k, h, rho, theta, sigma)?;
    let sweep_sup = samples.iter().fold(T::neg_infinity(), |m, &(_, g)| m.max(g));
    Ok(StabilityReport {
        f_value,
        max_ratio,
        unconditional,
        stable,
        ratio,
        sweep_sup,
        samples,
    })
}

/// Monte Carlo growth-rate estimate of a single Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDecay<T> {
    /// `(mean |X_n|^2)^(1/n)`; +infinity once the recursion overflows.
    pub growth: T,
    /// Delta-method standard error of `growth`.
    pub std_error: T,
    pub n_steps: usize,
    pub n_samples: usize,
}

/// Simulates the scalar mode recursion over `n_steps` for `n_samples`
/// independent draws of `Z` and estimates `(E|X_n|^2)^(1/n)`, which converges to
/// [`amplification`] as the sample count grows.
#[allow(clippy::too_many_arguments)]
pub fn empirical_mode_decay<T: Real>(
    phi: T,
    k: T,
    h: T,
    rho: T,
    theta: T,
    sigma: T,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<ModeDecay<T>> {
    if n_samples < 1000 {
        return Err(SpdeError::domain(format!("need at least 1000 samples, got {n_samples}")));
    }
    if n_steps == 0 {
        return Err(SpdeError::domain("need at least one step"));
    }
    check_rho(rho)?;
    let (a, c) = symbols(phi, h, rho);
    let denom = T::one() - k * a * theta + k * rho * a * sigma;
    if denom.abs() < T::epsilon() {
        return Err(SpdeError::domain("amplification denominator vanishes"));
    }
    let base = T::one() + k * a * (T::one() - theta) - k * rho * a * (T::one() - sigma);
    let ito = k * rho * a;
    let noise = k.sqrt() * c;

    let squares: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamKey::new(seed).purpose(Purpose::ModeDecay).index(i as u64).rng();
            let mut x = Complex::new(T::one(), T::zero());
            for _ in 0..n_steps {
                let z = T::lit(StandardNormal.sample(&mut rng));
                let ratio = Complex::new(base + ito * z * z, -noise * z) / denom;
                x = x * ratio;
            }
            x.norm_sqr().to_f64_lossy()
        })
        .collect();

    let stats = SampleStats::from_samples(&squares);
    let n = n_steps as f64;
    if !stats.mean.is_finite() {
        return Ok(ModeDecay {
            growth: T::infinity(),
            std_error: T::infinity(),
            n_steps,
            n_samples,
        });
    }
    let growth = stats.mean.powf(1.0 / n);
    // d/dm m^(1/n) = m^(1/n) / (n m)
    let std_error = if stats.mean > 0.0 {
        growth / (n * stats.mean) * stats.std_error()
    } else {
        0.0
    };
    Ok(ModeDecay {
        growth: T::lit(growth),
        std_error: T::lit(std_error),
        n_steps,
        n_samples,
    })
}
