use rand_distr::{Distribution, StandardNormal};

use super::rng::StreamKey;
use super::stats::compensated_sum;
use crate::error::{Result, SpdeError};
use crate::Real;

/// Standard normal draws `Z_n` of a common Brownian motion sampled with step
/// `k`: `M_{(n+1)k} - M_{nk} = sqrt(k) Z_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath<T> {
    k: T,
    draws: Vec<T>,
}

impl<T: Real> BrownianPath<T> {
    pub fn from_draws(k: T, draws: Vec<T>) -> Result<Self> {
        if !(k > T::zero()) {
            return Err(SpdeError::domain(format!("timestep must be positive, got {k}")));
        }
        Ok(BrownianPath { k, draws })
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn draws(&self) -> &[T] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn horizon(&self) -> T {
        self.k * T::from_usize_lossy(self.draws.len())
    }

    pub fn increments(&self) -> impl Iterator<Item = T> + '_ {
        let sk = self.k.sqrt();
        self.draws.iter().map(move |&z| sk * z)
    }

    /// `M` at every step time, starting from `M_0 = 0`.
    pub fn values(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.draws.len() + 1);
        let mut acc = T::zero();
        out.push(acc);
        for dm in self.increments() {
            acc += dm;
            out.push(acc);
        }
        out
    }

    /// `M_T = sqrt(k) sum_n Z_n`.
    pub fn terminal(&self) -> T {
        let s = compensated_sum(self.draws.iter().map(|z| z.to_f64_lossy()));
        self.k.sqrt() * T::lit(s)
    }

    /// Same trajectory observed with step `4k`:
    /// `Z^c_m = (Z_{4m} + ... + Z_{4m+3}) / 2`.
    pub fn coarsen(&self) -> Result<Self> {
        if self.draws.len() % 4 != 0 {
            return Err(SpdeError::domain(format!(
                "cannot coarsen a path of {} steps by 4",
                self.draws.len()
            )));
        }
        let half = T::lit(0.5);
        let draws = self
            .draws
            .chunks_exact(4)
            .map(|c| (c[0] + c[1] + c[2] + c[3]) * half)
            .collect();
        Ok(BrownianPath {
            k: self.k * T::lit(4.0),
            draws,
        })
    }
}

/// Number of steps of size `k` in `horizon`, which must be integral.
pub fn step_count<T: Real>(horizon: T, k: T) -> Result<usize> {
    if !(k > T::zero()) || !(horizon >= T::zero()) {
        return Err(SpdeError::domain("need k > 0 and a non-negative horizon"));
    }
    let n = (horizon / k).round();
    if (n * k - horizon).abs() > T::lit(1e-9) * horizon.max(k) {
        return Err(SpdeError::domain(format!(
            "horizon {horizon} is not an integer multiple of the timestep {k}"
        )));
    }
    n.to_usize()
        .ok_or_else(|| SpdeError::domain("step count does not fit in usize"))
}

/// `horizon / k` independent standard normal draws from the stream `key`.
pub fn sample_path<T: Real>(horizon: T, k: T, key: StreamKey) -> Result<BrownianPath<T>> {
    let n = step_count(horizon, k)?;
    let mut rng = key.rng();
    let draws = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(z)
        })
        .collect();
    BrownianPath::from_draws(k, draws)
}
