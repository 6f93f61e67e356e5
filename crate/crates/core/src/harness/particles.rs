//! Interacting particle oracle
//!
//! ```text
//! dX^i = mu dt + sqrt(1 - rho) dW^i + sqrt(rho) dM
//! ```
//!
//! with a common driver `M` and independent `W^i`. Conditional on `M`, the
//! empirical measure of the particles approximates the SPDE solution and the
//! absorbed fraction approximates the loss.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::path::BrownianPath;
use super::rng::{Purpose, StreamKey};
use crate::error::{Result, SpdeError};
use crate::grid::Grid;
use crate::model::ModelParams;
use crate::Real;

const CHUNK: usize = 4096;

/// Treatment of the absorbing barrier at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Absorption {
    None,
    /// Absorb when a particle is at or below 0 at a step time.
    Discrete,
    /// As `Discrete`, plus absorption inside a step with the Brownian-bridge
    /// crossing probability `exp(-2 x_n x_{n+1} / k)`. The bridge has unit
    /// variance rate because the idiosyncratic and the unobserved part of the
    /// common noise are both bridged between step times.
    BrownianBridge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEstimate<T> {
    /// Density of surviving particles at the grid nodes, per unit physical length.
    pub density: Vec<T>,
    pub absorbed_fraction: T,
    /// Binomial standard error of `absorbed_fraction`.
    pub std_error: T,
    pub n_particles: usize,
}

/// Evolves `n_particles` particles from `params.x0` along the common `path`.
///
/// Each step uses the exact Gaussian transition of the constant-coefficient
/// dynamics. The histogram bins are the dual cells of `grid`'s physical nodes.
pub fn particle_oracle<T: Real>(
    params: &ModelParams<T>,
    grid: &Grid<T>,
    path: &BrownianPath<T>,
    n_particles: usize,
    absorption: Absorption,
    key: StreamKey,
) -> Result<ParticleEstimate<T>> {
    if n_particles == 0 {
        return Err(SpdeError::domain("need at least one particle"));
    }
    let k = path.k().to_f64_lossy();
    let mu_k = params.mu.to_f64_lossy() * k;
    let idio = ((1.0 - params.rho.to_f64_lossy()) * k).sqrt();
    let common: Vec<f64> = path
        .increments()
        .map(|dm| params.rho.to_f64_lossy().sqrt() * dm.to_f64_lossy())
        .collect();
    let x0 = params.x0.to_f64_lossy();
    let nodes: Vec<f64> = grid.nodes().iter().map(|x| x.to_f64_lossy()).collect();
    let n_nodes = nodes.len();
    let edges: Vec<f64> = {
        let mut e = Vec::with_capacity(n_nodes + 1);
        e.push(nodes[0] - 0.5 * (nodes[1] - nodes[0]));
        e.extend(nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        e.push(nodes[n_nodes - 1] + 0.5 * (nodes[n_nodes - 1] - nodes[n_nodes - 2]));
        e
    };

    let n_chunks = n_particles.div_ceil(CHUNK);
    let per_chunk: Vec<(usize, Vec<u64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(n_particles - c * CHUNK);
            let mut rng = key.purpose(Purpose::Idiosyncratic).sub(c as u32).rng();
            let mut absorbed = 0usize;
            let mut hist = vec![0u64; n_nodes];
            for _ in 0..count {
                let mut x = x0;
                let mut alive = true;
                for &dm in &common {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let next = x + mu_k + idio * z + dm;
                    alive = match absorption {
                        Absorption::None => true,
                        Absorption::Discrete => next > 0.0,
                        Absorption::BrownianBridge => {
                            next > 0.0 && {
                                let u: f64 = rng.random();
                                u >= (-2.0 * x * next / k).exp()
                            }
                        }
                    };
                    x = next;
                    if !alive {
                        break;
                    }
                }
                if !alive {
                    absorbed += 1;
                } else if x >= edges[0] && x < edges[n_nodes] {
                    let bin = edges.partition_point(|&e| e <= x) - 1;
                    hist[bin] += 1;
                }
            }
            (absorbed, hist)
        })
        .collect();

    let mut absorbed = 0usize;
    let mut hist = vec![0u64; n_nodes];
    for (a, h) in per_chunk {
        absorbed += a;
        for (t, v) in hist.iter_mut().zip(h) {
            *t += v;
        }
    }
    let n = n_particles as f64;
    let density = hist
        .iter()
        .enumerate()
        .map(|(j, &c)| T::lit(c as f64 / (n * (edges[j + 1] - edges[j]))))
        .collect();
    let p = absorbed as f64 / n;
    Ok(ParticleEstimate {
        density,
        absorbed_fraction: T::lit(p),
        std_error: T::lit((p * (1.0 - p) / n).sqrt()),
        n_particles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sample_path;
    use crate::model::exact_solution;

    #[test]
    fn free_particles_follow_the_heat_kernel() {
        let p = ModelParams::<f64>::new(0.0, 0.0, 0.0, -6.0, 6.0, 1.0).unwrap();
        let grid = Grid::<f64>::uniform(-6.0, 6.0, 48).unwrap();
        let path = sample_path(1.0, 0.25, StreamKey::new(1)).unwrap();
        let mut prev = f64::INFINITY;
        for n in [10_000, 160_000] {
            let est = particle_oracle(&p, &grid, &path, n, Absorption::None, StreamKey::new(2)).unwrap();
            assert_eq!(est.absorbed_fraction, 0.0);
            let err = grid
                .nodes()
                .iter()
                .zip(&est.density)
                .map(|(&x, &d)| (d - exact_solution(&p, 1.0, 0.0, x).unwrap()).abs())
                .fold(0.0f64, f64::max);
            assert!(err < prev);
            prev = err;
        }
        // Binning bias of dual cells of width 1/4 plus sampling noise.
        assert!(prev < 0.01, "{prev}");
    }

    #[test]
    fn common_noise_shifts_all_particles() {
        // With rho close to 1 the cloud moves with sqrt(rho) M.
        let p = ModelParams::<f64>::new(0.0, 0.99, 0.0, -10.0, 10.0, 1.0).unwrap();
        let grid = Grid::<f64>::uniform(-10.0, 10.0, 200).unwrap();
        let path = BrownianPath::<f64>::from_draws(0.25, vec![2.0; 4]).unwrap();
        let est = particle_oracle(&p, &grid, &path, 20_000, Absorption::None, StreamKey::new(1)).unwrap();
        let mean: f64 = grid.nodes().iter().zip(&est.density).map(|(x, d)| x * d * 0.1).sum();
        assert!((mean - 0.99f64.sqrt() * path.terminal()).abs() < 0.02, "{mean}");
    }

    #[test]
    fn bridge_absorbs_more_than_discrete_monitoring() {
        let p = ModelParams::<f64>::new(0.081, 0.2, 5.0, 0.0, 16.0, 5.0).unwrap();
        let grid = Grid::<f64>::uniform(0.0, 16.0, 40).unwrap();
        let path = sample_path(5.0, 1.0 / 16.0, StreamKey::new(8)).unwrap();
        let key = StreamKey::new(3);
        let d = particle_oracle(&p, &grid, &path, 50_000, Absorption::Discrete, key).unwrap();
        let b = particle_oracle(&p, &grid, &path, 50_000, Absorption::BrownianBridge, key).unwrap();
        assert!(b.absorbed_fraction > d.absorbed_fraction);
        assert!(b.absorbed_fraction > 0.0 && b.absorbed_fraction < 0.5);
    }
}
