//! Uniform and power-stretched spatial grids.
//!
//! A stretched grid is uniform in the computational coordinate `y = f(x) = x^alpha`
//! on `[0, x_hi^alpha]`. The SPDE rewritten in `y` has spatially varying
//! coefficients
//!
//! ```text
//! dw = (-mu f'(g(y)) + 1/2 f''(g(y))) w_y dt + 1/2 f'(g(y))^2 w_yy dt - sqrt(rho) f'(g(y)) w_y dM
//! ```
//!
//! with `g = f^{-1}`. They are stored per node as the drift `b_j` and the noise
//! scale `s_j = f'(g(y_j))`. On a uniform grid `s_j = 1` and `b_j = -mu`.

use crate::error::{Result, SpdeError};
use crate::model::ModelParams;
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients<T> {
    /// `b_j = -mu`, `s_j = 1`; `mu` is taken from the model at step time.
    Constant,
    /// Frozen nodal coefficients of the transformed equation. Entry 0 belongs to
    /// the Dirichlet node `y = 0` and is never read.
    Variable {
        drift: Vec<T>,
        noise_scale: Vec<T>,
        /// `f''(x_j) / 2`, the first-order part of `(f' d/dy)^2 / 2`.
        half_curvature: Vec<T>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    h: T,
    alpha: T,
    comp_nodes: Vec<T>,
    nodes: Vec<T>,
    coefficients: Coefficients<T>,
}

impl<T: Real> Grid<T> {
    /// `intervals` equal cells on `[x_lo, x_hi]`.
    pub fn uniform(x_lo: T, x_hi: T, intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(SpdeError::domain(format!(
                "a grid needs at least 2 intervals, got {intervals}"
            )));
        }
        if !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(SpdeError::domain(format!(
                "grid bounds must satisfy x_lo < x_hi, got [{x_lo}, {x_hi}]"
            )));
        }
        let h = (x_hi - x_lo) / T::from_usize_lossy(intervals);
        let mut nodes: Vec<T> = (0..=intervals)
            .map(|j| x_lo + T::from_usize_lossy(j) * h)
            .collect();
        nodes[intervals] = x_hi;
        Ok(Grid {
            h,
            alpha: T::one(),
            comp_nodes: nodes.clone(),
            nodes,
            coefficients: Coefficients::Constant,
        })
    }

    /// Power-stretched grid on `[0, x_hi]`, uniform in `y = x^alpha`.
    pub fn stretched(x_hi: T, intervals: usize, alpha: T, params: &ModelParams<T>) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(SpdeError::domain(format!(
                "stretching exponent must lie in (0, 1], got {alpha}"
            )));
        }
        if intervals < 2 {
            return Err(SpdeError::domain(format!(
                "a grid needs at least 2 intervals, got {intervals}"
            )));
        }
        if !(x_hi > T::zero()) || !x_hi.is_finite() {
            return Err(SpdeError::domain(format!(
                "stretched grids live on [0, x_hi] with x_hi > 0, got {x_hi}"
            )));
        }
        let y_hi = x_hi.powf(alpha);
        let h = y_hi / T::from_usize_lossy(intervals);
        let mut comp_nodes: Vec<T> = (0..=intervals)
            .map(|j| T::from_usize_lossy(j) * h)
            .collect();
        comp_nodes[intervals] = y_hi;
        let inv_alpha = T::one() / alpha;
        let mut nodes: Vec<T> = comp_nodes.iter().map(|&y| y.powf(inv_alpha)).collect();
        nodes[intervals] = x_hi;

        let half = T::lit(0.5);
        let mut drift = vec![T::zero(); intervals + 1];
        let mut noise_scale = vec![T::zero(); intervals + 1];
        let mut half_curvature = vec![T::zero(); intervals + 1];
        for j in 1..=intervals {
            let x = nodes[j];
            let s = alpha * x.powf(alpha - T::one());
            let f2 = if alpha == T::one() {
                T::zero()
            } else {
                alpha * (alpha - T::one()) * x.powf(alpha - T::lit(2.0))
            };
            noise_scale[j] = s;
            drift[j] = -params.mu * s + half * f2;
            half_curvature[j] = half * f2;
        }
        Ok(Grid {
            h,
            alpha,
            comp_nodes,
            nodes,
            coefficients: Coefficients::Variable {
                drift,
                noise_scale,
                half_curvature,
            },
        })
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Spacing in the computational coordinate.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Physical coordinates `x_j`.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Computational coordinates `y_j` (equal to `x_j` on uniform grids).
    pub fn comp_nodes(&self) -> &[T] {
        &self.comp_nodes
    }

    pub fn coefficients(&self) -> &Coefficients<T> {
        &self.coefficients
    }

    pub fn is_stretched(&self) -> bool {
        matches!(self.coefficients, Coefficients::Variable { .. })
    }

    #[inline]
    pub fn drift(&self, j: usize, mu: T) -> T {
        match &self.coefficients {
            Coefficients::Constant => -mu,
            Coefficients::Variable { drift, .. } => drift[j],
        }
    }

    /// `f''(x_j) / 2`; zero on uniform grids.
    #[inline]
    pub fn half_curvature(&self, j: usize) -> T {
        match &self.coefficients {
            Coefficients::Constant => T::zero(),
            Coefficients::Variable { half_curvature, .. } => half_curvature[j],
        }
    }

    #[inline]
    pub fn noise_scale(&self, j: usize) -> T {
        match &self.coefficients {
            Coefficients::Constant => T::one(),
            Coefficients::Variable { noise_scale, .. } => noise_scale[j],
        }
    }

    /// `y = f(x)`.
    pub fn to_computational(&self, x: T) -> T {
        if self.is_stretched() {
            x.powf(self.alpha)
        } else {
            x
        }
    }

    /// `x = g(y)`.
    pub fn to_physical(&self, y: T) -> T {
        if self.is_stretched() {
            y.powf(T::one() / self.alpha)
        } else {
            y
        }
    }

    /// `g'(y) = (1/alpha) y^(1/alpha - 1)`; 1 on uniform grids.
    pub fn jacobian(&self, y: T) -> T {
        if self.is_stretched() && self.alpha != T::one() {
            let inv = T::one() / self.alpha;
            inv * y.powf(inv - T::one())
        } else {
            T::one()
        }
    }

    /// `g'(y_j)` at every node.
    pub fn jacobians(&self) -> Vec<T> {
        self.comp_nodes.iter().map(|&y| self.jacobian(y)).collect()
    }

    /// Whether every other node of `self` coincides with a node of `coarse`.
    pub fn nests(&self, coarse: &Grid<T>) -> bool {
        if self.intervals() != 2 * coarse.intervals() {
            return false;
        }
        let tol = T::lit(1e-9) * (T::one() + self.h.abs());
        coarse
            .comp_nodes
            .iter()
            .enumerate()
            .all(|(j, &y)| (self.comp_nodes[2 * j] - y).abs() <= tol)
    }
}
