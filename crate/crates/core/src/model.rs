//! Model parameters, the closed-form whole-line solution for Dirac data, and the
//! projection of Dirac data onto the nodal hat basis.

use crate::error::{Result, SpdeError};
use crate::grid::Grid;
use crate::scheme::SolutionField;
use crate::Real;

/// Coefficients and set-up of `dv = -mu v_x dt + 1/2 v_xx dt - sqrt(rho) v_x dM`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    pub mu: T,
    /// Correlation of the common factor, `0 <= rho < 1`.
    pub rho: T,
    /// Location of the initial Dirac mass.
    pub x0: T,
    pub x_lo: T,
    pub x_hi: T,
    /// Time horizon.
    pub horizon: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(mu: T, rho: T, x0: T, x_lo: T, x_hi: T, horizon: T) -> Result<Self> {
        let p = ModelParams {
            mu,
            rho,
            x0,
            x_lo,
            x_hi,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(SpdeError::domain("mu must be finite"));
        }
        check_rho(self.rho)?;
        if !(self.x_lo < self.x0 && self.x0 < self.x_hi) {
            return Err(SpdeError::domain(format!(
                "need x_lo < x0 < x_hi, got {} < {} < {}",
                self.x_lo, self.x0, self.x_hi
            )));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(SpdeError::domain(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Same model with a different correlation.
    pub fn with_rho(mut self, rho: T) -> Result<Self> {
        check_rho(rho)?;
        self.rho = rho;
        Ok(self)
    }
}

pub(crate) fn check_rho<T: Real>(rho: T) -> Result<()> {
    if rho >= T::zero() && rho < T::one() {
        Ok(())
    } else {
        Err(SpdeError::domain(format!("rho must lie in [0, 1), got {rho}")))
    }
}

/// Whole-line solution at `(t, x)` for Dirac data at `x0`, given the common
/// Brownian value `M_t = m_t`: a Gaussian with mean `x0 + mu t + sqrt(rho) m_t`
/// and variance `(1 - rho) t`.
pub fn exact_solution<T: Real>(params: &ModelParams<T>, t: T, m_t: T, x: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(SpdeError::domain(format!("exact solution needs t > 0, got {t}")));
    }
    check_rho(params.rho)?;
    let var = (T::one() - params.rho) * t;
    let centre = params.x0 + params.mu * t + params.rho.sqrt() * m_t;
    let d = x - centre;
    let two = T::lit(2.0);
    Ok((-(d * d) / (two * var)).exp() / (two * T::PI() * var).sqrt())
}

/// Nodal hat-function representation of `delta(x - x0)`.
///
/// The hat weights are taken in the computational coordinate, so on a stretched
/// grid the Dirac mass becomes `w_j = hat_j / (h g'(y_j))` and the discrete mass
/// `sum_j w_j g'(y_j) h` is exactly the sum of the hat weights, i.e. 1.
pub fn dirac_hat_projection<T: Real>(grid: &Grid<T>, x0: T) -> Result<SolutionField<T>> {
    let nodes = grid.nodes();
    let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
    if !(x0 >= lo && x0 <= hi) {
        return Err(SpdeError::domain(format!(
            "Dirac location {x0} outside the grid [{lo}, {hi}]"
        )));
    }
    let h = grid.h();
    let y0 = grid.to_computational(x0);
    let mut values = vec![T::zero(); nodes.len()];
    for (j, (&y, v)) in grid.comp_nodes().iter().zip(values.iter_mut()).enumerate() {
        let weight = T::one() - (y - y0).abs() / h;
        if weight > T::zero() {
            let jac = grid.jacobian(y);
            if jac > T::zero() {
                *v = weight / (h * jac);
            } else {
                debug_assert_eq!(j, 0);
            }
        }
    }
    Ok(SolutionField::new(values))
}
