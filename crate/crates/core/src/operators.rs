//! Undivided central difference operators and the tridiagonal algebra of the
//! implicit steps.
//!
//! Operators act on the vector of *active* unknowns: the interior nodes
//! `1..J-1` for homogeneous Dirichlet data (ghost values beyond the vector are
//! zero), or one period `0..J-1` for periodic data (indices wrap).

use crate::error::{Result, SpdeError};
use crate::grid::Grid;
use crate::model::ModelParams;
use crate::scheme::SchemeParams;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    DirichletZero,
    Periodic,
}

/// Smallest pivot magnitude accepted during elimination.
pub const PIVOT_GUARD: f64 = 1e-14;

#[inline]
fn neighbour<T: Real>(v: &[T], j: isize, bc: Boundary) -> T {
    let n = v.len() as isize;
    match bc {
        Boundary::DirichletZero => {
            if (0..n).contains(&j) {
                v[j as usize]
            } else {
                T::zero()
            }
        }
        Boundary::Periodic => v[j.rem_euclid(n) as usize],
    }
}

fn apply_stencil<T: Real>(v: &[T], bc: Boundary, f: impl Fn(&dyn Fn(isize) -> T, isize) -> T) -> Vec<T> {
    assert!(v.len() >= 3, "difference operators need at least 3 values, got {}", v.len());
    let at = |j: isize| neighbour(v, j, bc);
    (0..v.len() as isize).map(|j| f(&at, j)).collect()
}

/// `(D1 v)_j = v_{j+1} - v_{j-1}`.
pub fn apply_d1<T: Real>(v: &[T], bc: Boundary) -> Vec<T> {
    apply_stencil(v, bc, |at, j| at(j + 1) - at(j - 1))
}

/// `(D2 v)_j = v_{j+1} - 2 v_j + v_{j-1}`.
pub fn apply_d2<T: Real>(v: &[T], bc: Boundary) -> Vec<T> {
    let two = T::lit(2.0);
    apply_stencil(v, bc, |at, j| at(j + 1) - two * at(j) + at(j - 1))
}

/// Doubled stencil `v_{j+2} - 2 v_j + v_{j-2}`, which is `D1` applied twice.
pub fn apply_d1_squared<T: Real>(v: &[T], bc: Boundary) -> Vec<T> {
    let two = T::lit(2.0);
    apply_stencil(v, bc, |at, j| at(j + 2) - two * at(j) + at(j - 2))
}

/// Tridiagonal matrix, optionally with the two periodic corner entries.
///
/// `lower[i]` multiplies `x[i-1]` in row `i` and `upper[i]` multiplies `x[i+1]`.
/// For Dirichlet systems `lower[0]` and `upper[n-1]` are ignored; for periodic
/// systems they are the corners coupling row 0 to `x[n-1]` and row `n-1` to `x[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
    pub boundary: Boundary,
}

impl<T: Real> TridiagonalMatrix<T> {
    pub fn new(lower: Vec<T>, diag: Vec<T>, upper: Vec<T>, boundary: Boundary) -> Result<Self> {
        let n = diag.len();
        if lower.len() != n || upper.len() != n {
            return Err(SpdeError::domain(format!(
                "band lengths {}/{}/{} do not match",
                lower.len(),
                n,
                upper.len()
            )));
        }
        if n == 0 || (boundary == Boundary::Periodic && n < 3) {
            return Err(SpdeError::domain(format!("system of size {n} too small")));
        }
        Ok(TridiagonalMatrix {
            lower,
            diag,
            upper,
            boundary,
        })
    }

    pub fn identity(n: usize, boundary: Boundary) -> Self {
        TridiagonalMatrix {
            lower: vec![T::zero(); n],
            diag: vec![T::one(); n],
            upper: vec![T::zero(); n],
            boundary,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i] * x[i - 1];
                } else if self.boundary == Boundary::Periodic {
                    acc += self.lower[0] * x[n - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                } else if self.boundary == Boundary::Periodic {
                    acc += self.upper[n - 1] * x[0];
                }
                acc
            })
            .collect()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.len();
        let mut a = vec![vec![T::zero(); n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i > 0 {
                a[i][i - 1] = self.lower[i];
            }
            if i + 1 < n {
                a[i][i + 1] = self.upper[i];
            }
        }
        if self.boundary == Boundary::Periodic {
            a[0][n - 1] += self.lower[0];
            a[n - 1][0] += self.upper[n - 1];
        }
        a
    }

    pub fn factor(&self) -> Result<TridiagonalFactor<T>> {
        match self.boundary {
            Boundary::DirichletZero => Ok(TridiagonalFactor::Plain(Thomas::factor(
                &self.lower,
                &self.diag,
                &self.upper,
            )?)),
            Boundary::Periodic => Ok(TridiagonalFactor::Cyclic(Cyclic::factor(self)?)),
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let mut x = rhs.to_vec();
        self.factor()?.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Thomas elimination without pivoting, factored once and reused every step.
#[derive(Debug, Clone)]
pub struct Thomas<T> {
    lower: Vec<T>,
    c_prime: Vec<T>,
    inv_pivot: Vec<T>,
}

impl<T: Real> Thomas<T> {
    fn factor(lower: &[T], diag: &[T], upper: &[T]) -> Result<Self> {
        let n = diag.len();
        let guard = T::lit(PIVOT_GUARD);
        let mut c_prime = vec![T::zero(); n];
        let mut inv_pivot = vec![T::zero(); n];
        let mut prev_c = T::zero();
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * prev_c
            };
            if !(pivot.abs() >= guard) {
                return Err(SpdeError::SingularSystem {
                    row: i,
                    pivot: pivot.to_f64_lossy(),
                });
            }
            inv_pivot[i] = T::one() / pivot;
            if i + 1 < n {
                c_prime[i] = upper[i] * inv_pivot[i];
            }
            prev_c = c_prime[i];
        }
        Ok(Thomas {
            lower: lower.to_vec(),
            c_prime,
            inv_pivot,
        })
    }

    fn solve_in_place(&self, x: &mut [T]) {
        let n = x.len();
        debug_assert_eq!(n, self.inv_pivot.len());
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - self.c_prime[i] * x[i + 1];
        }
    }
}

/// Periodic system via Sherman-Morrison on a Thomas factorisation.
#[derive(Debug, Clone)]
pub struct Cyclic<T> {
    inner: Thomas<T>,
    z: Vec<T>,
    v_last: T,
    denom: T,
}

impl<T: Real> Cyclic<T> {
    fn factor(m: &TridiagonalMatrix<T>) -> Result<Self> {
        let n = m.len();
        let corner_lo = m.lower[0];
        let corner_hi = m.upper[n - 1];
        let gamma = -m.diag[0];
        let mut diag = m.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= corner_lo * corner_hi / gamma;
        let inner = Thomas::factor(&m.lower, &diag, &m.upper)?;
        let mut z = vec![T::zero(); n];
        z[0] = gamma;
        z[n - 1] = corner_hi;
        inner.solve_in_place(&mut z);
        let v_last = corner_lo / gamma;
        let denom = T::one() + z[0] + v_last * z[n - 1];
        if !(denom.abs() >= T::lit(PIVOT_GUARD)) {
            return Err(SpdeError::SingularSystem {
                row: n - 1,
                pivot: denom.to_f64_lossy(),
            });
        }
        Ok(Cyclic {
            inner,
            z,
            v_last,
            denom,
        })
    }

    fn solve_in_place(&self, x: &mut [T]) {
        let n = x.len();
        self.inner.solve_in_place(x);
        let factor = (x[0] + self.v_last * x[n - 1]) / self.denom;
        for (xi, &zi) in x.iter_mut().zip(&self.z) {
            *xi -= factor * zi;
        }
    }
}

#[derive(Debug, Clone)]
pub enum TridiagonalFactor<T> {
    Plain(Thomas<T>),
    Cyclic(Cyclic<T>),
}

impl<T: Real> TridiagonalFactor<T> {
    pub fn solve_in_place(&self, x: &mut [T]) {
        match self {
            TridiagonalFactor::Plain(t) => t.solve_in_place(x),
            TridiagonalFactor::Cyclic(c) => c.solve_in_place(x),
        }
    }
}

/// Index range of the active unknowns on a grid with `intervals` cells.
pub fn active_nodes(intervals: usize, bc: Boundary) -> std::ops::Range<usize> {
    match bc {
        Boundary::DirichletZero => 1..intervals,
        Boundary::Periodic => 0..intervals,
    }
}

/// Left-hand side `I - theta(b k/2h D1 + s^2 k/2h^2 D2) + sigma rho (s^2 k/2h^2 D2 + f'' k/4h D1)`
/// with frozen nodal coefficients `b_j`, `s_j`, `f''_j`. On uniform grids `f'' = 0`.
pub fn assemble_lhs<T: Real>(
    grid: &Grid<T>,
    scheme: &SchemeParams<T>,
    params: &ModelParams<T>,
    k: T,
) -> Result<TridiagonalMatrix<T>> {
    if !(k > T::zero()) {
        return Err(SpdeError::domain(format!("timestep must be positive, got {k}")));
    }
    scheme.check_grid(grid)?;
    let h = grid.h();
    let r = k / (T::lit(2.0) * h);
    let q = k / (T::lit(2.0) * h * h);
    let two = T::lit(2.0);
    let range = active_nodes(grid.intervals(), scheme.bc);
    let n = range.len();
    let mut lower = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for j in range {
        let b = grid.drift(j, params.mu);
        let c = grid.half_curvature(j);
        let s2 = grid.noise_scale(j).powi(2);
        let diffusion = (scheme.theta - scheme.sigma * params.rho) * s2 * q;
        let advection = (scheme.theta * b - scheme.sigma * params.rho * c) * r;
        lower.push(advection - diffusion);
        diag.push(T::one() + two * diffusion);
        upper.push(-advection - diffusion);
    }
    if scheme.bc == Boundary::DirichletZero {
        lower[0] = T::zero();
        upper[n - 1] = T::zero();
    }
    TridiagonalMatrix::new(lower, diag, upper, scheme.bc)
}
