//! The theta-sigma Milstein finite difference step
//!
//! ```text
//! V+ = V - theta (mu k/2h D1 - k/2h^2 D2) V+ - (1 - theta) (mu k/2h D1 - k/2h^2 D2) V
//!        - sigma rho k/2h^2 D2 V+ - (1 - sigma) rho k/2h^2 D2 V
//!        - sqrt(rho k) Z/2h D1 V + rho k Z^2/2h^2 D2 V
//! ```
//!
//! `theta = sigma = 0` is the explicit Milstein scheme, `sigma = 0` the
//! drift-theta scheme and `theta = 1/2, sigma = -1` the unconditionally stable
//! Crank-Nicolson variant. On stretched grids `mu` and the unit diffusion are
//! replaced by the frozen nodal coefficients `b_j` and `s_j` of the grid.

use crate::error::{Result, SpdeError};
use crate::grid::Grid;
use crate::harness::BrownianPath;
use crate::model::ModelParams;
use crate::operators::{active_nodes, assemble_lhs, Boundary, TridiagonalFactor, TridiagonalMatrix};
use crate::Real;

/// Stencil used for the double Itô integral term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ItoVariant {
    /// Second difference `D2`.
    Compact,
    /// Iterated first difference `D1 D1 / 4` (the method-of-lines Milstein scheme).
    Iterated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams<T> {
    /// Implicit weight of the drift, in `[0, 1]`.
    pub theta: T,
    /// Implicit weight of the deterministic part of the double Itô integral, in `[-1, 1]`.
    pub sigma: T,
    pub ito: ItoVariant,
    pub bc: Boundary,
}

impl<T: Real> SchemeParams<T> {
    pub fn new(theta: T, sigma: T, ito: ItoVariant, bc: Boundary) -> Result<Self> {
        if !(theta >= T::zero() && theta <= T::one()) {
            return Err(SpdeError::domain(format!("theta must lie in [0, 1], got {theta}")));
        }
        if !(sigma >= -T::one() && sigma <= T::one()) {
            return Err(SpdeError::domain(format!("sigma must lie in [-1, 1], got {sigma}")));
        }
        Ok(SchemeParams { theta, sigma, ito, bc })
    }

    pub fn explicit(bc: Boundary) -> Self {
        SchemeParams {
            theta: T::zero(),
            sigma: T::zero(),
            ito: ItoVariant::Compact,
            bc,
        }
    }

    pub fn drift_implicit(bc: Boundary) -> Self {
        SchemeParams {
            theta: T::one(),
            ..Self::explicit(bc)
        }
    }

    pub fn crank_nicolson(bc: Boundary) -> Self {
        SchemeParams {
            theta: T::lit(0.5),
            sigma: -T::one(),
            ..Self::explicit(bc)
        }
    }

    pub(crate) fn check_grid(&self, grid: &Grid<T>) -> Result<()> {
        if self.bc == Boundary::Periodic && grid.is_stretched() {
            return Err(SpdeError::domain("periodic boundaries need a uniform grid"));
        }
        Ok(())
    }
}

/// Nodal values `v_j` on all `J + 1` grid nodes at time step `step`.
///
/// Under Dirichlet data the end values are 0; under periodic data the last
/// value duplicates the first.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField<T> {
    values: Vec<T>,
    step: usize,
}

impl<T: Real> SolutionField<T> {
    pub fn new(values: Vec<T>) -> Self {
        SolutionField { values, step: 0 }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// `h * sum_j v_j` over the active nodes.
    pub fn mass(&self, grid: &Grid<T>, bc: Boundary) -> T {
        let s: T = self.values[active_nodes(grid.intervals(), bc)].iter().copied().sum();
        s * grid.h()
    }
}

/// Reusable single-path integrator for one `(grid, scheme, model, k)`.
///
/// The left-hand side is factored once; each step costs one right-hand side
/// evaluation and one tridiagonal back-substitution.
#[derive(Debug, Clone)]
pub struct Stepper<'g, T> {
    grid: &'g Grid<T>,
    scheme: SchemeParams<T>,
    k: T,
    factor: TridiagonalFactor<T>,
    lhs: TridiagonalMatrix<T>,
    // Deterministic explicit stencil per active row.
    det_lo: Vec<T>,
    det_mid: Vec<T>,
    det_hi: Vec<T>,
    // sqrt(rho k) s_j / 2h
    noise: Vec<T>,
    // rho s_j^2 k / 2h^2
    ito: Vec<T>,
    // rho f''_j k / 4h, the first-order part of the iterated operator on stretched grids
    ito_adv: Vec<T>,
    padded: Vec<T>,
    rhs: Vec<T>,
}

const PAD: usize = 2;

impl<'g, T: Real> Stepper<'g, T> {
    pub fn new(grid: &'g Grid<T>, scheme: SchemeParams<T>, params: &ModelParams<T>, k: T) -> Result<Self> {
        let lhs = assemble_lhs(grid, &scheme, params, k)?;
        Self::with_lhs(grid, scheme, params, k, lhs)
    }

    /// Uses a caller-assembled left-hand side, which must belong to the same
    /// `(grid, scheme, model, k)`.
    pub fn with_lhs(
        grid: &'g Grid<T>,
        scheme: SchemeParams<T>,
        params: &ModelParams<T>,
        k: T,
        lhs: TridiagonalMatrix<T>,
    ) -> Result<Self> {
        if !(k > T::zero()) {
            return Err(SpdeError::domain(format!("timestep must be positive, got {k}")));
        }
        scheme.check_grid(grid)?;
        let range = active_nodes(grid.intervals(), scheme.bc);
        let n = range.len();
        if lhs.len() != n || lhs.boundary != scheme.bc {
            return Err(SpdeError::domain("left-hand side does not match the grid"));
        }
        let factor = lhs.factor()?;

        let two = T::lit(2.0);
        let h = grid.h();
        let r = k / (two * h);
        let q = k / (two * h * h);
        let rho = params.rho;
        let explicit_drift = T::one() - scheme.theta;
        let explicit_ito = match scheme.ito {
            ItoVariant::Compact => (T::one() - scheme.sigma) * rho,
            ItoVariant::Iterated => T::zero(),
        };
        let mut det_lo = Vec::with_capacity(n);
        let mut det_mid = Vec::with_capacity(n);
        let mut det_hi = Vec::with_capacity(n);
        let mut noise = Vec::with_capacity(n);
        let mut ito = Vec::with_capacity(n);
        let mut ito_adv = Vec::with_capacity(n);
        for j in range {
            let b = grid.drift(j, params.mu);
            let c = grid.half_curvature(j);
            let s = grid.noise_scale(j);
            let adv = (explicit_drift * b - explicit_ito * c) * r;
            let diff = (explicit_drift - explicit_ito) * s * s * q;
            det_lo.push(diff - adv);
            det_mid.push(T::one() - two * diff);
            det_hi.push(diff + adv);
            noise.push((rho * k).sqrt() * s / (two * h));
            ito.push(rho * s * s * q);
            ito_adv.push(rho * c * r);
        }
        Ok(Stepper {
            grid,
            scheme,
            k,
            factor,
            lhs,
            det_lo,
            det_mid,
            det_hi,
            noise,
            ito,
            ito_adv,
            padded: vec![T::zero(); n + 2 * PAD],
            rhs: vec![T::zero(); n],
        })
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn grid(&self) -> &Grid<T> {
        self.grid
    }

    pub fn lhs(&self) -> &TridiagonalMatrix<T> {
        &self.lhs
    }

    /// Advances `field` by one step driven by the standard normal draw `z`.
    pub fn step(&mut self, field: &mut SolutionField<T>, z: T) -> Result<()> {
        let j_max = self.grid.intervals();
        if field.values.len() != j_max + 1 {
            return Err(SpdeError::domain(format!(
                "field has {} values, grid has {} nodes",
                field.values.len(),
                j_max + 1
            )));
        }
        let range = active_nodes(j_max, self.scheme.bc);
        let first = range.start;
        let n = range.len();
        {
            let p = &mut self.padded;
            p[PAD..PAD + n].copy_from_slice(&field.values[range.clone()]);
            match self.scheme.bc {
                Boundary::DirichletZero => {
                    p[0] = T::zero();
                    p[1] = T::zero();
                    p[n + PAD] = T::zero();
                    p[n + PAD + 1] = T::zero();
                }
                Boundary::Periodic => {
                    p[0] = p[n];
                    p[1] = p[n + 1];
                    p[n + PAD] = p[PAD];
                    p[n + PAD + 1] = p[PAD + 1];
                }
            }
        }

        let z2 = z * z;
        let p = &self.padded;
        match self.scheme.ito {
            ItoVariant::Compact => {
                let two = T::lit(2.0);
                for i in 0..n {
                    let (um, u, up) = (p[i + 1], p[i + 2], p[i + 3]);
                    let noise = z * self.noise[i];
                    self.rhs[i] = self.det_lo[i] * um + self.det_mid[i] * u + self.det_hi[i] * up
                        - noise * (up - um)
                        + z2 * (self.ito[i] * (up - two * u + um) + self.ito_adv[i] * (up - um));
                }
            }
            ItoVariant::Iterated => {
                let two = T::lit(2.0);
                let quarter = T::lit(0.25);
                let ito_weight = z2 - (T::one() - self.scheme.sigma);
                for i in 0..n {
                    let (umm, um, u, up, upp) = (p[i], p[i + 1], p[i + 2], p[i + 3], p[i + 4]);
                    let noise = z * self.noise[i];
                    let ito = self.ito[i] * quarter * (upp - two * u + umm) + self.ito_adv[i] * (up - um);
                    self.rhs[i] = self.det_lo[i] * um + self.det_mid[i] * u + self.det_hi[i] * up
                        - noise * (up - um)
                        + ito_weight * ito;
                }
            }
        }

        self.factor.solve_in_place(&mut self.rhs);
        if let Some(bad) = self.rhs.iter().position(|v| !v.is_finite()) {
            return Err(SpdeError::Overflow { node: first + bad });
        }
        field.values[range].copy_from_slice(&self.rhs);
        match self.scheme.bc {
            Boundary::DirichletZero => {
                field.values[0] = T::zero();
                field.values[j_max] = T::zero();
            }
            Boundary::Periodic => field.values[j_max] = field.values[0],
        }
        field.step += 1;
        Ok(())
    }

    /// Runs over all draws of `path`, recording the states selected by `observe`.
    pub fn run(
        &mut self,
        v0: &SolutionField<T>,
        draws: &[T],
        observe: &Observe<T>,
    ) -> Result<Vec<SolutionField<T>>> {
        let n_steps = draws.len();
        let wanted = observe.step_indices(self.k, n_steps)?;
        let mut out = Vec::with_capacity(wanted.len());
        let mut next = wanted.iter().copied().peekable();
        let mut field = v0.clone();
        while next.peek() == Some(&0) {
            out.push(field.clone());
            next.next();
        }
        for (n, &z) in draws.iter().enumerate() {
            self.step(&mut field, z)
                .map_err(|e| SpdeError::StepFailed { step: n, source: Box::new(e) })?;
            while next.peek() == Some(&(n + 1)) {
                out.push(field.clone());
                next.next();
            }
        }
        Ok(out)
    }
}

/// Which states [`run`] returns.
#[derive(Debug, Clone, PartialEq)]
pub enum Observe<T> {
    /// Every state including the initial one.
    All,
    Terminal,
    /// States at the given times, each snapped to the nearest completed step.
    Times(Vec<T>),
}

impl<T: Real> Observe<T> {
    fn step_indices(&self, k: T, n_steps: usize) -> Result<Vec<usize>> {
        match self {
            Observe::All => Ok((0..=n_steps).collect()),
            Observe::Terminal => Ok(vec![n_steps]),
            Observe::Times(times) => {
                let mut idx = Vec::with_capacity(times.len());
                for &t in times {
                    let n = (t / k).round();
                    if !(n >= T::zero()) || n.to_usize().map_or(true, |n| n > n_steps) {
                        return Err(SpdeError::domain(format!(
                            "observation time {t} outside the simulated range"
                        )));
                    }
                    idx.push(n.to_usize().unwrap_or(0));
                }
                if idx.windows(2).any(|w| w[0] > w[1]) {
                    return Err(SpdeError::domain("observation times must be non-decreasing"));
                }
                Ok(idx)
            }
        }
    }
}

/// One step from `v` with a caller-assembled left-hand side.
#[allow(clippy::too_many_arguments)]
pub fn step<T: Real>(
    grid: &Grid<T>,
    v: &SolutionField<T>,
    z: T,
    k: T,
    scheme: &SchemeParams<T>,
    params: &ModelParams<T>,
    lhs: &TridiagonalMatrix<T>,
) -> Result<SolutionField<T>> {
    let mut stepper = Stepper::with_lhs(grid, *scheme, params, k, lhs.clone())?;
    let mut out = v.clone();
    stepper.step(&mut out, z)?;
    Ok(out)
}

/// Applies the scheme once per draw of `path`.
pub fn run<T: Real>(
    grid: &Grid<T>,
    v0: &SolutionField<T>,
    path: &BrownianPath<T>,
    scheme: &SchemeParams<T>,
    params: &ModelParams<T>,
    observe: &Observe<T>,
) -> Result<Vec<SolutionField<T>>> {
    let mut stepper = Stepper::new(grid, *scheme, params, path.k())?;
    stepper.run(v0, path.draws(), observe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dirac_hat_projection;
    use crate::operators::{apply_d1, apply_d2};
    use proptest::prelude::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|c| a[i][c] * x[c]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn smooth_field(grid: &Grid<f64>) -> SolutionField<f64> {
        let mut v: Vec<f64> = grid.nodes().iter().map(|&x| (-(x - 5.0) * (x - 5.0) / 2.0).exp()).collect();
        let last = v.len() - 1;
        v[0] = 0.0;
        v[last] = 0.0;
        SolutionField::new(v)
    }

    fn setup(rho: f64, mu: f64) -> (Grid<f64>, ModelParams<f64>) {
        let grid = Grid::<f64>::uniform(0.0, 10.0, 20).unwrap();
        let p = ModelParams::<f64>::new(mu, rho, 5.0, 0.0, 10.0, 1.0).unwrap();
        (grid, p)
    }

    #[test]
    fn zero_correlation_explicit_is_heat_step() {
        let (grid, p) = setup(0.0, 0.0);
        let k = 0.1;
        let lambda = k / (grid.h() * grid.h());
        let s = SchemeParams::explicit(Boundary::DirichletZero);
        let v = smooth_field(&grid);
        let mut st = Stepper::new(&grid, s, &p, k).unwrap();
        let mut out = v.clone();
        st.step(&mut out, 1.7).unwrap();
        let w = v.values();
        for j in 1..20 {
            let want = w[j] + 0.5 * lambda * (w[j + 1] - 2.0 * w[j] + w[j - 1]);
            assert!((out.values()[j] - want).abs() < 1e-14, "{j} {} {want}", out.values()[j]);
        }
    }

    #[test]
    fn constants_are_fixed_points_under_periodic_data() {
        let (grid, p) = setup(0.4, 0.3);
        for s in [
            SchemeParams::explicit(Boundary::Periodic),
            SchemeParams::crank_nicolson(Boundary::Periodic),
            SchemeParams::new(0.7, 0.4, ItoVariant::Iterated, Boundary::Periodic).unwrap(),
        ] {
            let mut st = Stepper::new(&grid, s, &p, 0.05).unwrap();
            let mut f = SolutionField::new(vec![2.5; 21]);
            st.step(&mut f, -0.8).unwrap();
            assert!(f.values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
        }
    }

    #[test]
    fn fourier_mode_ratio() {
        let n = 32;
        let h = 0.25;
        let k = 0.3 * h * h;
        let grid = Grid::<f64>::uniform(0.0, n as f64 * h, n).unwrap();
        let p = ModelParams::<f64>::new(0.0, 0.2, 1.0, 0.0, n as f64 * h, 1.0).unwrap();
        let rho = p.rho;
        for (theta, sigma) in [(0.0, 0.0), (1.0, 0.0), (0.5, -1.0), (0.3, 0.6)] {
            let s = SchemeParams::new(theta, sigma, ItoVariant::Compact, Boundary::Periodic).unwrap();
            let mut st = Stepper::new(&grid, s, &p, k).unwrap();
            for mode in [1usize, 5, 16] {
                let phi = 2.0 * std::f64::consts::PI * mode as f64 / n as f64;
                let z = 0.77;
                let a = -2.0 / (h * h) * (phi / 2.0).sin().powi(2);
                let c = rho.sqrt() / h * phi.sin();
                let re = (1.0 + k * a * (1.0 - theta) - k * rho * a * ((1.0 - sigma) - z * z))
                    / (1.0 - k * a * theta + k * rho * a * sigma);
                let im = -k.sqrt() * c * z / (1.0 - k * a * theta + k * rho * a * sigma);
                let mut cos = SolutionField::new((0..=n).map(|j| (j as f64 * phi).cos()).collect());
                let mut sin = SolutionField::new((0..=n).map(|j| (j as f64 * phi).sin()).collect());
                st.step(&mut cos, z).unwrap();
                st.step(&mut sin, z).unwrap();
                for j in 0..n {
                    let (cj, sj) = ((j as f64 * phi).cos(), (j as f64 * phi).sin());
                    assert!((cos.values()[j] - (re * cj - im * sj)).abs() < 1e-12);
                    assert!((sin.values()[j] - (re * sj + im * cj)).abs() < 1e-12);
                }
            }
        }
    }

    /// The drift-theta scheme coded directly from its definition, solved densely.
    fn direct_theta_step(grid: &Grid<f64>, v: &[f64], z: f64, k: f64, theta: f64, p: &ModelParams<f64>) -> Vec<f64> {
        let h = grid.h();
        let inner = &v[1..v.len() - 1];
        let n = inner.len();
        let bc = Boundary::DirichletZero;
        let d1 = apply_d1(inner, bc);
        let d2 = apply_d2(inner, bc);
        let drift = |d1: f64, d2: f64| p.mu * k / (2.0 * h) * d1 - k / (2.0 * h * h) * d2;
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                inner[i] - (1.0 - theta) * drift(d1[i], d2[i]) - (p.rho * k).sqrt() * z / (2.0 * h) * d1[i]
                    + p.rho * k * (z * z - 1.0) / (2.0 * h * h) * d2[i]
            })
            .collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let (c1, c2) = (apply_d1(&e, bc), apply_d2(&e, bc));
            for r in 0..n {
                a[r][i] = e[r] + theta * drift(c1[r], c2[r]);
            }
        }
        let x = dense_solve(a, rhs);
        let mut out = vec![0.0; v.len()];
        out[1..v.len() - 1].copy_from_slice(&x);
        out
    }

    #[test]
    fn sigma_zero_collapses_to_theta_scheme() {
        let (grid, p) = setup(0.2, 0.081);
        let v = smooth_field(&grid);
        let k = 0.05;
        for theta in [0.0, 0.5, 1.0] {
            let s = SchemeParams::new(theta, 0.0, ItoVariant::Compact, Boundary::DirichletZero).unwrap();
            let mut st = Stepper::new(&grid, s, &p, k).unwrap();
            for z in [-1.2, 0.0, 0.4] {
                let mut f = v.clone();
                st.step(&mut f, z).unwrap();
                let want = direct_theta_step(&grid, v.values(), z, k, theta, &p);
                for (a, b) in f.values().iter().zip(&want) {
                    assert!((a - b).abs() < 1e-14, "theta {theta}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn explicit_matches_original_milstein_formula() {
        let (grid, p) = setup(0.2, 0.081);
        let v = smooth_field(&grid);
        let (k, z) = (0.05, 1.3);
        let h = grid.h();
        let mut st = Stepper::new(&grid, SchemeParams::explicit(Boundary::DirichletZero), &p, k).unwrap();
        let mut f = v.clone();
        st.step(&mut f, z).unwrap();
        let w = v.values();
        for j in 1..20 {
            let want = w[j] - (p.mu * k + (p.rho * k).sqrt() * z) / (2.0 * h) * (w[j + 1] - w[j - 1])
                + ((1.0 - p.rho) * k + p.rho * k * z * z) / (2.0 * h * h) * (w[j + 1] - 2.0 * w[j] + w[j - 1]);
            assert!((f.values()[j] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn stretched_ito_term_approximates_second_x_derivative() {
        // The z^2 part of one explicit step is rho k/2 times the discrete
        // (f' d/dy)^2 w, which must approach v_xx at the physical nodes.
        let p = ModelParams::<f64>::new(0.081, 0.3, 5.0, 0.0, 16.0, 1.0).unwrap();
        let v = |x: f64| x * x * (-(x - 5.0) * (x - 5.0) / 8.0).exp();
        let v_xx = |x: f64| {
            let e = (-(x - 5.0) * (x - 5.0) / 8.0).exp();
            let d = -(x - 5.0) / 4.0;
            e * (2.0 + 4.0 * x * d + x * x * (d * d - 0.25))
        };
        let mut errs = vec![];
        for j in [40, 80, 160] {
            let grid = Grid::<f64>::stretched(16.0, j, 0.5, &p).unwrap();
            let k = 1e-3;
            let field = SolutionField::new(grid.nodes().iter().map(|&x| v(x)).collect());
            let mut st = Stepper::new(&grid, SchemeParams::explicit(Boundary::DirichletZero), &p, k).unwrap();
            let run = |st: &mut Stepper<f64>, z: f64| {
                let mut f = field.clone();
                st.step(&mut f, z).unwrap();
                f
            };
            let (plus, minus, zero) = (run(&mut st, 1.0), run(&mut st, -1.0), run(&mut st, 0.0));
            let mut worst: f64 = 0.0;
            for i in 1..j {
                let x = grid.nodes()[i];
                if !(1.0..12.0).contains(&x) {
                    continue;
                }
                let sym = 0.5 * (plus.values()[i] + minus.values()[i]) - zero.values()[i];
                worst = worst.max((sym - 0.5 * p.rho * k * v_xx(x)).abs());
            }
            errs.push(worst);
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn periodic_mass_is_conserved() {
        let (grid, p) = setup(0.5, 0.2);
        let v0 = dirac_hat_projection(&grid, 4.3).unwrap();
        let mut v0 = v0;
        let last = v0.values().len() - 1;
        v0.values_mut()[last] = v0.values()[0];
        for s in [
            SchemeParams::explicit(Boundary::Periodic),
            SchemeParams::crank_nicolson(Boundary::Periodic),
            SchemeParams::new(1.0, 0.0, ItoVariant::Iterated, Boundary::Periodic).unwrap(),
        ] {
            let mut st = Stepper::new(&grid, s, &p, 0.02).unwrap();
            let mut f = v0.clone();
            for n in 0..500 {
                st.step(&mut f, ((n * 7919) % 13) as f64 / 6.0 - 1.0).unwrap();
            }
            assert!((f.mass(&grid, Boundary::Periodic) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn run_with_no_steps_returns_initial_state() {
        let (grid, p) = setup(0.2, 0.0);
        let v0 = smooth_field(&grid);
        let mut st = Stepper::new(&grid, SchemeParams::crank_nicolson(Boundary::DirichletZero), &p, 0.1).unwrap();
        let out = st.run(&v0, &[], &Observe::All).unwrap();
        assert_eq!(out, vec![v0.clone()]);
        let out = st.run(&v0, &[], &Observe::Terminal).unwrap();
        assert_eq!(out, vec![v0]);
    }

    #[test]
    fn observation_times_snap_to_steps() {
        let (grid, p) = setup(0.2, 0.0);
        let v0 = smooth_field(&grid);
        let mut st = Stepper::new(&grid, SchemeParams::crank_nicolson(Boundary::DirichletZero), &p, 0.25).unwrap();
        let draws = [0.1, -0.3, 0.5, 1.0, 0.0, 0.2, -0.4, 0.9];
        let obs = st.run(&v0, &draws, &Observe::Times(vec![0.0, 0.5, 1.0, 2.0])).unwrap();
        assert_eq!(obs.iter().map(|f| f.step()).collect::<Vec<_>>(), vec![0, 2, 4, 8]);
        let all = st.run(&v0, &draws, &Observe::All).unwrap();
        assert_eq!(obs[2], all[4]);
        assert!(st.run(&v0, &draws, &Observe::Times(vec![2.5])).is_err());
    }

    #[test]
    fn unstable_explicit_run_overflows() {
        let (grid, p) = setup(0.2, 0.0);
        let k = 2.0 * grid.h() * grid.h();
        let mut st = Stepper::new(&grid, SchemeParams::explicit(Boundary::DirichletZero), &p, k).unwrap();
        let draws = vec![1.0; 20_000];
        let err = st.run(&smooth_field(&grid), &draws, &Observe::Terminal).unwrap_err();
        assert!(err.is_overflow());
        assert!(matches!(err, SpdeError::StepFailed { .. }));
    }

    #[test]
    fn stepper_rejects_mismatched_lhs() {
        let (grid, p) = setup(0.2, 0.0);
        let other = Grid::<f64>::uniform(0.0, 10.0, 10).unwrap();
        let s = SchemeParams::crank_nicolson(Boundary::DirichletZero);
        let lhs = assemble_lhs(&other, &s, &p, 0.1).unwrap();
        assert!(Stepper::with_lhs(&grid, s, &p, 0.1, lhs).is_err());
        assert!(SchemeParams::new(1.2, 0.0, ItoVariant::Compact, Boundary::Periodic).is_err());
        assert!(SchemeParams::new(0.5, -1.5, ItoVariant::Compact, Boundary::Periodic).is_err());
    }

    #[test]
    fn single_precision_step() {
        let grid = Grid::<f32>::uniform(0.0, 10.0, 20).unwrap();
        let p = ModelParams::<f32>::new(0.081, 0.2, 5.0, 0.0, 10.0, 1.0).unwrap();
        let v0 = dirac_hat_projection(&grid, 5.3).unwrap();
        let mut st = Stepper::new(&grid, SchemeParams::crank_nicolson(Boundary::DirichletZero), &p, 0.05).unwrap();
        let mut f = v0.clone();
        for _ in 0..20 {
            st.step(&mut f, 0.5).unwrap();
        }
        let mass = f.mass(&grid, Boundary::DirichletZero);
        assert!((mass - 1.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn step_is_linear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            z in -3.0f64..3.0,
            theta in 0.0f64..=1.0,
            sigma in -1.0f64..=1.0,
            iterated in any::<bool>(),
        ) {
            let (grid, p) = setup(0.3, 0.081);
            let ito = if iterated { ItoVariant::Iterated } else { ItoVariant::Compact };
            let s = SchemeParams::new(theta, sigma, ito, Boundary::DirichletZero).unwrap();
            let mut st = Stepper::new(&grid, s, &p, 0.05).unwrap();
            let v = smooth_field(&grid);
            let w = SolutionField::new(grid.nodes().iter().map(|x| (x * 0.7).sin() * x * (10.0 - x)).collect());
            let combo = SolutionField::new(v.values().iter().zip(w.values()).map(|(x, y)| a * x + b * y).collect());
            let (mut v1, mut w1, mut c1) = (v.clone(), w.clone(), combo.clone());
            st.step(&mut v1, z).unwrap();
            st.step(&mut w1, z).unwrap();
            st.step(&mut c1, z).unwrap();
            for j in 0..=20 {
                let want = a * v1.values()[j] + b * w1.values()[j];
                prop_assert!((c1.values()[j] - want).abs() < 1e-12);
            }
        }
    }
}
