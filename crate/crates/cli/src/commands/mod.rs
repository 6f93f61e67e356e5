pub mod converge;
pub mod mode_decay;
pub mod price;
pub mod solve;
pub mod stability;

use spde_milstein::stability::classify;
use spde_milstein::{Boundary, Grid, ItoVariant, SchemeParams};

use crate::args::{Common, Variant};
use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

pub(crate) struct Model {
    pub rho: f64,
    pub mu: f64,
    pub seed: u64,
    pub force: bool,
}

pub(crate) fn model(common: &Common, cfg: &Resolver, default_rho: f64) -> CliResult<Model> {
    Ok(Model {
        rho: cfg.or(common.rho, "rho", default_rho)?,
        mu: cfg.or(common.mu, "mu", 0.081)?,
        seed: cfg.or(common.seed, "seed", 1)?,
        force: cfg.flag(common.force, "force")?,
    })
}

pub(crate) fn variant(common: &Common, cfg: &Resolver) -> CliResult<ItoVariant> {
    Ok(match cfg.or(common.variant, "variant", Variant::Compact)? {
        Variant::Compact => ItoVariant::Compact,
        Variant::Iterated => ItoVariant::Iterated,
    })
}

pub(crate) fn scheme(theta: f64, sigma: f64, ito: ItoVariant, bc: Boundary) -> CliResult<SchemeParams<f64>> {
    SchemeParams::new(theta, sigma, ito, bc).map_err(|e| CliError::usage(e.to_string()))
}

pub(crate) fn variant_label(ito: ItoVariant) -> &'static str {
    match ito {
        ItoVariant::Compact => "compact",
        ItoVariant::Iterated => "iterated",
    }
}

/// Largest local mesh ratio `s_j^2 k / h^2` over the interior nodes.
pub(crate) fn effective_ratio(grid: &Grid<f64>, k: f64) -> f64 {
    let h = grid.h();
    (1..grid.intervals())
        .map(|j| grid.noise_scale(j).powi(2))
        .fold(0.0, f64::max)
        * k
        / (h * h)
}

/// Refuses meshes outside the closed-form stability region unless forced.
pub(crate) fn preflight(rho: f64, scheme: &SchemeParams<f64>, grid: &Grid<f64>, k: f64, force: bool, what: &str) -> CliResult<()> {
    let ratio = effective_ratio(grid, k);
    let report = classify(rho, scheme.theta, scheme.sigma, ratio, 1.0).map_err(|e| CliError::usage(e.to_string()))?;
    if report.stable || force {
        return Ok(());
    }
    let limit = report.max_ratio.map_or("unbounded".to_string(), |m| format!("{m:.6}"));
    Err(CliError::Unstable(format!(
        "{what}: k/h^2 = {ratio:.6} exceeds the limit {limit} for theta = {}, sigma = {}, rho = {rho}",
        scheme.theta, scheme.sigma
    )))
}

pub(crate) fn common_meta(t: &mut Table, m: &Model) {
    t.meta("rho", m.rho);
    t.meta("mu", m.mu);
    t.meta("seed", Cell::Int(m.seed));
}

/// Usage error for common flags the command has no use for.
pub(crate) fn reject_unused(common: &Common, command: &str, unused: &[&str]) -> CliResult<()> {
    for &flag in unused {
        let given = match flag {
            "mu" => common.mu.is_some(),
            "alpha" => common.alpha.is_some(),
            "levels" => common.levels.is_some(),
            "samples" => common.samples.is_some(),
            "seed" => common.seed.is_some(),
            "variant" => common.variant.is_some(),
            "force" => common.force,
            _ => false,
        };
        if given {
            return Err(CliError::usage(format!("--{flag} has no effect on `{command}`")));
        }
    }
    Ok(())
}
