use std::f64::consts::PI;

use spde_milstein::stability::{amplification, empirical_mode_decay};

use super::reject_unused;
use crate::args::{Common, ModeDecayArgs};
use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

pub fn run(common: &Common, args: &ModeDecayArgs, cfg: &Resolver) -> CliResult<Table> {
    reject_unused(common, "mode-decay", &["mu", "alpha", "levels", "variant", "force"])?;
    let rho = cfg.or(common.rho, "rho", 0.2)?;
    let theta = cfg.or(common.theta, "theta", 0.0)?;
    let sigma = cfg.or(common.sigma, "sigma", 0.0)?;
    let seed = cfg.or(common.seed, "seed", 1)?;
    let samples = cfg.or(common.samples, "samples", 10_000)?;
    let phi = cfg.or(args.phi, "phi", PI)?;
    let lambda = cfg.or(args.lambda, "lambda", 1.0)?;
    let steps = cfg.or(args.steps, "steps", 1)?;
    if !(phi > 0.0 && phi <= PI) {
        return Err(CliError::usage(format!("--phi must lie in (0, pi], got {phi}")));
    }
    if !(lambda > 0.0) {
        return Err(CliError::usage(format!("--lambda must be positive, got {lambda}")));
    }
    let usage = |e: spde_milstein::SpdeError| CliError::usage(e.to_string());
    let g = amplification(phi, lambda, 1.0, rho, theta, sigma).map_err(usage)?;
    let est = empirical_mode_decay(phi, lambda, 1.0, rho, theta, sigma, steps, samples, seed).map_err(usage)?;

    let mut t = Table::new(&["phi", "lambda", "rho", "theta", "sigma", "G", "growth", "stderr", "steps", "samples"]);
    t.meta("command", "mode-decay");
    t.meta("seed", Cell::Int(seed));
    t.push(vec![
        phi.into(),
        lambda.into(),
        rho.into(),
        theta.into(),
        sigma.into(),
        g.into(),
        est.growth.into(),
        est.std_error.into(),
        steps.into(),
        samples.into(),
    ]);
    Ok(t)
}
