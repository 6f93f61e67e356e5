use serde_json::json;
use spde_milstein::credit::{CreditSetup, GridKind};
use spde_milstein::harness::combine_levels;
use spde_milstein::TrancheSpec;

use super::{common_meta, model, preflight, reject_unused, scheme, variant, variant_label};
use crate::args::{Common, PriceArgs};
use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::output::Table;

/// `max(100, 10^4 4^-l)`.
pub fn default_samples(level: u32) -> usize {
    ((1e4 / 4f64.powi(level as i32)) as usize).max(100)
}

pub fn run(common: &Common, args: &PriceArgs, cfg: &Resolver) -> CliResult<Table> {
    reject_unused(common, "price", &[])?;
    let m = model(common, cfg, 0.2)?;
    let ito = variant(common, cfg)?;
    let alpha = cfg.or(common.alpha, "alpha", 1.0)?;
    let levels = cfg.or(common.levels, "levels", 5)?;
    let fixed_samples = cfg.get(common.samples, "samples")?;
    let theta = cfg.or(common.theta, "theta", 0.5)?;
    let sigma = cfg.or(common.sigma, "sigma", -1.0)?;
    if levels < 1 {
        return Err(CliError::usage("--levels must be at least 1"));
    }
    if fixed_samples.is_some_and(|n| n < 2) {
        return Err(CliError::usage("--samples must be at least 2"));
    }
    let reference = TrancheSpec::<f64>::reference();
    let tranche = TrancheSpec::new(
        cfg.or(args.attach, "attach", reference.attachment)?,
        cfg.or(args.detach, "detach", reference.detachment)?,
        cfg.or(args.rate, "rate", reference.rate)?,
        cfg.or(args.interval, "interval", reference.interval)?,
        cfg.or(args.payments, "payments", reference.payments)?,
    )
    .map_err(|e| CliError::usage(e.to_string()))?;

    let kind = if alpha == 1.0 { GridKind::Uniform } else { GridKind::Stretched(alpha) };
    let mut setup = CreditSetup::reference(kind);
    setup.params.mu = m.mu;
    setup.params.rho = m.rho;
    setup.params.horizon = tranche.maturity();
    setup.params.validate().map_err(|e| CliError::usage(e.to_string()))?;
    setup.tranche = tranche;
    setup.scheme = scheme(theta, sigma, ito, setup.scheme.bc)?;
    let exp = setup.experiment().map_err(|e| CliError::usage(e.to_string()))?;
    for l in 0..levels {
        let grid = exp.layout.grid(l, &setup.params)?;
        preflight(m.rho, &setup.scheme, &grid, exp.layout.timestep(l), m.force, &format!("level {l}"))?;
    }

    let mut estimates = Vec::new();
    let mut clamps = 0;
    let mut violations = 0;
    for l in 0..levels {
        let n = fixed_samples.unwrap_or_else(|| default_samples(l));
        let (est, payoff) = setup.price_level(l, n, m.seed)?;
        clamps += payoff.clamp_events();
        violations += payoff.monotonicity_violations();
        estimates.push(est);
    }
    let combined = combine_levels(&estimates);

    let mut t = Table::new(&["level", "alpha", "N_l", "mean_Yl", "V_l", "stderr"]);
    t.meta("command", "price");
    common_meta(&mut t, &m);
    t.meta("theta", theta);
    t.meta("sigma", sigma);
    t.meta("variant", variant_label(ito));
    t.meta("attach", tranche.attachment);
    t.meta("detach", tranche.detachment);
    t.meta("rate", tranche.rate);
    t.meta("interval", tranche.interval);
    t.meta("payments", tranche.payments);
    t.meta("x0", setup.params.x0);
    t.meta("x_hi", setup.params.x_hi);
    t.meta("base_intervals", setup.base_intervals);
    t.meta("k0", setup.k0);
    t.meta(
        "samples_rule",
        if fixed_samples.is_some() { "fixed" } else { "max(100, 10000 * 4^-l)" },
    );
    for e in &estimates {
        t.push(vec![e.level.into(), alpha.into(), e.samples.into(), e.mean.into(), e.variance.into(), e.std_error.into()]);
    }
    t.summary = Some(json!({
        "estimate": combined.estimate,
        "variance": combined.variance,
        "std_error": combined.variance.sqrt(),
        "clamp_events": clamps,
        "monotonicity_violations": violations,
    }));
    Ok(t)
}
