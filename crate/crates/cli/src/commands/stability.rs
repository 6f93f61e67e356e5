use spde_milstein::stability::{stability_function, stability_limit};

use super::{reject_unused, scheme};
use crate::args::{Common, StabilityArgs};
use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};
use spde_milstein::{Boundary, ItoVariant};

pub fn run(common: &Common, args: &StabilityArgs, cfg: &Resolver) -> CliResult<Table> {
    reject_unused(common, "stability", &["mu", "alpha", "levels", "samples", "seed", "force"])?;
    let theta = cfg.or(common.theta, "theta", 0.0)?;
    let sigma = cfg.or(common.sigma, "sigma", 0.0)?;
    scheme(theta, sigma, ItoVariant::Compact, Boundary::DirichletZero)?;

    let rhos: Vec<f64> = match cfg.get(common.rho, "rho")? {
        Some(rho) => vec![rho],
        None => {
            let lo = cfg.or(args.rho_min, "rho-min", 0.0)?;
            let hi = cfg.or(args.rho_max, "rho-max", 0.99)?;
            let steps = cfg.or(args.steps, "steps", 99)?;
            if !(lo <= hi) {
                return Err(CliError::usage(format!("need rho-min <= rho-max, got {lo} > {hi}")));
            }
            if steps == 0 {
                vec![lo]
            } else {
                (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
            }
        }
    };

    let mut t = Table::new(&["rho", "theta", "sigma", "f", "limit", "unconditional"]);
    t.meta("command", "stability");
    t.meta("theta", theta);
    t.meta("sigma", sigma);
    t.meta("mu", 0.0);
    for rho in rhos {
        let f = stability_function(rho, theta, sigma).map_err(|e| CliError::usage(e.to_string()))?;
        let limit = stability_limit(rho, theta, sigma).map_err(|e| CliError::usage(e.to_string()))?;
        t.push(vec![
            rho.into(),
            theta.into(),
            sigma.into(),
            f.into(),
            limit.into(),
            Cell::Int(limit.is_none() as u64),
        ]);
    }
    Ok(t)
}
