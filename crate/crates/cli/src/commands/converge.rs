use spde_milstein::harness::{error_measures, Experiment, LevelLayout};
use spde_milstein::{Boundary, ModelParams, SchemeParams};

use super::{common_meta, model, preflight, reject_unused, scheme, variant, variant_label};
use crate::args::{Common, ConvergeArgs, SchemeName};
use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

pub const DEFAULT_SAMPLES: usize = 1000;

pub fn run(common: &Common, args: &ConvergeArgs, cfg: &Resolver) -> CliResult<Table> {
    reject_unused(common, "converge", &[])?;
    let m = model(common, cfg, 0.2)?;
    let ito = variant(common, cfg)?;
    let bounded = cfg.flag(args.bounded, "bounded")?;
    let horizon = cfg.or(args.horizon, "horizon", 5.0)?;
    let k0 = cfg.or(args.k0, "k0", 0.25)?;
    let alpha = cfg.or(common.alpha, "alpha", 1.0)?;
    let levels = cfg.or(common.levels, "levels", 5)?;
    let samples = cfg.or(common.samples, "samples", DEFAULT_SAMPLES)?;
    if levels < 2 {
        return Err(CliError::usage(format!("--levels must be at least 2, got {levels}")));
    }
    if samples < 2 {
        return Err(CliError::usage(format!("--samples must be at least 2, got {samples}")));
    }
    if alpha != 1.0 && !bounded {
        return Err(CliError::usage("--alpha needs --bounded: stretching maps [0, x_hi]"));
    }

    let theta = cfg.get(common.theta, "theta")?;
    let sigma = cfg.get(common.sigma, "sigma")?;
    let names: Vec<SchemeName> = match cfg.get::<String>(None, "schemes")? {
        Some(list) if args.schemes.is_empty() => list
            .split(',')
            .map(|s| s.trim().parse().map_err(|e: String| CliError::usage(e)))
            .collect::<CliResult<_>>()?,
        _ if args.schemes.is_empty() => vec![SchemeName::Explicit, SchemeName::Implicit, SchemeName::CrankNicolson],
        _ => args.schemes.clone(),
    };
    let bc = Boundary::DirichletZero;
    let schemes: Vec<(String, SchemeParams<f64>)> = if theta.is_some() || sigma.is_some() {
        let (th, sg) = (theta.unwrap_or(0.0), sigma.unwrap_or(0.0));
        vec![(format!("theta={th} sigma={sg}"), scheme(th, sg, ito, bc)?)]
    } else {
        names
            .iter()
            .map(|n| {
                let (label, th, sg) = match n {
                    SchemeName::Explicit => ("explicit", 0.0, 0.0),
                    SchemeName::Implicit => ("implicit", 1.0, 0.0),
                    SchemeName::CrankNicolson => ("crank-nicolson", 0.5, -1.0),
                };
                Ok((label.to_string(), scheme(th, sg, ito, bc)?))
            })
            .collect::<CliResult<_>>()?
    };

    let (x_lo, base, layout) = if bounded {
        let base = 12;
        let layout = if alpha == 1.0 {
            LevelLayout::uniform(0.0, 16.0, base, k0)
        } else {
            LevelLayout::stretched(16.0, base, k0, alpha)
        };
        (0.0, base, layout)
    } else {
        (-16.0 / 3.0, 16, LevelLayout::uniform(-16.0 / 3.0, 16.0, 16, k0))
    };
    let params = ModelParams::new(m.mu, m.rho, 5.0, x_lo, 16.0, horizon).map_err(|e| CliError::usage(e.to_string()))?;

    let experiments: Vec<(String, Experiment<f64>)> = schemes
        .into_iter()
        .map(|(label, s)| Ok((label, Experiment::new(params, s, layout)?)))
        .collect::<CliResult<_>>()?;
    for (label, exp) in &experiments {
        for l in 0..levels {
            let grid = exp.layout.grid(l, &params)?;
            preflight(m.rho, &exp.scheme, &grid, exp.layout.timestep(l), m.force, &format!("{label}, level {l}"))?;
        }
    }

    let mut t = Table::new(&["level", "h", "k", "E2", "E2_stderr", "e2", "e2_stderr", "scheme"]);
    t.meta("command", "converge");
    common_meta(&mut t, &m);
    t.meta("samples", samples);
    t.meta("x0", 5.0);
    t.meta("x_lo", x_lo);
    t.meta("x_hi", 16.0);
    t.meta("horizon", horizon);
    t.meta("base_intervals", base);
    t.meta("k0", k0);
    t.meta("alpha", alpha);
    t.meta("variant", variant_label(ito));
    t.meta("boundary", if bounded { "absorbing" } else { "truncated whole line" });
    for (label, exp) in &experiments {
        for l in 0..levels {
            let measures = error_measures(exp, l, samples, m.seed, !bounded)?;
            let (h, k) = exp.layout.level(l);
            let (e_big, e_big_se) = measures.exact.map_or((None, None), |e| (Some(e.value), Some(e.std_error)));
            let (e_small, e_small_se) = measures.two_grid.map_or((None, None), |e| (Some(e.value), Some(e.std_error)));
            t.push(vec![
                l.into(),
                h.into(),
                k.into(),
                e_big.into(),
                e_big_se.into(),
                e_small.into(),
                e_small_se.into(),
                Cell::Text(label.clone()),
            ]);
        }
    }
    Ok(t)
}
