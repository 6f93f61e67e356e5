use spde_milstein::credit::loss;
use spde_milstein::harness::{Experiment, LevelLayout};
use spde_milstein::model::exact_solution;
use spde_milstein::scheme::Observe;
use spde_milstein::{Boundary, ModelParams};

use super::{common_meta, model, preflight, reject_unused, scheme, variant, variant_label};
use crate::args::{Common, SolveArgs};
use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::output::Table;

pub fn run(common: &Common, args: &SolveArgs, cfg: &Resolver) -> CliResult<Table> {
    reject_unused(common, "solve", &["levels", "samples"])?;
    let m = model(common, cfg, 0.2)?;
    let ito = variant(common, cfg)?;
    let theta = cfg.or(common.theta, "theta", 0.5)?;
    let sigma = cfg.or(common.sigma, "sigma", -1.0)?;
    let alpha = cfg.or(common.alpha, "alpha", 1.0)?;
    let level = cfg.or(args.level, "level", 3)?;
    let index = cfg.or(args.index, "index", 0)?;
    let bounded = cfg.flag(args.bounded, "bounded")?;
    let horizon = cfg.or(args.horizon, "horizon", 5.0)?;
    let k0 = cfg.or(args.k0, "k0", 0.25)?;
    if alpha != 1.0 && !bounded {
        return Err(CliError::usage("--alpha needs --bounded: stretching maps [0, x_hi]"));
    }

    let (x_lo, layout) = if bounded {
        let layout = if alpha == 1.0 {
            LevelLayout::uniform(0.0, 16.0, 12, k0)
        } else {
            LevelLayout::stretched(16.0, 12, k0, alpha)
        };
        (0.0, layout)
    } else {
        (-16.0 / 3.0, LevelLayout::uniform(-16.0 / 3.0, 16.0, 16, k0))
    };
    let params = ModelParams::new(m.mu, m.rho, 5.0, x_lo, 16.0, horizon).map_err(|e| CliError::usage(e.to_string()))?;
    let exp = Experiment::new(params, scheme(theta, sigma, ito, Boundary::DirichletZero)?, layout)?;
    let grid = exp.layout.grid(level, &params)?;
    let k = exp.layout.timestep(level);
    preflight(m.rho, &exp.scheme, &grid, k, m.force, &format!("level {level}"))?;

    let path = exp.path(level, index, m.seed)?;
    let (grid, fields) = exp.solve(level, &path, &Observe::Terminal)?;
    let v = fields[0].values();
    let m_t = path.terminal();

    let stretched = grid.is_stretched();
    let columns: &[&'static str] = match (bounded, stretched) {
        (false, _) => &["x", "v", "exact", "error"],
        (true, false) => &["x", "v"],
        (true, true) => &["y", "x", "v"],
    };
    let mut t = Table::new(columns);
    t.meta("command", "solve");
    common_meta(&mut t, &m);
    t.meta("theta", theta);
    t.meta("sigma", sigma);
    t.meta("variant", variant_label(ito));
    t.meta("level", level);
    t.meta("index", index as usize);
    t.meta("h", grid.h());
    t.meta("k", k);
    t.meta("horizon", horizon);
    t.meta("alpha", alpha);
    t.meta("terminal_M", m_t);
    if bounded {
        t.meta("loss", loss(&fields[0], &grid).value);
    }
    for (j, &x) in grid.nodes().iter().enumerate() {
        let row = if !bounded {
            let exact = exact_solution(&params, horizon, m_t, x)?;
            vec![x.into(), v[j].into(), exact.into(), (v[j] - exact).into()]
        } else if stretched {
            vec![grid.comp_nodes()[j].into(), x.into(), v[j].into()]
        } else {
            vec![x.into(), v[j].into()]
        };
        t.push(row);
    }
    Ok(t)
}
