use puzzleforge_core::binding::{run_selection, BindingKnobs};
use puzzleforge_core::fmt17;
use puzzleforge_core::interval::RealInterval;

use super::{cfg_err, config_hash, load_config, open_output, res_err};
use crate::config::{Resolver, WindowArg};
use crate::{Cli, Failure, SelectArgs};

pub fn run(cli: &Cli, args: &SelectArgs) -> Result<Vec<String>, Failure> {
    let file = load_config(cli)?;
    let defaults = BindingKnobs::default();
    let mut r = Resolver::new(&file);
    let window = r.required(args.window.map(WindowArg), "window").map_err(cfg_err)?.0;
    let n_max = r.knob(args.n_max, "n_max", 200usize).map_err(cfg_err)?;
    let knobs = BindingKnobs {
        delta: r.knob(args.delta, "delta", defaults.delta).map_err(cfg_err)?,
        delta_sep: r
            .knob(args.delta_sep, "delta_sep", defaults.delta_sep)
            .map_err(cfg_err)?,
        alpha_frac: r
            .knob(args.alpha_frac, "alpha_frac", defaults.alpha_frac)
            .map_err(cfg_err)?,
        alpha_ba: r
            .knob(args.alpha_ba, "alpha_ba", defaults.alpha_ba)
            .map_err(cfg_err)?,
        ell_min: r.knob(args.ell_min, "ell_min", defaults.ell_min).map_err(cfg_err)?,
        max_k: r.knob(args.max_k, "max_k", defaults.max_k).map_err(cfg_err)?,
        resolution: r
            .knob(args.resolution, "resolution", defaults.resolution)
            .map_err(cfg_err)?,
    };
    if !(-2.0..=-1.0).contains(&window.0) || !(-2.0..=-1.0).contains(&window.1) {
        return Err(Failure::Config(format!(
            "selection window {}:{} must lie inside [-2, -1]",
            window.0, window.1
        )));
    }
    if knobs.delta <= 0.0 || knobs.delta_sep <= 0.0 || knobs.resolution <= 0.0 {
        return Err(Failure::Config("delta, delta_sep and resolution must be positive".into()));
    }
    let resolved = r.into_resolved();

    let report = run_selection(RealInterval::new(window.0, window.1), n_max, &knobs);
    if report.truncated {
        return Err(Failure::Numerical(
            "selection truncated: window budget exhausted; raise the resolution".into(),
        ));
    }

    let mut dir = open_output(cli, "select")?;
    let json = serde_json::to_string_pretty(&report.to_json())
        .map_err(|e| Failure::Resource(e.to_string()))?;
    dir.write("selection.json", &format!("{json}\n")).map_err(res_err)?;

    let mut csv = String::from(
        "a_lo,a_hi,width,curve_length,returns,bound_total,resolution_limited,short_flag\n",
    );
    for s in &report.survivors {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt17(s.param_interval.lo),
            fmt17(s.param_interval.hi),
            fmt17(s.param_interval.len()),
            fmt17(s.curve_length),
            s.returns,
            s.bound_total,
            s.resolution_limited,
            s.short_flag,
        ));
    }
    dir.write("survivors.csv", &csv).map_err(res_err)?;

    dir.finish("select", &resolved, config_hash("select", &resolved)).map_err(res_err)
}
