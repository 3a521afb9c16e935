use puzzleforge_core::fmt17;
use puzzleforge_core::measures::{lyapunov_1d, ulam_density};
use puzzleforge_core::scalar::ScalarMapParam;

use super::{cfg_err, config_hash, load_config, num_err, open_output, res_err};
use crate::config::Resolver;
use crate::{Cli, Failure, MeasureArgs};

pub fn run(cli: &Cli, args: &MeasureArgs) -> Result<Vec<String>, Failure> {
    let file = load_config(cli)?;
    let mut r = Resolver::new(&file);
    let a = r.required(args.a, "a").map_err(cfg_err)?;
    let bins = r.knob(args.bins, "bins", 1000usize).map_err(cfg_err)?;
    let iterates = r.knob(args.iterates, "iterates", 10_000_000usize).map_err(cfg_err)?;
    let seeds = r.knob(args.seeds, "seeds", 8usize).map_err(cfg_err)?;
    let steps = r.knob(args.steps, "steps", 1_000_000usize).map_err(cfg_err)?;
    let burn_in = r.knob(args.burn_in, "burn_in", 1000usize).map_err(cfg_err)?;
    let x0 = r.knob(args.x0, "x0", 0.437161f64).map_err(cfg_err)?;
    let want_density = args.density || !args.lyapunov;
    let want_lyapunov = args.lyapunov || !args.density;
    if !(-2.0..=-1.0).contains(&a) {
        return Err(Failure::Config(format!(
            "parameter a = {a} outside the invariant-core range [-2, -1]"
        )));
    }
    if bins < 1 || seeds < 1 || steps < 1 {
        return Err(Failure::Config("bins, seeds and steps must be positive".into()));
    }
    // The density estimate is stochastic: the seed is mandatory.
    let seed = if want_density {
        r.required(args.seed, "rng_seed").map_err(cfg_err)?
    } else {
        r.knob(args.seed, "rng_seed", 0u64).map_err(cfg_err)?
    };
    let resolved = r.into_resolved();

    let p = ScalarMapParam::new(a).map_err(|e| Failure::Config(e.to_string()))?;
    let mut dir = open_output(cli, "measure")?;

    if want_density {
        let hist = ulam_density(p, bins, iterates, seeds, seed);
        dir.write("density.csv", &hist.to_csv()).map_err(res_err)?;
    }

    if want_lyapunov {
        let exponent = lyapunov_1d(p, x0, steps, burn_in).map_err(num_err)?;
        let json = serde_json::json!({
            "a": a,
            "x0": x0,
            "steps": steps,
            "burn_in": burn_in,
            "lyapunov": exponent,
            "lyapunov_text": fmt17(exponent),
        });
        dir.write(
            "lyapunov.json",
            &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()),
        )
        .map_err(res_err)?;
    }

    dir.finish("measure", &resolved, config_hash("measure", &resolved)).map_err(res_err)
}
