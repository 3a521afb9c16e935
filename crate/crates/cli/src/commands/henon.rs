use puzzleforge_core::fmt17;
use puzzleforge_core::henon::{
    attractor_sample, boxes, classical_trapping_region, lyapunov_plane, trapping_check,
    PlaneParams,
};
use puzzleforge_core::regular::DEFAULT_KAPPA;

use super::{cfg_err, config_hash, load_config, num_err, open_output, res_err};
use crate::config::Resolver;
use crate::{Cli, Failure, HenonArgs};

pub fn run(cli: &Cli, args: &HenonArgs) -> Result<Vec<String>, Failure> {
    let file = load_config(cli)?;
    let mut r = Resolver::new(&file);
    let a = r.required(args.a, "a").map_err(cfg_err)?;
    let b = r.knob(args.b, "b", 0.0f64).map_err(cfg_err)?;
    let steps = r.knob(args.steps, "steps", 1_000_000usize).map_err(cfg_err)?;
    let burn_in = r.knob(args.burn_in, "burn_in", 1000usize).map_err(cfg_err)?;
    let kappa = r.knob(args.kappa, "kappa", DEFAULT_KAPPA).map_err(cfg_err)?;
    let x0 = r.knob(args.x0, "x0", 0.0f64).map_err(cfg_err)?;
    let y0 = r.knob(args.y0, "y0", 0.0f64).map_err(cfg_err)?;
    if b.abs() >= 1.0 {
        return Err(Failure::Config(format!("dissipative mode needs |b| < 1, got {b}")));
    }
    // Certificate sampling is stochastic: the seed is mandatory for boxes.
    let seed = if args.boxes {
        r.required(args.seed, "rng_seed").map_err(cfg_err)?
    } else {
        r.knob(args.seed, "rng_seed", 0u64).map_err(cfg_err)?
    };
    let resolved = r.into_resolved();

    let params = PlaneParams::henon(a, b);
    let mut dir = open_output(cli, "henon")?;
    let region = classical_trapping_region();

    if args.trapping {
        let result = trapping_check(&params, &region, 512);
        let json = serde_json::json!({
            "pass": result.pass,
            "margin": result.margin,
            "max_penetration": result.max_penetration,
            "samples": result.samples,
            "region": region,
        });
        dir.write(
            "trapping.json",
            &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()),
        )
        .map_err(res_err)?;
    }

    if args.lyapunov {
        let (l1, l2) = lyapunov_plane(&params, x0, y0, steps, burn_in, 1e3).map_err(num_err)?;
        let ky = if l2.is_finite() && l2 < 0.0 { Some(1.0 + l1 / l2.abs()) } else { None };
        let json = serde_json::json!({
            "a": a,
            "b": b,
            "steps": steps,
            "lambda1": l1,
            "lambda2": l2,
            "sum": l1 + l2,
            "log_abs_b": if b != 0.0 { Some(b.abs().ln()) } else { None },
            "kaplan_yorke_dimension": ky,
            "lambda1_text": fmt17(l1),
            "lambda2_text": if l2.is_finite() { fmt17(l2) } else { "-inf".into() },
        });
        dir.write(
            "lyapunov.json",
            &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()),
        )
        .map_err(res_err)?;
    }

    if args.attractor {
        let sample = attractor_sample(&params, &region, steps, burn_in).map_err(num_err)?;
        let mut csv = String::from("x,y\n");
        for &(x, y) in &sample.orbit {
            csv.push_str(&format!("{},{}\n", fmt17(x), fmt17(y)));
        }
        dir.write("cloud.csv", &csv).map_err(res_err)?;
        let mut csv = String::from("x,y\n");
        for &(x, y) in &sample.manifold {
            csv.push_str(&format!("{},{}\n", fmt17(x), fmt17(y)));
        }
        dir.write("manifold.csv", &csv).map_err(res_err)?;
    }

    if args.boxes {
        let base = boxes::build_base_box(&params).map_err(num_err)?;
        let pieces = boxes::simple_pieces(&params, kappa, 256, seed).map_err(num_err)?;
        let json = serde_json::json!({
            "base_box": base.to_json(),
            "simple_pieces": pieces.to_json(),
        });
        dir.write(
            "pieces.json",
            &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()),
        )
        .map_err(res_err)?;
    }

    dir.finish("henon", &resolved, config_hash("henon", &resolved)).map_err(res_err)
}
