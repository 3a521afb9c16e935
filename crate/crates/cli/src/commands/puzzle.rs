use puzzleforge_core::puzzle::puzzle_level;
use puzzleforge_core::regular::{self, DEFAULT_KAPPA};
use puzzleforge_core::scalar::ScalarMapParam;
use puzzleforge_core::fmt17;

use super::{cfg_err, config_hash, load_config, open_output, res_err, validate_scalar_a};
use crate::config::Resolver;
use crate::{Cli, Failure, PuzzleArgs};

pub fn run(cli: &Cli, args: &PuzzleArgs) -> Result<Vec<String>, Failure> {
    let file = load_config(cli)?;
    let mut r = Resolver::new(&file);
    let a = r.required(args.a, "a").map_err(cfg_err)?;
    let order = r.knob(args.order, "order", 1usize).map_err(cfg_err)?;
    let order_cap = r
        .knob(args.order_cap, "order_cap", order.max(12))
        .map_err(cfg_err)?;
    let kappa = r.knob(args.kappa, "kappa", DEFAULT_KAPPA).map_err(cfg_err)?;
    let mc_samples = r.knob(args.mc_samples, "mc_samples", 0usize).map_err(cfg_err)?;
    let seed = r.knob(args.seed, "rng_seed", 0u64).map_err(cfg_err)?;
    validate_scalar_a(a)?;
    if mc_samples > 0 && args.seed.is_none() && !file.raw().contains_key("rng_seed") {
        return Err(Failure::Config(
            "rng_seed is mandatory for the Monte-Carlo cross-check".into(),
        ));
    }
    let resolved = r.into_resolved();

    let p = ScalarMapParam::new(a).map_err(|e| Failure::Config(e.to_string()))?;
    let mut dir = open_output(cli, "puzzle")?;

    // Level table.
    let level = puzzle_level(p, order);
    let mut csv = String::from("order,index,lo,hi\n");
    for piece in &level.pieces {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            piece.order,
            piece.index,
            fmt17(piece.interval.lo),
            fmt17(piece.interval.hi)
        ));
    }
    dir.write(&format!("pieces_order_{order}.csv"), &csv).map_err(res_err)?;

    // Regular-interval cover.
    let mut cover = regular::enumerate_regular(p, order_cap, kappa);
    if mc_samples > 0 {
        regular::monte_carlo_uncovered(&mut cover, mc_samples, seed);
    }
    let json = serde_json::to_string_pretty(&cover.to_json())
        .map_err(|e| Failure::Resource(e.to_string()))?;
    dir.write("cover.json", &format!("{json}\n")).map_err(res_err)?;

    dir.finish("puzzle", &resolved, config_hash("puzzle", &resolved)).map_err(res_err)
}
