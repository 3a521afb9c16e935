use puzzleforge_core::fmt17;
use puzzleforge_core::interval::RealInterval;
use puzzleforge_core::regular::DEFAULT_KAPPA;
use puzzleforge_core::strongreg::{
    classify_sweep, parapuzzle_decompose, ClassifyParams, Verdict,
};

use super::{cfg_err, config_hash, load_config, open_output, res_err, validate_scalar_a};
use crate::config::{Resolver, WindowArg};
use crate::{Cli, ClassifyArgs, Failure};

fn verdict_label(v: &Verdict) -> String {
    match v {
        Verdict::StronglyRegularCandidate => "candidate".into(),
        Verdict::Excluded { reason, step } => format!("excluded:{reason:?}@{step}"),
        Verdict::Undetermined => "undetermined".into(),
    }
}

pub fn run(cli: &Cli, args: &ClassifyArgs) -> Result<Vec<String>, Failure> {
    let file = load_config(cli)?;
    let mut r = Resolver::new(&file);
    let window = r.required(args.window.map(WindowArg), "window").map_err(cfg_err)?.0;
    let count = r.knob(args.count, "count", 1000usize).map_err(cfg_err)?;
    let depth = r.knob(args.depth, "depth", 20usize).map_err(cfg_err)?;
    let theta = r.knob(args.theta, "theta", 0.1f64).map_err(cfg_err)?;
    let order_cap = r.knob(args.order_cap, "order_cap", 16usize).map_err(cfg_err)?;
    let kappa = r.knob(args.kappa, "kappa", DEFAULT_KAPPA).map_err(cfg_err)?;
    let para_depth = r
        .knob(args.parapuzzle_depth, "parapuzzle_depth", 0usize)
        .map_err(cfg_err)?;
    validate_scalar_a(window.0)?;
    validate_scalar_a(window.1)?;
    if count == 0 {
        return Err(Failure::Config("count must be positive".into()));
    }
    let resolved = r.into_resolved();

    let params = ClassifyParams { depth, theta, order_cap, kappa };
    let window = RealInterval::new(window.0, window.1);
    let rows = classify_sweep(window, count, &params);

    let mut dir = open_output(cli, "classify")?;
    let mut csv = String::from("a,verdict,depth,margin,M\n");
    let mut candidates = 0usize;
    for (a, res) in &rows {
        if res.verdict == Verdict::StronglyRegularCandidate {
            candidates += 1;
        }
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(*a),
            verdict_label(&res.verdict),
            res.depth_reached,
            fmt17(res.diamond_margin),
            res.return_time.map_or(String::from("inf"), |m| m.to_string()),
        ));
    }
    dir.write("classify.csv", &csv).map_err(res_err)?;

    let excluded = rows
        .iter()
        .filter(|(_, r)| matches!(r.verdict, Verdict::Excluded { .. }))
        .count();
    let summary = serde_json::json!({
        "window": [window.lo, window.hi],
        "count": count,
        "depth": depth,
        "theta": theta,
        "order_cap": order_cap,
        "kappa": kappa,
        "candidates": candidates,
        "excluded": excluded,
        "undetermined": rows.len() - candidates - excluded,
        "candidate_fraction": candidates as f64 / rows.len() as f64,
        "note": "prefix constancy of parapuzzle windows is probed at endpoints and midpoints only",
    });
    dir.write(
        "summary.json",
        &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()),
    )
    .map_err(res_err)?;

    if para_depth > 0 {
        let windows = parapuzzle_decompose(window, para_depth, &params);
        let mut csv = String::from("lo,hi,resolved,prefix\n");
        for w in &windows {
            let prefix = w
                .prefix
                .iter()
                .map(|s| format!("{s:?}"))
                .collect::<Vec<_>>()
                .join("|");
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt17(w.param_interval.lo),
                fmt17(w.param_interval.hi),
                w.resolved,
                prefix
            ));
        }
        dir.write("parapuzzle.csv", &csv).map_err(res_err)?;
    }

    dir.finish("classify", &resolved, config_hash("classify", &resolved))
        .map_err(res_err)
}
