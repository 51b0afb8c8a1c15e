use serde_json::{json, Value};

use rdtm::game::SimplexPoint;
use rdtm::mwu::{normalize_game, simulate_mwu};
use rdtm::ode::{integrate_adaptive, AdaptiveOptions};
use rdtm::presets::{lorenz, LORENZ_START};

use crate::args::DemoArgs;
use crate::embed::lorenz_bundle;
use crate::error::CliError;
use crate::io::Output;
use crate::simulate::pull_back_states;

pub fn run(args: &DemoArgs, out: &Output) -> Result<Value, CliError> {
    if !(args.eta > 0.0) || !(args.t_end > 0.0) {
        return Err(rdtm::Error::RejectedInput("--eta and --t-end must be positive".into()).into());
    }
    let b = lorenz_bundle(args.shift)?;
    out.write("game.csv", &b.game.to_csv_string())?;
    out.write_json("bundle.json", &b)?;

    let game = normalize_game(&b.game);
    let p0 = SimplexPoint::new(b.to_simplex(&LORENZ_START)?)?;
    let mwu = simulate_mwu(&game, &p0, args.eta, args.steps)?;
    let pulled = pull_back_states(&b, &mwu)?;
    let direct = integrate_adaptive(&lorenz(), &LORENZ_START, args.t_end, AdaptiveOptions::new(1e-10, 1e-10))?;

    // MWU step k sits at replicator time k eta / scale on the unnormalized
    // game, and source time advances at rate p_last along that flow.
    let scale = b.game.max_abs();
    let source_time: f64 = mwu.states()[..mwu.len() - 1]
        .iter()
        .map(|p| p[p.len() - 1] * args.eta / scale)
        .sum();
    let mut min_p = f64::INFINITY;
    let mut sum_gap = 0.0f64;
    for s in mwu.states() {
        min_p = min_p.min(s.iter().cloned().fold(f64::INFINITY, f64::min));
        sum_gap = sum_gap.max((s.iter().sum::<f64>() - 1.0).abs());
    }
    let write = |stem: &str, tr: &rdtm::ode::Trajectory| out.write_either(stem, || tr.to_csv_string(), || tr.to_json());
    let meta = json!({
        "shift": args.shift,
        "eta": args.eta,
        "steps": args.steps,
        "m": b.game_size,
        "monomials": b.unique_monomials,
        "normalization": scale,
        "lorenz_time_covered": source_time,
        "min_coordinate": min_p,
        "max_sum_deviation": sum_gap,
        "mwu_simplex": write("mwu_simplex", &mwu)?,
        "mwu_lorenz": write("mwu_lorenz", &pulled)?,
        "direct_lorenz": write("direct_lorenz", &direct)?,
        "preset": b.metadata,
    });
    let path = out.write_json("demo_lorenz.json", &meta)?;
    let mut v = meta;
    v["output"] = json!(path);
    Ok(v)
}
