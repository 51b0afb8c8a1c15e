use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use rdtm::game::{MatrixGame, SimplexPoint};
use rdtm::mwu::{
    global_error_bound, lipschitz_bound, local_error_bound, measure_global_error, normalize_game, select_step_size,
    steps_for_horizon, sweep_local_error,
};

use crate::args::{GameSource, GlobalArgs, SelectArgs, SweepArgs};
use crate::error::CliError;
use crate::io::{load_source, Output};

#[derive(Debug, Clone, Serialize)]
struct Row {
    trial: usize,
    eta: f64,
    measured_local: f64,
    bound_local: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    measured_global: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_global: Option<f64>,
}

fn has_source(s: &GameSource) -> bool {
    s.bundle.is_some() || s.game.is_some() || s.preset.is_some()
}

fn random_game(rng: &mut ChaCha8Rng, m: usize) -> MatrixGame {
    let rows = (0..m)
        .map(|_| (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    MatrixGame::from_rows(rows).expect("finite square matrix")
}

fn random_interior(rng: &mut ChaCha8Rng, m: usize) -> SimplexPoint {
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    SimplexPoint::new(w.into_iter().map(|v| v / s).collect()).expect("positive weights")
}

fn trial(fixed: Option<&MatrixGame>, args: &SweepArgs, seed: u64, index: usize) -> Result<Vec<Row>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let game = match fixed {
        Some(g) => g.clone(),
        None => normalize_game(&random_game(&mut rng, args.size)),
    };
    let x = random_interior(&mut rng, game.size());
    let local = sweep_local_error(&game, &x, &args.etas)?;
    let mut rows = Vec::with_capacity(args.etas.len());
    for (i, &eta) in args.etas.iter().enumerate() {
        let (mg, bg) = match args.steps {
            Some(k) => {
                let r = measure_global_error(&game, &x, eta, k as usize)?;
                let last = r.measured_global.len() - 1;
                (Some(r.measured_global[last]), Some(r.global_bounds[last]))
            }
            None => (None, None),
        };
        rows.push(Row {
            trial: index,
            eta,
            measured_local: local.measured_local[i],
            bound_local: local.local_bounds[i],
            measured_global: mg,
            bound_global: bg,
        });
    }
    Ok(rows)
}

fn rows_csv(rows: &[Row], global: bool) -> String {
    let mut s = String::from("trial,eta,measured_local,bound_local");
    if global {
        s.push_str(",measured_global,bound_global");
    }
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{:?},{:?},{:?}",
            r.trial, r.eta, r.measured_local, r.bound_local
        ));
        if let (Some(m), Some(b)) = (r.measured_global, r.bound_global) {
            s.push_str(&format!(",{m:?},{b:?}"));
        }
        s.push('\n');
    }
    s
}

pub fn run(args: &SweepArgs, global: &GlobalArgs, out: &Output) -> Result<Value, CliError> {
    if args.etas.iter().any(|e| !(*e > 0.0)) {
        return Err(rdtm::Error::RejectedInput("every eta must be positive".into()).into());
    }
    if args.steps == Some(0) {
        return Err(rdtm::Error::RejectedInput("--steps must be at least 1".into()).into());
    }
    if args.size < 2 && !has_source(&args.source) {
        return Err(rdtm::Error::RejectedInput("--size must be at least 2".into()).into());
    }
    let fixed = if has_source(&args.source) {
        Some(normalize_game(&load_source(&args.source)?.game))
    } else {
        None
    };
    let per_trial: Vec<Result<Vec<Row>, CliError>> = (0..args.trials)
        .into_par_iter()
        .map(|i| trial(fixed.as_ref(), args, global.seed, i))
        .collect();
    let mut rows = Vec::new();
    for r in per_trial {
        rows.extend(r?);
    }
    let local_violations = rows.iter().filter(|r| r.measured_local > r.bound_local).count();
    let global_violations = rows
        .iter()
        .filter(|r| matches!((r.measured_global, r.bound_global), (Some(m), Some(b)) if m > b))
        .count();
    let path = out.write_either(
        "sweep",
        || rows_csv(&rows, args.steps.is_some()),
        || serde_json::to_string_pretty(&rows).expect("rows serialize"),
    )?;
    Ok(json!({
        "trials": args.trials,
        "etas": args.etas,
        "rows": rows.len(),
        "local_violations": local_violations,
        "global_violations": global_violations,
        "output": path,
    }))
}

pub fn select(args: &SelectArgs, out: &Output) -> Result<Value, CliError> {
    let l = match args.lipschitz {
        Some(l) => l,
        None if has_source(&args.source) => lipschitz_bound(&normalize_game(&load_source(&args.source)?.game)),
        None => {
            return Err(CliError::usage(
                "give --lipschitz or a game (--bundle, --game, --preset)",
            ))
        }
    };
    let eta = select_step_size(l, args.horizon, args.epsilon)?;
    let steps = steps_for_horizon(eta, args.horizon);
    let v = json!({
        "eta": eta,
        "steps": steps,
        "bound": global_error_bound(eta, l, steps),
        "local_bound": local_error_bound(eta),
        "lipschitz_L": l,
        "horizon": args.horizon,
        "epsilon": args.epsilon,
    });
    let path = out.write_json("step_size.json", &v)?;
    let mut v = v;
    v["output"] = path.into();
    Ok(v)
}
