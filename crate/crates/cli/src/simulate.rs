use serde_json::{json, Value};

use rdtm::game::simulate_replicator;
use rdtm::glv::pulled_back_trajectory;
use rdtm::mwu::{measure_global_error, normalize_game, simulate_mwu};
use rdtm::ode::{AdaptiveOptions, Trajectory};

use crate::args::{Mode, SimulateArgs};
use crate::error::CliError;
use crate::io::{load_source, Bundle, Output};

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(rdtm::Error::RejectedInput(format!("{name} must be positive, got {v}")).into());
    }
    Ok(())
}

fn write_traj(out: &Output, stem: &str, tr: &Trajectory) -> Result<String, CliError> {
    out.write_either(stem, || tr.to_csv_string(), || tr.to_json())
}

/// Maps each simplex state back to source coordinates, keeping the times.
pub fn pull_back_states(b: &Bundle, tr: &Trajectory) -> Result<Trajectory, CliError> {
    let mut states = Vec::with_capacity(tr.len());
    for s in tr.states() {
        states.push(b.to_source(s)?);
    }
    Ok(Trajectory::from_parts(tr.times().to_vec(), states)?)
}

/// Replicator orbit pulled back to source coordinates, in source time.
pub fn pulled_back_rd(b: &Bundle, x0: &[f64], t_end: f64, opts: AdaptiveOptions) -> Result<Trajectory, CliError> {
    let y0: Vec<f64> = x0.iter().map(|v| v + b.offset).collect();
    let tr = pulled_back_trajectory(&b.game, b.map()?, &y0, t_end, opts)?;
    Ok(tr.map_states(|y| Ok(y.iter().map(|v| v - b.offset).collect()))?)
}

pub fn run(args: &SimulateArgs, out: &Output) -> Result<Value, CliError> {
    let b = load_source(&args.source)?;
    let (p0, src0) = b.resolve_start(&args.start)?;
    let mut summary = json!({ "mode": format!("{:?}", args.mode).to_lowercase(), "m": b.game_size });
    let s = summary.as_object_mut().expect("object");
    match args.mode {
        Mode::Rd => {
            check_positive("--t-end", args.t_end)?;
            let opts = AdaptiveOptions::new(args.rtol, args.atol);
            if args.pull_back {
                let x0 = match src0 {
                    Some(x) => x,
                    None => b.to_source(p0.as_slice())?,
                };
                let tr = pulled_back_rd(&b, &x0, args.t_end, opts)?;
                s.insert("samples".into(), tr.len().into());
                s.insert("pulled_back".into(), write_traj(out, "pulled_back", &tr)?.into());
            } else {
                let tr = simulate_replicator(&b.game, &p0, args.t_end, opts)?;
                s.insert("samples".into(), tr.len().into());
                s.insert("trajectory".into(), write_traj(out, "trajectory", &tr)?.into());
            }
        }
        Mode::Mwu => {
            check_positive("--eta", args.eta)?;
            let game = normalize_game(&b.game);
            let scale = b.game.max_abs();
            let tr = simulate_mwu(&game, &p0, args.eta, args.steps)?;
            let min_x = tr
                .states()
                .iter()
                .flat_map(|x| x.iter())
                .cloned()
                .fold(f64::INFINITY, f64::min);
            s.insert("normalization".into(), scale.into());
            s.insert("steps".into(), args.steps.into());
            s.insert("min_coordinate".into(), min_x.into());
            s.insert("trajectory".into(), write_traj(out, "trajectory", &tr)?.into());
            if args.pull_back {
                let pb = pull_back_states(&b, &tr)?;
                s.insert("pulled_back".into(), write_traj(out, "pulled_back", &pb)?.into());
            }
            if args.error_report {
                let r = measure_global_error(&game, &p0, args.eta, args.steps)?;
                s.insert("error_within_bounds".into(), r.within_bounds().into());
                s.insert("lipschitz_L".into(), r.lipschitz_l.into());
                let path = out.write_either("error", || r.to_csv_string(), || r.to_json())?;
                s.insert("error_report".into(), path.into());
            }
        }
    }
    Ok(summary)
}
