use std::path::Path;

use serde_json::{json, Value};

use rdtm::game::simulate_replicator;
use rdtm::ode::{reach, AdaptiveOptions, ReachReport, Trajectory};
use rdtm::turing::{tm_reach_check, HaltWindow};

use crate::args::{MachineArgs, ReachArgs};
use crate::error::CliError;
use crate::io::{load_machine, load_source, load_tape, read_text, Output};
use crate::simulate::pulled_back_rd;

fn load_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let text = read_text(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        Trajectory::from_json(&text)
    } else {
        Trajectory::read_csv(text.as_bytes())
    };
    parsed.map_err(|e| match e {
        rdtm::Error::Parse(m) => rdtm::Error::Parse(format!("{}: {m}", path.display())).into(),
        other => other.into(),
    })
}

fn target_box(args: &ReachArgs) -> Result<(Vec<f64>, f64), CliError> {
    match (&args.center, args.radius) {
        (Some(c), Some(r)) if r > 0.0 => Ok((c.clone(), r)),
        (Some(_), Some(r)) => Err(rdtm::Error::RejectedInput(format!("--radius must be positive, got {r}")).into()),
        _ => Err(CliError::usage("missing target: give --center and --radius")),
    }
}

fn in_box(center: &[f64], radius: f64) -> impl Fn(&[f64]) -> bool + '_ {
    move |x: &[f64]| x.len() == center.len() && x.iter().zip(center).all(|(a, c)| (a - c).abs() <= radius)
}

fn check_dim(tr: &Trajectory, center: &[f64]) -> Result<(), CliError> {
    if tr.dim() != center.len() {
        return Err(rdtm::Error::DimensionMismatch {
            expected: tr.dim(),
            got: center.len(),
        }
        .into());
    }
    Ok(())
}

/// Bounded halting-window query on the encoded orbit.
pub fn machine_report(m: &MachineArgs, window: &str, epsilon: f64) -> Result<ReachReport, CliError> {
    let tm = load_machine(m)?;
    let input = load_tape(&tm, m)?;
    let w = HaltWindow::parse(window, epsilon)?;
    Ok(tm_reach_check(&tm, &input, &w, m.steps)?)
}

pub fn run(args: &ReachArgs, out: &Output) -> Result<Value, CliError> {
    let report = if args.machine.machine.is_some() || args.machine.builtin.is_some() {
        let window = args
            .window
            .as_deref()
            .ok_or_else(|| CliError::usage("missing target: give --window for a machine query"))?;
        machine_report(&args.machine, window, args.epsilon)?
    } else {
        let (center, radius) = target_box(args)?;
        let horizon = args.horizon.ok_or_else(|| CliError::usage("give --horizon"))?;
        let tr = if let Some(p) = &args.trajectory {
            load_trajectory(p)?
        } else {
            let b = load_source(&args.source)?;
            let (p0, src0) = b.resolve_start(&args.start)?;
            let opts = AdaptiveOptions::new(args.rtol, args.atol);
            if args.pull_back {
                let x0 = match src0 {
                    Some(x) => x,
                    None => b.to_source(p0.as_slice())?,
                };
                pulled_back_rd(&b, &x0, horizon, opts)?
            } else {
                simulate_replicator(&b.game, &p0, horizon, opts)?
            }
        };
        check_dim(&tr, &center)?;
        reach(tr.samples(), in_box(&center, radius), horizon)?
    };
    let path = out.write("reach.json", &report.to_json())?;
    let mut v: Value = serde_json::from_str(&report.to_json()).expect("report JSON is valid");
    v["output"] = json!(path);
    Ok(v)
}
