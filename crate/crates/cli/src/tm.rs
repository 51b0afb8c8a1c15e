use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use rdtm::turing::{decode, encode, encoded_step, tm_run, tm_step, TapeConfig, TuringMachine, SYMBOLS};

use crate::args::{ConjugacyArgs, GlobalArgs, TmAction, TmArgs};
use crate::error::CliError;
use crate::io::{load_machine, load_tape, Output};
use crate::reach::machine_report;

fn random_machine(rng: &mut ChaCha8Rng, r: u32) -> TuringMachine {
    let table: Vec<(u32, u8, i8)> = (0..(r - 1) as usize * SYMBOLS as usize)
        .map(|_| (rng.gen_range(1..=r), rng.gen_range(0..SYMBOLS), rng.gen_range(-1i8..=1)))
        .collect();
    TuringMachine::from_fn(r, 1, r, |q, s| table[(q - 1) as usize * SYMBOLS as usize + s as usize])
        .expect("table is complete")
}

fn random_config(rng: &mut ChaCha8Rng, r: u32) -> TapeConfig {
    let mut side = || {
        let len = rng.gen_range(0..8);
        (0..len).map(|_| rng.gen_range(0..SYMBOLS)).collect::<Vec<u8>>()
    };
    let right = side();
    let left = side();
    TapeConfig::new(rng.gen_range(1..=r), right, left).expect("symbols are digits")
}

/// Failures found for one machine: (configuration, reason).
fn check_machine(tm: &TuringMachine, rng: &mut ChaCha8Rng, configs: usize) -> Vec<(String, String)> {
    let mut bad = Vec::new();
    for _ in 0..configs {
        let c = random_config(rng, tm.states());
        let e = encode(&c);
        match decode(&e, c.k0()) {
            Ok(d) if d == c => {}
            _ => bad.push((c.to_string(), "decode(encode(c)) != c".to_string())),
        }
        let next = tm_step(tm, &c).expect("state is in range");
        let es = encoded_step(tm, &e, c.k0() + 1);
        if es.off_image || es.next != encode(&next) {
            bad.push((
                c.to_string(),
                "encoded step disagrees with the machine step".to_string(),
            ));
        }
    }
    bad
}

fn conjugacy(args: &ConjugacyArgs, seed: u64) -> Result<Value, CliError> {
    if args.states < 2 {
        return Err(rdtm::Error::RejectedInput("--states must be at least 2".into()).into());
    }
    let given = if args.machine.machine.is_some() || args.machine.builtin.is_some() {
        Some(load_machine(&args.machine)?)
    } else {
        None
    };
    let trials = if given.is_some() { 1 } else { args.trials };
    let results: Vec<Vec<(String, String)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let tm = match &given {
                Some(tm) => tm.clone(),
                None => random_machine(&mut rng, args.states),
            };
            check_machine(&tm, &mut rng, args.configs)
        })
        .collect();
    let failures: Vec<Value> = results
        .iter()
        .enumerate()
        .flat_map(|(i, v)| {
            v.iter()
                .map(move |(c, why)| json!({ "trial": i, "tape": c, "reason": why }))
        })
        .collect();
    let v = json!({
        "machines": trials,
        "configurations": trials * args.configs,
        "failures": failures.len(),
        "first_failures": failures.iter().take(10).collect::<Vec<_>>(),
    });
    if !failures.is_empty() {
        return Err(CliError::CheckFailed(format!(
            "{} conjugacy failures: {}",
            failures.len(),
            v
        )));
    }
    Ok(v)
}

pub fn run(args: &TmArgs, global: &GlobalArgs, out: &Output) -> Result<Value, CliError> {
    let (name, v) = match &args.action {
        TmAction::Run(m) => {
            let tm = load_machine(m)?;
            let input = load_tape(&tm, m)?;
            let res = tm_run(&tm, &input, m.steps)?;
            let mut v = serde_json::to_value(&res).expect("outcome serializes");
            v["tape"] = json!(res.config().to_string());
            ("tm_run.json", v)
        }
        TmAction::Encode(m) => {
            let tm = load_machine(m)?;
            let c = load_tape(&tm, m)?;
            let e = encode(&c);
            let mut v = serde_json::to_value(&e).expect("encoding serializes");
            v["point"] = json!(e.to_point());
            v["k0"] = json!(c.k0());
            ("tm_encode.json", v)
        }
        TmAction::ConjugacyCheck(a) => ("tm_conjugacy.json", conjugacy(a, global.seed)?),
        TmAction::Reach(a) => {
            let r = machine_report(&a.machine, &a.window, a.epsilon)?;
            (
                "reach.json",
                serde_json::from_str(&r.to_json()).expect("report JSON is valid"),
            )
        }
    };
    let path = out.write_json(name, &v)?;
    let mut v = v;
    v["output"] = json!(path);
    Ok(v)
}
