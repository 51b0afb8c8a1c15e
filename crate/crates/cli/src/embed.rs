use serde_json::{json, Value};

use rdtm::glv::{embed_glv, poly_to_glv, GlvEmbedding, GlvSystem};
use rdtm::poly::PolynomialField;
use rdtm::presets::{lorenz_shifted, LORENZ_START};
use rdtm::sphere::{sphere_poly_to_game, PipelineOptions};

use crate::args::{EmbedArgs, Preset};
use crate::error::CliError;
use crate::io::{read_text, Bundle, Output};

fn from_embedding(kind: &str, emb: GlvEmbedding, offset: f64) -> Bundle {
    Bundle {
        kind: kind.into(),
        game_size: emb.game_size(),
        unique_monomials: Some(emb.unique_monomials),
        size_bound_holds: Some(emb.size_bound_holds()),
        game: emb.game,
        map: Some(emb.map),
        offset,
        default_start: None,
        metadata: None,
    }
}

pub fn lorenz_bundle(shift: f64) -> Result<Bundle, CliError> {
    let (field, meta) = lorenz_shifted(shift)?;
    if meta.start.iter().any(|v| *v <= 0.0) {
        return Err(rdtm::Error::RejectedInput(format!(
            "shift {shift} leaves the Lorenz start outside the positive orthant"
        ))
        .into());
    }
    let mut b = from_embedding("lorenz", embed_glv(&poly_to_glv(&field)), shift);
    b.default_start = Some(LORENZ_START.to_vec());
    b.metadata = Some(json!({ "preset": meta }));
    Ok(b)
}

enum Input {
    Glv(GlvSystem),
    Poly(PolynomialField),
}

fn parse_input(text: &str) -> Result<Input, CliError> {
    let v: Value = serde_json::from_str(text).map_err(rdtm::Error::from)?;
    if v.get("lambda").is_some() {
        Ok(Input::Glv(GlvSystem::from_json(text)?))
    } else if v.get("components").is_some() {
        Ok(Input::Poly(PolynomialField::from_json(text)?))
    } else {
        Err(rdtm::Error::Parse(
            "expected a GLV system {\"n\", \"lambda\", \"A\", \"B\"} or a polynomial field {\"n\", \"components\"}"
                .into(),
        )
        .into())
    }
}

fn build(args: &EmbedArgs, seed: u64) -> Result<Bundle, CliError> {
    if let Some(Preset::Lorenz) = args.preset {
        return lorenz_bundle(args.shift);
    }
    let path = args.input.as_ref().expect("clap requires --input without --preset");
    let text = read_text(path)?;
    let input = parse_input(&text).map_err(|e| match e {
        CliError::Lib(rdtm::Error::Parse(m)) => rdtm::Error::Parse(format!("{}: {m}", path.display())).into(),
        other => other,
    })?;
    match input {
        Input::Glv(sys) => {
            if args.sphere {
                return Err(CliError::usage("--sphere needs a polynomial field, not a GLV system"));
            }
            Ok(from_embedding("glv", embed_glv(&sys), 0.0))
        }
        Input::Poly(field) if args.sphere => {
            let opts = PipelineOptions {
                samples: args.samples,
                seed,
                ..PipelineOptions::default()
            };
            let sg = sphere_poly_to_game(field, opts)?;
            let mut meta: Value = serde_json::from_str(&sg.to_json()).expect("bundle JSON is valid");
            if let Some(obj) = meta.as_object_mut() {
                obj.remove("game");
                obj.remove("map");
            }
            let sigma = sg.sigma();
            let mut b = from_embedding("sphere", sg.embedding, sigma);
            b.metadata = Some(meta);
            Ok(b)
        }
        Input::Poly(field) => Ok(from_embedding("polynomial", embed_glv(&poly_to_glv(&field)), 0.0)),
    }
}

pub fn run(args: &EmbedArgs, seed: u64, out: &Output) -> Result<Value, CliError> {
    let b = build(args, seed)?;
    let csv = out.write("game.csv", &b.game.to_csv_string())?;
    let bundle = out.write_json("bundle.json", &b)?;
    Ok(json!({
        "kind": b.kind,
        "m": b.game_size,
        "monomials": b.unique_monomials,
        "size_bound_holds": b.size_bound_holds,
        "offset": b.offset,
        "game_csv": csv,
        "bundle": bundle,
    }))
}
