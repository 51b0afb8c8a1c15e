use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rdtm::game::{MatrixGame, SimplexPoint};
use rdtm::glv::EmbeddingMap;
use rdtm::turing::{machines, TapeConfig, TuringMachine};

use crate::args::{Builtin, Format, GameSource, GlobalArgs, MachineArgs, Preset, StartArgs};
use crate::error::CliError;

/// A game together with the map back to the system it came from.
///
/// Source coordinates are `map.inverse(p) - offset`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bundle {
    pub kind: String,
    pub game: MatrixGame,
    #[serde(default)]
    pub map: Option<EmbeddingMap>,
    #[serde(default)]
    pub offset: f64,
    pub game_size: usize,
    #[serde(default)]
    pub unique_monomials: Option<usize>,
    #[serde(default)]
    pub size_bound_holds: Option<bool>,
    /// Suggested start in source coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl Bundle {
    pub fn bare(game: MatrixGame) -> Self {
        Bundle {
            kind: "game".into(),
            game_size: game.size(),
            game,
            map: None,
            offset: 0.0,
            unique_monomials: None,
            size_bound_holds: None,
            default_start: None,
            metadata: None,
        }
    }

    pub fn map(&self) -> Result<&EmbeddingMap, CliError> {
        self.map
            .as_ref()
            .ok_or_else(|| CliError::usage("this game has no embedding map; pass a bundle from `embed` or a preset"))
    }

    pub fn to_simplex(&self, x: &[f64]) -> Result<Vec<f64>, CliError> {
        let y: Vec<f64> = x.iter().map(|v| v + self.offset).collect();
        Ok(self.map()?.forward(&y)?)
    }

    pub fn to_source(&self, p: &[f64]) -> Result<Vec<f64>, CliError> {
        Ok(self.map()?.inverse(p)?.into_iter().map(|v| v - self.offset).collect())
    }

    /// The start on the simplex and, when known, in source coordinates.
    pub fn resolve_start(&self, s: &StartArgs) -> Result<(SimplexPoint, Option<Vec<f64>>), CliError> {
        if let Some(x0) = &s.x0 {
            return Ok((SimplexPoint::new(x0.clone())?, None));
        }
        let src = s.start.clone().or_else(|| self.default_start.clone());
        match src {
            Some(x) => {
                let p = self.to_simplex(&x)?;
                Ok((SimplexPoint::new(p)?, Some(x)))
            }
            None => Ok((SimplexPoint::uniform(self.game.size()), None)),
        }
    }
}

fn with_path(path: &Path, e: rdtm::Error) -> CliError {
    match e {
        rdtm::Error::Parse(msg) => rdtm::Error::Parse(format!("{}: {msg}", path.display())).into(),
        other => other.into(),
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| with_path(path, e.into()))
}

pub fn load_game_csv(path: &Path) -> Result<MatrixGame, CliError> {
    let text = read_text(path)?;
    MatrixGame::read_csv(text.as_bytes()).map_err(|e| with_path(path, e))
}

pub fn load_source(src: &GameSource) -> Result<Bundle, CliError> {
    if let Some(p) = &src.bundle {
        return parse_json(p);
    }
    if let Some(p) = &src.game {
        return Ok(Bundle::bare(load_game_csv(p)?));
    }
    match src.preset {
        Some(Preset::Lorenz) => crate::embed::lorenz_bundle(src.shift),
        None => Err(CliError::usage("give one of --bundle, --game or --preset")),
    }
}

pub fn load_machine(m: &MachineArgs) -> Result<TuringMachine, CliError> {
    if let Some(p) = &m.machine {
        let text = read_text(p)?;
        return TuringMachine::from_json(&text).map_err(|e| with_path(p, e));
    }
    Ok(match m.builtin {
        Some(Builtin::UnaryIncrementer) => machines::unary_incrementer(),
        Some(Builtin::ImmediateHalt) => machines::immediate_halt(),
        Some(Builtin::Cycler) => machines::cycler(),
        Some(Builtin::BusyBeaver3) => machines::busy_beaver_3(),
        Some(Builtin::DecimalIncrement) => machines::decimal_increment(),
        None => return Err(CliError::usage("give --machine or --builtin")),
    })
}

pub fn load_tape(tm: &TuringMachine, m: &MachineArgs) -> Result<TapeConfig, CliError> {
    let mut c = if m.tape.trim().is_empty() {
        TapeConfig::blank(tm.q0())
    } else {
        m.tape.parse::<TapeConfig>()?
    };
    c.q = m.state.unwrap_or(tm.q0());
    Ok(c)
}

/// Writes artifacts under the output directory.
pub struct Output {
    dir: PathBuf,
    pub format: Format,
}

impl Output {
    pub fn new(g: &GlobalArgs) -> Result<Self, CliError> {
        fs::create_dir_all(&g.out_dir).map_err(|source| CliError::Io {
            path: g.out_dir.display().to_string(),
            source,
        })?;
        Ok(Output {
            dir: g.out_dir.clone(),
            format: g.format,
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<String, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path.display().to_string())
    }

    /// Writes `stem.csv` or `stem.json` according to `--format`.
    pub fn write_either(
        &self,
        stem: &str,
        csv: impl FnOnce() -> String,
        json: impl FnOnce() -> String,
    ) -> Result<String, CliError> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), &csv()),
            Format::Json => self.write(&format!("{stem}.json"), &json()),
        }
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<String, CliError> {
        let text = serde_json::to_string_pretty(value).expect("value serializes");
        self.write(name, &text)
    }
}
