use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "rdtm",
    version,
    about = "Replicator dynamics embeddings, MWU error bounds and Turing-machine encodings"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Seed for randomized suites and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Format of trajectory and report files.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Embed a polynomial or GLV system into a matrix game.
    Embed(EmbedArgs),
    /// Simulate replicator dynamics or MWU on a game.
    Simulate(SimulateArgs),
    /// Measure MWU error against the replicator flow over a list of step sizes.
    SweepError(SweepArgs),
    /// Largest step size whose global error bound meets a tolerance.
    SelectStepSize(SelectArgs),
    /// Bounded reachability query on a trajectory, a flow or a Turing machine.
    Reach(ReachArgs),
    /// Turing-machine utilities.
    Tm(TmArgs),
    /// Lorenz preset: embedding, 10^4 MWU steps and the pulled-back orbit.
    DemoLorenz(DemoArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Lorenz,
}

/// Where a game comes from.
#[derive(Args, Debug, Clone, Default)]
pub struct GameSource {
    /// Bundle JSON written by `embed`.
    #[arg(long, conflicts_with_all = ["game", "preset"])]
    pub bundle: Option<PathBuf>,
    /// Payoff matrix as headerless CSV.
    #[arg(long, conflicts_with = "preset")]
    pub game: Option<PathBuf>,
    /// Built-in system, embedded on the fly.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Coordinate shift for the Lorenz preset.
    #[arg(long, default_value_t = rdtm::presets::LORENZ_DEFAULT_SHIFT)]
    pub shift: f64,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    /// Polynomial-field or GLV JSON file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value_t = rdtm::presets::LORENZ_DEFAULT_SHIFT)]
    pub shift: f64,
    /// Treat a polynomial input as a field tangent to the unit sphere and
    /// run the sphere pipeline (extension, translation, embedding).
    #[arg(long)]
    pub sphere: bool,
    /// Sample count for the sphere pipeline's bound estimate.
    #[arg(long, default_value_t = 4000)]
    pub samples: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Rd,
    Mwu,
}

#[derive(Args, Debug, Clone, Default)]
pub struct StartArgs {
    /// Start on the simplex, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "start")]
    pub x0: Option<Vec<f64>>,
    /// Start in the source coordinates of the bundle's map.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: GameSource,
    #[command(flatten)]
    pub start: StartArgs,
    #[arg(long, value_enum, default_value_t = Mode::Rd)]
    pub mode: Mode,
    /// End time for `rd` (source time when pulling back).
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// MWU step size.
    #[arg(long, default_value_t = 1e-2)]
    pub eta: f64,
    /// MWU iterations.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Also write the orbit in source coordinates.
    #[arg(long)]
    pub pull_back: bool,
    /// For `mwu`, also write measured global error against its bound.
    #[arg(long)]
    pub error_report: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: GameSource,
    /// Step sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub etas: Vec<f64>,
    /// Number of trials (random games unless a game is given).
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Size of random games.
    #[arg(long, default_value_t = 4)]
    pub size: usize,
    /// Also measure the global error after this many steps.
    #[arg(long)]
    pub steps: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub source: GameSource,
    /// Lipschitz constant; computed from the (normalized) game if omitted.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Time horizon T.
    #[arg(long)]
    pub horizon: f64,
    /// Error tolerance.
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Args, Debug)]
pub struct ReachArgs {
    /// Trajectory file (CSV or JSON) to scan.
    #[arg(long, conflicts_with_all = ["bundle", "game", "preset", "machine", "builtin"])]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub source: GameSource,
    #[command(flatten)]
    pub start: StartArgs,
    /// Scan the orbit in source coordinates instead of simplex coordinates.
    #[arg(long)]
    pub pull_back: bool,
    /// Center of the target box, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Option<Vec<f64>>,
    /// Half-width of the target box (infinity norm).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Time horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Halting window, e.g. `1[1]1`.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, default_value_t = rdtm::turing::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    UnaryIncrementer,
    ImmediateHalt,
    Cycler,
    BusyBeaver3,
    DecimalIncrement,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MachineArgs {
    /// Machine JSON file.
    #[arg(long, conflicts_with = "builtin")]
    pub machine: Option<PathBuf>,
    /// Built-in machine.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Tape with the head marked, e.g. `12[3]45`; blank if omitted.
    #[arg(long, default_value = "")]
    pub tape: String,
    /// Initial state; the machine's start state if omitted.
    #[arg(long)]
    pub state: Option<u32>,
    /// Step budget.
    #[arg(short = 'k', long = "steps", default_value_t = 1000)]
    pub steps: u64,
}

#[derive(Args, Debug)]
pub struct TmArgs {
    #[command(subcommand)]
    pub action: TmAction,
}

#[derive(Subcommand, Debug)]
pub enum TmAction {
    /// Run for at most k steps.
    Run(MachineArgs),
    /// Encode a configuration as a point of N^3.
    Encode(MachineArgs),
    /// Check encode/step/decode conjugacy on random configurations.
    ConjugacyCheck(ConjugacyArgs),
    /// Does the encoded orbit enter a halting window within k steps?
    Reach(TmReachArgs),
}

#[derive(Args, Debug)]
pub struct ConjugacyArgs {
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Random machines to test when no machine is given.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// States per random machine.
    #[arg(long, default_value_t = 4)]
    pub states: u32,
    /// Random configurations per machine.
    #[arg(long, default_value_t = 200)]
    pub configs: usize,
}

#[derive(Args, Debug)]
pub struct TmReachArgs {
    #[command(flatten)]
    pub machine: MachineArgs,
    /// Halting window, e.g. `1[1]1`.
    #[arg(long)]
    pub window: String,
    #[arg(long, default_value_t = rdtm::turing::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long, default_value_t = rdtm::presets::LORENZ_DEFAULT_SHIFT)]
    pub shift: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub eta: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Horizon of the directly integrated Lorenz reference orbit.
    #[arg(long, default_value_t = 20.0)]
    pub t_end: f64,
}
