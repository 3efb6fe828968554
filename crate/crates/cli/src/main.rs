mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Attribute a unit's output change to its mechanism and inputs.
#[derive(Debug, Parser)]
#[command(name = "delta-attrib", version, about)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "DELTA_ATTRIB_SEED", default_value_t = 0)]
    seed: u64,

    /// Worker threads for parallel work (outputs do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Extra diagnostics on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Attribute one change between two model files.
    Attribute(AttributeArgs),
    /// Run a simulation experiment.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Panel case study: per-year linear fits and per-unit attribution.
    Casestudy(CasestudyArgs),
    /// Noise attribution through an invertible causal model.
    Fcm(FcmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AttribMethod {
    Coarse,
    Linear,
    Fine,
    Sampled,
    Ordered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the full-precision result here (CSV with `--format csv`, JSON otherwise).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Format printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct AttributeArgs {
    /// Background model file.
    #[arg(long)]
    model_bg: PathBuf,

    /// Foreground model file; the same path as `--model-bg` means an unchanged mechanism.
    #[arg(long)]
    model_fg: PathBuf,

    /// Background inputs, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x_bg: String,

    /// Foreground inputs, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x_fg: String,

    #[arg(long, value_enum, default_value_t = AttribMethod::Fine)]
    method: AttribMethod,

    /// Sampled permutations; lets `fine` fall back to sampling above the exact limit.
    #[arg(long)]
    budget: Option<u64>,

    /// Largest input dimension attributed exactly.
    #[arg(long, default_value_t = delta_attrib::attribution::DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,

    /// Player order for `ordered`, e.g. `mechanism,x[1],x[0]`.
    #[arg(long)]
    order: Option<String>,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Subcommand)]
enum SimulateCommand {
    /// Attribution error when fitted models stand in for the generating ones.
    Reliability(ReliabilityArgs),
    /// Permutation-sampling error against the linear closed form.
    Scalability(ScalabilityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TruthChoice {
    Linear,
    Polynomial,
    Both,
}

#[derive(Debug, Args)]
struct SimOutputArgs {
    /// CSV results; a JSON-lines mirror goes next to it. Without it, CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// JSON-lines path (defaults to `--out` with a `.jsonl` extension).
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReliabilityArgs {
    /// Ground-truth model pairs per kind.
    #[arg(long, default_value_t = 100)]
    models: usize,

    /// Sample size per scenario.
    #[arg(long, default_value_t = 2000)]
    n: usize,

    #[arg(long, value_enum, default_value_t = TruthChoice::Linear)]
    truth: TruthChoice,

    /// Fitted model kinds, comma separated (ols_linear, stump_ensemble, truth).
    #[arg(long, default_value = "ols_linear,stump_ensemble")]
    fitted: String,

    /// Boosting rounds of the stump ensemble.
    #[arg(long, default_value_t = 100)]
    rounds: usize,

    /// Learning rate of the stump ensemble.
    #[arg(long, default_value_t = 0.1)]
    rate: f64,

    #[command(flatten)]
    output: SimOutputArgs,
}

#[derive(Debug, Args)]
struct ScalabilityArgs {
    /// Input dimensions, comma separated.
    #[arg(long, default_value = "10,20,30")]
    dims: String,

    /// Strictly ascending permutation budgets, comma separated.
    #[arg(long, default_value = "10,100,1000")]
    budgets: String,

    /// Ground-truth models per cell.
    #[arg(long, default_value_t = 100)]
    repeats: usize,

    /// Instances per model.
    #[arg(long, default_value_t = 1000)]
    n: usize,

    #[command(flatten)]
    output: SimOutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PanelMethodArg {
    Linear,
    Fine,
}

#[derive(Debug, Args)]
struct CasestudyArgs {
    /// Panel CSV with header `id,year,edu,exp,weeks,occ,union,ind,smsa,south,wage`.
    #[arg(long)]
    panel: PathBuf,

    #[arg(long, default_value_t = 1976)]
    bg_year: i64,

    #[arg(long, default_value_t = 1982)]
    fg_year: i64,

    #[arg(long, value_enum, default_value_t = PanelMethodArg::Linear)]
    method: PanelMethodArg,

    /// Fit a constant term; its change is credited to the mechanism.
    #[arg(long)]
    intercept: bool,

    /// Credit each unit's residual change to the mechanism so credits sum to observed changes.
    #[arg(long)]
    fold_residuals: bool,

    /// Also report this unit.
    #[arg(long)]
    unit: Option<String>,

    /// Per-unit credits as CSV `id,player,credit`.
    #[arg(long)]
    credits: Option<PathBuf>,

    /// Write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Format printed to stdout (text or json).
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct FcmArgs {
    /// Model specification (JSON).
    #[arg(long)]
    spec: PathBuf,

    /// Background observations (JSON object by node name, or array).
    #[arg(long)]
    obs_bg: PathBuf,

    /// Foreground observations.
    #[arg(long)]
    obs_fg: PathBuf,

    /// Sampled permutations when the node count exceeds the exact limit.
    #[arg(long)]
    budget: Option<u64>,

    /// Largest node count attributed exactly.
    #[arg(long, default_value_t = delta_attrib::attribution::DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,

    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            if let Some(hint) = &e.hint {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.code)
        }
    }
}
