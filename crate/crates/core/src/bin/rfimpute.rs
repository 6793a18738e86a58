#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rfimpute::bench::{run_plan, simulate_with, ExperimentPlan, SimulationConfig};
use rfimpute::forest::{grow_forest, ForestConfig, SplitRule};
use rfimpute::imputation::{impute, Algorithm, ImputeSpec};
use rfimpute::metrics::{relative_error, score};
use rfimpute::missingness::{induce, InducedMask, Mechanism, MissingnessSpec};
use rfimpute::table::{dataset_stats, parse_schema, read_csv, write_csv, MixedTable};

#[derive(Parser)]
#[command(
    name = "rfimpute",
    version,
    about = "Random-forest missing-data imputation"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Impute the missing cells of a CSV file.
    Impute(ImputeArgs),
    /// Make cells of a complete CSV file missing.
    Ampute(AmputeArgs),
    /// Run an experiment plan.
    Bench(BenchArgs),
    /// Write a table drawn from the linear simulation model.
    Simulate(SimulateArgs),
    /// Grow a forest and save it as JSON.
    Grow(GrowArgs),
    /// Score an imputation against the truth.
    Score(ScoreArgs),
    /// Print rho, log-information and log-complexity of a table.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmName {
    Strawman,
    Prx,
    #[value(name = "prxR")]
    PrxR,
    Otf,
    #[value(name = "otfR")]
    OtfR,
    Unsv,
    Mforest,
    Knn,
}

#[derive(Args)]
struct ForestArgs {
    #[arg(long, default_value_t = 500)]
    ntree: usize,
    /// Candidate variables per node [default: ceil(sqrt(p))].
    #[arg(long)]
    mtry: Option<usize>,
    /// Random split points per candidate; 0 evaluates every cut.
    #[arg(long, default_value_t = 10)]
    nsplit: usize,
    #[arg(long, default_value_t = 1)]
    nodesize: usize,
    /// Pseudo-responses for unsupervised splitting [default: ceil(sqrt(p))].
    #[arg(long)]
    ytry: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ForestArgs {
    fn config(&self) -> ForestConfig {
        ForestConfig {
            ntree: self.ntree,
            mtry: self.mtry,
            nodesize: self.nodesize,
            nsplit: self.nsplit,
            ytry: self.ytry,
            seed: self.seed,
            ..ForestConfig::default()
        }
    }
}

#[derive(Args)]
struct ImputeArgs {
    #[arg(long, value_enum)]
    algorithm: AlgorithmName,
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    /// mforest group fraction [default: 1/p].
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    #[arg(long, default_value_t = 10)]
    max_iterations: usize,
    /// knn neighbours.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    rowmax: f64,
    #[arg(long, default_value_t = 0.8)]
    colmax: f64,
    #[command(flatten)]
    forest: ForestArgs,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-column kind overrides (`name=numeric|factor` lines).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Write the iteration trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct AmputeArgs {
    #[arg(long)]
    mechanism: Mechanism,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write the induced 0/1 indicators as CSV.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Plan file, JSON or line-based text.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Standard deviation of the response noise.
    #[arg(long, default_value_t = 0.5)]
    noise_sd: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleName {
    Unsupervised,
    PureRandom,
    Mia,
    SquaredError,
    Gini,
    Composite,
}

#[derive(Args)]
struct GrowArgs {
    #[arg(long, value_enum, default_value = "unsupervised")]
    rule: RuleName,
    /// Response column names (comma separated) for supervised rules.
    #[arg(long, value_delimiter = ',')]
    response: Vec<String>,
    #[command(flatten)]
    forest: ForestArgs,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    imputed: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// Strawman imputation used for the relative error.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    schema: Option<PathBuf>,
}

fn load(path: &Path, schema: Option<&Path>) -> Result<MixedTable> {
    let schema = match schema {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(parse_schema(&text)?)
        }
        None => None,
    };
    read_csv(path, schema.as_ref()).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run_impute(a: ImputeArgs) -> Result<()> {
    let table = load(&a.input, a.schema.as_deref())?;
    let (k, pure) = (
        a.iterations,
        matches!(a.algorithm, AlgorithmName::PrxR | AlgorithmName::OtfR),
    );
    let algorithm = match a.algorithm {
        AlgorithmName::Strawman => Algorithm::Strawman,
        AlgorithmName::Prx | AlgorithmName::PrxR => Algorithm::Proximity {
            pure_random: pure,
            iterations: k,
        },
        AlgorithmName::Otf | AlgorithmName::OtfR => Algorithm::Otf {
            pure_random: pure,
            iterations: k,
        },
        AlgorithmName::Unsv => Algorithm::Unsupervised { iterations: k },
        AlgorithmName::Mforest => Algorithm::MForest {
            alpha: a.alpha.unwrap_or(0.0),
            epsilon: a.epsilon,
            max_iterations: a.max_iterations,
        },
        AlgorithmName::Knn => Algorithm::Knn {
            k: a.k,
            rowmax: a.rowmax,
            colmax: a.colmax,
        },
    };
    let spec = ImputeSpec::new(algorithm, a.forest.config());
    let (out, trace) = impute(&table, &spec)?;
    write_csv(&out, &a.out)?;
    if let Some(path) = a.trace {
        write_json(&path, &trace)?;
    }
    log::info!(
        "imputed {} cells with {}",
        table.n_missing(),
        spec.algorithm.label()
    );
    Ok(())
}

fn run_ampute(a: AmputeArgs) -> Result<()> {
    let table = load(&a.input, a.schema.as_deref())?;
    let spec = MissingnessSpec {
        mechanism: a.mechanism,
        gamma: a.gamma,
        seed: a.seed,
    };
    let (out, mask) = induce(&table, &spec)?;
    write_csv(&out, &a.out)?;
    if let Some(path) = a.mask {
        mask.write_csv(&table, path)?;
    }
    Ok(())
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.plan)
        .with_context(|| format!("reading {}", a.plan.display()))?;
    let plan = ExperimentPlan::parse(&text)?;
    let report = run_plan(&plan)?;
    report.write_json(&a.out)?;
    if let Some(path) = a.csv {
        report.write_csv(path)?;
    }
    if !report.failures.is_empty() {
        log::warn!("{} runs failed; see the report", report.failures.len());
    }
    Ok(())
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let config = SimulationConfig {
        noise_sd: a.noise_sd,
        ..SimulationConfig::default()
    };
    write_csv(&simulate_with(a.n, a.seed, &config)?, &a.out)?;
    Ok(())
}

fn run_grow(a: GrowArgs) -> Result<()> {
    let table = load(&a.input, a.schema.as_deref())?;
    let responses = a
        .response
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .with_context(|| format!("no column `{name}`"))
        })
        .collect::<Result<Vec<_>>>()?;
    let split_rule = match a.rule {
        RuleName::Unsupervised => SplitRule::Unsupervised,
        RuleName::PureRandom => SplitRule::PureRandom,
        RuleName::Mia => SplitRule::Mia,
        RuleName::SquaredError => SplitRule::UnivariateSquaredError,
        RuleName::Gini => SplitRule::UnivariateGini,
        RuleName::Composite => {
            let mut r = responses.clone();
            r.sort_unstable();
            SplitRule::MultivariateComposite(r)
        }
    };
    if responses.is_empty()
        && matches!(
            a.rule,
            RuleName::SquaredError | RuleName::Gini | RuleName::Composite
        )
    {
        bail!("--response is required for this rule");
    }
    let config = ForestConfig {
        split_rule,
        ..a.forest.config()
    };
    let mut sorted = responses;
    sorted.sort_unstable();
    let model = grow_forest(
        &table,
        &config,
        (!sorted.is_empty()).then_some(sorted.as_slice()),
    )?;
    model.save(&a.out)?;
    Ok(())
}

fn run_score(a: ScoreArgs) -> Result<()> {
    let truth = load(&a.truth, a.schema.as_deref())?;
    let imputed = load(&a.imputed, a.schema.as_deref())?;
    let mask = InducedMask::read_csv(&a.mask)?;
    let mut s = score(&truth, &imputed, &mask)?;
    if let Some(b) = a.baseline {
        let base = score(&truth, &load(&b, a.schema.as_deref())?, &mask)?;
        s.e_relative = Some(relative_error(&s, &base)?);
    }
    println!("{}", serde_json::to_string_pretty(&s)?);
    Ok(())
}

fn run_stats(a: StatsArgs) -> Result<()> {
    let table = load(&a.input, a.schema.as_deref())?;
    println!("{}", serde_json::to_string_pretty(&dataset_stats(&table)?)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Impute(a) => run_impute(a),
        Command::Ampute(a) => run_ampute(a),
        Command::Bench(a) => run_bench(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Grow(a) => run_grow(a),
        Command::Score(a) => run_score(a),
        Command::Stats(a) => run_stats(a),
    }
}
