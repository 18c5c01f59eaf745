use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ttp_evolve::evolve::{batch_evolve, evaluate_profile, evolve, SolverSettings};
use ttp_evolve::features::compute_features_batch;
use ttp_evolve::io::{
    append_records, read_instance, write_features_csv, write_instance, write_profile_csv,
    RunRecord, WriteOptions,
};
use ttp_evolve::seed::derive_seed;
use ttp_evolve::{
    random_instance, solve, EvolveConfig, FitnessKind, GenerationConfig, SolverBudget, SolverId,
    SolverOrder, PORTFOLIO,
};

/// Evolve Traveling Thief Problem instances with prescribed solver rankings.
#[derive(Parser)]
#[command(name = "ttp-evolve", version)]
struct Cli {
    /// Default output directory.
    #[arg(long, global = true, env = "TTP_EVOLVE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance.
    Generate(GenerateArgs),
    /// Run one solver on an instance.
    Solve(SolveArgs),
    /// Run solvers k times each and print the score matrix as CSV.
    Evaluate(EvaluateArgs),
    /// Evolve one instance.
    Evolve(EvolveArgs),
    /// Run a matrix of evolution jobs and summarise success rates.
    Batch(BatchArgs),
    /// Compute instance features as CSV.
    Features(FeaturesArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Items per non-start node.
    #[arg(long, default_value_t = 1)]
    ipn: usize,
    /// Round item weights and profits to integers.
    #[arg(long)]
    integer_items: bool,
}

impl InstanceArgs {
    fn generation(&self) -> GenerationConfig {
        let mut config = GenerationConfig::new(self.n, self.ipn);
        config.integer_items = self.integer_items;
        config
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; defaults to <out-dir>/<name>.ttp.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Round coordinates to integers on output.
    #[arg(long)]
    integer_coords: bool,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "C2")]
    solver: SolverId,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_passes: usize,
    /// Write the JSON solution here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    instance: PathBuf,
    /// Runs per solver.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Solvers to run, in output order.
    #[arg(long, value_delimiter = ',', default_values = ["S2", "S4", "C2"])]
    solvers: Vec<SolverId>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitnessArg {
    Pairwise,
    NoOrder,
    Explicit,
}

#[derive(Args)]
struct JobArgs {
    /// Runs per solver in each fitness evaluation.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Number of mutation-evaluation cycles.
    #[arg(long, default_value_t = 500)]
    budget: usize,
    /// Runs per solver in the final evaluation.
    #[arg(long, default_value_t = 30)]
    final_runs: usize,
    /// Stop the EA loop after this many seconds (breaks reproducibility).
    #[arg(long)]
    wall_time: Option<f64>,
    /// Re-evaluate the incumbent every iteration.
    #[arg(long)]
    reevaluate: bool,
    #[arg(long, default_value_t = 1000)]
    max_passes: usize,
}

#[derive(Args)]
struct EvolveArgs {
    /// JSON job configuration; replaces all job flags.
    #[arg(long, conflicts_with_all = ["fitness", "ranking", "pair", "n", "ipn", "seed"])]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    fitness: Option<FitnessArg>,
    /// Desired ranking for explicit fitness, e.g. "C2>S4>S2".
    #[arg(long)]
    ranking: Option<String>,
    /// Easy and hard solver for pairwise fitness, e.g. "C2>S2".
    #[arg(long)]
    pair: Option<String>,
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    job: JobArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the instance and runs.jsonl; defaults to --out-dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    integer_coords: bool,
}

#[derive(Args)]
struct BatchArgs {
    /// JSON array of job configurations; replaces the job matrix flags.
    #[arg(long, conflicts_with_all = ["fitness", "ranking", "pair", "n", "ipn", "jobs", "seed"])]
    config: Option<PathBuf>,
    /// Fitness functions of the matrix.
    #[arg(long, value_enum, value_delimiter = ',')]
    fitness: Vec<FitnessArg>,
    /// Explicit rankings; all six when omitted.
    #[arg(long)]
    ranking: Vec<String>,
    /// Pairwise targets; all six ordered pairs when omitted.
    #[arg(long)]
    pair: Vec<String>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Item-per-node values of the matrix.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize])]
    ipn: Vec<usize>,
    #[arg(long)]
    integer_items: bool,
    /// Jobs per matrix cell.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    job: JobArgs,
    /// Base seed; job seeds are derived from it and the job position.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Output directory; defaults to --out-dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage_error(message: impl std::fmt::Display) -> ! {
    Cli::command()
        .error(ErrorKind::ArgumentConflict, message)
        .exit()
}

fn parse_order<T>(result: Result<T, impl std::fmt::Display>, flag: &str) -> T {
    result.unwrap_or_else(|e| {
        Cli::command()
            .error(ErrorKind::InvalidValue, format!("invalid {flag}: {e}"))
            .exit()
    })
}

fn fitness_kind(fitness: FitnessArg, ranking: Option<&str>, pair: Option<&str>) -> FitnessKind {
    match (fitness, ranking, pair) {
        (FitnessArg::Explicit, Some(r), None) => FitnessKind::Explicit {
            ranking: parse_order(SolverOrder::parse_ranking(r), "--ranking"),
        },
        (FitnessArg::Pairwise, None, Some(p)) => {
            let (easy, hard) = parse_order(SolverOrder::parse_pair(p), "--pair");
            FitnessKind::Pairwise { easy, hard }
        }
        (FitnessArg::NoOrder, None, None) => FitnessKind::NoOrder,
        (FitnessArg::Explicit, None, _) => usage_error("--fitness explicit requires --ranking"),
        (FitnessArg::Pairwise, _, None) => usage_error("--fitness pairwise requires --pair"),
        (_, Some(_), _) => usage_error("--ranking is only valid with --fitness explicit"),
        (_, _, Some(_)) => usage_error("--pair is only valid with --fitness pairwise"),
    }
}

fn job_config(
    fitness: FitnessKind,
    generation: GenerationConfig,
    job: &JobArgs,
    seed: u64,
) -> EvolveConfig {
    let mut config = EvolveConfig::new(fitness, seed);
    config.generation = generation;
    config.runs = job.k;
    config.max_iterations = job.budget;
    config.final_runs = job.final_runs;
    config.wall_time_limit = job.wall_time.map(Duration::from_secs_f64);
    config.reevaluate_incumbent = job.reevaluate;
    config.solver.max_passes = job.max_passes;
    config
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn generate(args: GenerateArgs, out_dir: &Path) -> Result<()> {
    let config = args.instance.generation();
    config.validate()?;
    let instance = random_instance(&config, args.seed);
    let path = match args.out {
        Some(path) => path,
        None => {
            create_dir(out_dir)?;
            out_dir.join(format!("{}.ttp", instance.name))
        }
    };
    let options = WriteOptions {
        integer_coords: args.integer_coords,
    };
    write_instance(&instance, &path, options)
        .with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    instance: String,
    solver: SolverId,
    seed: u64,
    objective: f64,
    /// 1-based node numbers, starting at node 1.
    tour: Vec<usize>,
    packing: Vec<u8>,
}

fn solve_cmd(args: SolveArgs) -> Result<()> {
    let instance = read_instance(&args.instance)?;
    let mut budget = SolverBudget::with_seed(args.seed);
    budget.max_passes = args.max_passes;
    let solution = solve(&instance, args.solver, &budget);
    let output = SolveOutput {
        instance: instance.name.clone(),
        solver: args.solver,
        seed: args.seed,
        objective: solution.objective,
        tour: solution.tour.iter().map(|&c| c + 1).collect(),
        packing: solution.packing.iter().map(|&b| u8::from(b)).collect(),
    };
    write_output(
        args.out.as_deref(),
        &(serde_json::to_string_pretty(&output)? + "\n"),
    )
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<()> {
    if args.k == 0 {
        usage_error("--k must be at least 1");
    }
    let instance = read_instance(&args.instance)?;
    let profile = evaluate_profile(
        &instance,
        &args.solvers,
        args.k,
        &SolverSettings::default(),
        args.seed,
    );
    let mut buf = Vec::new();
    write_profile_csv(&mut buf, &args.solvers, &profile)?;
    write_output(args.out.as_deref(), &String::from_utf8(buf)?)
}

fn evolve_cmd(args: EvolveArgs, out_dir: &Path) -> Result<()> {
    let config = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let Some(fitness) = args.fitness else {
                usage_error("either --fitness or --config is required");
            };
            let kind = fitness_kind(fitness, args.ranking.as_deref(), args.pair.as_deref());
            job_config(kind, args.instance.generation(), &args.job, args.seed)
        }
    };
    let dir = args.out.unwrap_or_else(|| out_dir.to_path_buf());
    create_dir(&dir)?;
    let started = Instant::now();
    let result = evolve(&config)?;
    let record = RunRecord::new(&config, &result, started.elapsed());
    let path = dir.join(format!("{}.ttp", result.instance.name));
    let options = WriteOptions {
        integer_coords: args.integer_coords,
    };
    write_instance(&result.instance, &path, options)?;
    append_records(dir.join("runs.jsonl"), &[record])?;
    println!(
        "{}\tfitness {}\tactual {}\tsuccess {}",
        path.display(),
        result.final_fitness(),
        result.actual_ranking,
        result.success.map_or("-".to_string(), |s| s.to_string()),
    );
    Ok(())
}

fn all_orders(len: usize) -> Vec<String> {
    let mut out = Vec::new();
    for a in PORTFOLIO {
        for b in PORTFOLIO {
            if a == b {
                continue;
            }
            if len == 2 {
                out.push(format!("{a}>{b}"));
            } else {
                for c in PORTFOLIO {
                    if c != a && c != b {
                        out.push(format!("{a}>{b}>{c}"));
                    }
                }
            }
        }
    }
    out
}

fn batch_configs(args: &BatchArgs) -> Vec<EvolveConfig> {
    if args.fitness.is_empty() {
        usage_error("either --fitness or --config is required");
    }
    if !args.ranking.is_empty() && !args.fitness.contains(&FitnessArg::Explicit) {
        usage_error("--ranking requires explicit among --fitness");
    }
    if !args.pair.is_empty() && !args.fitness.contains(&FitnessArg::Pairwise) {
        usage_error("--pair requires pairwise among --fitness");
    }
    let pick = |given: &[String], len: usize| {
        if given.is_empty() {
            all_orders(len)
        } else {
            given.to_vec()
        }
    };
    let mut kinds = Vec::new();
    for fitness in &args.fitness {
        match fitness {
            FitnessArg::Pairwise => kinds.extend(
                pick(&args.pair, 2)
                    .iter()
                    .map(|p| fitness_kind(FitnessArg::Pairwise, None, Some(p))),
            ),
            FitnessArg::Explicit => kinds.extend(
                pick(&args.ranking, 3)
                    .iter()
                    .map(|r| fitness_kind(FitnessArg::Explicit, Some(r), None)),
            ),
            FitnessArg::NoOrder => kinds.push(FitnessKind::NoOrder),
        }
    }
    let mut configs = Vec::new();
    for kind in &kinds {
        for &ipn in &args.ipn {
            for _ in 0..args.jobs {
                let mut generation = GenerationConfig::new(args.n, ipn);
                generation.integer_items = args.integer_items;
                let seed = derive_seed(args.seed, &[configs.len() as u64]);
                configs.push(job_config(kind.clone(), generation, &args.job, seed));
            }
        }
    }
    configs
}

fn batch_cmd(args: BatchArgs, out_dir: &Path) -> Result<()> {
    let configs: Vec<EvolveConfig> = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => batch_configs(&args),
    };
    if configs.is_empty() {
        bail!("the batch has no jobs");
    }
    let dir = args.out.clone().unwrap_or_else(|| out_dir.to_path_buf());
    let jobs_dir = dir.join("jobs");
    create_dir(&jobs_dir)?;

    let started = Instant::now();
    let outcome = batch_evolve(&configs, args.parallelism);
    let elapsed = started.elapsed();

    let mut records = Vec::new();
    for (i, (config, result)) in configs.iter().zip(&outcome.results).enumerate() {
        match result {
            Ok(result) => {
                let record = RunRecord::new(config, result, elapsed);
                let path = jobs_dir.join(format!("job-{i:04}.jsonl"));
                fs::write(&path, record.to_json_line() + "\n")?;
                write_instance(
                    &result.instance,
                    jobs_dir.join(format!("job-{i:04}.ttp")),
                    WriteOptions::default(),
                )?;
                records.push(record);
            }
            Err(e) => log::error!("job {i} failed: {e}"),
        }
    }
    let runs = dir.join("runs.jsonl");
    if runs.exists() {
        fs::remove_file(&runs)?;
    }
    append_records(&runs, &records)?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&outcome.summary)? + "\n",
    )?;

    let summary = &outcome.summary;
    println!("fitness\ttarget\tjobs\tsuccesses\tsuccess_rate");
    for row in &summary.by_target {
        println!(
            "{}\t{}\t{}\t{}\t{:.3}",
            row.fitness, row.target, row.jobs, row.successes, row.success_rate
        );
    }
    println!();
    println!("fitness\tactual\tcount");
    for row in &summary.by_actual {
        println!("{}\t{}\t{}", row.fitness, row.actual, row.count);
    }
    println!();
    println!("completed {}\tfailed {}", summary.completed, summary.failed);
    if summary.failed > 0 {
        bail!("{} of {} jobs failed", summary.failed, configs.len());
    }
    Ok(())
}

fn features_cmd(args: FeaturesArgs) -> Result<()> {
    let instances = args
        .instances
        .iter()
        .map(read_instance)
        .collect::<Result<Vec<_>, _>>()?;
    let rows = compute_features_batch(&instances);
    let mut buf = Vec::new();
    write_features_csv(&mut buf, &rows)?;
    write_output(args.out.as_deref(), &String::from_utf8(buf)?)
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out_dir = cli.out_dir;
    let result = match cli.command {
        Command::Generate(args) => generate(args, &out_dir),
        Command::Solve(args) => solve_cmd(args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::Evolve(args) => evolve_cmd(args, &out_dir),
        Command::Batch(args) => batch_cmd(args, &out_dir),
        Command::Features(args) => features_cmd(args),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
