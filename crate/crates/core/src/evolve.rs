//! The instance-evolving (1+1)-EA, final evaluation and batch analysis.
//!
//! ```text
//! I <- random instance
//! while budget not depleted:
//!     I' <- mutate(I)
//!     if F(I') >= F(I): I <- I'
//! return I
//! ```
//!
//! `F` runs the relevant solvers `k` times on an instance, takes per-solver
//! medians and applies one of the fitness functions from [`crate::fitness`].
//! The incumbent's fitness is computed once and kept, so a lucky evaluation
//! can keep an instance alive; the final verdict comes from a separate
//! evaluation with `final_runs` runs per solver.

use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{
    actual_ranking, fitness_compare, fitness_explicit, fitness_no_order, fitness_pairwise, median,
    FitnessError, FitnessValue, PerformanceProfile, RankingSpec,
};
use crate::instance::TtpInstance;
use crate::seed::derive_seed;
use crate::solvers::{solve_traced, Evaluator, SolverBudget, SolverId, DEFAULT_KICKS, PORTFOLIO};
use crate::space::{
    mutate_instance_with, random_instance, ConfigError, GenerationConfig, MutationOperator,
};

const STREAM_MUTATE: u64 = 1;
const STREAM_EVALUATE: u64 = 2;
const STREAM_REEVALUATE: u64 = 3;
const STREAM_FINAL: u64 = 4;

/// An ordered list of solvers, written `C2>S4>S2` (best first).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SolverOrder(pub Vec<SolverId>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("unknown solver '{0}' in ranking")]
    UnknownSolver(String),
    #[error("solver {0} appears twice in ranking")]
    Duplicate(SolverId),
    #[error("ranking '{0}' must list {1} solvers")]
    WrongLength(String, usize),
}

impl FromStr for SolverOrder {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut order = Vec::new();
        for part in s.split('>') {
            let id: SolverId = part
                .parse()
                .map_err(|_| OrderError::UnknownSolver(part.trim().to_string()))?;
            if order.contains(&id) {
                return Err(OrderError::Duplicate(id));
            }
            order.push(id);
        }
        Ok(SolverOrder(order))
    }
}

impl fmt::Display for SolverOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(">")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

impl Serialize for SolverOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SolverOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl SolverOrder {
    /// Parses a full ranking of the portfolio.
    pub fn parse_ranking(s: &str) -> Result<Self, OrderError> {
        let order: SolverOrder = s.parse()?;
        if order.0.len() != PORTFOLIO.len() {
            return Err(OrderError::WrongLength(s.to_string(), PORTFOLIO.len()));
        }
        Ok(order)
    }

    /// Parses an ordered pair `easy>hard`.
    pub fn parse_pair(s: &str) -> Result<(SolverId, SolverId), OrderError> {
        let order: SolverOrder = s.parse()?;
        match order.0.as_slice() {
            [easy, hard] => Ok((*easy, *hard)),
            _ => Err(OrderError::WrongLength(s.to_string(), 2)),
        }
    }

    /// The ranking as positions in [`PORTFOLIO`].
    pub fn to_spec(&self) -> Result<RankingSpec, FitnessError> {
        RankingSpec::new(self.0.iter().map(|id| id.index()).collect())
    }

    fn from_spec(spec: &RankingSpec, portfolio: &[SolverId]) -> Self {
        SolverOrder(spec.order().iter().map(|&i| portfolio[i]).collect())
    }
}

/// Which fitness function guides the EA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitnessKind {
    /// Maximise `p[easy] - p[hard]`; only these two solvers are run.
    Pairwise { easy: SolverId, hard: SolverId },
    /// Maximise the product of adjacent median gaps.
    NoOrder,
    /// Establish and then widen the given ranking of the whole portfolio.
    Explicit { ranking: SolverOrder },
}

impl FitnessKind {
    pub fn name(&self) -> &'static str {
        match self {
            FitnessKind::Pairwise { .. } => "pairwise",
            FitnessKind::NoOrder => "no-order",
            FitnessKind::Explicit { .. } => "explicit",
        }
    }

    /// Label of the desired ranking, if the fitness function has one.
    pub fn target(&self) -> Option<String> {
        match self {
            FitnessKind::Pairwise { easy, hard } => Some(format!("{easy}>{hard}")),
            FitnessKind::NoOrder => None,
            FitnessKind::Explicit { ranking } => Some(ranking.to_string()),
        }
    }

    /// Solvers that must be run to compute the fitness.
    pub fn portfolio(&self) -> Vec<SolverId> {
        match self {
            FitnessKind::Pairwise { easy, hard } => vec![*easy, *hard],
            _ => PORTFOLIO.to_vec(),
        }
    }

    /// Fitness from medians ordered like [`FitnessKind::portfolio`].
    pub fn evaluate(&self, medians: &[f64]) -> Result<FitnessValue, FitnessError> {
        match self {
            FitnessKind::Pairwise { .. } => fitness_pairwise(medians, 0, 1),
            FitnessKind::NoOrder => fitness_no_order(medians),
            FitnessKind::Explicit { ranking } => fitness_explicit(medians, &ranking.to_spec()?),
        }
    }

    /// Whether the final ranking over [`PORTFOLIO`] matches the target.
    pub fn success(&self, actual: &SolverOrder) -> Option<bool> {
        let position = |id: &SolverId| actual.0.iter().position(|a| a == id);
        match self {
            FitnessKind::Pairwise { easy, hard } => Some(position(easy) < position(hard)),
            FitnessKind::NoOrder => None,
            FitnessKind::Explicit { ranking } => Some(ranking == actual),
        }
    }
}

/// Effort settings shared by every solver run of a job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_passes: usize,
    pub tour_kicks: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_passes: 1000,
            tour_kicks: DEFAULT_KICKS,
        }
    }
}

impl SolverSettings {
    fn budget(&self, seed: u64) -> SolverBudget {
        SolverBudget {
            max_passes: self.max_passes,
            wall_time_limit: None,
            tour_kicks: self.tour_kicks,
            seed,
        }
    }
}

/// Everything that determines an evolution job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub fitness: FitnessKind,
    pub generation: GenerationConfig,
    /// Runs per solver in every fitness evaluation (`k`).
    pub runs: usize,
    /// Runs per solver in the final evaluation.
    pub final_runs: usize,
    /// Number of mutation-evaluation cycles.
    pub max_iterations: usize,
    /// Optional wall-time cap on the EA loop; capped jobs are not reproducible.
    pub wall_time_limit: Option<Duration>,
    pub solver: SolverSettings,
    /// Re-evaluate the incumbent every iteration instead of caching its fitness.
    pub reevaluate_incumbent: bool,
    pub seed: u64,
}

impl EvolveConfig {
    /// Desk-scale defaults: 50 nodes, one item per node, 500 iterations, k = 5.
    pub fn new(fitness: FitnessKind, seed: u64) -> Self {
        EvolveConfig {
            fitness,
            generation: GenerationConfig::new(50, 1),
            runs: 5,
            final_runs: 30,
            max_iterations: 500,
            wall_time_limit: None,
            solver: SolverSettings::default(),
            reevaluate_incumbent: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        self.generation.validate()?;
        if self.runs == 0 || self.final_runs == 0 {
            return Err(EvolveError::NoRuns);
        }
        if self.solver.max_passes == 0 {
            return Err(EvolveError::NoPasses);
        }
        match &self.fitness {
            FitnessKind::Pairwise { easy, hard } if easy == hard => {
                Err(EvolveError::Fitness(FitnessError::BadPair {
                    easy: easy.index(),
                    hard: hard.index(),
                    len: PORTFOLIO.len(),
                }))
            }
            FitnessKind::Explicit { ranking } => {
                if ranking.0.len() != PORTFOLIO.len() {
                    return Err(EvolveError::Order(OrderError::WrongLength(
                        ranking.to_string(),
                        PORTFOLIO.len(),
                    )));
                }
                ranking.to_spec()?;
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("runs per evaluation and final runs must be at least 1")]
    NoRuns,
    #[error("solvers need at least one pass")]
    NoPasses,
}

/// State of the incumbent after one EA iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub iteration: usize,
    pub fitness: FitnessValue,
    pub medians: Vec<f64>,
    /// Whether the mutant of this iteration replaced the incumbent.
    pub accepted: bool,
    pub node_operator: Option<MutationOperator>,
    pub item_operator: Option<MutationOperator>,
}

/// Outcome of one evolution job.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveResult {
    pub instance: TtpInstance,
    /// Row 0 is the initial instance, row `t` the incumbent after iteration `t`.
    pub trajectory: Vec<TrajectoryRow>,
    /// Final evaluation over the whole [`PORTFOLIO`].
    pub final_profile: PerformanceProfile,
    pub actual_ranking: SolverOrder,
    /// `None` for the no-order fitness, which has no target.
    pub success: Option<bool>,
    /// Completed mutation-evaluation cycles.
    pub iterations: usize,
    pub stopped_by_wall_time: bool,
}

impl EvolveResult {
    pub fn final_fitness(&self) -> &FitnessValue {
        &self
            .trajectory
            .last()
            .expect("trajectory holds the initial row")
            .fitness
    }
}

/// Runs every solver of `portfolio` `runs` times on `instance`.
///
/// Run `r` of the solver at position `i` uses the seed derived from
/// `(seed, i, r)`; runs execute in parallel but results are placed by
/// position, so the profile depends only on the arguments.
pub fn evaluate_profile(
    instance: &TtpInstance,
    portfolio: &[SolverId],
    runs: usize,
    settings: &SolverSettings,
    seed: u64,
) -> PerformanceProfile {
    assert!(runs >= 1, "at least one run per solver");
    let evaluator = Evaluator::new(instance);
    let jobs: Vec<(usize, usize)> = (0..portfolio.len())
        .flat_map(|i| (0..runs).map(move |r| (i, r)))
        .collect();
    let flat: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let budget = settings.budget(derive_seed(seed, &[i as u64, r as u64]));
            solve_traced(&evaluator, portfolio[i], &budget).0.objective
        })
        .collect();
    let scores: Vec<Vec<f64>> = flat.chunks(runs).map(<[f64]>::to_vec).collect();
    PerformanceProfile::from_scores(scores).expect("rows are non-empty")
}

fn fitness_of(
    config: &EvolveConfig,
    instance: &TtpInstance,
    seed: u64,
) -> Result<(FitnessValue, Vec<f64>), EvolveError> {
    let portfolio = config.fitness.portfolio();
    let profile = evaluate_profile(instance, &portfolio, config.runs, &config.solver, seed);
    let fitness = config.fitness.evaluate(&profile.medians)?;
    Ok((fitness, profile.medians))
}

/// Evolves one instance.
pub fn evolve(config: &EvolveConfig) -> Result<EvolveResult, EvolveError> {
    config.validate()?;
    let started = Instant::now();
    let seed = config.seed;
    let mut incumbent = random_instance(&config.generation, seed);
    let (mut fitness, mut medians) =
        fitness_of(config, &incumbent, derive_seed(seed, &[STREAM_EVALUATE, 0]))?;
    let mut trajectory = vec![TrajectoryRow {
        iteration: 0,
        fitness,
        medians: medians.clone(),
        accepted: true,
        node_operator: None,
        item_operator: None,
    }];

    let mut iterations = 0;
    let mut stopped_by_wall_time = false;
    for t in 1..=config.max_iterations {
        if config
            .wall_time_limit
            .is_some_and(|limit| started.elapsed() >= limit)
        {
            stopped_by_wall_time = true;
            break;
        }
        let mut rng = crate::seed::rng_from_seed(derive_seed(seed, &[STREAM_MUTATE, t as u64]));
        let node_op = MutationOperator::random(&mut rng);
        let item_op = MutationOperator::random(&mut rng);
        let (mutant, _) =
            mutate_instance_with(&incumbent, &config.generation, node_op, item_op, &mut rng);
        let (mutant_fitness, mutant_medians) = fitness_of(
            config,
            &mutant,
            derive_seed(seed, &[STREAM_EVALUATE, t as u64]),
        )?;
        if config.reevaluate_incumbent {
            (fitness, medians) = fitness_of(
                config,
                &incumbent,
                derive_seed(seed, &[STREAM_REEVALUATE, t as u64]),
            )?;
        }
        let accepted = fitness_compare(&mutant_fitness, &fitness).is_ge();
        if accepted {
            incumbent = mutant;
            fitness = mutant_fitness;
            medians = mutant_medians;
        }
        log::debug!("iteration {t}: fitness {fitness} accepted={accepted}");
        trajectory.push(TrajectoryRow {
            iteration: t,
            fitness,
            medians: medians.clone(),
            accepted,
            node_operator: Some(node_op),
            item_operator: Some(item_op),
        });
        iterations = t;
    }

    let final_profile = evaluate_profile(
        &incumbent,
        &PORTFOLIO,
        config.final_runs,
        &config.solver,
        derive_seed(seed, &[STREAM_FINAL]),
    );
    let actual_ranking =
        SolverOrder::from_spec(&actual_ranking(&final_profile.medians), &PORTFOLIO);
    let success = config.fitness.success(&actual_ranking);
    Ok(EvolveResult {
        instance: incumbent,
        trajectory,
        final_profile,
        actual_ranking,
        success,
        iterations,
        stopped_by_wall_time,
    })
}

/// Success counts for one desired ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub fitness: String,
    pub target: String,
    pub jobs: usize,
    pub successes: usize,
    pub success_rate: f64,
}

/// Number of instances showing one actual ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActualRow {
    pub fitness: String,
    pub actual: String,
    pub count: usize,
}

/// Aggregate view of a batch of jobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub completed: usize,
    pub failed: usize,
    pub by_target: Vec<TargetRow>,
    pub by_actual: Vec<ActualRow>,
}

impl BatchSummary {
    pub fn from_results<'a>(
        results: impl IntoIterator<Item = (&'a EvolveConfig, &'a Result<EvolveResult, String>)>,
    ) -> Self {
        let mut targets: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
        let mut actuals: BTreeMap<(String, String), usize> = BTreeMap::new();
        let (mut completed, mut failed) = (0, 0);
        for (config, result) in results {
            let Ok(result) = result else {
                failed += 1;
                continue;
            };
            completed += 1;
            let kind = config.fitness.name().to_string();
            if let (Some(target), Some(success)) = (config.fitness.target(), result.success) {
                let entry = targets.entry((kind.clone(), target)).or_default();
                entry.0 += 1;
                entry.1 += usize::from(success);
            }
            *actuals
                .entry((kind, result.actual_ranking.to_string()))
                .or_default() += 1;
        }
        BatchSummary {
            completed,
            failed,
            by_target: targets
                .into_iter()
                .map(|((fitness, target), (jobs, successes))| TargetRow {
                    fitness,
                    target,
                    jobs,
                    successes,
                    success_rate: successes as f64 / jobs as f64,
                })
                .collect(),
            by_actual: actuals
                .into_iter()
                .map(|((fitness, actual), count)| ActualRow {
                    fitness,
                    actual,
                    count,
                })
                .collect(),
        }
    }

    /// Success rate of one target, if any job aimed for it.
    pub fn success_rate(&self, fitness: &str, target: &str) -> Option<f64> {
        self.by_target
            .iter()
            .find(|row| row.fitness == fitness && row.target == target)
            .map(|row| row.success_rate)
    }
}

/// Per-job results (in config order) and their summary.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub results: Vec<Result<EvolveResult, String>>,
    pub summary: BatchSummary,
}

/// Runs independent jobs on up to `parallelism` threads.
///
/// A failing or panicking job is recorded as an error and does not affect the
/// others.
pub fn batch_evolve(configs: &[EvolveConfig], parallelism: usize) -> BatchOutcome {
    let run = || -> Vec<Result<EvolveResult, String>> {
        configs
            .par_iter()
            .map(
                |config| match catch_unwind(AssertUnwindSafe(|| evolve(config))) {
                    Ok(Ok(result)) => Ok(result),
                    Ok(Err(e)) => Err(e.to_string()),
                    Err(panic) => Err(panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "job panicked".to_string())),
                },
            )
            .collect()
    };
    let results = match rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let summary = BatchSummary::from_results(configs.iter().zip(&results));
    BatchOutcome { results, summary }
}

/// Spread statistics of one solver's scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowStats {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub iqr: f64,
    /// Largest gap between consecutive sorted scores divided by the range;
    /// `0` for constant rows. Values near 1 indicate two separated clusters.
    pub gap_statistic: f64,
}

/// Diagnostics for bimodal solver behaviour on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalityReport {
    pub rows: Vec<RowStats>,
    /// Solver with the highest median.
    pub best: usize,
    /// Solver with the lowest median.
    pub worst: usize,
    /// The worst solver's best score reaches the best solver's best score.
    pub overlap: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bimodality diagnostics need at least 2 runs per solver")]
pub struct TooFewRuns;

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summarises each solver's score distribution and flags overlapping maxima.
pub fn bimodality_report(
    profile: &PerformanceProfile,
    epsilon: f64,
) -> Result<BimodalityReport, TooFewRuns> {
    if profile.scores.is_empty() || profile.scores.iter().any(|row| row.len() < 2) {
        return Err(TooFewRuns);
    }
    let rows: Vec<RowStats> = profile
        .scores
        .iter()
        .map(|row| {
            let mut sorted = row.clone();
            sorted.sort_by(f64::total_cmp);
            let min = sorted[0];
            let max = sorted[sorted.len() - 1];
            let range = max - min;
            let widest = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            RowStats {
                min,
                max,
                median: median(row).expect("non-empty row"),
                iqr: quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
                gap_statistic: if range > 0.0 { widest / range } else { 0.0 },
            }
        })
        .collect();
    let medians: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let ranking = actual_ranking(&medians);
    let best = ranking.order()[0];
    let worst = ranking.order()[ranking.len() - 1];
    let overlap = best != worst && rows[worst].max >= rows[best].max - epsilon;
    Ok(BimodalityReport {
        rows,
        best,
        worst,
        overlap,
    })
}
