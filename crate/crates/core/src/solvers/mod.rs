//! The three-solver portfolio S2, S4 and C2.
//!
//! All three share the same start: a chained 2-opt tour ([`build_tour`])
//! followed by the constructive [`pack_iterative`] heuristic. They differ in
//! the hill-climbing loop that follows:
//!
//! | solver | repeated until no pass improves            |
//! |--------|--------------------------------------------|
//! | S2     | [`bitflip_pass`]                           |
//! | S4     | [`insertion_pass`]                         |
//! | C2     | bitflip, then [`ea_packing_pass`], then insertion |
//!
//! Every move is accepted only if it strictly improves the objective, so each
//! loop terminates. A run is a pure function of the instance and the
//! [`SolverBudget`] (which carries the seed) unless a wall-time limit is set.

mod packing;
mod passes;
mod tour;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{total_profit, TtpInstance, TtpSolution};
use crate::seed::rng_from_seed;

pub use packing::{pack_iterative, PACK_ALPHA_MAX, PACK_PROBES};
pub use passes::{bitflip_pass, ea_packing_pass, insertion_pass, PassOutcome};
pub use tour::{build_tour, tour_length, DEFAULT_KICKS};

/// One of the portfolio heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolverId {
    S2,
    S4,
    C2,
}

/// The portfolio in its fixed order: index 0 is S2, 1 is S4, 2 is C2.
pub const PORTFOLIO: [SolverId; 3] = [SolverId::S2, SolverId::S4, SolverId::C2];

impl SolverId {
    /// Position in [`PORTFOLIO`].
    pub fn index(self) -> usize {
        match self {
            SolverId::S2 => 0,
            SolverId::S4 => 1,
            SolverId::C2 => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        PORTFOLIO.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverId::S2 => "S2",
            SolverId::S4 => "S4",
            SolverId::C2 => "C2",
        }
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown solver '{0}', expected one of S2, S4, C2")]
pub struct UnknownSolver(pub String);

impl FromStr for SolverId {
    type Err = UnknownSolver;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S2" => Ok(SolverId::S2),
            "S4" => Ok(SolverId::S4),
            "C2" => Ok(SolverId::C2),
            _ => Err(UnknownSolver(s.to_string())),
        }
    }
}

/// Effort limits and seed of a single solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverBudget {
    /// Maximum number of hill-climbing passes (C2: full cycles).
    pub max_passes: usize,
    /// Optional wall-time cap; runs hitting it are no longer reproducible.
    pub wall_time_limit: Option<Duration>,
    /// Double-bridge kicks applied while building the tour.
    pub tour_kicks: usize,
    pub seed: u64,
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            max_passes: 1000,
            wall_time_limit: None,
            tour_kicks: DEFAULT_KICKS,
            seed: 0,
        }
    }
}

impl SolverBudget {
    pub fn with_seed(seed: u64) -> Self {
        SolverBudget {
            seed,
            ..SolverBudget::default()
        }
    }
}

/// Objective values observed while a solver ran.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    /// Objective after tour construction and packing.
    pub start_objective: f64,
    /// Objective after every hill-climbing pass (C2: after every cycle).
    pub pass_objectives: Vec<f64>,
    /// True if `max_passes` or the wall-time cap stopped the run.
    pub budget_exhausted: bool,
}

/// Distance matrix plus the bookkeeping shared by all passes.
///
/// Objectives computed here are bit-identical to [`TtpInstance::evaluate`].
pub struct Evaluator<'a> {
    instance: &'a TtpInstance,
    dist: Vec<f64>,
    /// Item indices per city, ascending.
    items_at: Vec<Vec<usize>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a TtpInstance) -> Self {
        let n = instance.num_nodes();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = instance.distance(i, j);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        let mut items_at = vec![Vec::new(); n];
        for (k, item) in instance.items.iter().enumerate() {
            items_at[item.node].push(k);
        }
        Evaluator {
            instance,
            dist,
            items_at,
        }
    }

    pub fn instance(&self) -> &'a TtpInstance {
        self.instance
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.instance.num_nodes() + j]
    }

    /// Weight picked at `city` under `packing`, summed in item order.
    pub(crate) fn city_weight(&self, city: usize, packing: &[bool]) -> f64 {
        self.items_at[city]
            .iter()
            .filter(|&&k| packing[k])
            .fold(0.0, |acc, &k| acc + self.instance.items[k].weight)
    }

    pub(crate) fn travel_time(&self, tour: &[usize], city_weights: &[f64]) -> f64 {
        self.instance
            .travel_time_with(tour, city_weights, |a, b| self.distance(a, b))
    }

    /// Objective of a tour and packing without validation.
    pub fn objective(&self, tour: &[usize], packing: &[bool]) -> f64 {
        let weights = self.instance.city_weights(packing);
        total_profit(packing, &self.instance.items)
            - self.instance.renting_rate * self.travel_time(tour, &weights)
    }

    pub(crate) fn solution(&self, tour: Vec<usize>, packing: Vec<bool>) -> TtpSolution {
        let objective = self.objective(&tour, &packing);
        TtpSolution {
            tour,
            packing,
            objective,
        }
    }
}

/// Runs one portfolio solver on `instance`.
pub fn solve(instance: &TtpInstance, solver: SolverId, budget: &SolverBudget) -> TtpSolution {
    solve_traced(&Evaluator::new(instance), solver, budget).0
}

/// Like [`solve`], reusing a prepared evaluator and reporting the trajectory.
pub fn solve_traced(
    evaluator: &Evaluator<'_>,
    solver: SolverId,
    budget: &SolverBudget,
) -> (TtpSolution, SolveTrace) {
    let started = Instant::now();
    let mut rng = rng_from_seed(budget.seed);
    let tour = tour::build_tour_with(evaluator, budget.tour_kicks, &mut rng);
    let packing = packing::pack_iterative_with(evaluator, &tour);
    let mut current = evaluator.solution(tour, packing);

    let mut trace = SolveTrace {
        start_objective: current.objective,
        pass_objectives: Vec::new(),
        budget_exhausted: false,
    };
    let out_of_time = || {
        budget
            .wall_time_limit
            .is_some_and(|limit| started.elapsed() >= limit)
    };

    let mut converged = false;
    for _ in 0..budget.max_passes {
        if out_of_time() {
            break;
        }
        let improved = match solver {
            SolverId::S2 => step(passes::bitflip_pass_with(evaluator, &current), &mut current),
            SolverId::S4 => step(
                passes::insertion_pass_with(evaluator, &current),
                &mut current,
            ),
            SolverId::C2 => {
                let a = step(passes::bitflip_pass_with(evaluator, &current), &mut current);
                let b = step(
                    passes::ea_packing_pass_with(evaluator, &current, &mut rng),
                    &mut current,
                );
                let c = step(
                    passes::insertion_pass_with(evaluator, &current),
                    &mut current,
                );
                a || b || c
            }
        };
        trace.pass_objectives.push(current.objective);
        if !improved {
            converged = true;
            break;
        }
    }
    trace.budget_exhausted = !converged;
    (current, trace)
}

fn step(outcome: PassOutcome, current: &mut TtpSolution) -> bool {
    *current = outcome.solution;
    outcome.improved
}
