//! Evolving Traveling Thief Problem instances on which a portfolio of
//! heuristics performs in a prescribed order.
//!
//! ```
//! use ttp_evolve::evolve::{evolve, EvolveConfig, FitnessKind};
//! use ttp_evolve::solvers::SolverId;
//! use ttp_evolve::space::GenerationConfig;
//!
//! let mut config = EvolveConfig::new(
//!     FitnessKind::Pairwise { easy: SolverId::C2, hard: SolverId::S2 },
//!     7,
//! );
//! config.generation = GenerationConfig::new(10, 1);
//! config.runs = 2;
//! config.final_runs = 3;
//! config.max_iterations = 3;
//! let result = evolve(&config).unwrap();
//! assert_eq!(result.trajectory.len(), 4);
//! println!("{} -> {}", result.final_fitness(), result.actual_ranking);
//! ```

pub mod evolve;
pub mod features;
pub mod fitness;
pub mod instance;
pub mod io;
pub mod seed;
pub mod solvers;
pub mod space;

pub use evolve::{evolve, EvolveConfig, EvolveResult, FitnessKind, SolverOrder};
pub use fitness::{FitnessValue, PerformanceProfile, RankingSpec};
pub use instance::{evaluate_objective, Item, Point, TtpError, TtpInstance, TtpSolution};
pub use solvers::{solve, SolverBudget, SolverId, PORTFOLIO};
pub use space::{mutate_instance, random_instance, GenerationConfig, MutationOperator};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/fitness.md")]
    mod fitness {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
