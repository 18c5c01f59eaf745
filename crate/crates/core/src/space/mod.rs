//! Random instance generation and instance mutation.
//!
//! Generated instances place `n` nodes uniformly in the coordinate box and
//! `items_per_node` items on every node except the start city. Weights and
//! profits are uniform in their bounds, the renting rate is uniform in its
//! bounds and the capacity is `ceil(D / 11 * sum(w))` for a uniform divisor
//! `D` in `1..=10`.
//!
//! Mutation treats both the node coordinates and the `(weight, profit)` pairs
//! as point clouds and applies one randomly chosen [`MutationOperator`] to
//! each. The renting rate receives a Gaussian step and the capacity is
//! redrawn. Every value that leaves its bounds is redrawn uniformly inside
//! them ([`repair`]).

mod bounds;
mod mutation;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::instance::{Item, Point, TtpInstance, DEFAULT_MAX_SPEED, DEFAULT_MIN_SPEED};
use crate::seed::{rng_from_seed, Rng};

pub use bounds::{repair, repair_point, Bounds2, Interval};
pub use mutation::{mutate_point_cloud, MutationOperator, MutationOutcome, Region};

/// Standard deviation of the Gaussian renting-rate step.
pub const RENT_MUTATION_SIGMA: f64 = 10.0;

/// Parameters of random instances and of the mutation bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub nodes: usize,
    pub items_per_node: usize,
    pub coord_bounds: Bounds2,
    /// Lower end is open: weights are always positive.
    pub weight_bounds: Interval,
    pub profit_bounds: Interval,
    pub rent_bounds: Interval,
    /// Inclusive range of the capacity divisor `D`.
    pub capacity_divisors: (u32, u32),
    pub min_speed: f64,
    pub max_speed: f64,
    /// Round weights and profits to integers (weights at least 1).
    pub integer_items: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig::new(200, 1)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("need at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("items per node must be at least 1")]
    NoItems,
    #[error("{0} bounds are empty or invalid")]
    BadBounds(&'static str),
    #[error("capacity divisor range must lie within 1..=10 and be non-empty")]
    BadDivisors,
    #[error("speeds must satisfy 0 < v_min < v_max")]
    BadSpeeds,
}

impl GenerationConfig {
    pub fn new(nodes: usize, items_per_node: usize) -> Self {
        GenerationConfig {
            nodes,
            items_per_node,
            coord_bounds: Bounds2::square(0.0, 10_000.0),
            weight_bounds: Interval::left_open(0.0, 4_040.0),
            profit_bounds: Interval::closed(0.0, 4_400.0),
            rent_bounds: Interval::closed(0.0, 1_000.0),
            capacity_divisors: (1, 10),
            min_speed: DEFAULT_MIN_SPEED,
            max_speed: DEFAULT_MAX_SPEED,
            integer_items: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nodes < 3 {
            return Err(ConfigError::TooFewNodes(self.nodes));
        }
        if self.items_per_node == 0 {
            return Err(ConfigError::NoItems);
        }
        let within_limit = |i: &Interval| i.lo >= 0.0 && i.hi <= crate::instance::COORDINATE_LIMIT;
        if !self.coord_bounds.is_valid()
            || !within_limit(&self.coord_bounds.x)
            || !within_limit(&self.coord_bounds.y)
        {
            return Err(ConfigError::BadBounds("coordinate"));
        }
        if !self.weight_bounds.is_valid()
            || self.weight_bounds.lo < 0.0
            || !self.weight_bounds.lo_open
        {
            return Err(ConfigError::BadBounds("weight"));
        }
        if !self.profit_bounds.is_valid() || self.profit_bounds.lo < 0.0 {
            return Err(ConfigError::BadBounds("profit"));
        }
        if !self.rent_bounds.is_valid() || self.rent_bounds.lo < 0.0 {
            return Err(ConfigError::BadBounds("renting rate"));
        }
        let (lo, hi) = self.capacity_divisors;
        if lo < 1 || hi > 10 || lo > hi {
            return Err(ConfigError::BadDivisors);
        }
        if !(self.min_speed > 0.0 && self.min_speed < self.max_speed) {
            return Err(ConfigError::BadSpeeds);
        }
        Ok(())
    }

    /// Bounds of the `(weight, profit)` cloud.
    pub fn item_bounds(&self) -> Bounds2 {
        Bounds2 {
            x: self.weight_bounds,
            y: self.profit_bounds,
        }
    }
}

/// Capacity `ceil(divisor / 11 * total_weight)`, capped at the total weight.
pub fn capacity_for(divisor: u32, total_weight: f64) -> f64 {
    // multiply before dividing so that exact multiples of 11 stay exact
    ((divisor as f64 * total_weight) / 11.0)
        .ceil()
        .min(total_weight)
}

fn draw_capacity(config: &GenerationConfig, total_weight: f64, rng: &mut Rng) -> f64 {
    let (lo, hi) = config.capacity_divisors;
    capacity_for(rng.random_range(lo..=hi), total_weight)
}

fn finish_item(config: &GenerationConfig, weight: f64, profit: f64) -> (f64, f64) {
    if config.integer_items {
        let weight = weight
            .round()
            .clamp(1.0, config.weight_bounds.hi.floor().max(1.0));
        let profit = profit.round().clamp(
            config.profit_bounds.lo.ceil(),
            config.profit_bounds.hi.floor(),
        );
        (weight, profit)
    } else {
        (weight, profit)
    }
}

/// Generates a random instance. The result depends only on `config` and `seed`.
///
/// # Panics
///
/// Panics if `config` is invalid; call [`GenerationConfig::validate`] first
/// when the config comes from user input.
pub fn random_instance(config: &GenerationConfig, seed: u64) -> TtpInstance {
    config.validate().expect("invalid generation config");
    let mut rng = rng_from_seed(seed);
    let nodes: Vec<Point> = (0..config.nodes)
        .map(|_| config.coord_bounds.sample(&mut rng))
        .collect();
    let mut items = Vec::with_capacity(config.items_per_node * (config.nodes - 1));
    // benchmark convention: one item per city per round, cities in index order
    for _ in 0..config.items_per_node {
        for node in 1..config.nodes {
            let weight = config.weight_bounds.sample(&mut rng);
            let profit = config.profit_bounds.sample(&mut rng);
            let (weight, profit) = finish_item(config, weight, profit);
            items.push(Item {
                profit,
                weight,
                node,
            });
        }
    }
    let renting_rate = config.rent_bounds.sample(&mut rng);
    let total: f64 = items.iter().map(|i| i.weight).sum();
    let capacity = draw_capacity(config, total, &mut rng);
    let instance = TtpInstance {
        name: format!(
            "ttp-n{}-ipn{}-s{}",
            config.nodes, config.items_per_node, seed
        ),
        knapsack_type: "uncorrelated".to_string(),
        nodes,
        items,
        capacity,
        renting_rate,
        min_speed: config.min_speed,
        max_speed: config.max_speed,
    };
    debug_assert!(instance.validate().is_ok());
    instance
}

/// Adds a `Normal(0, sigma)` step to the renting rate, without repair.
pub fn gaussian_step(value: f64, sigma: f64, rng: &mut Rng) -> f64 {
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    value + normal.sample(rng)
}

/// Mutates every component of `instance` with uniformly drawn operators.
pub fn mutate_instance(
    instance: &TtpInstance,
    config: &GenerationConfig,
    seed: u64,
) -> TtpInstance {
    let mut rng = rng_from_seed(seed);
    let node_op = MutationOperator::random(&mut rng);
    let item_op = MutationOperator::random(&mut rng);
    mutate_instance_with(instance, config, node_op, item_op, &mut rng).0
}

/// Outcome of [`mutate_instance_with`] for the node and item clouds.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationReport {
    pub node_operator: MutationOperator,
    pub node_region: Option<Region>,
    pub item_operator: MutationOperator,
    pub item_region: Option<Region>,
}

/// Mutates `instance` with the given operators.
///
/// The node cloud is mutated with `node_op`, the `(weight, profit)` cloud with
/// `item_op`. Availability, node count and item count never change.
pub fn mutate_instance_with(
    instance: &TtpInstance,
    config: &GenerationConfig,
    node_op: MutationOperator,
    item_op: MutationOperator,
    rng: &mut Rng,
) -> (TtpInstance, MutationReport) {
    let nodes = node_op.apply(&instance.nodes, &config.coord_bounds, rng);

    let item_cloud: Vec<Point> = instance
        .items
        .iter()
        .map(|item| Point::new(item.weight, item.profit))
        .collect();
    let item_bounds = config.item_bounds();
    let cloud = item_op.apply(&item_cloud, &item_bounds, rng);
    let items: Vec<Item> = instance
        .items
        .iter()
        .zip(&cloud.points)
        .map(|(item, p)| {
            let (weight, profit) = finish_item(config, p.x, p.y);
            Item {
                profit,
                weight,
                node: item.node,
            }
        })
        .collect();

    let rent = gaussian_step(instance.renting_rate, RENT_MUTATION_SIGMA, rng);
    let renting_rate = repair(rent, &config.rent_bounds, rng);
    let total: f64 = items.iter().map(|i| i.weight).sum();
    let capacity = draw_capacity(config, total, rng);

    let mutant = TtpInstance {
        name: instance.name.clone(),
        knapsack_type: instance.knapsack_type.clone(),
        nodes: nodes.points,
        items,
        capacity,
        renting_rate,
        min_speed: instance.min_speed,
        max_speed: instance.max_speed,
    };
    let report = MutationReport {
        node_operator: node_op,
        node_region: nodes.region,
        item_operator: item_op,
        item_region: cloud.region,
    };
    (mutant, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_formula() {
        assert_eq!(capacity_for(10, 110.0), 100.0);
        assert_eq!(capacity_for(1, 110.0), 10.0);
        assert_eq!(capacity_for(5, 100.0), 46.0);
        assert_eq!(capacity_for(10, 0.5), 0.5);
    }

    #[test]
    fn generation_is_valid_and_deterministic() {
        for ipn in [1, 3, 5, 10] {
            let config = GenerationConfig::new(25, ipn);
            let a = random_instance(&config, 42);
            let b = random_instance(&config, 42);
            assert_eq!(a, b);
            a.validate().unwrap();
            assert_eq!(a.num_items(), 24 * ipn);
            for node in 1..25 {
                assert_eq!(a.items.iter().filter(|i| i.node == node).count(), ipn);
            }
            assert_ne!(a, random_instance(&config, 43));
        }
    }

    #[test]
    fn integer_items_mode() {
        let mut config = GenerationConfig::new(20, 3);
        config.integer_items = true;
        let inst = random_instance(&config, 5);
        for item in &inst.items {
            assert_eq!(item.weight.fract(), 0.0);
            assert_eq!(item.profit.fract(), 0.0);
            assert!(item.weight >= 1.0);
        }
        let mutant = mutate_instance(&inst, &config, 6);
        assert!(mutant.items.iter().all(|i| i.weight.fract() == 0.0));
        mutant.validate().unwrap();
    }

    #[test]
    fn mutation_conserves_structure() {
        let config = GenerationConfig::new(30, 3);
        let inst = random_instance(&config, 1);
        for seed in 0..200 {
            let mutant = mutate_instance(&inst, &config, seed);
            mutant.validate().unwrap();
            assert_eq!(mutant.num_nodes(), inst.num_nodes());
            assert_eq!(mutant.num_items(), inst.num_items());
            assert!(mutant
                .items
                .iter()
                .zip(&inst.items)
                .all(|(a, b)| a.node == b.node));
            assert_eq!(mutant, mutate_instance(&inst, &config, seed));
        }
    }

    #[test]
    fn rent_step_statistics() {
        let mut rng = rng_from_seed(2024);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| gaussian_step(500.0, RENT_MUTATION_SIGMA, &mut rng))
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let std = var.sqrt();
        let standard_error = RENT_MUTATION_SIGMA / (draws.len() as f64).sqrt();
        assert!((mean - 500.0).abs() <= 3.0 * standard_error, "mean {mean}");
        assert!((std - 10.0).abs() < 0.5, "std {std}");
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(GenerationConfig::new(2, 1).validate().is_err());
        assert!(GenerationConfig::new(5, 0).validate().is_err());
        let mut c = GenerationConfig::new(5, 1);
        c.capacity_divisors = (0, 10);
        assert!(c.validate().is_err());
    }
}
