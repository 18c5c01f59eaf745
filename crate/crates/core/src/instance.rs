//! Traveling Thief Problem instances, solutions and the objective function.
//!
//! Node and item indices are 0-based throughout the crate. Node `0` is the
//! start city: every tour begins there and no item may be placed on it. The
//! textual benchmark format is 1-based; conversion happens in [`crate::io`].
//!
//! The objective of a tour `X` and packing plan `Z` is the total travel gain
//!
//! ```text
//! F(X, Z) = g(Z) - R * f(X, Z)
//! ```
//!
//! where `g` is the collected profit and `f` the travel time. The thief moves
//! at speed `v_max - C * w` with `C = (v_max - v_min) / W`, `w` being the
//! knapsack weight when leaving a city (items of that city included).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest travel speed of generated instances.
pub const DEFAULT_MIN_SPEED: f64 = 0.1;
/// Highest travel speed of generated instances.
pub const DEFAULT_MAX_SPEED: f64 = 1.0;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Exact Euclidean distance.
    pub fn euclidean(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Euclidean distance rounded up to the next integer (`CEIL_2D`).
    pub fn ceil_distance(&self, other: &Point) -> f64 {
        self.euclidean(other).ceil()
    }
}

/// An item that can be stolen at exactly one city.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub profit: f64,
    pub weight: f64,
    /// City holding the item (0-based, never the start city).
    pub node: usize,
}

/// Ways in which an instance, tour or packing can be invalid.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TtpError {
    #[error("instance needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("instance has no items")]
    NoItems,
    #[error("node {index} has non-finite or out-of-range coordinates ({x}, {y})")]
    BadCoordinate { index: usize, x: f64, y: f64 },
    #[error("item {index} references node {node}, valid range is 1..{nodes}")]
    BadAvailability {
        index: usize,
        node: usize,
        nodes: usize,
    },
    #[error("item {index} has invalid profit {profit} or weight {weight}")]
    BadItem {
        index: usize,
        profit: f64,
        weight: f64,
    },
    #[error("capacity {0} must be finite and positive")]
    BadCapacity(f64),
    #[error("renting rate {0} must be finite and non-negative")]
    BadRentingRate(f64),
    #[error("speed bounds must satisfy 0 < v_min < v_max, got {min} and {max}")]
    BadSpeeds { min: f64, max: f64 },
    #[error("tour is not a permutation of 0..{0} starting at node 0")]
    BadTour(usize),
    #[error("packing has length {got}, expected {expected}")]
    PackingLength { got: usize, expected: usize },
    #[error("packing weight {weight} exceeds capacity {capacity}")]
    Infeasible { weight: f64, capacity: f64 },
}

/// Largest coordinate accepted on either axis.
pub const COORDINATE_LIMIT: f64 = 10_000.0;

/// A Traveling Thief Problem instance.
///
/// Instances are plain values. Use [`TtpInstance::validate`] after building or
/// editing one by hand; every constructor in this crate returns validated
/// instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtpInstance {
    pub name: String,
    /// Free-form knapsack data type label carried by the benchmark format.
    pub knapsack_type: String,
    pub nodes: Vec<Point>,
    pub items: Vec<Item>,
    pub capacity: f64,
    pub renting_rate: f64,
    pub min_speed: f64,
    pub max_speed: f64,
}

impl TtpInstance {
    /// Builds an instance with default speed bounds and validates it.
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<Point>,
        items: Vec<Item>,
        capacity: f64,
        renting_rate: f64,
    ) -> Result<Self, TtpError> {
        let instance = TtpInstance {
            name: name.into(),
            knapsack_type: "uncorrelated".to_string(),
            nodes,
            items,
            capacity,
            renting_rate,
            min_speed: DEFAULT_MIN_SPEED,
            max_speed: DEFAULT_MAX_SPEED,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn total_item_weight(&self) -> f64 {
        self.items.iter().map(|item| item.weight).sum()
    }

    /// Average number of items per non-start city.
    pub fn items_per_node(&self) -> f64 {
        self.items.len() as f64 / (self.nodes.len() - 1) as f64
    }

    /// Checks every structural invariant of the instance.
    pub fn validate(&self) -> Result<(), TtpError> {
        let n = self.nodes.len();
        if n < 3 {
            return Err(TtpError::TooFewNodes(n));
        }
        if self.items.is_empty() {
            return Err(TtpError::NoItems);
        }
        for (index, p) in self.nodes.iter().enumerate() {
            let ok = |v: f64| v.is_finite() && (0.0..=COORDINATE_LIMIT).contains(&v);
            if !ok(p.x) || !ok(p.y) {
                return Err(TtpError::BadCoordinate {
                    index,
                    x: p.x,
                    y: p.y,
                });
            }
        }
        for (index, item) in self.items.iter().enumerate() {
            if item.node == 0 || item.node >= n {
                return Err(TtpError::BadAvailability {
                    index,
                    node: item.node,
                    nodes: n,
                });
            }
            if !(item.profit.is_finite() && item.profit >= 0.0)
                || !(item.weight.is_finite() && item.weight > 0.0)
            {
                return Err(TtpError::BadItem {
                    index,
                    profit: item.profit,
                    weight: item.weight,
                });
            }
        }
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return Err(TtpError::BadCapacity(self.capacity));
        }
        if !(self.renting_rate.is_finite() && self.renting_rate >= 0.0) {
            return Err(TtpError::BadRentingRate(self.renting_rate));
        }
        if !(self.min_speed > 0.0 && self.min_speed < self.max_speed && self.max_speed.is_finite())
        {
            return Err(TtpError::BadSpeeds {
                min: self.min_speed,
                max: self.max_speed,
            });
        }
        Ok(())
    }

    /// `CEIL_2D` distance between two nodes.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.nodes[i].ceil_distance(&self.nodes[j])
    }

    /// Speed loss per unit of carried weight.
    pub fn speed_coefficient(&self) -> f64 {
        (self.max_speed - self.min_speed) / self.capacity
    }

    /// Checks that `tour` is a permutation of all nodes starting at node 0.
    pub fn check_tour(&self, tour: &[usize]) -> Result<(), TtpError> {
        let n = self.nodes.len();
        if tour.len() != n || tour.first() != Some(&0) {
            return Err(TtpError::BadTour(n));
        }
        let mut seen = vec![false; n];
        for &city in tour {
            if city >= n || std::mem::replace(&mut seen[city], true) {
                return Err(TtpError::BadTour(n));
            }
        }
        Ok(())
    }

    /// Checks the packing length and the capacity constraint.
    pub fn check_packing(&self, packing: &[bool]) -> Result<(), TtpError> {
        if packing.len() != self.items.len() {
            return Err(TtpError::PackingLength {
                got: packing.len(),
                expected: self.items.len(),
            });
        }
        let weight = total_weight(packing, &self.items);
        if weight > self.capacity {
            return Err(TtpError::Infeasible {
                weight,
                capacity: self.capacity,
            });
        }
        Ok(())
    }

    /// Sum of picked item weights per city.
    pub(crate) fn city_weights(&self, packing: &[bool]) -> Vec<f64> {
        let mut weights = vec![0.0; self.nodes.len()];
        for (item, &picked) in self.items.iter().zip(packing) {
            if picked {
                weights[item.node] += item.weight;
            }
        }
        weights
    }

    /// Travel time of a closed tour when the thief picks `city_weight[c]` at city `c`.
    pub(crate) fn travel_time_with<D>(&self, tour: &[usize], city_weight: &[f64], dist: D) -> f64
    where
        D: Fn(usize, usize) -> f64,
    {
        let coefficient = self.speed_coefficient();
        let n = tour.len();
        let mut carried = 0.0;
        let mut time = 0.0;
        for pos in 0..n {
            let from = tour[pos];
            let to = tour[(pos + 1) % n];
            carried += city_weight[from];
            time += dist(from, to) / (self.max_speed - coefficient * carried);
        }
        time
    }

    /// Travel time `f(X, Z)` of a tour and packing, validating both.
    pub fn travel_time(&self, tour: &[usize], packing: &[bool]) -> Result<f64, TtpError> {
        self.check_tour(tour)?;
        self.check_packing(packing)?;
        let weights = self.city_weights(packing);
        Ok(self.travel_time_with(tour, &weights, |a, b| self.distance(a, b)))
    }

    /// Total travel gain `g(Z) - R * f(X, Z)`.
    ///
    /// Returns [`TtpError::Infeasible`] when the packing exceeds the capacity
    /// and [`TtpError::BadTour`] for tours that are not permutations starting
    /// at node 0.
    pub fn evaluate(&self, tour: &[usize], packing: &[bool]) -> Result<f64, TtpError> {
        let time = self.travel_time(tour, packing)?;
        Ok(total_profit(packing, &self.items) - self.renting_rate * time)
    }
}

/// Total travel gain of `tour` and `packing` on `instance`.
pub fn evaluate_objective(
    instance: &TtpInstance,
    tour: &[usize],
    packing: &[bool],
) -> Result<f64, TtpError> {
    instance.evaluate(tour, packing)
}

/// Sum of the profits of picked items.
pub fn total_profit(packing: &[bool], items: &[Item]) -> f64 {
    items
        .iter()
        .zip(packing)
        .filter(|(_, &picked)| picked)
        .map(|(item, _)| item.profit)
        .sum()
}

/// Sum of the weights of picked items.
pub fn total_weight(packing: &[bool], items: &[Item]) -> f64 {
    items
        .iter()
        .zip(packing)
        .filter(|(_, &picked)| picked)
        .map(|(item, _)| item.weight)
        .sum()
}

/// Rotates a cyclic tour so that it starts at node 0.
pub fn canonical_tour(tour: &[usize]) -> Vec<usize> {
    match tour.iter().position(|&c| c == 0) {
        Some(start) => tour[start..]
            .iter()
            .chain(&tour[..start])
            .copied()
            .collect(),
        None => tour.to_vec(),
    }
}

/// A tour, a packing plan and the objective they achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtpSolution {
    pub tour: Vec<usize>,
    pub packing: Vec<bool>,
    pub objective: f64,
}

impl TtpSolution {
    /// Validates the pair and caches its objective.
    pub fn evaluate(
        instance: &TtpInstance,
        tour: Vec<usize>,
        packing: Vec<bool>,
    ) -> Result<Self, TtpError> {
        let objective = instance.evaluate(&tour, &packing)?;
        Ok(TtpSolution {
            tour,
            packing,
            objective,
        })
    }

    pub fn total_weight(&self, instance: &TtpInstance) -> f64 {
        total_weight(&self.packing, &instance.items)
    }

    /// True if the cached objective matches a fresh evaluation bit for bit.
    pub fn is_consistent(&self, instance: &TtpInstance) -> bool {
        instance
            .evaluate(&self.tour, &self.packing)
            .map(|f| f.to_bits() == self.objective.to_bits())
            .unwrap_or(false)
    }
}
