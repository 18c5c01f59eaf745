//! Hill-climbing passes shared by the portfolio.
//!
//! Each pass accepts a move only if the resulting solution is feasible and
//! strictly better. Objectives cached in returned solutions are always full
//! evaluations, never accumulated deltas.

use rand::Rng as _;

use super::Evaluator;
use crate::instance::{total_profit, total_weight, TtpInstance, TtpSolution};
use crate::seed::{rng_from_seed, Rng};

/// Result of one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PassOutcome {
    pub solution: TtpSolution,
    /// True if at least one move was accepted.
    pub improved: bool,
}

/// One deterministic sweep toggling each item in index order.
pub fn bitflip_pass(instance: &TtpInstance, solution: &TtpSolution) -> PassOutcome {
    bitflip_pass_with(&Evaluator::new(instance), solution)
}

/// One deterministic sweep of city re-insertions; the packing is unchanged.
///
/// Cities are visited in the order they appear in the incoming tour. Each one
/// is removed and re-inserted at the position that gives the largest strict
/// improvement, if any.
pub fn insertion_pass(instance: &TtpInstance, solution: &TtpSolution) -> PassOutcome {
    insertion_pass_with(&Evaluator::new(instance), solution)
}

/// `m` iterations of a (1+1)-EA on the packing plan.
///
/// Each iteration toggles every item independently with probability `1/m`.
/// Infeasible mutants are discarded; feasible ones replace the incumbent only
/// if strictly better.
pub fn ea_packing_pass(instance: &TtpInstance, solution: &TtpSolution, seed: u64) -> PassOutcome {
    ea_packing_pass_with(
        &Evaluator::new(instance),
        solution,
        &mut rng_from_seed(seed),
    )
}

struct PackingState {
    packing: Vec<bool>,
    weights: Vec<f64>,
}

impl PackingState {
    fn new(ev: &Evaluator<'_>, packing: &[bool]) -> Self {
        PackingState {
            packing: packing.to_vec(),
            weights: ev.instance().city_weights(packing),
        }
    }

    fn toggle(&mut self, ev: &Evaluator<'_>, k: usize) {
        let node = ev.instance().items[k].node;
        self.packing[k] = !self.packing[k];
        self.weights[node] = ev.city_weight(node, &self.packing);
    }

    fn feasible(&self, ev: &Evaluator<'_>) -> bool {
        let inst = ev.instance();
        total_weight(&self.packing, &inst.items) <= inst.capacity
    }

    fn objective(&self, ev: &Evaluator<'_>, tour: &[usize]) -> f64 {
        let inst = ev.instance();
        total_profit(&self.packing, &inst.items)
            - inst.renting_rate * ev.travel_time(tour, &self.weights)
    }
}

pub(crate) fn bitflip_pass_with(ev: &Evaluator<'_>, solution: &TtpSolution) -> PassOutcome {
    let mut state = PackingState::new(ev, &solution.packing);
    let mut objective = solution.objective;
    let mut improved = false;
    for k in 0..state.packing.len() {
        state.toggle(ev, k);
        if state.feasible(ev) {
            let value = state.objective(ev, &solution.tour);
            if value > objective {
                objective = value;
                improved = true;
                continue;
            }
        }
        state.toggle(ev, k);
    }
    PassOutcome {
        solution: TtpSolution {
            tour: solution.tour.clone(),
            packing: state.packing,
            objective,
        },
        improved,
    }
}

pub(crate) fn ea_packing_pass_with(
    ev: &Evaluator<'_>,
    solution: &TtpSolution,
    rng: &mut Rng,
) -> PassOutcome {
    let m = solution.packing.len();
    let rate = 1.0 / m as f64;
    let mut state = PackingState::new(ev, &solution.packing);
    let mut objective = solution.objective;
    let mut improved = false;
    let mut flipped = Vec::new();
    for _ in 0..m {
        flipped.clear();
        flipped.extend((0..m).filter(|_| rng.random_bool(rate)));
        if flipped.is_empty() {
            continue;
        }
        for &k in &flipped {
            state.toggle(ev, k);
        }
        if state.feasible(ev) {
            let value = state.objective(ev, &solution.tour);
            if value > objective {
                objective = value;
                improved = true;
                continue;
            }
        }
        for &k in &flipped {
            state.toggle(ev, k);
        }
    }
    PassOutcome {
        solution: TtpSolution {
            tour: solution.tour.clone(),
            packing: state.packing,
            objective,
        },
        improved,
    }
}

pub(crate) fn insertion_pass_with(ev: &Evaluator<'_>, solution: &TtpSolution) -> PassOutcome {
    let inst = ev.instance();
    let unchanged = PassOutcome {
        solution: solution.clone(),
        improved: false,
    };
    // Without rent the objective does not depend on the tour.
    if inst.renting_rate == 0.0 {
        return unchanged;
    }
    let weights = inst.city_weights(&solution.packing);
    let profit = total_profit(&solution.packing, &inst.items);
    let mut tour = solution.tour.clone();
    let mut objective = solution.objective;
    let mut improved = false;
    let mut scratch = InsertionScratch::default();
    let order = solution.tour[1..].to_vec();
    for city in order {
        let pos = tour
            .iter()
            .position(|&c| c == city)
            .expect("tour holds every city");
        let Some(target) = scratch.best_target(ev, &tour, &weights, pos, profit, objective) else {
            continue;
        };
        let candidate = reinsert(&tour, pos, target);
        let value = profit - inst.renting_rate * ev.travel_time(&candidate, &weights);
        if value > objective {
            tour = candidate;
            objective = value;
            improved = true;
        }
    }
    if !improved {
        return unchanged;
    }
    PassOutcome {
        solution: TtpSolution {
            tour,
            packing: solution.packing.clone(),
            objective,
        },
        improved,
    }
}

/// Removes the city at `from` and inserts it after element `after` of the
/// shortened tour.
pub(crate) fn reinsert(tour: &[usize], from: usize, after: usize) -> Vec<usize> {
    let city = tour[from];
    let mut out: Vec<usize> = tour
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != from)
        .map(|(_, &c)| c)
        .collect();
    out.insert(after + 1, city);
    out
}

/// Prefix sums used to price every re-insertion of one city in O(n).
#[derive(Default)]
struct InsertionScratch {
    carried: Vec<f64>,
    base: Vec<f64>,
    lighter: Vec<f64>,
    heavier: Vec<f64>,
}

impl InsertionScratch {
    /// Best strictly improving target for the city at `pos`, as an index into
    /// the tour with that city removed (insert after that element).
    fn best_target(
        &mut self,
        ev: &Evaluator<'_>,
        tour: &[usize],
        city_weight: &[f64],
        pos: usize,
        profit: f64,
        current: f64,
    ) -> Option<usize> {
        let inst = ev.instance();
        let n = tour.len();
        let coefficient = inst.speed_coefficient();
        let speed = |w: f64| inst.max_speed - coefficient * w;
        let city = tour[pos];
        let moved = city_weight[city];

        self.carried.clear();
        let mut acc = 0.0;
        for &c in tour {
            acc += city_weight[c];
            self.carried.push(acc);
        }
        // prefix[q] = time of legs 0..q; leg q runs from tour[q] to tour[q + 1].
        for (prefix, shift) in [
            (&mut self.base, 0.0),
            (&mut self.lighter, -moved),
            (&mut self.heavier, moved),
        ] {
            prefix.clear();
            prefix.push(0.0);
            let mut sum = 0.0;
            for q in 0..n {
                let leg = ev.distance(tour[q], tour[(q + 1) % n]);
                sum += leg / speed(self.carried[q] + shift);
                prefix.push(sum);
            }
        }
        let (base, lighter, heavier, carried) =
            (&self.base, &self.lighter, &self.heavier, &self.carried);
        let at = |q: usize| tour[q % n];

        let mut best: Option<(usize, f64)> = None;
        for target in 0..n - 1 {
            if target + 1 == pos {
                continue;
            }
            let time = if target >= pos {
                // city moves later: legs between old and new slot lose its weight
                base[pos - 1]
                    + ev.distance(at(pos - 1), at(pos + 1)) / speed(carried[pos - 1])
                    + (lighter[target + 1] - lighter[pos + 1])
                    + ev.distance(at(target + 1), city) / speed(carried[target + 1] - moved)
                    + ev.distance(city, at(target + 2)) / speed(carried[target + 1])
                    + (base[n] - base[target + 2])
            } else {
                // city moves earlier: legs between new and old slot carry its weight
                base[target]
                    + ev.distance(at(target), city) / speed(carried[target])
                    + ev.distance(city, at(target + 1)) / speed(carried[target] + moved)
                    + (heavier[pos - 1] - heavier[target + 1])
                    + ev.distance(at(pos - 1), at(pos + 1)) / speed(carried[pos])
                    + (base[n] - base[pos + 1])
            };
            let value = profit - inst.renting_rate * time;
            if value > current && best.is_none_or(|(_, b)| value > b) {
                best = Some((target, value));
            }
        }
        best.map(|(target, _)| target)
    }
}
