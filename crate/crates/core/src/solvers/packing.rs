//! PackIterative: distance-aware greedy packing with a tuned score exponent.
//!
//! For a fixed tour every item `k` is scored
//!
//! ```text
//! s_k = p_k^alpha / (w_k^alpha * d_k)
//! ```
//!
//! where `d_k` is the distance still to travel from the item's city to the
//! end of the tour. Items are tried in descending score order and kept when
//! they fit and strictly raise the objective. The exponent `alpha` is chosen by
//! golden-section search over `[0, PACK_ALPHA_MAX]` using [`PACK_PROBES`]
//! greedy packs; the best packing seen by any probe is returned.

use std::cmp::Ordering;

use super::Evaluator;
use crate::instance::{total_profit, total_weight, TtpInstance};

/// Upper end of the exponent search interval.
pub const PACK_ALPHA_MAX: f64 = 10.0;
/// Number of greedy packs evaluated per call.
pub const PACK_PROBES: usize = 20;

/// Packs items for `tour`. The result is feasible and never worse than the
/// empty packing.
pub fn pack_iterative(instance: &TtpInstance, tour: &[usize]) -> Vec<bool> {
    pack_iterative_with(&Evaluator::new(instance), tour)
}

struct Greedy<'e, 'a> {
    ev: &'e Evaluator<'a>,
    tour: &'e [usize],
    /// Remaining tour distance from each item's city.
    remaining: Vec<f64>,
}

impl Greedy<'_, '_> {
    fn pack(&self, alpha: f64) -> (Vec<bool>, f64) {
        let inst = self.ev.instance();
        let items = &inst.items;
        let scores: Vec<f64> = items
            .iter()
            .zip(&self.remaining)
            .map(|(item, &d)| (item.profit.powf(alpha) / item.weight.powf(alpha)) / d)
            .collect();
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
            Ordering::Equal => a.cmp(&b),
            other => other,
        });

        let mut packing = vec![false; items.len()];
        let mut weights = vec![0.0; inst.num_nodes()];
        let mut best = self.objective(&packing, &weights);
        for k in order {
            let item = &items[k];
            packing[k] = true;
            if total_weight(&packing, items) > inst.capacity {
                packing[k] = false;
                continue;
            }
            let previous = weights[item.node];
            weights[item.node] = self.ev.city_weight(item.node, &packing);
            let value = self.objective(&packing, &weights);
            if value > best {
                best = value;
            } else {
                packing[k] = false;
                weights[item.node] = previous;
            }
        }
        (packing, best)
    }

    fn objective(&self, packing: &[bool], weights: &[f64]) -> f64 {
        let inst = self.ev.instance();
        total_profit(packing, &inst.items)
            - inst.renting_rate * self.ev.travel_time(self.tour, weights)
    }
}

pub(crate) fn pack_iterative_with(ev: &Evaluator<'_>, tour: &[usize]) -> Vec<bool> {
    let inst = ev.instance();
    let n = tour.len();
    let mut to_end = vec![0.0; n];
    for pos in (0..n).rev() {
        let leg = ev.distance(tour[pos], tour[(pos + 1) % n]);
        to_end[pos] = leg + if pos + 1 < n { to_end[pos + 1] } else { 0.0 };
    }
    let mut position = vec![0; n];
    for (pos, &city) in tour.iter().enumerate() {
        position[city] = pos;
    }
    // CEIL_2D distances are integral, so only coincident points give d < 1.
    let remaining = inst
        .items
        .iter()
        .map(|item| to_end[position[item.node]].max(1.0))
        .collect();
    let greedy = Greedy {
        ev,
        tour,
        remaining,
    };

    let mut best: Option<(Vec<bool>, f64)> = None;
    let mut probe = |alpha: f64| -> f64 {
        let (packing, value) = greedy.pack(alpha);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((packing, value));
        }
        value
    };

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, PACK_ALPHA_MAX);
    let mut left = hi - ratio * (hi - lo);
    let mut right = lo + ratio * (hi - lo);
    let mut f_left = probe(left);
    let mut f_right = probe(right);
    for _ in 2..PACK_PROBES {
        if f_left >= f_right {
            hi = right;
            right = left;
            f_right = f_left;
            left = hi - ratio * (hi - lo);
            f_left = probe(left);
        } else {
            lo = left;
            left = right;
            f_left = f_right;
            right = lo + ratio * (hi - lo);
            f_right = probe(right);
        }
    }
    best.map(|(packing, _)| packing)
        .unwrap_or_else(|| vec![false; inst.num_items()])
}
