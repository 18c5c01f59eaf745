//! Tour construction: nearest neighbour, 2-opt, double-bridge chaining.
//!
//! The tour is computed from the distances alone, independently of the
//! knapsack component.

use rand::Rng as _;

use super::Evaluator;
use crate::instance::TtpInstance;
use crate::seed::{rng_from_seed, Rng};

/// Double-bridge kicks per tour construction.
pub const DEFAULT_KICKS: usize = 20;

/// Smallest instance on which double-bridge kicks are applied.
const MIN_KICK_NODES: usize = 5;

/// Builds a 2-opt-optimal tour starting at node 0.
///
/// Nearest-neighbour construction from node 0 is improved by 2-opt until no
/// move shortens the tour, then `kicks` double-bridge perturbations are each
/// followed by 2-opt; a kicked tour replaces the incumbent only if strictly
/// shorter.
pub fn build_tour(instance: &TtpInstance, kicks: usize, seed: u64) -> Vec<usize> {
    build_tour_with(&Evaluator::new(instance), kicks, &mut rng_from_seed(seed))
}

pub(crate) fn build_tour_with(ev: &Evaluator<'_>, kicks: usize, rng: &mut Rng) -> Vec<usize> {
    let n = ev.instance().num_nodes();
    let mut best = nearest_neighbour(ev);
    two_opt(ev, &mut best);
    if n < MIN_KICK_NODES {
        return best;
    }
    let mut best_len = length(ev, &best);
    for _ in 0..kicks {
        let mut candidate = double_bridge(&best, rng);
        two_opt(ev, &mut candidate);
        let len = length(ev, &candidate);
        if len < best_len {
            best = candidate;
            best_len = len;
        }
    }
    best
}

/// Closed tour length under the instance metric.
pub fn tour_length(instance: &TtpInstance, tour: &[usize]) -> f64 {
    let n = tour.len();
    (0..n)
        .map(|i| instance.distance(tour[i], tour[(i + 1) % n]))
        .sum()
}

fn length(ev: &Evaluator<'_>, tour: &[usize]) -> f64 {
    let n = tour.len();
    (0..n)
        .map(|i| ev.distance(tour[i], tour[(i + 1) % n]))
        .sum()
}

fn nearest_neighbour(ev: &Evaluator<'_>) -> Vec<usize> {
    let n = ev.instance().num_nodes();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut current = 0;
    visited[0] = true;
    tour.push(0);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_dist = f64::INFINITY;
        for (city, &seen) in visited.iter().enumerate() {
            if !seen {
                let d = ev.distance(current, city);
                if d < next_dist {
                    next = city;
                    next_dist = d;
                }
            }
        }
        visited[next] = true;
        tour.push(next);
        current = next;
    }
    tour
}

/// First-improvement 2-opt with node 0 pinned at position 0.
fn two_opt(ev: &Evaluator<'_>, tour: &mut [usize]) {
    let n = tour.len();
    if n < 4 {
        return;
    }
    loop {
        let mut improved = false;
        for i in 0..n - 2 {
            let a = tour[i];
            let b = tour[i + 1];
            let d_ab = ev.distance(a, b);
            for j in (i + 2)..n {
                // edges (i, i+1) and (n-1, 0) share node 0
                if i == 0 && j == n - 1 {
                    continue;
                }
                let c = tour[j];
                let e = tour[(j + 1) % n];
                let delta = ev.distance(a, c) + ev.distance(b, e) - d_ab - ev.distance(c, e);
                if delta < 0.0 {
                    tour[i + 1..=j].reverse();
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Reorders `A B C D` into `A C B D` at three random cut points.
fn double_bridge(tour: &[usize], rng: &mut Rng) -> Vec<usize> {
    let n = tour.len();
    let mut cuts = [0usize; 3];
    loop {
        for cut in cuts.iter_mut() {
            *cut = rng.random_range(1..n);
        }
        cuts.sort_unstable();
        if cuts[0] < cuts[1] && cuts[1] < cuts[2] {
            break;
        }
    }
    let [p1, p2, p3] = cuts;
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&tour[..p1]);
    out.extend_from_slice(&tour[p2..p3]);
    out.extend_from_slice(&tour[p1..p2]);
    out.extend_from_slice(&tour[p3..]);
    out
}
