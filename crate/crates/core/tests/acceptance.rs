//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

use std::cmp::Ordering;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;

use ttp_evolve::evolve::{batch_evolve, EvolveConfig, FitnessKind, SolverOrder};
use ttp_evolve::features::{compute_features, mst_weight, schema};
use ttp_evolve::fitness::{
    actual_ranking, fitness_compare, fitness_explicit, fitness_no_order, median, FitnessValue,
    RankingSpec,
};
use ttp_evolve::io::{parse_instance, write_instance_string, RunRecord, WriteOptions};
use ttp_evolve::seed::{rng_from_seed, Rng};
use ttp_evolve::solvers::{solve, SolverBudget, SolverId, PORTFOLIO};
use ttp_evolve::space::{
    mutate_instance_with, random_instance, GenerationConfig, MutationOperator,
};
use ttp_evolve::{Item, Point, TtpInstance};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn explicit_worked_examples() -> Outcome {
    // ranking (3, 1, 2) in 1-based solver numbers
    let pi = RankingSpec::new(vec![2, 0, 1]).unwrap();
    let a = fitness_explicit(&[13.0, 10.0, 8.0], &pi).unwrap();
    let b = fitness_explicit(&[13.0, 10.0, 15.0], &pi).unwrap();
    let want_a = FitnessValue::Lex {
        good: 1,
        bad_sum: -5.0,
        good_sum: Some(3.0),
    };
    let want_b = FitnessValue::Lex {
        good: 2,
        bad_sum: 0.0,
        good_sum: Some(5.0),
    };
    ensure(a == want_a, || format!("first example gave {a}"))?;
    ensure(b == want_b, || format!("second example gave {b}"))?;
    ensure(fitness_compare(&b, &a) == Ordering::Greater, || {
        "second example does not compare greater".into()
    })?;
    Ok(format!("{a} < {b}"))
}

// ---------------------------------------------------------------- 2

fn median_examples() -> Outcome {
    let a = median(&[10.0, 10.0, 1.0, 1.0, 10.0]).unwrap();
    let b = median(&[10.0, 1.0, 1.0, 10.0, 1.0]).unwrap();
    ensure(a == 10.0 && b == 1.0, || format!("medians {a} and {b}"))?;
    Ok("10 and 1".into())
}

// ---------------------------------------------------------------- 3

fn small_instance(rng: &mut Rng) -> TtpInstance {
    let n = rng.random_range(3..=7);
    let m = rng.random_range(1..=8);
    let nodes = (0..n)
        .map(|_| {
            Point::new(
                rng.random_range(0..=100) as f64,
                rng.random_range(0..=100) as f64,
            )
        })
        .collect();
    let items: Vec<Item> = (0..m)
        .map(|_| Item {
            profit: rng.random_range(0..=100) as f64,
            weight: rng.random_range(1..=50) as f64,
            node: rng.random_range(1..n),
        })
        .collect();
    let total: f64 = items.iter().map(|i| i.weight).sum();
    let capacity = rng.random_range(1.0..=total).ceil();
    TtpInstance::new("small", nodes, items, capacity, rng.random_range(0.0..5.0))
        .expect("valid small instance")
}

/// Straight-line objective: walk the tour, carry the picked weight, pay rent.
fn oracle_objective(inst: &TtpInstance, tour: &[usize], packing: &[bool]) -> f64 {
    let nu = (inst.max_speed - inst.min_speed) / inst.capacity;
    let mut profit = 0.0;
    let mut carried = 0.0;
    let mut time = 0.0;
    for (step, &city) in tour.iter().enumerate() {
        for (k, item) in inst.items.iter().enumerate() {
            if packing[k] && item.node == city {
                profit += item.profit;
                carried += item.weight;
            }
        }
        let next = tour[(step + 1) % tour.len()];
        let (a, b) = (inst.nodes[city], inst.nodes[next]);
        let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt().ceil();
        time += d / (inst.max_speed - nu * carried);
    }
    profit - inst.renting_rate * time
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

fn evaluator_brute_force() -> Outcome {
    let mut rng = rng_from_seed(3);
    let mut worst_rel: f64 = 0.0;
    let mut evaluated = 0usize;
    for case in 0..200 {
        let inst = small_instance(&mut rng);
        let n = inst.num_nodes();
        let m = inst.num_items();
        let mut tours = Vec::new();
        permutations(&mut (1..n).collect(), 0, &mut tours);
        let mut best = f64::NEG_INFINITY;
        for rest in &tours {
            let tour: Vec<usize> = std::iter::once(0).chain(rest.iter().copied()).collect();
            for mask in 0u32..(1 << m) {
                let packing: Vec<bool> = (0..m).map(|k| mask >> k & 1 == 1).collect();
                let Ok(value) = inst.evaluate(&tour, &packing) else {
                    continue;
                };
                let oracle = oracle_objective(&inst, &tour, &packing);
                let rel = (value - oracle).abs() / oracle.abs().max(1.0);
                worst_rel = worst_rel.max(rel);
                ensure(rel <= 1e-12, || {
                    format!("case {case}: objective {value} vs oracle {oracle}")
                })?;
                best = best.max(value);
                evaluated += 1;
            }
        }
        for id in PORTFOLIO {
            let sol = solve(&inst, id, &SolverBudget::with_seed(case));
            ensure(sol.is_consistent(&inst), || {
                format!("case {case}: {id} inconsistent")
            })?;
            ensure(sol.objective <= best, || {
                format!(
                    "case {case}: {id} found {} above optimum {best}",
                    sol.objective
                )
            })?;
        }
    }
    Ok(format!(
        "{evaluated} feasible solutions, worst relative error {worst_rel:.1e}"
    ))
}

// ---------------------------------------------------------------- 4

fn scalar(v: FitnessValue) -> f64 {
    match v {
        FitnessValue::Scalar(x) => x,
        other => panic!("expected a scalar, got {other}"),
    }
}

fn no_order_properties() -> Outcome {
    let mut rng = rng_from_seed(4);
    for t in 0..10_000 {
        let p: [f64; 3] = if t % 2 == 0 {
            [0, 1, 2].map(|_| rng.random_range(-20..=20) as f64)
        } else {
            [0, 1, 2].map(|_| rng.random_range(-1e4..1e4))
        };
        let f = scalar(fitness_no_order(&p).unwrap());
        // order statistics by a compare-exchange network
        let [mut lo, mut mid, mut hi] = p;
        if lo > mid {
            std::mem::swap(&mut lo, &mut mid);
        }
        if mid > hi {
            std::mem::swap(&mut mid, &mut hi);
        }
        if lo > mid {
            std::mem::swap(&mut lo, &mut mid);
        }
        let direct = (mid - lo) * (hi - mid);
        ensure(f == direct, || format!("{p:?}: {f} vs direct {direct}"))?;
        ensure(f >= 0.0, || format!("{p:?}: negative {f}"))?;
        for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let q = perm.map(|i| p[i]);
            let g = scalar(fitness_no_order(&q).unwrap());
            ensure(g == f, || format!("{p:?} vs {q:?}: {f} != {g}"))?;
        }
        let tie = [p[0], p[1], p[t % 2]];
        let z = scalar(fitness_no_order(&tie).unwrap());
        ensure(z == 0.0, || format!("{tie:?}: tie gave {z}"))?;
    }
    Ok("10000 triples".into())
}

// ---------------------------------------------------------------- 5

fn explicit_phase_structure() -> Outcome {
    let mut rng = rng_from_seed(5);
    let mut lower: Vec<FitnessValue> = Vec::new();
    let mut upper: Vec<FitnessValue> = Vec::new();
    for t in 0..10_000 {
        let n = 3 + t % 3;
        let p: Vec<f64> = (0..n)
            .map(|_| {
                if t % 2 == 0 {
                    rng.random_range(0..=5) as f64
                } else {
                    rng.random_range(-1e3..1e3)
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let pi = RankingSpec::new(order.clone()).unwrap();
        let value = fitness_explicit(&p, &pi).unwrap();
        let FitnessValue::Lex {
            good,
            bad_sum,
            good_sum,
        } = value
        else {
            return Err("explicit fitness is not lexicographic".into());
        };
        // independent recomputation of (|G|, f_B, f_G)
        let diffs: Vec<f64> = order.windows(2).map(|w| p[w[0]] - p[w[1]]).collect();
        let g: Vec<f64> = diffs.iter().copied().filter(|d| *d >= 0.0).collect();
        let b: Vec<f64> = diffs.iter().copied().filter(|d| *d < 0.0).collect();
        ensure(good == g.len(), || format!("{p:?} {order:?}: |G| {good}"))?;
        ensure(bad_sum == b.iter().sum::<f64>(), || {
            format!("{p:?}: f_B {bad_sum}")
        })?;
        let want_g = if g.is_empty() {
            None
        } else {
            Some(g.iter().sum::<f64>())
        };
        ensure(good_sum == want_g, || format!("{p:?}: f_G {good_sum:?}"))?;

        ensure(bad_sum <= 0.0, || format!("{p:?}: f_B {bad_sum} > 0"))?;
        ensure((bad_sum == 0.0) == (good == n - 1), || {
            format!("{p:?} {order:?}: f_B {bad_sum} with |G| {good}")
        })?;
        if actual_ranking(&p) == pi {
            ensure(bad_sum == 0.0, || {
                format!("{p:?}: actual ranking but f_B {bad_sum}")
            })?;
        }
        if n == 3 {
            if good == n - 1 {
                upper.push(value);
            } else {
                lower.push(value);
            }
        }
    }
    let max_of = |values: &[FitnessValue], want: Ordering| {
        values.iter().copied().reduce(|a, b| {
            if fitness_compare(&b, &a) == want {
                b
            } else {
                a
            }
        })
    };
    let (Some(top_lower), Some(bottom_upper)) = (
        max_of(&lower, Ordering::Greater),
        max_of(&upper, Ordering::Less),
    ) else {
        return Err("a phase was never sampled".into());
    };
    ensure(
        fitness_compare(&top_lower, &bottom_upper) == Ordering::Less,
        || format!("{top_lower} is not below {bottom_upper}"),
    )?;
    Ok(format!(
        "10000 pairs; best unordered {top_lower} < worst ordered {bottom_upper}"
    ))
}

// ---------------------------------------------------------------- 6

fn check_mutant(
    before: &TtpInstance,
    after: &TtpInstance,
    config: &GenerationConfig,
) -> Result<(), String> {
    after.validate().map_err(|e| e.to_string())?;
    ensure(after.num_nodes() == before.num_nodes(), || {
        "node count changed".into()
    })?;
    ensure(after.num_items() == before.num_items(), || {
        "item count changed".into()
    })?;
    ensure(
        after
            .items
            .iter()
            .zip(&before.items)
            .all(|(a, b)| a.node == b.node),
        || "availability changed".into(),
    )?;
    ensure(
        after.nodes.iter().all(|p| config.coord_bounds.contains(p)),
        || "node outside bounds".into(),
    )?;
    ensure(
        after.items.iter().all(|i| {
            config.weight_bounds.contains(i.weight) && config.profit_bounds.contains(i.profit)
        }),
        || "item outside bounds".into(),
    )?;
    ensure(config.rent_bounds.contains(after.renting_rate), || {
        format!("renting rate {}", after.renting_rate)
    })?;
    ensure(after.capacity <= after.total_item_weight(), || {
        "capacity above total weight".into()
    })?;
    Ok(())
}

fn same_bits(a: &Point, b: &Point) -> bool {
    a.x.to_bits() == b.x.to_bits() && a.y.to_bits() == b.y.to_bits()
}

fn mutation_closure() -> Outcome {
    let mut pool = Vec::new();
    for (i, ipn) in [1, 3, 5, 10].into_iter().enumerate() {
        for n in [3, 8, 25] {
            let mut config = GenerationConfig::new(n, ipn);
            config.integer_items = i % 2 == 1;
            let seed = (n * 100 + ipn) as u64;
            pool.push((random_instance(&config, seed), config));
        }
    }
    let mut untouched = 0usize;
    for t in 0..100_000usize {
        let (instance, config) = &pool[t % pool.len()];
        let node_op = MutationOperator::ALL[t % 10];
        let item_op = MutationOperator::ALL[(t / 10) % 10];
        let mut rng = rng_from_seed(t as u64);
        let (mutant, report) = mutate_instance_with(instance, config, node_op, item_op, &mut rng);
        check_mutant(instance, &mutant, config).map_err(|e| format!("triple {t}: {e}"))?;
        ensure(
            node_op.is_region_based() == report.node_region.is_some(),
            || format!("triple {t}: {node_op} region report"),
        )?;
        if let Some(region) = report.node_region {
            for (old, new) in instance.nodes.iter().zip(&mutant.nodes) {
                if !region.contains(old) {
                    ensure(same_bits(old, new), || {
                        format!("triple {t}: {node_op} moved a node")
                    })?;
                    untouched += 1;
                }
            }
        }
        if let Some(region) = report.item_region {
            for (old, new) in instance.items.iter().zip(&mutant.items) {
                let old = Point::new(old.weight, old.profit);
                if !region.contains(&old) {
                    let new = Point::new(new.weight, new.profit);
                    ensure(same_bits(&old, &new), || {
                        format!("triple {t}: {item_op} moved an item")
                    })?;
                    untouched += 1;
                }
            }
        }
    }
    Ok(format!(
        "100000 mutants valid, {untouched} out-of-region points unchanged"
    ))
}

// ---------------------------------------------------------------- 7

fn all_rankings() -> Vec<SolverOrder> {
    let mut out = Vec::new();
    permutations(&mut vec![0, 1, 2], 0, &mut out);
    out.into_iter()
        .map(|p| SolverOrder(p.into_iter().map(|i| PORTFOLIO[i]).collect()))
        .collect()
}

fn parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn elitism_and_replay() -> Outcome {
    let rankings = all_rankings();
    let configs: Vec<EvolveConfig> = (0..100u64)
        .map(|i| {
            let r = &rankings[(i / 3) as usize % rankings.len()];
            let fitness = match i % 3 {
                0 => FitnessKind::Explicit { ranking: r.clone() },
                1 => FitnessKind::Pairwise {
                    easy: r.0[0],
                    hard: r.0[1],
                },
                _ => FitnessKind::NoOrder,
            };
            let mut config = EvolveConfig::new(fitness, 7_000 + i);
            config.generation = GenerationConfig::new(50, 1);
            config.max_iterations = 200;
            config
        })
        .collect();
    let started = Instant::now();
    let outcome = batch_evolve(&configs, parallelism());
    let mut accepted = 0usize;
    for (i, (config, result)) in configs.iter().zip(&outcome.results).enumerate() {
        let result = result
            .as_ref()
            .map_err(|e| format!("job {i} failed: {e}"))?;
        ensure(
            result.iterations == 200 && result.trajectory.len() == 201,
            || format!("job {i}: {} iterations", result.iterations),
        )?;
        for w in result.trajectory.windows(2) {
            ensure(
                fitness_compare(&w[1].fitness, &w[0].fitness) != Ordering::Less,
                || format!("job {i}: fitness fell at iteration {}", w[1].iteration),
            )?;
        }
        accepted += result
            .trajectory
            .iter()
            .skip(1)
            .filter(|r| r.accepted)
            .count();
        let line = RunRecord::new(config, result, started.elapsed()).to_json_line();
        let record = RunRecord::from_json_line(&line).map_err(|e| e.to_string())?;
        let replay = record.replay().map_err(|e| e.to_string())?;
        ensure(&replay == result, || format!("job {i}: replay differs"))?;
        ensure(record.matches(&replay).map_err(|e| e.to_string())?, || {
            format!("job {i}: record does not match replay")
        })?;
    }
    Ok(format!(
        "100 jobs x 200 iterations monotone, {accepted} acceptances, all replays identical ({:.0?})",
        started.elapsed()
    ))
}

// ---------------------------------------------------------------- 8

fn dominance_asymmetry() -> Outcome {
    let mut configs = Vec::new();
    for (d, (easy, hard)) in [(SolverId::C2, SolverId::S2), (SolverId::S2, SolverId::C2)]
        .into_iter()
        .enumerate()
    {
        for ipn in [1, 3] {
            for j in 0..10u64 {
                let mut config = EvolveConfig::new(
                    FitnessKind::Pairwise { easy, hard },
                    80_000 + 100 * d as u64 + 10 * ipn as u64 + j,
                );
                config.generation = GenerationConfig::new(50, ipn);
                config.max_iterations = 500;
                configs.push(config);
            }
        }
    }
    let started = Instant::now();
    let outcome = batch_evolve(&configs, parallelism());
    ensure(outcome.summary.failed == 0, || {
        format!("{} jobs failed", outcome.summary.failed)
    })?;
    let rate = |target: &str| {
        outcome
            .summary
            .success_rate("pairwise", target)
            .unwrap_or(0.0)
    };
    let (c2, s2) = (rate("C2>S2"), rate("S2>C2"));
    let detail = format!(
        "C2>S2 {:.0}% vs S2>C2 {:.0}% over 20 jobs each ({:.0?})",
        100.0 * c2,
        100.0 * s2,
        started.elapsed()
    );
    ensure(c2 >= s2, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 9

/// Every labelled tree on `n` vertices via its Pruefer sequence.
fn brute_force_mst(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return points[0].ceil_distance(&points[1]);
    }
    let mut best = f64::INFINITY;
    let mut seq = vec![0usize; n - 2];
    loop {
        let mut degree = vec![1usize; n];
        for &v in &seq {
            degree[v] += 1;
        }
        let mut total = 0.0;
        for &v in &seq {
            let leaf = (0..n).find(|&u| degree[u] == 1).unwrap();
            total += points[leaf].ceil_distance(&points[v]);
            degree[leaf] -= 1;
            degree[v] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
        total += points[rest[0]].ceil_distance(&points[rest[1]]);
        best = best.min(total);
        // next sequence in base n
        let mut i = 0;
        while i < seq.len() {
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == seq.len() {
            return best;
        }
    }
}

fn feature_oracle() -> Outcome {
    let mut rng = rng_from_seed(9);
    for c in 0..100 {
        let n = 2 + c % 6;
        let cloud: Vec<Point> = (0..n)
            .map(|_| {
                if c % 2 == 0 {
                    Point::new(
                        rng.random_range(0..=30) as f64,
                        rng.random_range(0..=30) as f64,
                    )
                } else {
                    Point::new(rng.random_range(0.0..1e4), rng.random_range(0.0..1e4))
                }
            })
            .collect();
        let (fast, slow) = (mst_weight(&cloud), brute_force_mst(&cloud));
        ensure(fast == slow, || format!("cloud {c}: MST {fast} vs {slow}"))?;
    }
    let mut lengths = Vec::new();
    for ipn in [1, 3, 5, 10] {
        for n in [3, 20, 60] {
            lengths
                .push(compute_features(&random_instance(&GenerationConfig::new(n, ipn), 1)).len());
        }
    }
    ensure(lengths.iter().all(|&l| l == schema().len()), || {
        format!("lengths {lengths:?}")
    })?;
    Ok(format!(
        "100 clouds exact, schema length {}",
        schema().len()
    ))
}

// ---------------------------------------------------------------- 10

fn file_round_trip() -> Outcome {
    let mut rng = rng_from_seed(10);
    for i in 0..1000u64 {
        let mut config =
            GenerationConfig::new(rng.random_range(3..=120), [1, 3, 5, 10][i as usize % 4]);
        config.integer_items = i % 3 == 0;
        let inst = random_instance(&config, i);
        let first = write_instance_string(&inst, WriteOptions::default());
        let back = parse_instance(&first).map_err(|e| format!("instance {i}: {e}"))?;
        ensure(back == inst, || format!("instance {i}: read differs"))?;
        let second = write_instance_string(&back, WriteOptions::default());
        ensure(first == second, || {
            format!("instance {i}: second serialisation differs")
        })?;
    }
    Ok("1000 instances byte-identical".into())
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("explicit-ranking worked examples", explicit_worked_examples),
        ("median aggregation examples", median_examples),
        ("evaluator brute-force equivalence", evaluator_brute_force),
        ("no-order fitness properties", no_order_properties),
        ("explicit-ranking phase structure", explicit_phase_structure),
        ("mutation closure", mutation_closure),
        ("elitism and replay", elitism_and_replay),
        ("C2/S2 dominance asymmetry", dominance_asymmetry),
        ("feature oracle", feature_oracle),
        ("file format round trip", file_round_trip),
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {number:>2} {name}: {detail} [{}]", secs(took)),
            Err(detail) => {
                failed += 1;
                println!("FAIL {number:>2} {name}: {detail} [{}]", secs(took));
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
