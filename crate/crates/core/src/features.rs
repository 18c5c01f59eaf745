//! Instance features for external analysis.
//!
//! Both the node coordinates (`tsp_` block) and the `(weight, profit)` pairs
//! of the items (`kp_` block) are treated as point clouds. Each block holds,
//! in this order:
//!
//! | name | meaning |
//! |------|---------|
//! | `mst_min`, `mst_max`, `mst_mean`, `mst_median`, `mst_sd`, `mst_sum` | edge weights of a minimum spanning tree |
//! | `mst_depth_max`, `mst_depth_mean` | hop depth of the tree rooted at the first point |
//! | `dist_min`, `dist_max`, `dist_mean`, `dist_median`, `dist_sd` | all pairwise distances |
//! | `dist_max_min_ratio` | `dist_max / dist_min`, infinite with duplicates |
//! | `mst_cv` | `mst_sd / mst_mean` |
//! | `duplicate_fraction` | share of points equal to an earlier point |
//! | `knn{k}_weak`, `knn{k}_strong` for k = 3, 5, 7 | components of the directed k-nearest-neighbour graph |
//! | `degenerate` | 1 if all points coincide |
//! | `nonfinite` | number of entries of the block replaced by [`SENTINEL`] |
//!
//! followed by the scalar features `ttp_renting_rate`, `ttp_capacity`,
//! `ttp_capacity_ratio`, `ttp_num_items`, `ttp_num_nodes` and
//! `ttp_items_per_node`.
//!
//! Distances are rounded up like tour distances. Medians take the lower
//! middle element. Neighbours are ordered by exact Euclidean distance with
//! ties broken by index.

use std::sync::OnceLock;

use petgraph::algo::{connected_components, kosaraju_scc};
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fitness::median;
use crate::instance::{Point, TtpInstance};

/// Replacement for non-finite feature values.
pub const SENTINEL: f64 = -1.0;

/// Neighbourhood sizes of the k-NN graphs.
pub const KNN_SIZES: [usize; 3] = [3, 5, 7];

const CLOUD_FEATURES: [&str; 16] = [
    "mst_min",
    "mst_max",
    "mst_mean",
    "mst_median",
    "mst_sd",
    "mst_sum",
    "mst_depth_max",
    "mst_depth_mean",
    "dist_min",
    "dist_max",
    "dist_mean",
    "dist_median",
    "dist_sd",
    "dist_max_min_ratio",
    "mst_cv",
    "duplicate_fraction",
];

const SCALAR_FEATURES: [&str; 6] = [
    "ttp_renting_rate",
    "ttp_capacity",
    "ttp_capacity_ratio",
    "ttp_num_items",
    "ttp_num_nodes",
    "ttp_items_per_node",
];

fn cloud_schema(prefix: &str) -> Vec<String> {
    let mut names: Vec<String> = CLOUD_FEATURES
        .iter()
        .map(|f| format!("{prefix}{f}"))
        .collect();
    for k in KNN_SIZES {
        names.push(format!("{prefix}knn{k}_weak"));
        names.push(format!("{prefix}knn{k}_strong"));
    }
    names.push(format!("{prefix}degenerate"));
    names.push(format!("{prefix}nonfinite"));
    names
}

/// Feature names in output order. Identical for every instance.
pub fn schema() -> &'static [String] {
    static SCHEMA: OnceLock<Vec<String>> = OnceLock::new();
    SCHEMA.get_or_init(|| {
        let mut names = cloud_schema("tsp_");
        names.extend(cloud_schema("kp_"));
        names.extend(SCALAR_FEATURES.iter().map(|s| s.to_string()));
        names
    })
}

/// Feature values of one instance, ordered like [`schema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub instance: String,
    pub values: Vec<f64>,
    /// Names of entries that were non-finite and hold [`SENTINEL`].
    pub flagged: Vec<String>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        schema()
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn ceil_distances(points: &[Point]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| a.ceil_distance(b)).collect())
        .collect()
}

/// Prim's algorithm on a dense distance matrix.
///
/// Returns the parent of every point (`None` for the root, point 0) and the
/// weight of the edge to it.
pub fn minimum_spanning_tree(dist: &[Vec<f64>]) -> Vec<Option<(usize, f64)>> {
    let n = dist.len();
    let mut parent = vec![None; n];
    if n == 0 {
        return parent;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut via = vec![0usize; n];
    in_tree[0] = true;
    best[1..].copy_from_slice(&dist[0][1..]);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
            .expect("a point outside the tree");
        in_tree[next] = true;
        parent[next] = Some((via[next], best[next]));
        for j in 0..n {
            if !in_tree[j] && dist[next][j] < best[j] {
                best[j] = dist[next][j];
                via[j] = next;
            }
        }
    }
    parent
}

/// Total weight of a minimum spanning tree.
pub fn mst_weight(points: &[Point]) -> f64 {
    minimum_spanning_tree(&ceil_distances(points))
        .iter()
        .flatten()
        .map(|&(_, w)| w)
        .sum()
}

fn depths(parent: &[Option<(usize, f64)>]) -> Vec<usize> {
    let mut depth: Vec<Option<usize>> = vec![None; parent.len()];
    for start in 0..parent.len() {
        let mut chain = Vec::new();
        let mut v = start;
        let base = loop {
            if let Some(d) = depth[v] {
                break d;
            }
            match parent[v] {
                Some((p, _)) => {
                    chain.push(v);
                    v = p;
                }
                None => {
                    depth[v] = Some(0);
                    break 0;
                }
            }
        };
        for (i, &u) in chain.iter().rev().enumerate() {
            depth[u] = Some(base + i + 1);
        }
    }
    depth.into_iter().map(|d| d.unwrap_or(0)).collect()
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn extremes(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// The `k` nearest neighbours of every point, closest first.
fn nearest_neighbours(points: &[Point], k: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let k = k.min(n.saturating_sub(1));
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let by_distance = |a: &usize, b: &usize| {
                p.euclidean(&points[*a])
                    .total_cmp(&p.euclidean(&points[*b]))
                    .then(a.cmp(b))
            };
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            if k < others.len() {
                others.select_nth_unstable_by(k, by_distance);
                others.truncate(k);
            }
            others.sort_by(by_distance);
            others
        })
        .collect()
}

fn components(neighbours: &[Vec<usize>], k: usize) -> (usize, usize) {
    let n = neighbours.len();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * k);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for (i, list) in neighbours.iter().enumerate() {
        for &j in list.iter().take(k) {
            graph.add_edge(nodes[i], nodes[j], ());
        }
    }
    (connected_components(&graph), kosaraju_scc(&graph).len())
}

/// Weak and strong component counts of the directed k-NN graph.
pub fn knn_components(points: &[Point], k: usize) -> (usize, usize) {
    components(&nearest_neighbours(points, k), k)
}

fn cloud_features(points: &[Point]) -> Vec<f64> {
    let degenerate = points.windows(2).all(|w| w[0] == w[1]);
    let n = points.len();
    let mut out = Vec::with_capacity(CLOUD_FEATURES.len() + 2 * KNN_SIZES.len() + 2);
    let duplicates = (1..n).filter(|&i| points[..i].contains(&points[i])).count();
    let duplicate_fraction = if n > 0 {
        duplicates as f64 / n as f64
    } else {
        0.0
    };

    if degenerate {
        out.extend([0.0; 15]);
        out.push(duplicate_fraction);
        out.extend(std::iter::repeat_n(1.0, 2 * KNN_SIZES.len()));
        out.push(1.0);
        return out;
    }

    let dist = ceil_distances(points);
    let tree = minimum_spanning_tree(&dist);
    let edges: Vec<f64> = tree.iter().flatten().map(|&(_, w)| w).collect();
    let (mst_min, mst_max) = extremes(&edges);
    let (mst_mean, mst_sd) = mean_sd(&edges);
    let depth: Vec<f64> = depths(&tree).into_iter().map(|d| d as f64).collect();
    let (_, depth_max) = extremes(&depth);
    let (depth_mean, _) = mean_sd(&depth);

    let pairs: Vec<f64> = (0..n)
        .flat_map(|i| dist[i][i + 1..].iter().copied())
        .collect();
    let (dist_min, dist_max) = extremes(&pairs);
    let (dist_mean, dist_sd) = mean_sd(&pairs);

    out.extend([
        mst_min,
        mst_max,
        mst_mean,
        median(&edges).unwrap_or(0.0),
        mst_sd,
        edges.iter().sum(),
        depth_max,
        depth_mean,
        dist_min,
        dist_max,
        dist_mean,
        median(&pairs).unwrap_or(0.0),
        dist_sd,
        dist_max / dist_min,
        mst_sd / mst_mean,
        duplicate_fraction,
    ]);
    let neighbours = nearest_neighbours(points, KNN_SIZES[KNN_SIZES.len() - 1]);
    for k in KNN_SIZES {
        let (weak, strong) = components(&neighbours, k);
        out.push(weak as f64);
        out.push(strong as f64);
    }
    out.push(0.0);
    out
}

fn sanitize(values: &mut [f64], names: &[String], flagged: &mut Vec<String>) -> usize {
    let mut count = 0;
    for (v, name) in values.iter_mut().zip(names) {
        if !v.is_finite() {
            *v = SENTINEL;
            flagged.push(name.clone());
            count += 1;
        }
    }
    count
}

/// Computes the feature vector of `instance`.
pub fn compute_features(instance: &TtpInstance) -> FeatureVector {
    let names = schema();
    let block = names.len() - SCALAR_FEATURES.len();
    let half = block / 2;
    let item_cloud: Vec<Point> = instance
        .items
        .iter()
        .map(|item| Point::new(item.weight, item.profit))
        .collect();

    let mut values = Vec::with_capacity(names.len());
    let mut flagged = Vec::new();
    for (offset, cloud) in [(0, &instance.nodes), (half, &item_cloud)] {
        let mut v = cloud_features(cloud);
        let count = sanitize(&mut v, &names[offset..offset + half - 1], &mut flagged);
        v.push(count as f64);
        values.extend(v);
    }
    let total = instance.total_item_weight();
    let mut scalars = vec![
        instance.renting_rate,
        instance.capacity,
        instance.capacity / total,
        instance.num_items() as f64,
        instance.num_nodes() as f64,
        instance.items_per_node(),
    ];
    sanitize(&mut scalars, &names[block..], &mut flagged);
    values.extend(scalars);
    debug_assert_eq!(values.len(), names.len());
    FeatureVector {
        instance: instance.name.clone(),
        values,
        flagged,
    }
}

/// [`compute_features`] over many instances in parallel, in input order.
pub fn compute_features_batch(instances: &[TtpInstance]) -> Vec<FeatureVector> {
    instances.par_iter().map(compute_features).collect()
}
