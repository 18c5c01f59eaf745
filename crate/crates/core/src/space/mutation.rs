//! Point-cloud mutation operators.
//!
//! Shared sampling conventions, with `e` the shorter side of the bounding box:
//!
//! * centres are uniform in the bounds;
//! * radii and strip half-widths are uniform in `[0.05 e, 0.3 e]`;
//! * subset operators pick a uniform random subset holding a fraction
//!   uniform in `[0.1, 0.3]` of the points (at least one);
//! * angles are uniform in `[0, 2 pi)`.
//!
//! Region-based operators (explosion, implosion, compression, expansion,
//! grid, rotation) only move points inside their sampled [`Region`]; every
//! other point is returned bit-identical. All outputs are repaired into the
//! bounds.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::bounds::{repair_point, Bounds2};
use crate::instance::Point;
use crate::seed::{rng_from_seed, Rng};

const RADIUS_RANGE: (f64, f64) = (0.05, 0.3);
const SUBSET_RANGE: (f64, f64) = (0.1, 0.3);
/// Mean extra push distance of explosion and expansion, relative to `e`.
const PUSH_MEAN: f64 = 0.1;
/// Shrink factor range of compression.
const COMPRESSION_RANGE: (f64, f64) = (0.1, 0.5);
/// Cluster spread range, relative to each axis extent.
const CLUSTER_SIGMA_RANGE: (f64, f64) = (0.01, 0.05);
/// Perpendicular jitter of linear projection, relative to `e`.
const PROJECTION_JITTER: f64 = 0.01;
/// Standard deviation of normal perturbation, relative to each axis extent.
pub const NORMAL_SIGMA: f64 = 0.025;
/// Inclusive range of grid cells per side.
pub const GRID_CELLS: (usize, usize) = (2, 10);

/// The mutation roster. Each operator is drawn with probability 1/10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationOperator {
    /// Points within a disc are pushed out to distance at least `r`.
    Explosion,
    /// Points within a disc are pulled towards its centre.
    Implosion,
    /// A random subset is relocated around a random centre.
    Cluster,
    /// Points within a strip are pulled towards its centre line.
    Compression,
    /// Points within a strip are pushed out of it.
    Expansion,
    /// Points within a square are snapped to a regular grid.
    Grid,
    /// A random subset is projected onto a random line.
    LinearProjection,
    /// Points within a disc are rotated about its centre.
    Rotation,
    /// A random subset is redrawn uniformly in the bounds.
    UniformReposition,
    /// A random subset receives Gaussian noise.
    NormalPerturbation,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 10] = [
        MutationOperator::Explosion,
        MutationOperator::Implosion,
        MutationOperator::Cluster,
        MutationOperator::Compression,
        MutationOperator::Expansion,
        MutationOperator::Grid,
        MutationOperator::LinearProjection,
        MutationOperator::Rotation,
        MutationOperator::UniformReposition,
        MutationOperator::NormalPerturbation,
    ];

    pub fn random(rng: &mut Rng) -> Self {
        Self::ALL[rng.random_range(0..Self::ALL.len())]
    }

    pub fn name(self) -> &'static str {
        match self {
            MutationOperator::Explosion => "explosion",
            MutationOperator::Implosion => "implosion",
            MutationOperator::Cluster => "cluster",
            MutationOperator::Compression => "compression",
            MutationOperator::Expansion => "expansion",
            MutationOperator::Grid => "grid",
            MutationOperator::LinearProjection => "linear-projection",
            MutationOperator::Rotation => "rotation",
            MutationOperator::UniformReposition => "uniform-reposition",
            MutationOperator::NormalPerturbation => "normal-perturbation",
        }
    }

    /// True for operators that only touch points inside a sampled region.
    pub fn is_region_based(self) -> bool {
        matches!(
            self,
            MutationOperator::Explosion
                | MutationOperator::Implosion
                | MutationOperator::Compression
                | MutationOperator::Expansion
                | MutationOperator::Grid
                | MutationOperator::Rotation
        )
    }

    /// Applies the operator and repairs the result into `bounds`.
    pub fn apply(self, points: &[Point], bounds: &Bounds2, rng: &mut Rng) -> MutationOutcome {
        let (unrepaired, region) = self.transform(points, bounds, rng);
        let points = unrepaired
            .iter()
            .map(|&p| repair_point(p, bounds, rng))
            .collect();
        MutationOutcome {
            points,
            unrepaired,
            region,
        }
    }

    fn transform(
        self,
        points: &[Point],
        bounds: &Bounds2,
        rng: &mut Rng,
    ) -> (Vec<Point>, Option<Region>) {
        let e = bounds.min_extent();
        let mut out = points.to_vec();
        if points.is_empty() {
            return (out, None);
        }
        let center = bounds.sample(rng);
        match self {
            MutationOperator::Explosion => {
                let radius = uniform(rng, RADIUS_RANGE) * e;
                let push = Exp::new(1.0 / (PUSH_MEAN * e)).expect("positive rate");
                let region = Region::Disc { center, radius };
                for p in out.iter_mut().filter(|p| region.contains(p)) {
                    let (ux, uy) = direction(center, *p, rng);
                    let dist = radius + push.sample(rng);
                    *p = Point::new(center.x + dist * ux, center.y + dist * uy);
                }
                (out, Some(region))
            }
            MutationOperator::Implosion => {
                let radius = uniform(rng, RADIUS_RANGE) * e;
                let region = Region::Disc { center, radius };
                for p in out.iter_mut().filter(|p| region.contains(p)) {
                    let t: f64 = rng.random();
                    *p = Point::new(
                        center.x + (p.x - center.x) * t,
                        center.y + (p.y - center.y) * t,
                    );
                }
                (out, Some(region))
            }
            MutationOperator::Compression => {
                let half_width = uniform(rng, RADIUS_RANGE) * e;
                let angle = rng.random_range(0.0..TAU);
                let factor = uniform(rng, COMPRESSION_RANGE);
                let region = Region::Strip {
                    center,
                    angle,
                    half_width,
                };
                let (nx, ny) = (-angle.sin(), angle.cos());
                for p in out.iter_mut().filter(|p| region.contains(p)) {
                    let h = (p.x - center.x) * nx + (p.y - center.y) * ny;
                    let shift = h * (factor - 1.0);
                    *p = Point::new(p.x + shift * nx, p.y + shift * ny);
                }
                (out, Some(region))
            }
            MutationOperator::Expansion => {
                let half_width = uniform(rng, RADIUS_RANGE) * e;
                let angle = rng.random_range(0.0..TAU);
                let push = Exp::new(1.0 / (PUSH_MEAN * e)).expect("positive rate");
                let region = Region::Strip {
                    center,
                    angle,
                    half_width,
                };
                let (nx, ny) = (-angle.sin(), angle.cos());
                for p in out.iter_mut().filter(|p| region.contains(p)) {
                    let h = (p.x - center.x) * nx + (p.y - center.y) * ny;
                    let side = if h > 0.0 || (h == 0.0 && rng.random_bool(0.5)) {
                        1.0
                    } else {
                        -1.0
                    };
                    let target = side * (half_width + push.sample(rng));
                    let shift = target - h;
                    *p = Point::new(p.x + shift * nx, p.y + shift * ny);
                }
                (out, Some(region))
            }
            MutationOperator::Grid => {
                let half_side = uniform(rng, RADIUS_RANGE) * e;
                let cells = rng.random_range(GRID_CELLS.0..=GRID_CELLS.1) as f64;
                let region = Region::Square { center, half_side };
                let step = 2.0 * half_side / cells;
                let snap = |v: f64, c: f64| {
                    let origin = c - half_side;
                    origin + ((v - origin) / step).round().clamp(0.0, cells) * step
                };
                for p in out.iter_mut().filter(|p| region.contains(p)) {
                    *p = Point::new(snap(p.x, center.x), snap(p.y, center.y));
                }
                (out, Some(region))
            }
            MutationOperator::Rotation => {
                let radius = uniform(rng, RADIUS_RANGE) * e;
                let angle = rng.random_range(0.0..TAU);
                let (sin, cos) = angle.sin_cos();
                let region = Region::Disc { center, radius };
                for p in out.iter_mut().filter(|p| region.contains(p)) {
                    let (dx, dy) = (p.x - center.x, p.y - center.y);
                    *p = Point::new(
                        center.x + dx * cos - dy * sin,
                        center.y + dx * sin + dy * cos,
                    );
                }
                (out, Some(region))
            }
            MutationOperator::Cluster => {
                let sx = uniform(rng, CLUSTER_SIGMA_RANGE) * bounds.x.extent();
                let sy = uniform(rng, CLUSTER_SIGMA_RANGE) * bounds.y.extent();
                let nx = Normal::new(center.x, sx).expect("finite sigma");
                let ny = Normal::new(center.y, sy).expect("finite sigma");
                for i in subset(points.len(), rng) {
                    out[i] = Point::new(nx.sample(rng), ny.sample(rng));
                }
                (out, None)
            }
            MutationOperator::LinearProjection => {
                let angle = rng.random_range(0.0..TAU);
                let (ux, uy) = (angle.cos(), angle.sin());
                let jitter = Normal::new(0.0, PROJECTION_JITTER * e).expect("finite sigma");
                for i in subset(points.len(), rng) {
                    let p = out[i];
                    let t = (p.x - center.x) * ux + (p.y - center.y) * uy;
                    let off = jitter.sample(rng);
                    out[i] = Point::new(center.x + t * ux - off * uy, center.y + t * uy + off * ux);
                }
                (out, None)
            }
            MutationOperator::UniformReposition => {
                for i in subset(points.len(), rng) {
                    out[i] = bounds.sample(rng);
                }
                (out, None)
            }
            MutationOperator::NormalPerturbation => {
                let nx = Normal::new(0.0, NORMAL_SIGMA * bounds.x.extent()).expect("finite sigma");
                let ny = Normal::new(0.0, NORMAL_SIGMA * bounds.y.extent()).expect("finite sigma");
                for i in subset(points.len(), rng) {
                    let p = out[i];
                    out[i] = Point::new(p.x + nx.sample(rng), p.y + ny.sample(rng));
                }
                (out, None)
            }
        }
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MutationOperator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| format!("unknown mutation operator '{s}'"))
    }
}

/// Where a region-based operator acted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// Closed disc.
    Disc { center: Point, radius: f64 },
    /// Points within `half_width` of the line through `center` at `angle`.
    Strip {
        center: Point,
        angle: f64,
        half_width: f64,
    },
    /// Closed axis-aligned square.
    Square { center: Point, half_side: f64 },
}

impl Region {
    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            Region::Disc { center, radius } => center.euclidean(p) <= radius,
            Region::Strip {
                center,
                angle,
                half_width,
            } => {
                ((p.x - center.x) * -angle.sin() + (p.y - center.y) * angle.cos()).abs()
                    <= half_width
            }
            Region::Square { center, half_side } => {
                (p.x - center.x).abs() <= half_side && (p.y - center.y).abs() <= half_side
            }
        }
    }
}

/// Result of applying an operator to a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationOutcome {
    /// Mutated and repaired points.
    pub points: Vec<Point>,
    /// Mutated points before boundary repair.
    pub unrepaired: Vec<Point>,
    /// Region of effect for region-based operators.
    pub region: Option<Region>,
}

/// Applies `operator` to `points` with a generator seeded from `seed`.
pub fn mutate_point_cloud(
    points: &[Point],
    operator: MutationOperator,
    bounds: &Bounds2,
    seed: u64,
) -> MutationOutcome {
    operator.apply(points, bounds, &mut rng_from_seed(seed))
}

fn uniform(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..hi)
}

/// Unit vector from `center` towards `p`, random if they coincide.
fn direction(center: Point, p: Point, rng: &mut Rng) -> (f64, f64) {
    let (dx, dy) = (p.x - center.x, p.y - center.y);
    let len = dx.hypot(dy);
    if len > 0.0 {
        (dx / len, dy / len)
    } else {
        let angle = rng.random_range(0.0..TAU);
        (angle.cos(), angle.sin())
    }
}

fn subset(len: usize, rng: &mut Rng) -> Vec<usize> {
    let fraction = uniform(rng, SUBSET_RANGE);
    let count = ((fraction * len as f64).round() as usize).clamp(1, len);
    let mut picked = sample_indices(rng, len, count).into_vec();
    picked.sort_unstable();
    picked
}
