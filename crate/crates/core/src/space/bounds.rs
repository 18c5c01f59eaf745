use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::instance::Point;
use crate::seed::Rng;

/// A real interval `[lo, hi]`, or `(lo, hi]` when `lo_open` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
}

impl Interval {
    pub const fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_open: false,
        }
    }

    pub const fn left_open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_open: true,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi
    }

    pub fn extent(&self) -> f64 {
        self.hi - self.lo
    }

    /// NaN is never contained.
    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_open {
            v > self.lo
        } else {
            v >= self.lo
        };
        above && v <= self.hi
    }

    /// Uniform draw from the interval.
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        if self.lo_open {
            // hi - [0, extent) lies in (lo, hi]
            let v = self.hi - rng.random_range(0.0..self.extent());
            if v > self.lo {
                v
            } else {
                self.hi
            }
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

/// An axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds2 {
    pub x: Interval,
    pub y: Interval,
}

impl Bounds2 {
    pub const fn square(lo: f64, hi: f64) -> Self {
        Bounds2 {
            x: Interval::closed(lo, hi),
            y: Interval::closed(lo, hi),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_valid() && self.y.is_valid()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.x.contains(p.x) && self.y.contains(p.y)
    }

    /// Shorter side length.
    pub fn min_extent(&self) -> f64 {
        self.x.extent().min(self.y.extent())
    }

    pub fn sample(&self, rng: &mut Rng) -> Point {
        let x = self.x.sample(rng);
        let y = self.y.sample(rng);
        Point::new(x, y)
    }
}

/// Returns `value` if it lies in `bounds`, otherwise a uniform draw from them.
pub fn repair(value: f64, bounds: &Interval, rng: &mut Rng) -> f64 {
    if bounds.contains(value) {
        value
    } else {
        bounds.sample(rng)
    }
}

/// Applies [`repair`] to each coordinate.
pub fn repair_point(p: Point, bounds: &Bounds2, rng: &mut Rng) -> Point {
    let x = repair(p.x, &bounds.x, rng);
    let y = repair(p.y, &bounds.y, rng);
    Point::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn in_bounds_values_untouched() {
        let mut rng = rng_from_seed(1);
        let b = Interval::closed(0.0, 1000.0);
        assert_eq!(repair(0.0, &b, &mut rng), 0.0);
        assert_eq!(repair(1000.0, &b, &mut rng), 1000.0);
        assert_eq!(repair(431.5, &b, &mut rng), 431.5);
        let p = Point::new(3.0, 4.0);
        assert_eq!(repair_point(p, &Bounds2::square(0.0, 10.0), &mut rng), p);
    }

    #[test]
    fn out_of_bounds_values_redrawn() {
        let mut rng = rng_from_seed(2);
        let b = Interval::closed(0.0, 1000.0);
        for v in [1005.0, -0.5, f64::NAN, f64::INFINITY] {
            let r = repair(v, &b, &mut rng);
            assert!(b.contains(r));
        }
        let p = repair_point(Point::new(-1.0, 5.0), &Bounds2::square(0.0, 10.0), &mut rng);
        assert!((0.0..=10.0).contains(&p.x));
        assert_eq!(p.y, 5.0);
    }

    #[test]
    fn open_lower_end_excludes_zero() {
        let mut rng = rng_from_seed(3);
        let w = Interval::left_open(0.0, 4040.0);
        assert!(!w.contains(0.0));
        assert!(w.contains(4040.0));
        for _ in 0..10_000 {
            let v = w.sample(&mut rng);
            assert!(v > 0.0 && v <= 4040.0);
        }
        assert!(repair(0.0, &w, &mut rng) > 0.0);
    }

    #[test]
    fn redraws_are_spread_over_the_interval() {
        let mut rng = rng_from_seed(4);
        let b = Interval::closed(0.0, 1000.0);
        let draws: Vec<f64> = (0..4000).map(|_| repair(2000.0, &b, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        // uniform mean 500, sd 288.7, standard error ~4.6
        assert!((mean - 500.0).abs() < 20.0);
        assert!(draws.iter().any(|&d| d < 100.0) && draws.iter().any(|&d| d > 900.0));
    }
}
