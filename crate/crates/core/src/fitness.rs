//! Performance aggregation and the fitness functions that drive evolution.
//!
//! Solver performances are medians over repeated runs, larger is better.
//! Three fitness functions turn a vector of medians `p` into something the EA
//! maximises:
//!
//! * [`fitness_pairwise`]: `p[easy] - p[hard]` for one ordered solver pair;
//! * [`fitness_no_order`]: with `p(1) <= ... <= p(N)` the order statistics,
//!   `sum_{i=2}^{N-1} (p(i) - p(i-1)) * (p(i+1) - p(i))`; large when all
//!   adjacent gaps are large, regardless of which solver wins;
//! * [`fitness_explicit`]: the lexicographic vector `(|G|, f_B, f_G)` for a
//!   desired ranking `pi`. An adjacent pair `(pi(i), pi(i+1))` is *good* when
//!   `p[pi(i)] >= p[pi(i+1)]` and *bad* otherwise; `f_B` sums the (negative)
//!   differences over bad pairs and is `0` when there are none, `f_G` sums the
//!   differences over good pairs and is minus infinity when there are none.
//!
//! Solver indices are 0-based positions in the evaluated portfolio.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitnessError {
    #[error("no-order fitness needs at least 3 performances, got {0}")]
    TooFewSolvers(usize),
    #[error("ranking {0:?} is not a permutation of 0..{1}")]
    NotAPermutation(Vec<usize>, usize),
    #[error("ranking covers {ranking} solvers but {medians} medians were given")]
    SizeMismatch { ranking: usize, medians: usize },
    #[error("pairwise fitness needs two distinct solvers within 0..{len}, got {easy} and {hard}")]
    BadPair {
        easy: usize,
        hard: usize,
        len: usize,
    },
    #[error("cannot aggregate an empty score row")]
    EmptyRow,
}

/// Median of a score row. For even lengths the lower middle element is used,
/// so the aggregate is always a score that was actually observed.
pub fn median(row: &[f64]) -> Result<f64, FitnessError> {
    if row.is_empty() {
        return Err(FitnessError::EmptyRow);
    }
    let mut sorted = row.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[(sorted.len() - 1) / 2])
}

/// Per-row medians of a solver-by-run score matrix.
pub fn aggregate(scores: &[Vec<f64>]) -> Result<Vec<f64>, FitnessError> {
    scores.iter().map(|row| median(row)).collect()
}

/// Scores of several solvers over `k` runs each, plus their medians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceProfile {
    /// `scores[i][r]` is the objective of solver `i` in run `r`.
    pub scores: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
}

impl PerformanceProfile {
    /// Builds a profile; every row must be non-empty and all rows equally long.
    pub fn from_scores(scores: Vec<Vec<f64>>) -> Result<Self, FitnessError> {
        let medians = aggregate(&scores)?;
        Ok(PerformanceProfile { scores, medians })
    }

    pub fn num_solvers(&self) -> usize {
        self.scores.len()
    }

    pub fn runs(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }
}

/// A desired ranking: `order[0]` should perform best, `order[N-1]` worst.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RankingSpec {
    order: Vec<usize>,
}

impl RankingSpec {
    pub fn new(order: Vec<usize>) -> Result<Self, FitnessError> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(FitnessError::NotAPermutation(order, n));
            }
        }
        Ok(RankingSpec { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

impl TryFrom<Vec<usize>> for RankingSpec {
    type Error = FitnessError;

    fn try_from(order: Vec<usize>) -> Result<Self, Self::Error> {
        RankingSpec::new(order)
    }
}

impl From<RankingSpec> for Vec<usize> {
    fn from(r: RankingSpec) -> Self {
        r.order
    }
}

/// A fitness value. Only values of the same kind are comparable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessValue {
    Scalar(f64),
    /// `(|G|, f_B, f_G)`; `good_sum` is `None` when `G` is empty, which
    /// stands for minus infinity and compares below every real number.
    Lex {
        good: usize,
        bad_sum: f64,
        good_sum: Option<f64>,
    },
}

fn cmp_real(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or_else(|| a.total_cmp(&b))
}

impl FitnessValue {
    /// Total order within one kind; `None` for mixed kinds.
    pub fn try_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (FitnessValue::Scalar(a), FitnessValue::Scalar(b)) => Some(cmp_real(*a, *b)),
            (
                FitnessValue::Lex {
                    good: g1,
                    bad_sum: b1,
                    good_sum: s1,
                },
                FitnessValue::Lex {
                    good: g2,
                    bad_sum: b2,
                    good_sum: s2,
                },
            ) => Some(
                g1.cmp(g2)
                    .then_with(|| cmp_real(*b1, *b2))
                    .then_with(|| match (s1, s2) {
                        (None, None) => Ordering::Equal,
                        (None, Some(_)) => Ordering::Less,
                        (Some(_), None) => Ordering::Greater,
                        (Some(a), Some(b)) => cmp_real(*a, *b),
                    }),
            ),
            _ => None,
        }
    }
}

impl PartialOrd for FitnessValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.try_cmp(other)
    }
}

impl fmt::Display for FitnessValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitnessValue::Scalar(v) => write!(f, "{v}"),
            FitnessValue::Lex {
                good,
                bad_sum,
                good_sum,
            } => match good_sum {
                Some(s) => write!(f, "({good}, {bad_sum}, {s})"),
                None => write!(f, "({good}, {bad_sum}, -inf)"),
            },
        }
    }
}

/// Compares two fitness values of the same kind.
///
/// # Panics
///
/// Panics when a scalar is compared with a lexicographic value; the EA never
/// mixes fitness kinds within one run.
pub fn fitness_compare(a: &FitnessValue, b: &FitnessValue) -> Ordering {
    a.try_cmp(b)
        .unwrap_or_else(|| panic!("cannot compare fitness values of different kinds: {a} vs {b}"))
}

/// `p[easy] - p[hard]`.
pub fn fitness_pairwise(
    medians: &[f64],
    easy: usize,
    hard: usize,
) -> Result<FitnessValue, FitnessError> {
    let len = medians.len();
    if easy == hard || easy >= len || hard >= len {
        return Err(FitnessError::BadPair { easy, hard, len });
    }
    Ok(FitnessValue::Scalar(medians[easy] - medians[hard]))
}

/// Sum of products of adjacent gaps between the sorted performances.
pub fn fitness_no_order(medians: &[f64]) -> Result<FitnessValue, FitnessError> {
    if medians.len() < 3 {
        return Err(FitnessError::TooFewSolvers(medians.len()));
    }
    let mut sorted = medians.to_vec();
    sorted.sort_by(f64::total_cmp);
    let value = sorted
        .windows(3)
        .map(|w| (w[1] - w[0]) * (w[2] - w[1]))
        .sum();
    Ok(FitnessValue::Scalar(value))
}

/// Lexicographic fitness `(|G|, f_B, f_G)` for the desired `ranking`.
pub fn fitness_explicit(
    medians: &[f64],
    ranking: &RankingSpec,
) -> Result<FitnessValue, FitnessError> {
    if ranking.len() != medians.len() {
        return Err(FitnessError::SizeMismatch {
            ranking: ranking.len(),
            medians: medians.len(),
        });
    }
    let mut good = 0;
    let mut bad_sum = 0.0;
    let mut good_sum = None;
    for pair in ranking.order().windows(2) {
        let diff = medians[pair[0]] - medians[pair[1]];
        if medians[pair[0]] >= medians[pair[1]] {
            good += 1;
            good_sum = Some(good_sum.unwrap_or(0.0) + diff);
        } else {
            bad_sum += diff;
        }
    }
    Ok(FitnessValue::Lex {
        good,
        bad_sum,
        good_sum,
    })
}

/// Solvers sorted by descending median; ties go to the lower index.
pub fn actual_ranking(medians: &[f64]) -> RankingSpec {
    let mut order: Vec<usize> = (0..medians.len()).collect();
    order.sort_by(|&a, &b| cmp_real(medians[b], medians[a]).then(a.cmp(&b)));
    RankingSpec { order }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(good: usize, bad_sum: f64, good_sum: Option<f64>) -> FitnessValue {
        FitnessValue::Lex {
            good,
            bad_sum,
            good_sum,
        }
    }

    fn pi(order: &[usize]) -> RankingSpec {
        RankingSpec::new(order.to_vec()).unwrap()
    }

    #[test]
    fn medians_of_bimodal_rows() {
        assert_eq!(median(&[10.0, 10.0, 1.0, 1.0, 10.0]).unwrap(), 10.0);
        assert_eq!(median(&[10.0, 1.0, 1.0, 10.0, 1.0]).unwrap(), 1.0);
        assert_eq!(median(&[4.5; 7]).unwrap(), 4.5);
        assert_eq!(median(&[3.0, 1.0, 4.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[]), Err(FitnessError::EmptyRow));
    }

    #[test]
    fn pairwise_difference() {
        let p = [13.0, 10.0, 8.0];
        assert_eq!(
            fitness_pairwise(&p, 0, 2).unwrap(),
            FitnessValue::Scalar(5.0)
        );
        assert_eq!(
            fitness_pairwise(&p, 2, 0).unwrap(),
            FitnessValue::Scalar(-5.0)
        );
        assert_eq!(
            fitness_pairwise(&[7.0, 7.0], 0, 1).unwrap(),
            FitnessValue::Scalar(0.0)
        );
        assert!(fitness_pairwise(&p, 1, 1).is_err());
        assert!(fitness_pairwise(&p, 0, 3).is_err());
    }

    #[test]
    fn no_order_gap_product() {
        assert_eq!(
            fitness_no_order(&[8.0, 10.0, 13.0]).unwrap(),
            FitnessValue::Scalar(6.0)
        );
        assert_eq!(
            fitness_no_order(&[13.0, 8.0, 10.0]).unwrap(),
            FitnessValue::Scalar(6.0)
        );
        assert_eq!(
            fitness_no_order(&[5.0, 9.0, 5.0]).unwrap(),
            FitnessValue::Scalar(0.0)
        );
        assert_eq!(
            fitness_no_order(&[1.0, 2.0]),
            Err(FitnessError::TooFewSolvers(2))
        );
    }

    #[test]
    fn explicit_worked_examples() {
        let ranking = pi(&[2, 0, 1]);
        let first = fitness_explicit(&[13.0, 10.0, 8.0], &ranking).unwrap();
        let second = fitness_explicit(&[13.0, 10.0, 15.0], &ranking).unwrap();
        assert_eq!(first, lex(1, -5.0, Some(3.0)));
        assert_eq!(second, lex(2, 0.0, Some(5.0)));
        assert_eq!(fitness_compare(&second, &first), Ordering::Greater);
    }

    #[test]
    fn explicit_in_order_and_reversed() {
        let p = [1.0, 4.0, 9.0];
        assert_eq!(
            fitness_explicit(&p, &pi(&[2, 1, 0])).unwrap(),
            lex(2, 0.0, Some(8.0))
        );
        assert_eq!(
            fitness_explicit(&p, &pi(&[0, 1, 2])).unwrap(),
            lex(0, -8.0, None)
        );
        // ties count as good
        assert_eq!(
            fitness_explicit(&[3.0, 3.0, 3.0], &pi(&[1, 2, 0])).unwrap(),
            lex(2, 0.0, Some(0.0))
        );
    }

    #[test]
    fn lexicographic_comparisons() {
        let a = lex(1, -5.0, Some(3.0));
        assert_eq!(fitness_compare(&a, &a), Ordering::Equal);
        assert_eq!(
            fitness_compare(&lex(1, -2.0, Some(100.0)), &lex(2, -9.0, Some(0.0))),
            Ordering::Less
        );
        assert_eq!(
            fitness_compare(&lex(0, -1.0, None), &lex(0, -1.0, Some(-1e300))),
            Ordering::Less
        );
        assert_eq!(
            FitnessValue::Scalar(1.0).partial_cmp(&lex(0, 0.0, None)),
            None
        );
    }

    #[test]
    #[should_panic(expected = "different kinds")]
    fn mixed_kinds_panic() {
        fitness_compare(&FitnessValue::Scalar(0.0), &lex(0, 0.0, None));
    }

    #[test]
    fn actual_rankings() {
        assert_eq!(actual_ranking(&[13.0, 10.0, 8.0]).order(), &[0, 1, 2]);
        assert_eq!(actual_ranking(&[8.0, 10.0, 13.0]).order(), &[2, 1, 0]);
        assert_eq!(actual_ranking(&[5.0, 5.0, 5.0]).order(), &[0, 1, 2]);
        assert_eq!(actual_ranking(&[1.0, 7.0, 7.0]).order(), &[1, 2, 0]);
    }

    #[test]
    fn ranking_validation() {
        assert!(RankingSpec::new(vec![0, 0, 1]).is_err());
        assert!(RankingSpec::new(vec![0, 3, 1]).is_err());
        let r: RankingSpec = serde_json::from_str("[2,0,1]").unwrap();
        assert_eq!(r.order(), &[2, 0, 1]);
        assert!(serde_json::from_str::<RankingSpec>("[2,2,1]").is_err());
    }

    #[test]
    fn fitness_values_serialize() {
        let v = lex(0, -3.0, None);
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<FitnessValue>(&text).unwrap(), v);
    }
}
