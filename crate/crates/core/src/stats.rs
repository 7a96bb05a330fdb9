//! Comparison of run samples: mean and deviation, the Wilcoxon rank-sum
//! test with a three-valued verdict, and the sample-size rule.

use std::cmp::Ordering;
use std::fmt;

use statrs::distribution::{ContinuousCDF, Normal};

/// Below this smaller-sample size the rank-sum distribution is enumerated.
pub const EXACT_BELOW: usize = 8;

/// Outcome of comparing a reference sample with another, minimizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mark {
    /// Reference significantly better (lower).
    Better,
    /// Reference significantly worse.
    Worse,
    /// No significant difference.
    Same,
}

impl Mark {
    pub fn flip(self) -> Mark {
        match self {
            Mark::Better => Mark::Worse,
            Mark::Worse => Mark::Better,
            Mark::Same => Mark::Same,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Mark::Better => '+',
            Mark::Worse => '-',
            Mark::Same => '=',
        }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Midranks of `values` (1-based, ties share the mean rank), doubled so
/// they stay integral, plus the tie group sizes.
pub fn doubled_midranks(values: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]].total_cmp(&values[idx[i]]) == Ordering::Equal {
            j += 1;
        }
        // ranks i+1..=j+1, doubled mean = i + j + 2
        for &k in &idx[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided p-value of the rank sum of the first `n1` entries of
/// `ranks2` (doubled midranks), by counting all size-`n1` subsets.
fn exact_p(ranks2: &[u64], n1: usize) -> f64 {
    let observed: u64 = ranks2[..n1].iter().sum();
    let max: u64 = ranks2.iter().sum();
    let width = max as usize + 1;
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0f64; width]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in ranks2 {
        let r = r as usize;
        for k in (1..=n1).rev() {
            let (lo, hi) = ways.split_at_mut(k);
            for s in (r..width).rev() {
                hi[0][s] += lo[k - 1][s - r];
            }
        }
    }
    let total: f64 = ways[n1].iter().sum();
    let le: f64 = ways[n1][..=observed as usize].iter().sum();
    let ge: f64 = ways[n1][observed as usize..].iter().sum();
    (2.0 * le.min(ge) / total).min(1.0)
}

/// Normal approximation with tie and continuity corrections.
fn normal_p(ranks2: &[u64], ties: &[usize], n1: usize) -> f64 {
    let n = ranks2.len() as f64;
    let (a, b) = (n1 as f64, n - n1 as f64);
    let w = ranks2[..n1].iter().sum::<u64>() as f64 / 2.0;
    let mean = a * (n + 1.0) / 2.0;
    let tie: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = a * b / 12.0 * ((n + 1.0) - tie / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let std = Normal::standard();
    (2.0 * (1.0 - std.cdf(z))).min(1.0)
}

/// Two-sided rank-sum p-value for `a` against `b`.
pub fn rank_sum_p(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "rank-sum test needs two non-empty samples");
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks2, ties) = doubled_midranks(&all);
    if a.len().min(b.len()) < EXACT_BELOW {
        exact_p(&ranks2, a.len())
    } else {
        normal_p(&ranks2, &ties, a.len())
    }
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        (s[m - 1] + s[m]) / 2.0
    }
}

/// Compares `reference` with `other` at significance `alpha`. The
/// direction of a significant result comes from the medians, or from the
/// mean ranks when the medians coincide.
pub fn wilcoxon(reference: &[f64], other: &[f64], alpha: f64) -> Mark {
    if rank_sum_p(reference, other) >= alpha {
        return Mark::Same;
    }
    let by_median = median(reference).total_cmp(&median(other));
    let order = if by_median != Ordering::Equal {
        by_median
    } else {
        let all: Vec<f64> = reference.iter().chain(other).copied().collect();
        let (r, _) = doubled_midranks(&all);
        let (ra, rb) = r.split_at(reference.len());
        let ma = ra.iter().sum::<u64>() as f64 / ra.len() as f64;
        let mb = rb.iter().sum::<u64>() as f64 / rb.len() as f64;
        ma.total_cmp(&mb)
    };
    match order {
        Ordering::Less => Mark::Better,
        Ordering::Greater => Mark::Worse,
        Ordering::Equal => Mark::Same,
    }
}

/// Runs needed for a confidence interval of width `w`: `ceil(16σ²/w²)`,
/// at least 1.
pub fn sample_size(sigma: f64, w: f64) -> u64 {
    assert!(w > 0.0, "interval width must be positive");
    ((16.0 * sigma * sigma / (w * w)).ceil() as u64).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// True when the deviation is a convention rather than an estimate.
    pub fn single(&self) -> bool {
        self.n < 2
    }
}

pub fn aggregate(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Some(Summary {
        n,
        mean,
        std,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
