//! Wilcoxon signed-rank and Spearman rank correlation.
//!
//! Conventions: tests are two-sided. Wilcoxon drops zero differences, gives
//! tied absolute differences their mid-rank, and reports W+ (sum of ranks of
//! positive differences). For n <= 25 the p-value is exact, from the
//! permutation distribution of W+ given the observed ranks (ties included);
//! above that it uses the normal approximation with tie-corrected variance
//! and a 0.5 continuity correction. Spearman's rho is the Pearson correlation
//! of mid-ranks; its p-value uses t = rho * sqrt((n-2)/(1-rho^2)) with n-2
//! degrees of freedom.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::AnalysisError;

pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    NormalApprox,
    TApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: Method,
}

/// 1-based ranks with ties given the mean of the ranks they span.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        sizes.push(j);
        i += j;
    }
    sizes
}

/// Signed-rank test of `samples` against median `mu`.
pub fn wilcoxon_signed_rank(samples: &[f64], mu: f64) -> Result<TestResult, AnalysisError> {
    let diffs: Vec<f64> = samples.iter().map(|x| x - mu).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(AnalysisError::AllZeroDifferences);
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(AnalysisError::DegenerateInput("non-finite sample".into()));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = diffs.len();
    if n <= EXACT_MAX_N {
        let p = exact_p(&ranks, w_plus);
        return Ok(TestResult {
            statistic: w_plus,
            p_value: p,
            n,
            method: Method::Exact,
        });
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let ties: f64 = tie_sizes(&abs).into_iter().map(|t| (t * t * t - t) as f64).sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * normal.sf(z)).min(1.0)
    };
    Ok(TestResult {
        statistic: w_plus,
        p_value: p,
        n,
        method: Method::NormalApprox,
    })
}

/// Two-sided exact p-value of W+ under random signs. Mid-ranks are
/// multiples of 0.5, so doubled ranks are integers and the null
/// distribution is a subset-sum count.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let total = 2f64.powi(ranks.len() as i32);
    let w = (w_plus * 2.0).round() as usize;
    let lower: f64 = counts[..=w].iter().sum();
    let upper: f64 = counts[w..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<TestResult, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(AnalysisError::DegenerateInput(format!(
            "need at least 3 pairs, got {n}"
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(AnalysisError::DegenerateInput("non-finite value".into()));
    }
    let rho = pearson(&midranks(xs), &midranks(ys))
        .ok_or_else(|| AnalysisError::DegenerateInput("zero rank variance".into()))?;
    let df = (n - 2) as f64;
    let p = if 1.0 - rho * rho <= f64::EPSILON {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(TestResult {
        statistic: rho,
        p_value: p,
        n,
        method: Method::TApprox,
    })
}
