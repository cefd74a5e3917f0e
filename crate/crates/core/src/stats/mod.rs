//! Mann-Whitney U, Pearson correlation, LOC-share clustering and the cohort
//! report built on them.

mod cohort;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

pub use cohort::*;
pub use render::{render_markdown, write_figures, FIG_DAY_HIST, FIG_FIX_LATENCY, FIG_INTRO_REMOVED};

/// Largest pooled sample size for which the exact distribution is used.
pub const EXACT_MAX_N: usize = 12;
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.70;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySampleError,
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("loc shares of group {group} sum to {sum}, expected 1")]
    ShareError { group: String, sum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodChoice {
    /// Exact when the pooled size is at most [`EXACT_MAX_N`] and there are no ties.
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// U of the first sample.
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    pub method: Method,
}

/// Midranks (1-based) of `values`, with the tie-group sizes.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Number of ways to pick `n1` of the ranks `1..=n` for each rank sum.
fn rank_sum_counts(n: usize, n1: usize) -> Vec<u64> {
    let max_sum = n * (n + 1) / 2;
    // counts[k][s]: k ranks chosen so far with sum s.
    let mut counts = vec![vec![0u64; max_sum + 1]; n1 + 1];
    counts[0][0] = 1;
    for r in 1..=n {
        for k in (1..=n1.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                counts[k][s] += counts[k - 1][s - r];
            }
        }
    }
    counts.swap_remove(n1)
}

fn exact_p(u: f64, n1: usize, n2: usize) -> f64 {
    let counts = rank_sum_counts(n1 + n2, n1);
    let offset = n1 * (n1 + 1) / 2;
    let total: u64 = counts.iter().sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for (s, &c) in counts.iter().enumerate().skip(offset) {
        let us = (s - offset) as f64;
        if us <= u + 1e-9 {
            le += c;
        }
        if us >= u - 1e-9 {
            ge += c;
        }
    }
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

fn normal_p(u: f64, n1: usize, n2: usize, ties: &[usize]) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let mu = n1f * n2f / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = n1f * n2f / 12.0 * ((n + 1.0) - if n > 1.0 { tie_term / (n * (n - 1.0)) } else { 0.0 });
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Two-sided Mann-Whitney U test of `a` against `b`.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    mann_whitney_u_with(a, b, MethodChoice::Auto)
}

pub fn mann_whitney_u_with(a: &[f64], b: &[f64], choice: MethodChoice) -> Result<TestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySampleError);
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let tie_free = ties.iter().all(|&t| t == 1);
    let method = match choice {
        MethodChoice::Exact if tie_free => Method::Exact,
        MethodChoice::Exact => return Err(StatsError::DegenerateInput("exact test needs tie-free samples")),
        MethodChoice::Normal => Method::NormalApproximation,
        MethodChoice::Auto if tie_free && n1 + n2 <= EXACT_MAX_N => Method::Exact,
        MethodChoice::Auto => Method::NormalApproximation,
    };
    let p_value = match method {
        Method::Exact => exact_p(u, n1, n2),
        Method::NormalApproximation => normal_p(u, n1, n2, &ties),
    };
    Ok(TestResult { statistic: u, p_value, n1, n2, method })
}

/// Pearson's r, from centered sums.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::ShapeError(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(StatsError::ShapeError("need at least 2 pairs".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput("zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation; needs two values.
    pub sd: Option<f64>,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { n, mean: None, sd: None };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
    Summary { n, mean: Some(mean), sd }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupProfile {
    pub group_id: String,
    pub members: Vec<String>,
    pub loc_shares: BTreeMap<String, f64>,
    pub cluster: Option<u8>,
    pub issue_occurrence_count: u64,
    pub issue_total_count: u64,
    pub lab_counts: Option<BTreeMap<String, f64>>,
    pub grade: Option<f64>,
}

impl GroupProfile {
    pub fn max_share(&self) -> f64 {
        self.loc_shares.values().copied().fold(0.0, f64::max)
    }
}

/// Cluster 1 when the top contributor's share is strictly above `threshold`.
pub fn cluster_of(max_share: f64, threshold: f64) -> u8 {
    u8::from(max_share > threshold)
}

pub fn cluster_groups(mut profiles: Vec<GroupProfile>, threshold: f64) -> Result<Vec<GroupProfile>, StatsError> {
    for p in &mut profiles {
        let sum: f64 = p.loc_shares.values().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(StatsError::ShareError { group: p.group_id.clone(), sum });
        }
        p.cluster = Some(cluster_of(p.max_share(), threshold));
    }
    Ok(profiles)
}

#[cfg(test)]
mod tests;
