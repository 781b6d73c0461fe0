//! Rank-based comparisons across censorship modes and correlation matrices.
//!
//! Kruskal–Wallis uses mid-ranks with the usual tie correction and a
//! chi-squared approximation for the p-value. Dunn's pairwise z statistics
//! are computed on the same pooled ranks and Bonferroni-adjusted.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Labelled groups of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedSample {
    pub groups: Vec<(String, Vec<f64>)>,
}

impl GroupedSample {
    pub fn new(groups: Vec<(String, Vec<f64>)>) -> Self {
        Self { groups }
    }

    fn validate(&self) -> Result<()> {
        if self.groups.len() < 2 {
            return Err(Error::TooFew {
                what: "groups",
                needed: 2,
                got: self.groups.len(),
            });
        }
        for (name, obs) in &self.groups {
            if obs.is_empty() {
                return Err(Error::EmptyGroup {
                    group: name.clone(),
                });
            }
            if obs.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParam {
                    name: "observation",
                    value: format!("non-finite value in group `{name}`"),
                    expected: "finite observations",
                });
            }
        }
        let total = self.total();
        if total < 3 {
            return Err(Error::TooFew {
                what: "observations",
                needed: 3,
                got: total,
            });
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(|(_, g)| g.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub group_a: String,
    pub group_b: String,
    /// Positive when `group_a` has the higher mean rank.
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// Tie-corrected H.
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub pairwise: Option<Vec<PairwiseComparison>>,
}

/// Mid-ranks (1-based, ties share the mean of their positions) together
/// with the tie term `sum(t^3 - t)` over tie blocks.
pub fn mid_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let t = (end - start) as f64;
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        ties += t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

struct PooledRanks {
    mean_ranks: Vec<f64>,
    rank_sums: Vec<f64>,
    sizes: Vec<usize>,
    n: f64,
    ties: f64,
}

fn pool(samples: &GroupedSample) -> PooledRanks {
    let pooled: Vec<f64> = samples
        .groups
        .iter()
        .flat_map(|(_, g)| g.iter().copied())
        .collect();
    let (ranks, ties) = mid_ranks(&pooled);
    let mut rank_sums = Vec::with_capacity(samples.groups.len());
    let mut sizes = Vec::with_capacity(samples.groups.len());
    let mut offset = 0;
    for (_, g) in &samples.groups {
        rank_sums.push(ranks[offset..offset + g.len()].iter().sum::<f64>());
        sizes.push(g.len());
        offset += g.len();
    }
    let mean_ranks = rank_sums
        .iter()
        .zip(&sizes)
        .map(|(r, &n)| r / n as f64)
        .collect();
    PooledRanks {
        mean_ranks,
        rank_sums,
        sizes,
        n: pooled.len() as f64,
        ties,
    }
}

pub fn kruskal_wallis(samples: &GroupedSample) -> Result<TestReport> {
    samples.validate()?;
    let df = samples.groups.len() - 1;
    let r = pool(samples);
    let n = r.n;
    let correction = 1.0 - r.ties / (n * n * n - n);
    if correction <= 0.0 {
        // every observation identical
        return Ok(TestReport {
            statistic: 0.0,
            degrees_of_freedom: df,
            p_value: 1.0,
            pairwise: None,
        });
    }
    let sum: f64 = r
        .rank_sums
        .iter()
        .zip(&r.sizes)
        .map(|(rs, &ni)| rs * rs / ni as f64)
        .sum();
    // single fraction, exact whenever the rank sums are integers
    let h = (12.0 * sum - 3.0 * n * (n + 1.0) * (n + 1.0)) / (n * (n + 1.0));
    let h = (h / correction).max(0.0);
    let chi2 = ChiSquared::new(df as f64).expect("df >= 1");
    let p_value = chi2.sf(h).clamp(0.0, 1.0);
    Ok(TestReport {
        statistic: h,
        degrees_of_freedom: df,
        p_value,
        pairwise: None,
    })
}

/// Dunn's test for every pair of groups, in group order `(0,1), (0,2), ..`.
pub fn dunn_posthoc(samples: &GroupedSample, alpha: f64) -> Result<Vec<PairwiseComparison>> {
    samples.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParam {
            name: "alpha",
            value: alpha.to_string(),
            expected: "a significance level in (0, 1)",
        });
    }
    let r = pool(samples);
    let n = r.n;
    let variance = n * (n + 1.0) / 12.0 - r.ties / (12.0 * (n - 1.0));
    let k = samples.groups.len();
    let n_pairs = (k * (k - 1) / 2) as f64;
    let normal = Normal::standard();

    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let se = (variance * (1.0 / r.sizes[i] as f64 + 1.0 / r.sizes[j] as f64)).sqrt();
            let diff = r.mean_ranks[i] - r.mean_ranks[j];
            let z = if se > 0.0 { diff / se } else { 0.0 };
            let p_raw = (2.0 * normal.sf(z.abs())).clamp(0.0, 1.0);
            let p_adjusted = (p_raw * n_pairs).min(1.0);
            out.push(PairwiseComparison {
                group_a: samples.groups[i].0.clone(),
                group_b: samples.groups[j].0.clone(),
                z,
                p_raw,
                p_adjusted,
                significant: p_adjusted < alpha,
            });
        }
    }
    Ok(out)
}

/// Kruskal–Wallis followed by Dunn's pairwise comparisons.
pub fn kruskal_wallis_with_posthoc(samples: &GroupedSample, alpha: f64) -> Result<TestReport> {
    let mut report = kruskal_wallis(samples)?;
    report.pairwise = Some(dunn_posthoc(samples, alpha)?);
    Ok(report)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Spearman,
    Pearson,
}

/// Symmetric correlation matrix; `None` where a column has zero variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.values[i][j]
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&mid_ranks(x).0, &mid_ranks(y).0)
}

pub fn correlation_matrix(
    columns: &[(String, Vec<f64>)],
    method: CorrelationMethod,
) -> Result<CorrelationMatrix> {
    if columns.len() < 2 {
        return Err(Error::TooFew {
            what: "columns",
            needed: 2,
            got: columns.len(),
        });
    }
    let rows = columns[0].1.len();
    if rows < 3 {
        return Err(Error::TooFew {
            what: "rows",
            needed: 3,
            got: rows,
        });
    }
    for (name, col) in columns {
        if col.len() != rows || col.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam {
                name: "column",
                value: name.clone(),
                expected: "equal-length columns of finite values",
            });
        }
    }
    let prepared: Vec<Vec<f64>> = columns
        .iter()
        .map(|(_, c)| match method {
            CorrelationMethod::Spearman => mid_ranks(c).0,
            CorrelationMethod::Pearson => c.clone(),
        })
        .collect();
    let k = columns.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let r = pearson(&prepared[i], &prepared[j]);
            // a zero-variance column stays missing even on the diagonal
            let r = if i == j { r.map(|_| 1.0) } else { r };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: columns.iter().map(|(n, _)| n.clone()).collect(),
        values,
    })
}
