use std::collections::BTreeMap;

use super::special::{kolmogorov_q, reg_gamma_q, reg_inc_beta};
use super::{mean, sample_variance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    /// Degrees of freedom where the reference distribution has them.
    pub df: Option<f64>,
    pub method: &'static str,
}

/// Two-sided Welch two-sample t-test.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<TestResult> {
    let (n1, n2) = (x.len(), y.len());
    if n1 < 2 || n2 < 2 {
        return Err(Error::DegenerateSample(format!(
            "t-test needs at least 2 values per sample, got {n1} and {n2}"
        )));
    }
    let (v1, v2) = (sample_variance(x), sample_variance(y));
    if v1 == 0.0 || v2 == 0.0 {
        return Err(Error::DegenerateSample("t-test sample has zero variance".into()));
    }
    let (a, b) = (v1 / n1 as f64, v2 / n2 as f64);
    let t = (mean(x) - mean(y)) / (a + b).sqrt();
    let df = (a + b).powi(2) / (a * a / (n1 - 1) as f64 + b * b / (n2 - 1) as f64);
    let p = reg_inc_beta(df / 2.0, 0.5, df / (df + t * t));
    Ok(TestResult {
        statistic: t,
        p_value: p.clamp(0.0, 1.0),
        n1,
        n2,
        df: Some(df),
        method: "welch_t",
    })
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_test(x: &[f64], y: &[f64]) -> Result<TestResult> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::EmptyInput("KS test needs nonempty samples".into()));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let v = a[i].min(b[j]);
        while i < n1 && a[i] <= v {
            i += 1;
        }
        while j < n2 && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let sq = ne.sqrt();
    // Stephens' small-sample correction of the asymptotic argument
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    Ok(TestResult {
        statistic: d,
        p_value: if d == 0.0 { 1.0 } else { kolmogorov_q(lambda) },
        n1,
        n2,
        df: None,
        method: "ks",
    })
}

/// Chi-square test of homogeneity over the 2×k table of two count maps.
///
/// Categories whose expected count falls below 5 in either row are pooled
/// into a single "other" category before the statistic is formed.
pub fn chi_square_test(
    counts_x: &BTreeMap<String, u64>,
    counts_y: &BTreeMap<String, u64>,
) -> Result<TestResult> {
    let n1: u64 = counts_x.values().sum();
    let n2: u64 = counts_y.values().sum();
    if n1 == 0 || n2 == 0 {
        return Err(Error::DegenerateSample("chi-square sample has no counts".into()));
    }
    let total = (n1 + n2) as f64;
    let mut cats: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for (k, &c) in counts_x {
        cats.entry(k).or_default().0 += c;
    }
    for (k, &c) in counts_y {
        cats.entry(k).or_default().1 += c;
    }
    let expected = |col: u64| {
        let col = col as f64;
        (n1 as f64 * col / total, n2 as f64 * col / total)
    };
    let mut cells: Vec<(u64, u64)> = Vec::new();
    let mut other = (0u64, 0u64);
    let mut pooled = false;
    for &(cx, cy) in cats.values() {
        if cx + cy == 0 {
            continue;
        }
        let (ex, ey) = expected(cx + cy);
        if ex < 5.0 || ey < 5.0 {
            other.0 += cx;
            other.1 += cy;
            pooled = true;
        } else {
            cells.push((cx, cy));
        }
    }
    if pooled {
        cells.push(other);
    }
    if cells.len() < 2 {
        return Err(Error::DegenerateSample(
            "chi-square needs at least two categories after pooling".into(),
        ));
    }
    let mut stat = 0.0;
    for &(cx, cy) in &cells {
        let (ex, ey) = expected(cx + cy);
        stat += (cx as f64 - ex).powi(2) / ex + (cy as f64 - ey).powi(2) / ey;
    }
    let df = (cells.len() - 1) as f64;
    Ok(TestResult {
        statistic: stat,
        p_value: reg_gamma_q(df / 2.0, stat / 2.0),
        n1: n1 as usize,
        n2: n2 as usize,
        df: Some(df),
        method: "chi_square",
    })
}
