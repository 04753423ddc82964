//! Metric computations for the data, model, system, infrastructure and
//! environment views. Each operation returns a typed result that converts
//! into a [`Measurement`]: named values plus row- or column-level findings.

pub mod data;
pub mod model;
pub mod system;

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

/// Findings listed per attribute before the remainder is summarized.
pub const FINDING_CAP: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Number(f64),
    Count(u64),
    Bool(bool),
    Numbers(Vec<f64>),
    Null,
}

impl MetricValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MetricValue::Number(x) => Some(*x),
            MetricValue::Count(n) => Some(*n as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            MetricValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        match self {
            MetricValue::Number(x) => crate::canonical::format_g10(*x),
            MetricValue::Count(n) => n.to_string(),
            MetricValue::Bool(b) => b.to_string(),
            MetricValue::Numbers(v) => {
                let parts: Vec<String> = v.iter().map(|x| crate::canonical::format_g10(*x)).collect();
                format!("[{}]", parts.join(", "))
            }
            MetricValue::Null => "n/a".into(),
        }
    }
}

impl From<f64> for MetricValue {
    fn from(x: f64) -> Self {
        MetricValue::Number(x)
    }
}

impl From<usize> for MetricValue {
    fn from(n: usize) -> Self {
        MetricValue::Count(n as u64)
    }
}

impl From<u64> for MetricValue {
    fn from(n: u64) -> Self {
        MetricValue::Count(n)
    }
}

impl From<bool> for MetricValue {
    fn from(b: bool) -> Self {
        MetricValue::Bool(b)
    }
}

impl<T: Into<MetricValue>> From<Option<T>> for MetricValue {
    fn from(v: Option<T>) -> Self {
        v.map_or(MetricValue::Null, Into::into)
    }
}

fn finite_or_string<S: Serializer>(x: f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(x)
    } else {
        s.serialize_str(&crate::canonical::format_g10(x))
    }
}

impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        match self {
            MetricValue::Number(x) => finite_or_string(*x, s),
            MetricValue::Count(n) => s.serialize_u64(*n),
            MetricValue::Bool(b) => s.serialize_bool(*b),
            MetricValue::Null => s.serialize_unit(),
            MetricValue::Numbers(v) => {
                struct F(f64);
                impl Serialize for F {
                    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                        finite_or_string(self.0, s)
                    }
                }
                let mut seq = s.serialize_seq(Some(v.len()))?;
                for x in v {
                    seq.serialize_element(&F(*x))?;
                }
                seq.end()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub detail: String,
    pub column: Option<String>,
    pub row: Option<usize>,
    pub value: Option<MetricValue>,
}

impl Finding {
    pub fn note(detail: impl Into<String>) -> Self {
        Finding {
            detail: detail.into(),
            column: None,
            row: None,
            value: None,
        }
    }

    pub fn column(mut self, column: &str) -> Self {
        self.column = Some(column.to_string());
        self
    }

    pub fn row(mut self, row: usize) -> Self {
        self.row = Some(row);
        self
    }

    pub fn value(mut self, value: impl Into<MetricValue>) -> Self {
        self.value = Some(value.into());
        self
    }
}

/// Named values and findings produced by one metric operation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measurement {
    pub values: BTreeMap<String, MetricValue>,
    pub findings: Vec<Finding>,
}

impl Measurement {
    pub fn set(&mut self, key: &str, value: impl Into<MetricValue>) -> &mut Self {
        self.values.insert(key.to_string(), value.into());
        self
    }

    pub fn with(mut self, key: &str, value: impl Into<MetricValue>) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&MetricValue> {
        self.values.get(key)
    }

    /// Appends findings, keeping at most [`FINDING_CAP`] of them and noting how many were dropped.
    pub fn push_capped(&mut self, findings: impl IntoIterator<Item = Finding>) {
        let mut dropped = 0usize;
        for f in findings {
            if self.findings.len() < FINDING_CAP {
                self.findings.push(f);
            } else {
                dropped += 1;
            }
        }
        if dropped > 0 {
            self.findings.push(Finding::note(format!("{dropped} further findings omitted")));
        }
    }
}

/// `num / den`, or 0 with a notice when `den` is zero.
pub(crate) fn ratio_or_zero(num: usize, den: usize, what: &str, notes: &mut Vec<Finding>) -> f64 {
    if den == 0 {
        notes.push(Finding::note(format!("{what} is 0/0; reported as 0")));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Largest pairwise gap between rates `a/b`, computed exactly on integers and
/// divided once.
pub(crate) fn max_rate_gap(rates: &[(u64, u64)]) -> f64 {
    let mut best: (u128, u128) = (0, 1);
    for (i, &(na, da)) in rates.iter().enumerate() {
        for &(nb, db) in &rates[i + 1..] {
            let lhs = na as u128 * db as u128;
            let rhs = nb as u128 * da as u128;
            let num = lhs.abs_diff(rhs);
            let den = da as u128 * db as u128;
            if num * best.1 > best.0 * den {
                best = (num, den);
            }
        }
    }
    best.0 as f64 / best.1 as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_gaps() {
        assert_eq!(max_rate_gap(&[(8, 10), (6, 10)]), 0.2);
        assert_eq!(max_rate_gap(&[(1, 10), (3, 10)]), 0.2);
        assert_eq!(max_rate_gap(&[(5, 10), (3, 10), (2, 10)]), 0.3);
        assert_eq!(max_rate_gap(&[(3, 10), (6, 20)]), 0.0);
        assert_eq!(max_rate_gap(&[(1, 1)]), 0.0);
    }

    #[test]
    fn capped_findings() {
        let mut m = Measurement::default();
        m.push_capped((0..FINDING_CAP + 3).map(|i| Finding::note(i.to_string())));
        assert_eq!(m.findings.len(), FINDING_CAP + 1);
        assert_eq!(m.findings.last().unwrap().detail, "3 further findings omitted");
    }

    #[test]
    fn non_finite_serialized_as_string() {
        let v = serde_json::to_string(&MetricValue::Number(f64::INFINITY)).unwrap();
        assert_eq!(v, "\"inf\"");
        let v = serde_json::to_string(&MetricValue::Numbers(vec![1.5, f64::NAN])).unwrap();
        assert_eq!(v, "[1.5,\"nan\"]");
    }
}
