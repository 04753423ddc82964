use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::canonical::to_canonical_string;
use crate::metrics::{Finding, Measurement, MetricValue};
use crate::qmodel::{
    MeasurementObjectKind, QualityAttributeSpec, QualityModel, TailoringProfile, Threshold, ViewKind,
};

pub const TOOL_NAME: &str = "mlqgate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Info,
    NotEvaluable,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "Pass",
            Status::Fail => "Fail",
            Status::Info => "Info",
            Status::NotEvaluable => "Not evaluable",
        }
    }
}

/// Outcome for one attribute. Metric attributes pass or fail only against a
/// threshold; checklist attributes pass when every required item is settled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricResult {
    pub attribute_id: String,
    pub name: String,
    pub view: ViewKind,
    pub object: MeasurementObjectKind,
    pub required: bool,
    pub status: Status,
    /// Key of the value a threshold is applied to.
    pub primary_value: Option<String>,
    pub values: BTreeMap<String, MetricValue>,
    pub findings: Vec<Finding>,
    pub threshold_applied: Option<Threshold>,
    pub reason: Option<String>,
}

impl MetricResult {
    pub fn new(attr: &QualityAttributeSpec, status: Status) -> Self {
        MetricResult {
            attribute_id: attr.id.clone(),
            name: attr.name.clone(),
            view: attr.view,
            object: attr.object,
            required: attr.required,
            status,
            primary_value: None,
            values: BTreeMap::new(),
            findings: Vec::new(),
            threshold_applied: None,
            reason: None,
        }
    }

    pub fn reason(mut self, reason: String) -> Self {
        self.reason = Some(reason);
        self
    }

    pub fn primary(mut self, key: &str) -> Self {
        self.primary_value = Some(key.to_string());
        self
    }

    pub fn threshold(mut self, t: Threshold) -> Self {
        self.threshold_applied = Some(t);
        self
    }

    pub fn measurement(mut self, m: Measurement) -> Self {
        self.values = m.values;
        self.findings = m.findings;
        self
    }

    /// The primary value as shown in the markdown table.
    pub fn display_value(&self) -> String {
        match (&self.primary_value, self.status) {
            (_, Status::NotEvaluable) | (None, _) => "n/a".into(),
            (Some(key), _) => {
                let v = self.values.get(key).map_or("n/a".into(), MetricValue::render);
                let mut s = format!("{key} = {v}");
                if let Some(t) = &self.threshold_applied {
                    let _ = write!(s, " (target {})", render_threshold(t));
                }
                s
            }
        }
    }
}

fn render_threshold(t: &Threshold) -> String {
    use crate::canonical::format_g10 as g;
    use crate::qmodel::{Comparator, ThresholdValue};
    match (t.comparator, t.value) {
        (Comparator::Within, ThresholdValue::Range([lo, hi])) => format!("within [{}, {}]", g(lo), g(hi)),
        (c, ThresholdValue::Scalar(v)) => {
            let op = match c {
                Comparator::Le => "<=",
                Comparator::Ge => ">=",
                Comparator::Lt => "<",
                Comparator::Gt => ">",
                Comparator::Eq => "==",
                Comparator::Within => "within",
            };
            format!("{op} {}", g(v))
        }
        (_, ThresholdValue::Range([lo, hi])) => format!("[{}, {}]", g(lo), g(hi)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSection {
    pub view: ViewKind,
    pub results: Vec<MetricResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Summary {
    pub n_pass: usize,
    pub n_fail: usize,
    pub n_info: usize,
    pub n_not_evaluable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub tool: String,
    pub tool_version: String,
    pub quality_model: ModelInfo,
    pub profile: TailoringProfile,
    pub seed: u64,
    pub input_digests: BTreeMap<String, String>,
    pub sections: Vec<ReportSection>,
    pub summary: Summary,
}

impl QualityReport {
    /// Groups `results` (in model order) into sections in report view order.
    pub fn assemble(
        model: &QualityModel,
        results: Vec<MetricResult>,
        seed: u64,
        input_digests: BTreeMap<String, String>,
    ) -> Self {
        let mut summary = Summary::default();
        for r in &results {
            match r.status {
                Status::Pass => summary.n_pass += 1,
                Status::Fail => summary.n_fail += 1,
                Status::Info => summary.n_info += 1,
                Status::NotEvaluable => summary.n_not_evaluable += 1,
            }
        }
        let sections = ViewKind::REPORT_ORDER
            .into_iter()
            .map(|view| ReportSection {
                view,
                results: results.iter().filter(|r| r.view == view).cloned().collect(),
            })
            .filter(|s| !s.results.is_empty())
            .collect();
        QualityReport {
            tool: TOOL_NAME.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            quality_model: ModelInfo {
                name: model.name.clone(),
                version: model.version.clone(),
            },
            profile: model.profile.clone(),
            seed,
            input_digests,
            sections,
            summary,
        }
    }

    pub fn results(&self) -> impl Iterator<Item = &MetricResult> {
        self.sections.iter().flat_map(|s| &s.results)
    }

    pub fn result(&self, attribute_id: &str) -> Option<&MetricResult> {
        self.results().find(|r| r.attribute_id == attribute_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "json" => Some(ReportFormat::Json),
            "markdown" | "md" => Some(ReportFormat::Markdown),
            _ => None,
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Markdown => "report.md",
        }
    }
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

const DETAIL_FINDINGS: usize = 10;

pub fn render_report(r: &QualityReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut s = to_canonical_string(r).expect("reports are always serializable");
            s.push('\n');
            s.into_bytes()
        }
        ReportFormat::Markdown => render_markdown(r).into_bytes(),
    }
}

fn render_markdown(r: &QualityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Quality report: {} {}\n", r.quality_model.name, r.quality_model.version);
    let _ = writeln!(out, "Tool {} {}, seed {}.\n", r.tool, r.tool_version, r.seed);
    let s = r.summary;
    let _ = writeln!(
        out,
        "Summary: n_pass={}, n_fail={}, n_info={}, n_not_evaluable={}\n",
        s.n_pass, s.n_fail, s.n_info, s.n_not_evaluable
    );
    out.push_str("| View | Object | Attribute | Value | Status |\n");
    out.push_str("|---|---|---|---|---|\n");
    for r in r.results() {
        let required = if r.required { "" } else { " (optional)" };
        let _ = writeln!(
            out,
            "| {} | {} | {}{} | {} | {} |",
            r.view.label(),
            r.object.label(),
            cell(&r.name),
            required,
            cell(&r.display_value()),
            r.status.label()
        );
    }
    let flagged: Vec<&MetricResult> = r
        .results()
        .filter(|r| r.reason.is_some() || !r.findings.is_empty())
        .collect();
    if !flagged.is_empty() {
        out.push_str("\n## Details\n");
        for r in flagged {
            let _ = writeln!(out, "\n### {} ({})\n", r.name, r.attribute_id);
            let _ = writeln!(out, "Status: {}", r.status.label());
            if let Some(reason) = &r.reason {
                let _ = writeln!(out, "\nReason: {reason}");
            }
            if !r.findings.is_empty() {
                out.push('\n');
            }
            for f in r.findings.iter().take(DETAIL_FINDINGS) {
                let mut line = f.detail.clone();
                if let Some(c) = &f.column {
                    let _ = write!(line, " [column {c}]");
                }
                if let Some(row) = f.row {
                    let _ = write!(line, " [row {row}]");
                }
                if let Some(v) = &f.value {
                    let _ = write!(line, " = {}", v.render());
                }
                let _ = writeln!(out, "- {line}");
            }
            if r.findings.len() > DETAIL_FINDINGS {
                let _ = writeln!(out, "- ... {} more in the JSON report", r.findings.len() - DETAIL_FINDINGS);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateStatus {
    Pass,
    GateFailure,
    ConfigError,
    InputError,
}

impl GateStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            GateStatus::Pass => 0,
            GateStatus::GateFailure => 1,
            GateStatus::ConfigError => 2,
            GateStatus::InputError => 3,
        }
    }
}

/// Fails when any required attribute failed or could not be evaluated.
pub fn gate(r: &QualityReport) -> GateStatus {
    let blocked = r
        .results()
        .any(|r| r.required && matches!(r.status, Status::Fail | Status::NotEvaluable));
    if blocked {
        GateStatus::GateFailure
    } else {
        GateStatus::Pass
    }
}
