//! Per-model, per-metric statistics over score sheets and the tabulated
//! report with high/low tags.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::evaluator::{MetricId, ScoreSheet};
use crate::math::{round, sqrt};

/// Published totals for the three benchmarked models. Reports footnote any
/// computed total that rounds to something else.
pub const REFERENCE_TOTALS: [(&str, f64); 3] = [
    ("GPT-4o", 6.29),
    ("Gemini-1.5-Flash", 5.28),
    ("Janus-4o", 3.64),
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchmarkError {
    #[error("no score sheets to aggregate")]
    EmptyInput,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub high: f64,
    pub low: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { high: 0.90, low: 0.30 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    High,
    Low,
}

impl Thresholds {
    /// Strict comparison on the value as displayed (two decimals).
    pub fn tag(&self, mean: f64) -> Option<Tag> {
        let cell = hundredths(mean);
        if cell > hundredths(self.high) {
            Some(Tag::High)
        } else if cell < hundredths(self.low) {
            Some(Tag::Low)
        } else {
            None
        }
    }
}

fn hundredths(x: f64) -> i64 {
    round(x * 100.0) as i64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub metric: MetricId,
    /// Sheets scoring 1.
    pub ones: u64,
    pub n: u64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model_id: String,
    pub n: u64,
    /// In `MetricId::ALL` order.
    pub per_metric: Vec<MetricStat>,
    pub total: f64,
}

impl ModelReport {
    pub fn stat(&self, metric: MetricId) -> &MetricStat {
        &self.per_metric[metric.index()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub models: Vec<ModelReport>,
    pub thresholds: Thresholds,
    #[serde(default)]
    pub reference_totals: BTreeMap<String, f64>,
}

impl BenchmarkReport {
    pub fn model(&self, model_id: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model_id == model_id)
    }

    /// Models whose computed total, at two decimals, differs from the
    /// reference total: `(model, computed, reference)`.
    pub fn total_discrepancies(&self) -> Vec<(&str, f64, f64)> {
        self.models
            .iter()
            .filter_map(|m| {
                let reference = *self.reference_totals.get(&m.model_id)?;
                (hundredths(m.total) != hundredths(reference))
                    .then_some((m.model_id.as_str(), m.total, reference))
            })
            .collect()
    }
}

/// Sample standard deviation; zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    sqrt(ss / (n - 1) as f64)
}

/// Groups sheets by model (alphabetical) and computes mean, sample std and
/// count for every metric; the total is the sum of the exact means.
pub fn aggregate(sheets: &[ScoreSheet]) -> Result<BenchmarkReport, BenchmarkError> {
    if sheets.is_empty() {
        return Err(BenchmarkError::EmptyInput);
    }
    let mut by_model: BTreeMap<&str, Vec<&ScoreSheet>> = BTreeMap::new();
    for sheet in sheets {
        by_model.entry(sheet.model_id.as_str()).or_default().push(sheet);
    }
    let models = by_model
        .into_iter()
        .map(|(model_id, group)| {
            let n = group.len() as u64;
            let per_metric: Vec<MetricStat> = MetricId::ALL
                .into_iter()
                .map(|metric| {
                    // Sorted so floating-point summation does not depend on
                    // sheet order.
                    let mut values: Vec<f64> = group
                        .iter()
                        .map(|s| if s.score(metric) { 1.0 } else { 0.0 })
                        .collect();
                    values.sort_by(f64::total_cmp);
                    let ones = group.iter().filter(|s| s.score(metric)).count() as u64;
                    MetricStat {
                        metric,
                        ones,
                        n,
                        mean: ones as f64 / n as f64,
                        std: sample_std(&values),
                    }
                })
                .collect();
            let total = per_metric.iter().map(|s| s.ones).sum::<u64>() as f64 / n as f64;
            ModelReport {
                model_id: model_id.into(),
                n,
                per_metric,
                total,
            }
        })
        .collect();
    Ok(BenchmarkReport {
        models,
        thresholds: Thresholds::default(),
        reference_totals: REFERENCE_TOTALS
            .iter()
            .map(|&(m, t)| (String::from(m), t))
            .collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Some(ReportFormat::Json),
            "csv" => Some(ReportFormat::Csv),
            "markdown" | "md" => Some(ReportFormat::Markdown),
            _ => None,
        }
    }
}

fn cell(x: f64) -> String {
    format!("{x:.2}")
}

pub fn render_report(report: &BenchmarkReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => serde_json::to_vec(report).unwrap_or_default(),
        ReportFormat::Csv => render_csv(report).into_bytes(),
        ReportFormat::Markdown => render_markdown(report).into_bytes(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.into()
    }
}

fn render_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from("metric,model,mean,std,n\n");
    for model in &report.models {
        for s in &model.per_metric {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(s.metric.name()),
                csv_field(&model.model_id),
                cell(s.mean),
                cell(s.std),
                s.n
            );
        }
        let _ = writeln!(out, "Total,{},{},,{}", csv_field(&model.model_id), cell(model.total), model.n);
    }
    out
}

fn render_markdown(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let header: Vec<&str> = report.models.iter().map(|m| m.model_id.as_str()).collect();
    let _ = writeln!(out, "| Metric | {} |", header.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(header.len()));
    for metric in MetricId::ALL {
        let cells: Vec<String> = report
            .models
            .iter()
            .map(|m| {
                let mean = m.stat(metric).mean;
                match report.thresholds.tag(mean) {
                    Some(Tag::High) => format!("{} (high)", cell(mean)),
                    Some(Tag::Low) => format!("{} (low)", cell(mean)),
                    None => cell(mean),
                }
            })
            .collect();
        let _ = writeln!(out, "| {} | {} |", metric.name(), cells.join(" | "));
    }
    let discrepancies = report.total_discrepancies();
    let totals: Vec<String> = report
        .models
        .iter()
        .map(|m| {
            let flagged = discrepancies
                .iter()
                .position(|(id, _, _)| *id == m.model_id);
            match flagged {
                Some(i) => format!("**{}** [^{}]", cell(m.total), i + 1),
                None => format!("**{}**", cell(m.total)),
            }
        })
        .collect();
    let _ = writeln!(out, "| **Total Score (out of 10)** | {} |", totals.join(" | "));

    out.push_str("\nSample standard deviation:\n\n");
    let _ = writeln!(out, "| Metric | {} |", header.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(header.len()));
    for metric in MetricId::ALL {
        let cells: Vec<String> = report.models.iter().map(|m| cell(m.stat(metric).std)).collect();
        let _ = writeln!(out, "| {} | {} |", metric.name(), cells.join(" | "));
    }
    let counts: Vec<String> = report.models.iter().map(|m| format!("{}", m.n)).collect();
    let _ = writeln!(out, "| n | {} |", counts.join(" | "));

    let _ = writeln!(
        out,
        "\nCells above {} are tagged (high); cells below {} are tagged (low).",
        cell(report.thresholds.high),
        cell(report.thresholds.low)
    );
    if !discrepancies.is_empty() {
        out.push('\n');
        for (i, (model, computed, reference)) in discrepancies.iter().enumerate() {
            let _ = writeln!(
                out,
                "[^{}]: {model}: computed total {} (sum of per-metric means) differs from the published reference total {}.",
                i + 1,
                cell(*computed),
                cell(*reference)
            );
        }
    }
    out
}
