//! Evaluation report assembly and rendering to Markdown, CSV and JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::context::{ContextKind, PatternSets};
use crate::corpus::SplitLabel;
use crate::error::{Error, Result};
use crate::metrics::{Field, FieldScores, GeneralAccuracy, OverallMode, Prf, RougeScores};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    /// RFC 3339 creation time.
    pub created_at: String,
    pub config_digest: String,
    /// Template ids evaluated; `None` means all.
    pub template_filter: Option<Vec<u32>>,
    pub pattern_sets: PatternSets,
    pub partial_threshold: f64,
    pub overall_mode: OverallMode,
}

/// Scores for one (split, context kind) pair. Missing parts stay `None` and
/// are listed in `warnings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub split: SplitLabel,
    pub context: ContextKind,
    pub n_predictions: usize,
    pub rouge: Option<RougeScores>,
    pub general_accuracy: Option<GeneralAccuracy>,
    pub exact: Option<FieldScores>,
    pub partial: Option<FieldScores>,
    pub warnings: Vec<String>,
}

impl ReportCell {
    pub fn empty(split: SplitLabel, context: ContextKind) -> Self {
        ReportCell {
            split,
            context,
            n_predictions: 0,
            rouge: None,
            general_accuracy: None,
            exact: None,
            partial: None,
            warnings: Vec::new(),
        }
    }

    /// The cell's values as (name, value) pairs in a fixed order.
    pub fn metric_values(&self) -> Vec<(String, Option<f64>)> {
        let mut out = vec![
            ("rouge1".to_owned(), self.rouge.map(|r| r.rouge1)),
            ("rouge2".to_owned(), self.rouge.map(|r| r.rouge2)),
            ("rougeL".to_owned(), self.rouge.map(|r| r.rouge_l)),
            ("rougeLsum".to_owned(), self.rouge.map(|r| r.rouge_lsum)),
            ("general_accuracy".to_owned(), self.general_accuracy.map(|g| g.value)),
        ];
        for (mode, scores) in [("exact", &self.exact), ("partial", &self.partial)] {
            for (field, prf) in field_rows(scores.as_ref()) {
                for (stat, v) in [("precision", prf.map(|p| p.precision)), ("recall", prf.map(|p| p.recall)), ("f1", prf.map(|p| p.f1))] {
                    out.push((format!("{mode}.{field}.{stat}"), v));
                }
            }
        }
        out
    }
}

fn field_rows(scores: Option<&FieldScores>) -> Vec<(&'static str, Option<Prf>)> {
    let mut rows: Vec<(&'static str, Option<Prf>)> = Field::ALL
        .iter()
        .map(|f| (field_key(*f), scores.map(|s| s.field(*f))))
        .collect();
    rows.push(("overall", scores.map(|s| s.overall)));
    rows
}

fn field_key(f: Field) -> &'static str {
    match f {
        Field::Task => "task",
        Field::Dataset => "dataset",
        Field::Metric => "metric",
        Field::Score => "score",
    }
}

/// Number of values `metric_values` yields per cell.
pub const METRICS_PER_CELL: usize = 5 + 2 * 5 * 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub meta: ReportMeta,
    pub cells: Vec<ReportCell>,
    pub warnings: Vec<String>,
}

/// Lays the computed cells out against the planned (split, context) grid.
///
/// Every planned pair appears exactly once; one without results becomes an
/// all-null cell with a warning. Results outside the plan, or two results
/// for the same pair, are errors.
pub fn build_report(mut cells: Vec<ReportCell>, plan: &[(SplitLabel, ContextKind)], meta: ReportMeta) -> Result<EvaluationReport> {
    let mut plan: Vec<(SplitLabel, ContextKind)> = plan.to_vec();
    plan.sort();
    plan.dedup();
    cells.sort_by_key(|c| (c.split, c.context));
    for w in cells.windows(2) {
        if (w[0].split, w[0].context) == (w[1].split, w[1].context) {
            return Err(Error::Report(format!("duplicate results for {} / {}", w[0].split.as_str(), w[0].context)));
        }
    }
    if let Some(c) = cells.iter().find(|c| !plan.contains(&(c.split, c.context))) {
        return Err(Error::Report(format!("results for {} / {} are not in the run plan", c.split.as_str(), c.context)));
    }

    let mut out = Vec::with_capacity(plan.len());
    let mut warnings = Vec::new();
    for (split, context) in plan {
        let mut cell = match cells.iter().position(|c| (c.split, c.context) == (split, context)) {
            Some(i) => cells.swap_remove(i),
            None => {
                let mut c = ReportCell::empty(split, context);
                c.warnings.push("no predictions for this cell".into());
                c
            }
        };
        for (name, missing) in [
            ("rouge", cell.rouge.is_none()),
            ("general_accuracy", cell.general_accuracy.is_none()),
            ("exact", cell.exact.is_none()),
            ("partial", cell.partial.is_none()),
        ] {
            let msg = format!("{name} scores missing");
            if missing && !cell.warnings.contains(&msg) {
                cell.warnings.push(msg);
            }
        }
        for w in &cell.warnings {
            warnings.push(format!("{} / {}: {w}", split.as_str(), context));
        }
        out.push(cell);
    }
    Ok(EvaluationReport {
        meta,
        cells: out,
        warnings,
    })
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.2}"))
}

const SUMMARY_COLUMNS: [&str; 5] = ["Rouge1", "Rouge2", "RougeL", "RougeLsum", "General-Accuracy"];
const FIELD_COLUMNS: [&str; 5] = ["Task", "Dataset", "Metric", "Score", "Overall"];

impl EvaluationReport {
    fn splits(&self) -> Vec<SplitLabel> {
        let mut s: Vec<SplitLabel> = self.cells.iter().map(|c| c.split).collect();
        s.dedup();
        s
    }

    fn contexts(&self) -> Vec<ContextKind> {
        let mut k: Vec<ContextKind> = self.cells.iter().map(|c| c.context).collect();
        k.sort();
        k.dedup();
        k
    }

    fn cell(&self, split: SplitLabel, context: ContextKind) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.split == split && c.context == context)
    }

    pub fn to_markdown(&self) -> String {
        let splits = self.splits();
        let contexts = self.contexts();
        let mut md = String::new();
        let _ = writeln!(md, "# Evaluation report\n");
        let _ = writeln!(md, "- config digest: `{}`", self.meta.config_digest);
        let _ = writeln!(md, "- created: {}", self.meta.created_at);
        let filter = match &self.meta.template_filter {
            Some(ids) => ids.iter().map(u32::to_string).collect::<Vec<_>>().join(", "),
            None => "all".into(),
        };
        let _ = writeln!(md, "- templates: {filter}");
        let _ = writeln!(md, "- partial threshold: {}", self.meta.partial_threshold);
        let _ = writeln!(md, "- overall: {:?}\n", self.meta.overall_mode);

        let group_row = |width: usize, lead: usize| {
            let mut row = "|".to_owned() + &" |".repeat(lead);
            for s in &splits {
                row.push_str(&format!(" {} |", s.display_name()));
                row.push_str(&" |".repeat(width - 1));
            }
            row
        };
        let rule = |n: usize| "|".to_owned() + &"---|".repeat(n);

        let _ = writeln!(md, "## Summary\n");
        let _ = writeln!(md, "{}", group_row(SUMMARY_COLUMNS.len(), 1));
        let _ = writeln!(md, "{}", rule(1 + SUMMARY_COLUMNS.len() * splits.len()));
        let mut head = "| Context |".to_owned();
        for _ in &splits {
            for c in SUMMARY_COLUMNS {
                head.push_str(&format!(" {c} |"));
            }
        }
        let _ = writeln!(md, "{head}");
        for k in &contexts {
            let mut row = format!("| {k} |");
            for s in &splits {
                let c = self.cell(*s, *k);
                let r = c.and_then(|c| c.rouge);
                let vals = [
                    r.map(|r| r.rouge1),
                    r.map(|r| r.rouge2),
                    r.map(|r| r.rouge_l),
                    r.map(|r| r.rouge_lsum),
                    c.and_then(|c| c.general_accuracy).map(|g| g.value),
                ];
                for v in vals {
                    row.push_str(&format!(" {} |", num(v)));
                }
            }
            let _ = writeln!(md, "{row}");
        }

        for (title, stat) in [("F1", 2usize), ("Precision", 0), ("Recall", 1)] {
            let _ = writeln!(md, "\n## {title}\n");
            let _ = writeln!(md, "{}", group_row(FIELD_COLUMNS.len(), 2));
            let _ = writeln!(md, "{}", rule(2 + FIELD_COLUMNS.len() * splits.len()));
            let mut head = "| Context | Mode |".to_owned();
            for _ in &splits {
                for c in FIELD_COLUMNS {
                    head.push_str(&format!(" {c} |"));
                }
            }
            let _ = writeln!(md, "{head}");
            for k in &contexts {
                for mode in ["Exact", "Partial"] {
                    let mut row = format!("| {k} | {mode} |");
                    for s in &splits {
                        let scores = self
                            .cell(*s, *k)
                            .and_then(|c| if mode == "Exact" { c.exact } else { c.partial });
                        for (_, prf) in field_rows(scores.as_ref()) {
                            let v = prf.map(|p| [p.precision, p.recall, p.f1][stat]);
                            row.push_str(&format!(" {} |", num(v)));
                        }
                    }
                    let _ = writeln!(md, "{row}");
                }
            }
        }

        if !self.warnings.is_empty() {
            let _ = writeln!(md, "\n## Warnings\n");
            for w in &self.warnings {
                let _ = writeln!(md, "- {w}");
            }
        }
        md
    }

    /// One row per (cell, metric); null values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,context,metric,value\n");
        for c in &self.cells {
            for (name, v) in c.metric_values() {
                let value = v.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{}", c.split.as_str(), c.context, name, value);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json];

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "report.md",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Json => "report.json",
        }
    }
}

/// Writes one format into `dir` and returns the file path.
pub fn emit(report: &EvaluationReport, format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format.file_name());
    let body = match format {
        ReportFormat::Markdown => report.to_markdown(),
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    };
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Run directory for a report: `<outdir>/run-<first 12 digest chars>`.
pub fn run_dir(outdir: &Path, config_digest: &str) -> PathBuf {
    let short: String = config_digest.chars().take(12).collect();
    outdir.join(format!("run-{short}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MatchMode;

    fn meta() -> ReportMeta {
        ReportMeta {
            created_at: "2024-01-01T00:00:00Z".into(),
            config_digest: "abc123".into(),
            template_filter: Some(vec![11]),
            pattern_sets: PatternSets::default(),
            partial_threshold: 50.0,
            overall_mode: OverallMode::Macro,
        }
    }

    fn scores(mode: MatchMode, v: f64) -> FieldScores {
        let p = Prf::new(v, v);
        FieldScores {
            mode,
            overall_mode: OverallMode::Macro,
            task: p,
            dataset: p,
            metric: p,
            score: p,
            overall: p,
        }
    }

    fn full_cell(split: SplitLabel, context: ContextKind) -> ReportCell {
        ReportCell {
            n_predictions: 3,
            rouge: Some(RougeScores {
                rouge1: 50.0,
                rouge2: 10.126,
                rouge_l: 48.0,
                rouge_lsum: 49.0,
            }),
            general_accuracy: Some(GeneralAccuracy {
                value: 200.0 / 3.0,
                n_correct: 2,
                n_total: 3,
            }),
            exact: Some(scores(MatchMode::Exact, 20.0)),
            partial: Some(scores(MatchMode::partial(), 30.0)),
            ..ReportCell::empty(split, context)
        }
    }

    #[test]
    fn one_cell() {
        let r = build_report(vec![full_cell(SplitLabel::FewShot, ContextKind::DocRec)], &[(SplitLabel::FewShot, ContextKind::DocRec)], meta()).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn missing_cells_and_parts_are_explicit() {
        let mut partial_missing = full_cell(SplitLabel::FewShot, ContextKind::DocRec);
        partial_missing.partial = None;
        let plan = [(SplitLabel::FewShot, ContextKind::DocRec), (SplitLabel::ZeroShot, ContextKind::DocRec)];
        let r = build_report(vec![partial_missing], &plan, meta()).unwrap();
        assert_eq!(r.cells.len(), 2);
        assert!(r.cells[0].partial.is_none());
        assert!(r.cells[0].warnings.iter().any(|w| w.contains("partial")));
        assert!(r.cells[1].rouge.is_none());
        let json = r.to_json();
        assert!(json.contains("\"partial\": null"));
    }

    #[test]
    fn plan_violations() {
        let c = full_cell(SplitLabel::FewShot, ContextKind::DocRec);
        assert!(build_report(vec![c.clone(), c.clone()], &[(SplitLabel::FewShot, ContextKind::DocRec)], meta()).is_err());
        assert!(build_report(vec![c], &[(SplitLabel::ZeroShot, ContextKind::DocRec)], meta()).is_err());
    }

    fn full_report() -> EvaluationReport {
        let mut cells = Vec::new();
        let mut plan = Vec::new();
        for s in [SplitLabel::FewShot, SplitLabel::ZeroShot] {
            for k in ContextKind::ALL {
                cells.push(full_cell(s, k));
                plan.push((s, k));
            }
        }
        build_report(cells, &plan, meta()).unwrap()
    }

    #[test]
    fn deterministic_and_json_stable() {
        let a = full_report();
        let b = full_report();
        assert_eq!(a.to_json(), b.to_json());
        let back = EvaluationReport::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.to_json(), a.to_json());
    }

    #[test]
    fn markdown_layout() {
        let md = full_report().to_markdown();
        for h in SUMMARY_COLUMNS {
            assert!(md.contains(&format!(" {h} |")), "{h}");
        }
        assert!(md.contains("Test-Few-shot") && md.contains("Test-Zero-shot"));
        assert!(md.contains("| DocREC | Exact | 20.00 |"));
        assert!(md.contains("| DocTAET | 50.00 | 10.13 |"));
    }

    #[test]
    fn csv_row_count() {
        let r = full_report();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + r.cells.len() * METRICS_PER_CELL);
        assert_eq!(r.cells[0].metric_values().len(), METRICS_PER_CELL);
    }

    #[test]
    fn emit_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = full_report();
        let run = run_dir(dir.path(), &r.meta.config_digest);
        for f in ReportFormat::ALL {
            let p = emit(&r, f, &run).unwrap();
            assert!(p.ends_with(f.file_name()));
        }
        let back = EvaluationReport::from_json(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
