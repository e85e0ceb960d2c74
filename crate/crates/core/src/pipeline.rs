//! The end-to-end stages behind each `lbx` subcommand.
//!
//! Output layout under the configured output directory:
//!
//! ```text
//! flat/<paper>.tex, flat/<paper>.json   flattened source and inclusion log
//! contexts/<Kind>.jsonl                 context dumps
//! stats.csv, stats.md                   corpus statistics
//! dataset/<Kind>.jsonl                  prompt instances
//! predictions/<Kind>.jsonl              model replies (also the checkpoint)
//! run-<digest>/report.{md,csv,json}     evaluation report
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::Serialize;

use crate::config::RunConfig;
use crate::context::{self, ContextDocument, ContextKind, ContextOptions};
use crate::corpus::{self, AnnotationSet, Corpus, SplitLabel};
use crate::error::{Error, Result};
use crate::inference::{self, ModelPrediction, Parsed};
use crate::metrics::{self, MatchMode};
use crate::promptgen::{self, DatasetOptions, SotaQuestion};
use crate::report::{self, EvaluationReport, ReportCell, ReportFormat, ReportMeta};
use crate::texflat::{self, ConverterCmd, FlatTex};

/// Files written and non-fatal warnings raised by one stage.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

/// Paper id made safe for a file name.
pub fn file_stem(paper_id: &str) -> String {
    paper_id
        .chars()
        .map(|c| if c.is_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

pub fn contexts_path(outdir: &Path, kind: ContextKind) -> PathBuf {
    outdir.join("contexts").join(format!("{kind}.jsonl"))
}

pub fn dataset_path(outdir: &Path, kind: ContextKind) -> PathBuf {
    outdir.join("dataset").join(format!("{kind}.jsonl"))
}

pub fn predictions_path(outdir: &Path, kind: ContextKind) -> PathBuf {
    outdir.join("predictions").join(format!("{kind}.jsonl"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> Result<PathBuf> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Order-preserving parallel map over at most `workers` threads.
fn par_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().unwrap() = Some(f(item));
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("slot filled")).collect()
}

fn on_path(program: &str) -> bool {
    if program.contains(std::path::MAIN_SEPARATOR) {
        return Path::new(program).is_file();
    }
    std::env::var_os("PATH").is_some_and(|paths| std::env::split_paths(&paths).any(|d| d.join(program).is_file()))
}

/// The configured converter, or `None` with a warning when its program is
/// not installed.
fn resolve_converter(cfg: &RunConfig, out: &mut Outcome) -> Result<Option<ConverterCmd>> {
    let Some(cmd) = cfg.converter_cmd()? else {
        return Ok(None);
    };
    if on_path(&cmd.program) {
        Ok(Some(cmd))
    } else {
        out.warn(format!("converter `{}` not found on PATH; using the built-in stripper", cmd.program));
        Ok(None)
    }
}

fn flatten_record(corpus: &Corpus, rec: &corpus::PaperRecord) -> Result<FlatTex> {
    let mut flat = texflat::flatten(&corpus.resolve_root(rec))?;
    flat.paper_id = rec.paper_id.clone();
    Ok(flat)
}

fn fail_summary(failures: &[String], total: usize) -> Result<()> {
    match failures.first() {
        None => Ok(()),
        Some(first) => Err(Error::Papers {
            failed: failures.len(),
            total,
            first: first.clone(),
        }),
    }
}

#[derive(Serialize)]
struct FlattenLog<'a> {
    paper_id: &'a str,
    inclusion_log: &'a [texflat::Inclusion],
    warnings: &'a [String],
}

/// Flattens every paper in the manifest. Missing includes are warnings;
/// a paper that cannot be flattened at all fails the stage after the rest
/// are written.
pub fn cmd_flatten(cfg: &RunConfig) -> Result<Outcome> {
    let corpus = corpus::load_manifest(cfg.manifest()?)?;
    let dir = cfg.outdir.join("flat");
    create_dir(&dir)?;
    let results = par_map(corpus.records(), cfg.workers(), |r| flatten_record(&corpus, r));
    let mut out = Outcome::default();
    let mut failures = Vec::new();
    for (rec, res) in corpus.records().iter().zip(results) {
        match res {
            Ok(flat) => {
                let stem = file_stem(&rec.paper_id);
                out.files.push(write_file(&dir.join(format!("{stem}.tex")), &flat.source)?);
                let log = FlattenLog {
                    paper_id: &flat.paper_id,
                    inclusion_log: &flat.inclusion_log,
                    warnings: &flat.warnings,
                };
                let mut json = serde_json::to_string_pretty(&log)?;
                json.push('\n');
                out.files.push(write_file(&dir.join(format!("{stem}.json")), json)?);
                for w in &flat.warnings {
                    out.warn(format!("{}: {w}", rec.paper_id));
                }
            }
            Err(e) => {
                log::error!("{}: {e}", rec.paper_id);
                failures.push(format!("{}: {e}", rec.paper_id));
            }
        }
    }
    fail_summary(&failures, corpus.len())?;
    Ok(out)
}

/// Extracts the configured context kinds for every paper into one dump
/// file per kind.
pub fn cmd_context(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let corpus = corpus::load_manifest(cfg.manifest()?)?;
    let mut out = Outcome::default();
    let opts = ContextOptions {
        patterns: cfg.patterns.clone(),
        converter: resolve_converter(cfg, &mut out)?,
    };
    let kinds = cfg.contexts.clone();
    let results = par_map(corpus.records(), cfg.workers(), |r| -> Result<Vec<ContextDocument>> {
        let flat = flatten_record(&corpus, r)?;
        kinds.iter().map(|k| context::extract(*k, &flat, &opts)).collect()
    });

    let mut per_kind: Vec<Vec<ContextDocument>> = vec![Vec::new(); kinds.len()];
    let mut failures = Vec::new();
    for (rec, res) in corpus.records().iter().zip(results) {
        match res {
            Ok(docs) => {
                for (slot, doc) in per_kind.iter_mut().zip(docs) {
                    for w in &doc.warnings {
                        out.warn(format!("{} {}: {w}", rec.paper_id, doc.kind));
                    }
                    slot.push(doc);
                }
            }
            Err(e) => {
                log::error!("{}: {e}", rec.paper_id);
                failures.push(format!("{}: {e}", rec.paper_id));
            }
        }
    }
    for (kind, docs) in kinds.iter().zip(&per_kind) {
        let path = contexts_path(&cfg.outdir, *kind);
        create_dir(path.parent().expect("has parent"))?;
        context::write_context_dump(&path, docs)?;
        out.files.push(path);
    }
    fail_summary(&failures, corpus.len())?;
    Ok(out)
}

/// Corpus statistics per split, written as CSV and Markdown. Returns the
/// Markdown table as well.
pub fn cmd_stats(cfg: &RunConfig) -> Result<(Outcome, String)> {
    let corpus = corpus::load_manifest(cfg.manifest()?)?;
    let columns: Vec<_> = SplitLabel::ALL.iter().map(|s| (*s, corpus::compute_stats(&corpus, *s))).collect();
    let md = corpus::stats_markdown(&columns);
    let mut out = Outcome::default();
    out.files.push(write_file(&cfg.outdir.join("stats.csv"), corpus::stats_csv(&columns))?);
    out.files.push(write_file(&cfg.outdir.join("stats.md"), &md)?);
    Ok((out, md))
}

/// Builds one prompt dataset per context kind from the context dumps in
/// `contexts_dir` (default: `<outdir>/contexts`).
pub fn cmd_dataset(cfg: &RunConfig, contexts_dir: Option<&Path>) -> Result<Outcome> {
    cfg.validate()?;
    let corpus = corpus::load_manifest(cfg.manifest()?)?;
    let templates = promptgen::builtin_templates();
    let question = SotaQuestion::default();
    let opts = DatasetOptions {
        sample_fraction: cfg.sample_fraction,
        seed: cfg.seed,
        budget_words: Some(cfg.budget_words),
    };
    let mut out = Outcome::default();
    for kind in &cfg.contexts {
        let src = match contexts_dir {
            Some(d) => d.join(format!("{kind}.jsonl")),
            None => contexts_path(&cfg.outdir, *kind),
        };
        let docs: HashMap<String, ContextDocument> = context::read_context_dump(&src)?
            .into_iter()
            .map(|d| (d.paper_id.clone(), d))
            .collect();
        let instances = promptgen::build_dataset(&corpus, &docs, &templates, &question, &opts)?;
        let path = dataset_path(&cfg.outdir, *kind);
        create_dir(path.parent().expect("has parent"))?;
        promptgen::write_dataset(&path, &instances)?;
        log::info!("{kind}: {} instances", instances.len());
        out.files.push(path);
    }
    Ok(out)
}

/// Runs inference over a dataset file. The output file doubles as the
/// checkpoint, so rerunning the same command resumes.
pub fn cmd_infer(cfg: &RunConfig, dataset: &Path, output: Option<&Path>, templates: Option<&[u32]>) -> Result<Outcome> {
    let mut instances = promptgen::read_dataset(dataset)?;
    if let Some(ids) = templates {
        instances.retain(|i| ids.contains(&i.template_id));
    }
    let output = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = dataset.file_stem().map_or_else(|| "predictions".into(), |s| s.to_string_lossy().into_owned());
            cfg.outdir.join("predictions").join(format!("{stem}.jsonl"))
        }
    };
    if let Some(parent) = output.parent() {
        create_dir(parent)?;
    }
    let preds = inference::run_batch(&instances, &cfg.inference, &output)?;
    let mut out = Outcome::default();
    let failed = preds.iter().filter(|p| matches!(&p.parsed, Parsed::ParseFailure(r) if r.starts_with("transport: "))).count();
    if failed > 0 {
        out.warn(format!("{failed} requests failed; rerun to retry them"));
    }
    out.files.push(output);
    Ok(out)
}

/// Reads `KIND=PATH`, or a bare path whose file stem names a context kind.
pub fn parse_prediction_source(arg: &str) -> Result<(ContextKind, PathBuf)> {
    if let Some((k, p)) = arg.split_once('=') {
        if let Ok(kind) = k.parse() {
            return Ok((kind, PathBuf::from(p)));
        }
    }
    let path = PathBuf::from(arg);
    let kind = path
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Config(format!("cannot tell the context kind of `{arg}`; pass it as KIND=PATH")))?;
    Ok((kind, path))
}

/// Scores prediction/gold pairs into one report cell.
pub fn score_cell(split: SplitLabel, context: ContextKind, pairs: &[(&ModelPrediction, &AnnotationSet)], cfg: &RunConfig) -> ReportCell {
    let partial = MatchMode::Partial {
        threshold: cfg.eval.partial_threshold,
    };
    ReportCell {
        n_predictions: pairs.len(),
        rouge: Some(metrics::rouge_eval(pairs)),
        general_accuracy: Some(metrics::general_accuracy(pairs)),
        exact: Some(metrics::field_scores(pairs, MatchMode::Exact, cfg.eval.overall_mode)),
        partial: Some(metrics::field_scores(pairs, partial, cfg.eval.overall_mode)),
        ..ReportCell::empty(split, context)
    }
}

/// Evaluates prediction files against the manifest and writes the report
/// into `<outdir>/run-<digest>/`.
pub fn cmd_eval(cfg: &RunConfig, sources: &[(ContextKind, PathBuf)]) -> Result<(Outcome, EvaluationReport)> {
    cfg.validate()?;
    if sources.is_empty() {
        return Err(Error::Config("no prediction files given".into()));
    }
    let corpus = corpus::load_manifest(cfg.manifest()?)?;
    let mut out = Outcome::default();

    let present: Vec<SplitLabel> = SplitLabel::ALL.into_iter().filter(|s| corpus.split(*s).next().is_some()).collect();
    let tests: Vec<SplitLabel> = present.iter().copied().filter(|s| *s != SplitLabel::Train).collect();
    let splits = if tests.is_empty() { present } else { tests };
    let mut plan = Vec::new();
    let mut cells = Vec::new();

    for (kind, path) in sources {
        let mut preds = inference::read_predictions(path)?;
        if let Some(ids) = &cfg.eval.template_filter {
            preds.retain(|p| ids.contains(&p.template_id));
        }
        let unknown = preds.iter().filter(|p| corpus.get(&p.paper_id).is_none()).count();
        if unknown > 0 {
            out.warn(format!("{}: {unknown} predictions for papers not in the manifest", path.display()));
        }
        for split in &splits {
            plan.push((*split, *kind));
            let pairs: Vec<(&ModelPrediction, &AnnotationSet)> = preds
                .iter()
                .filter_map(|p| corpus.get(&p.paper_id).filter(|r| r.split == *split).map(|r| (p, &r.annotations)))
                .collect();
            let missing = corpus.split(*split).filter(|r| !pairs.iter().any(|(p, _)| p.paper_id == r.paper_id)).count();
            if missing > 0 {
                out.warn(format!("{} {kind}: {missing} papers have no prediction", split.as_str()));
            }
            if !pairs.is_empty() {
                cells.push(score_cell(*split, *kind, &pairs, cfg));
            }
        }
    }

    let meta = ReportMeta {
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config_digest: cfg.digest(),
        template_filter: cfg.eval.template_filter.clone(),
        pattern_sets: cfg.patterns.clone(),
        partial_threshold: cfg.eval.partial_threshold,
        overall_mode: cfg.eval.overall_mode,
    };
    let rep = report::build_report(cells, &plan, meta)?;
    for w in &rep.warnings {
        out.warn(w.clone());
    }
    let dir = report::run_dir(&cfg.outdir, &rep.meta.config_digest);
    for f in ReportFormat::ALL {
        out.files.push(report::emit(&rep, f, &dir)?);
    }
    Ok((out, rep))
}

/// Re-renders a saved `report.json` into all formats under `dir`
/// (default: next to the input).
pub fn cmd_report(report_json: &Path, dir: Option<&Path>) -> Result<Outcome> {
    let text = fs::read_to_string(report_json).map_err(|e| Error::io(report_json, e))?;
    let rep = EvaluationReport::from_json(&text)?;
    let dir = match dir {
        Some(d) => d.to_path_buf(),
        None => report_json.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    let mut out = Outcome::default();
    for f in ReportFormat::ALL {
        out.files.push(report::emit(&rep, f, &dir)?);
    }
    Ok(out)
}
