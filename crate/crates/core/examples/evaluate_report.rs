//! Score a handful of predictions and print the Markdown report.
//!
//! cargo run --example evaluate_report

use leaderboard_extract::config::RunConfig;
use leaderboard_extract::context::ContextKind;
use leaderboard_extract::corpus::{self, AnnotationSet, SplitLabel};
use leaderboard_extract::inference::ModelPrediction;
use leaderboard_extract::pipeline::score_cell;
use leaderboard_extract::report::{build_report, ReportMeta};

fn main() -> leaderboard_extract::Result<()> {
    let corpus = corpus::load_manifest(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/sample_manifest.jsonl"))?;
    let replies = [
        ("p1", r#"[{"Task": "Image Classification", "Dataset": "ImageNet-1k", "Metric": "Top-1 Accuracy", "Score": "81.5"}]"#),
        ("p2", r#"[{"Task": "AMR Parsing", "Dataset": "AMR 2.0", "Metric": "Smatch", "Score": "88.4"}]"#),
        ("p3", "unanswerable"),
        ("p4", r#"[{"Task": "Table QA", "Dataset": "WikiTQ", "Metric": "Accuracy", "Score": "55.3"}]"#),
        ("p5", "unanswerable"),
    ];
    let preds: Vec<ModelPrediction> = replies.iter().map(|(id, raw)| ModelPrediction::from_raw(id, 11, raw.to_string())).collect();

    let cfg = RunConfig::default();
    let mut cells = Vec::new();
    let mut plan = Vec::new();
    for split in [SplitLabel::FewShot, SplitLabel::ZeroShot] {
        let pairs: Vec<(&ModelPrediction, &AnnotationSet)> = preds
            .iter()
            .filter_map(|p| corpus.get(&p.paper_id).filter(|r| r.split == split).map(|r| (p, &r.annotations)))
            .collect();
        cells.push(score_cell(split, ContextKind::DocTaet, &pairs, &cfg));
        plan.push((split, ContextKind::DocTaet));
    }
    let meta = ReportMeta {
        created_at: "example".into(),
        config_digest: cfg.digest(),
        template_filter: cfg.eval.template_filter.clone(),
        pattern_sets: cfg.patterns.clone(),
        partial_threshold: cfg.eval.partial_threshold,
        overall_mode: cfg.eval.overall_mode,
    };
    print!("{}", build_report(cells, &plan, meta)?.to_markdown());
    Ok(())
}
