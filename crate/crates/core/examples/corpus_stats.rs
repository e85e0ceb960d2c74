//! Per-split corpus statistics and a seeded no-leaderboard pool.
//!
//! cargo run --example corpus_stats -- [manifest.jsonl]

use std::path::PathBuf;

use leaderboard_extract::corpus::{self, CategoryFilter, SplitLabel};

fn main() -> leaderboard_extract::Result<()> {
    let manifest = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/sample_manifest.jsonl")));
    let corpus = corpus::load_manifest(&manifest)?;
    let columns: Vec<_> = SplitLabel::ALL.iter().map(|s| (*s, corpus::compute_stats(&corpus, *s))).collect();
    print!("{}", corpus::stats_markdown(&columns));

    // Papers outside AI/ML, relabelled as having no leaderboard.
    let pool = corpus::select_unanswerable_pool(corpus.records(), &CategoryFilter::non_ai(), 0, 1)?;
    for r in &pool {
        println!("\nno-leaderboard pick: {} ({:?})", r.paper_id, r.categories);
    }
    Ok(())
}
