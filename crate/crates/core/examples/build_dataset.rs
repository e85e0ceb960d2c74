//! Render the instruction templates over a small corpus and print a sample.
//!
//! cargo run --example build_dataset -- [fraction] [seed]

use std::collections::HashMap;

use leaderboard_extract::context::{self, ContextKind, ContextOptions};
use leaderboard_extract::corpus;
use leaderboard_extract::promptgen::{self, DatasetOptions, SotaQuestion};
use leaderboard_extract::texflat;

fn main() -> leaderboard_extract::Result<()> {
    let mut args = std::env::args().skip(1);
    let fraction: f64 = args.next().map_or(1.0, |s| s.parse().expect("fraction"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let corpus = corpus::load_manifest(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/sample_manifest.jsonl"))?;
    let mut docs = HashMap::new();
    for r in corpus.records() {
        let mut flat = texflat::flatten(&corpus.resolve_root(r))?;
        flat.paper_id = r.paper_id.clone();
        docs.insert(r.paper_id.clone(), context::extract(ContextKind::DocTaet, &flat, &ContextOptions::default())?);
    }
    let templates = promptgen::builtin_templates();
    let opts = DatasetOptions {
        sample_fraction: fraction,
        seed,
        ..Default::default()
    };
    let instances = promptgen::build_dataset(&corpus, &docs, &templates, &SotaQuestion::default(), &opts)?;
    println!("{} instances from {} papers x {} templates\n", instances.len(), corpus.len(), templates.len());
    for t in &templates {
        let papers: Vec<&str> = instances.iter().filter(|i| i.template_id == t.id).map(|i| i.paper_id.as_str()).collect();
        println!("template {:>2} ({}): {}", t.id, t.family.as_str(), papers.join(" "));
    }
    if let Some(i) = instances.iter().find(|i| i.template_id == promptgen::bare_drop_template_id()) {
        println!("\n--- prompt ---\n{}\n--- target ---\n{}", i.prompt, i.target);
    }
    Ok(())
}
