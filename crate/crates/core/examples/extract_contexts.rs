//! Print the three context views of one LaTeX project.
//!
//! cargo run --example extract_contexts -- path/to/project [converter command]
//!
//! Without a converter command the built-in markup stripper is used.

use std::path::PathBuf;

use leaderboard_extract::context::{self, ContextKind, ContextOptions};
use leaderboard_extract::texflat::{self, ConverterCmd};

fn main() -> leaderboard_extract::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/contexts/p1.tex")));
    let converter = args.next().map(|c| ConverterCmd::parse(&c)).transpose()?;
    let opts = ContextOptions {
        converter,
        ..Default::default()
    };
    let flat = texflat::flatten(&root)?;
    for kind in ContextKind::ALL {
        let doc = context::extract(kind, &flat, &opts)?;
        println!("== {kind} ({} words; sections: {:?})", doc.word_count, doc.sections_used);
        println!("{}\n", doc.text);
        for w in &doc.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(())
}
