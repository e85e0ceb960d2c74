//! Merge a multi-file LaTeX project into one source.
//!
//! cargo run --example flatten_project -- path/to/project

use std::path::PathBuf;

use leaderboard_extract::texflat;

fn main() -> leaderboard_extract::Result<()> {
    let root = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/flatten/project")));
    let flat = texflat::flatten(&root)?;
    for inc in &flat.inclusion_log {
        eprintln!("{} -> {}", inc.directive, inc.path.display());
    }
    for w in &flat.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", flat.source);
    Ok(())
}
