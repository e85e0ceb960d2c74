//! Field matching between predicted and gold values, exact and fuzzy.
//!
//! cargo run --example fuzzy_matching

use leaderboard_extract::metrics::{fuzzy_ratio, match_field, MatchMode};

fn main() {
    for (a, b) in [
        ("ImageNet", "imagenet"),
        ("ImageNet", "ImageNet-1k"),
        ("CoNLL 2003", "CoNLL-03"),
        ("Top-1 Accuracy", "Accuracy"),
        ("BLEU", "WER"),
    ] {
        println!("{:>16} ~ {:<16} {:6.2}", a, b, fuzzy_ratio(a, b));
    }

    let pred = ["ImageNet-1k", "CIFAR 10", "COCO"];
    let gold = ["ImageNet", "CIFAR-10"];
    for mode in [MatchMode::Exact, MatchMode::partial(), MatchMode::Partial { threshold: 90.0 }] {
        println!("{mode:?}: {} of {} gold values matched", match_field(&pred, &gold, mode), gold.len());
    }
}
