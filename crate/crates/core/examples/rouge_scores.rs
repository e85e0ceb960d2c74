//! ROUGE between a reply and its reference, both given on the command line.
//!
//! cargo run --example rouge_scores -- "predicted text" "reference text"

use leaderboard_extract::metrics::rouge_pair;

fn main() {
    let mut args = std::env::args().skip(1);
    let pred = args.next().unwrap_or_else(|| {
        r#"[{"Task": "Image Classification", "Dataset": "ImageNet", "Metric": "Top-1", "Score": "81.5"}]"#.into()
    });
    let reference = args.next().unwrap_or_else(|| {
        r#"[{"Task": "Image Classification", "Dataset": "ImageNet", "Metric": "Top-1 Accuracy", "Score": "81.5"}]"#.into()
    });
    let r = rouge_pair(&pred, &reference);
    println!("rouge1    {:.2}", r.rouge1);
    println!("rouge2    {:.2}", r.rouge2);
    println!("rougeL    {:.2}", r.rouge_l);
    println!("rougeLsum {:.2}", r.rouge_lsum);
}
