//! How model replies are read back into quadruples.
//!
//! cargo run --example parse_replies

use leaderboard_extract::inference::parse_prediction;

fn main() {
    let replies = [
        "```json\n[{\"Task\": \"NER\", \"Dataset\": \"CoNLL 2003\", \"Metric\": \"F1\", \"Score\": 92.40}]\n```",
        "Sure! [{\"task\": \"QA\", \"dataset\": \"SQuAD\", \"metric\": \"EM\", \"score\": \"88.5\"}] Hope this helps.",
        "Unanswerable",
        "The paper reports several results.",
    ];
    for raw in replies {
        println!("{raw:?}\n  -> {:?}\n", parse_prediction(raw));
    }
}
