//! Batch inference against a local stand-in for a chat-completions server,
//! with throttling and a resumed second run.
//!
//! cargo run --example mock_inference

use std::time::Duration;

use leaderboard_extract::context::ContextKind;
use leaderboard_extract::corpus::SplitLabel;
use leaderboard_extract::inference::mock::{MockReply, MockServer};
use leaderboard_extract::inference::{run_batch, InferenceConfig, RetryPolicy};
use leaderboard_extract::promptgen::PromptInstance;

fn main() -> leaderboard_extract::Result<()> {
    // Every third request is throttled once.
    let server = MockServer::start(|req| {
        if req.index % 3 == 0 {
            MockReply::status(429)
        } else {
            MockReply::content("unanswerable").with_delay(Duration::from_millis(10))
        }
    })
    .expect("bind mock server");
    let cfg = InferenceConfig {
        endpoint_url: server.url(),
        model_name: "mock".into(),
        auth_required: false,
        max_in_flight: 3,
        retry: RetryPolicy {
            max_attempts: 4,
            base_backoff_ms: 5,
        },
        ..Default::default()
    };
    let instances: Vec<PromptInstance> = (0..12)
        .map(|i| PromptInstance {
            paper_id: format!("paper-{i}"),
            template_id: 11,
            context_kind: ContextKind::DocTaet,
            split: SplitLabel::ZeroShot,
            prompt: format!("context {i}"),
            target: "unanswerable".into(),
        })
        .collect();

    let dir = std::env::temp_dir().join(format!("lbx-mock-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| leaderboard_extract::Error::Io { path: dir.clone(), source: e })?;
    let ckpt = dir.join("predictions.jsonl");

    let preds = run_batch(&instances[..8], &cfg, &ckpt)?;
    println!("first run: {} predictions, {} requests, peak {} in flight", preds.len(), server.requests(), server.peak_in_flight());
    let before = server.requests();
    let preds = run_batch(&instances, &cfg, &ckpt)?;
    println!("resumed: {} predictions, {} new requests", preds.len(), server.requests() - before);
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
