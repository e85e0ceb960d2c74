#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use tempfile::TempDir;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub struct Paper {
    pub id: String,
    pub split: &'static str,
    /// (task, dataset, metric, score); empty means no leaderboard.
    pub quads: Vec<[String; 4]>,
    pub latex: String,
}

pub struct FixtureCorpus {
    pub dir: TempDir,
    pub manifest: PathBuf,
    pub papers: Vec<Paper>,
}

impl FixtureCorpus {
    pub fn write(papers: Vec<Paper>) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut lines = String::new();
        for p in &papers {
            let root = dir.path().join("papers").join(&p.id);
            fs::create_dir_all(&root).unwrap();
            fs::write(root.join("main.tex"), &p.latex).unwrap();
            let annotations = if p.quads.is_empty() {
                json!("unanswerable")
            } else {
                json!(p
                    .quads
                    .iter()
                    .map(|q| json!({"Task": q[0], "Dataset": q[1], "Metric": q[2], "Score": q[3]}))
                    .collect::<Vec<_>>())
            };
            let rec = json!({
                "paper_id": p.id,
                "title": format!("Paper {}", p.id),
                "split": p.split,
                "latex_root": format!("papers/{}", p.id),
                "annotations": annotations,
            });
            lines.push_str(&rec.to_string());
            lines.push('\n');
        }
        let manifest = dir.path().join("manifest.jsonl");
        fs::write(&manifest, lines).unwrap();
        FixtureCorpus { dir, manifest, papers }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }
}

const TASKS: [(&str, &str, &str); 4] = [
    ("Image Classification", "ImageNet", "Top-1 Accuracy"),
    ("Named Entity Recognition", "CoNLL 2003", "F1"),
    ("Question Answering", "SQuAD 1.1", "EM"),
    ("Machine Translation", "WMT 2014 En-De", "BLEU"),
];

fn filler(words: usize, seed: usize) -> String {
    const VOCAB: [&str; 12] = [
        "model", "layer", "signal", "prior", "baseline", "encoder", "token", "budget", "design", "method", "network", "study",
    ];
    (0..words)
        .map(|i| VOCAB[(i * 7 + seed) % VOCAB.len()])
        .collect::<Vec<_>>()
        .join(" ")
}

fn score_for(i: usize, k: usize) -> String {
    format!("{}.{}{}", 40 + i, k + 1, i % 10)
}

/// A paper with a leaderboard table in its results section, preceded by an
/// introduction of `intro_words` words.
pub fn leaderboard_paper(i: usize, split: &'static str, n_quads: usize, intro_words: usize) -> Paper {
    let mut quads = Vec::new();
    let mut rows = String::new();
    for k in 0..n_quads {
        let (t, d, m) = TASKS[(i + k) % TASKS.len()];
        let s = score_for(i, k);
        rows.push_str(&format!("{d} & {m} & {s} \\\\\n"));
        quads.push([t.to_owned(), d.to_owned(), m.to_owned(), s]);
    }
    let latex = format!(
        "\\documentclass{{article}}\n\\title{{Study {i} of {task}}}\n\\begin{{document}}\n\\maketitle\n\
\\begin{{abstract}}\nWe address {task}.\n\\end{{abstract}}\n\
\\section{{Introduction}}\n{intro}\n\
\\section{{Experimental Setup}}\nWe follow standard protocols.\n\
\\section{{Results}}\nOur approach performs well.\n\\begin{{tabular}}{{lll}}\nDataset & Metric & Score \\\\\n{rows}\\end{{tabular}}\n\
\\section{{Conclusion}}\nThe approach works.\n\\end{{document}}\n",
        task = quads[0][0],
        intro = filler(intro_words, i),
    );
    Paper {
        id: format!("lb{i:03}"),
        split,
        quads,
        latex,
    }
}

/// A paper from outside the field, with no leaderboard.
pub fn plain_paper(i: usize, split: &'static str, intro_words: usize) -> Paper {
    let latex = format!(
        "\\documentclass{{article}}\n\\title{{Notes on Sediment {i}}}\n\\begin{{document}}\n\\maketitle\n\
\\begin{{abstract}}\nWe survey river sediment.\n\\end{{abstract}}\n\
\\section{{Introduction}}\n{}\n\\section{{Field Results}}\nSediment accumulates slowly.\n\
\\section{{Conclusion}}\nRivers change.\n\\end{{document}}\n",
        filler(intro_words, i)
    );
    Paper {
        id: format!("np{i:03}"),
        split,
        quads: Vec::new(),
        latex,
    }
}

/// Twenty short papers over both test splits: 14 with leaderboards (one to
/// three quadruples each) and 6 without.
pub fn twenty_papers() -> FixtureCorpus {
    let mut papers = Vec::new();
    for i in 0..14 {
        let split = if i % 2 == 0 { "few_shot" } else { "zero_shot" };
        papers.push(leaderboard_paper(i, split, 1 + i % 3, 30));
    }
    for i in 0..6 {
        let split = if i % 2 == 0 { "few_shot" } else { "zero_shot" };
        papers.push(plain_paper(i, split, 30));
    }
    FixtureCorpus::write(papers)
}

/// Papers whose scores sit after an introduction longer than the default
/// word budget.
pub fn long_papers() -> FixtureCorpus {
    let mut papers = Vec::new();
    for i in 0..8 {
        let split = if i % 2 == 0 { "few_shot" } else { "zero_shot" };
        papers.push(leaderboard_paper(i, split, 1, 3000));
    }
    for i in 0..4 {
        let split = if i % 2 == 0 { "few_shot" } else { "zero_shot" };
        papers.push(plain_paper(i, split, 3000));
    }
    FixtureCorpus::write(papers)
}

/// Canonical target text for a fixture paper.
pub fn gold_text(p: &Paper) -> String {
    if p.quads.is_empty() {
        return "unanswerable".into();
    }
    let v: Vec<_> = p
        .quads
        .iter()
        .map(|q| json!({"Task": q[0], "Dataset": q[1], "Metric": q[2], "Score": q[3]}))
        .collect();
    serde_json::to_string(&v).unwrap()
}
