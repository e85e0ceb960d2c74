//! Instruction templates and the prompt dataset builder.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::{truncate_context, ContextDocument, ContextKind};
use crate::corpus::{AnnotationSet, Corpus, PaperRecord, SplitLabel};
use crate::error::{Error, Result};

/// The fixed extraction question.
pub const SOTA_QUESTION: &str = "What are the values for the following properties to construct a Leaderboard for the model introduced in this article: task, dataset, metric, and score?";

pub const UNANSWERABLE: &str = "unanswerable";

const CONTEXT_SLOT: &str = "{Context}";
const QUESTION_SLOT: &str = "{Question}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateFamily {
    #[serde(rename = "SQuAD_v2")]
    SquadV2,
    #[serde(rename = "DROP")]
    Drop,
}

impl TemplateFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateFamily::SquadV2 => "SQuAD_v2",
            TemplateFamily::Drop => "DROP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionTemplate {
    /// 1..=8 are the SQuAD v2 rows, 9..=15 the DROP rows.
    pub id: u32,
    pub family: TemplateFamily,
    /// Row number within the family's column of the instruction table.
    pub family_row: u32,
    /// The instruction exactly as listed.
    pub instruction: String,
    pub pattern: String,
    pub has_unanswerable_clause: bool,
}

/// The extraction question as a value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SotaQuestion {
    pub text: String,
}

impl Default for SotaQuestion {
    fn default() -> Self {
        SotaQuestion {
            text: SOTA_QUESTION.to_owned(),
        }
    }
}

const SQUAD_V2: [&str; 8] = [
    r#"Please answer a question about this article. If unanswerable, say "unanswerable"."#,
    r#"{Context} {Question} If unanswerable, say "unanswerable"."#,
    r#"Try to answer this question if possible (otherwise reply "unanswerable")."#,
    r#"Please answer a question about this article, or say "unanswerable" if not possible."#,
    r#"If possible to answer this question, do so (else, reply "unanswerable")."#,
    r#"Answer this question, if possible (if impossible, reply "unanswerable")."#,
    r#"What is the answer? (If it cannot be answered, return "unanswerable")."#,
    r#"Now answer this question, if there is an answer (else, "unanswerable")."#,
];

const DROP: [&str; 7] = [
    "Answer based on context.",
    "Answer this question based on the article.",
    "{Context} {Question}",
    "Answer this question: {Question}",
    "Read this article and answer this question.",
    "Based on the above article, answer a question.",
    "Context: {Context} Question: {Question} Answer:",
];

/// Completes an instruction into a renderable pattern. Instructions that
/// already place both slots are used verbatim; otherwise the context goes
/// first and the question last.
fn compose_pattern(instruction: &str) -> String {
    let mut pattern = instruction.to_owned();
    if !pattern.contains(CONTEXT_SLOT) {
        pattern = format!("{CONTEXT_SLOT}\n\n{pattern}");
    }
    if !pattern.contains(QUESTION_SLOT) {
        pattern = format!("{pattern}\n\n{QUESTION_SLOT}");
    }
    pattern
}

/// The 15 builtin templates: 8 SQuAD v2 followed by 7 DROP.
pub fn builtin_templates() -> Vec<InstructionTemplate> {
    let squad = SQUAD_V2.iter().enumerate().map(|(i, s)| (TemplateFamily::SquadV2, i, *s));
    let drop = DROP.iter().enumerate().map(|(i, s)| (TemplateFamily::Drop, i, *s));
    squad
        .chain(drop)
        .enumerate()
        .map(|(k, (family, row, instruction))| InstructionTemplate {
            id: k as u32 + 1,
            family,
            family_row: row as u32 + 1,
            instruction: instruction.to_owned(),
            pattern: compose_pattern(instruction),
            has_unanswerable_clause: instruction.contains("\"unanswerable\""),
        })
        .collect()
}

/// Id of the bare `{Context} {Question}` DROP template.
pub fn bare_drop_template_id() -> u32 {
    builtin_templates()
        .into_iter()
        .find(|t| t.family == TemplateFamily::Drop && t.instruction == "{Context} {Question}")
        .map(|t| t.id)
        .expect("builtin set has the bare DROP template")
}

#[derive(Serialize)]
struct QuadOut<'a> {
    #[serde(rename = "Task")]
    task: &'a str,
    #[serde(rename = "Dataset")]
    dataset: &'a str,
    #[serde(rename = "Metric")]
    metric: &'a str,
    #[serde(rename = "Score")]
    score: &'a str,
}

/// Canonical target text: `unanswerable`, or a compact single-line JSON
/// array with keys in Task, Dataset, Metric, Score order.
pub fn serialize_target(ann: &AnnotationSet) -> String {
    match ann {
        AnnotationSet::Unanswerable => UNANSWERABLE.to_owned(),
        AnnotationSet::Leaderboard(quads) => {
            let out: Vec<QuadOut> = quads
                .iter()
                .map(|q| QuadOut {
                    task: &q.task,
                    dataset: &q.dataset,
                    metric: &q.metric,
                    score: &q.score,
                })
                .collect();
            serde_json::to_string(&out).expect("strings always serialize")
        }
    }
}

/// Substitutes the context and question slots. Nothing else is rewritten,
/// and text inserted for one slot is never rescanned for the other.
pub fn render(template: &InstructionTemplate, context: &ContextDocument, question: &SotaQuestion) -> Result<String> {
    render_pattern(&template.pattern, &context.text, &question.text)
}

pub fn render_pattern(pattern: &str, context: &str, question: &str) -> Result<String> {
    for slot in [CONTEXT_SLOT, QUESTION_SLOT] {
        if !pattern.contains(slot) {
            return Err(Error::Config(format!("template pattern lacks {slot}: {pattern:?}")));
        }
    }
    let mut out = String::with_capacity(pattern.len() + context.len() + question.len());
    let mut rest = pattern;
    loop {
        let next = [(CONTEXT_SLOT, context), (QUESTION_SLOT, question)]
            .into_iter()
            .filter_map(|(slot, value)| rest.find(slot).map(|i| (i, slot, value)))
            .min_by_key(|(i, ..)| *i);
        match next {
            Some((i, slot, value)) => {
                out.push_str(&rest[..i]);
                out.push_str(value);
                rest = &rest[i + slot.len()..];
            }
            None => {
                out.push_str(rest);
                return Ok(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub paper_id: String,
    pub template_id: u32,
    pub context_kind: ContextKind,
    pub split: SplitLabel,
    pub prompt: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    /// Fraction of papers drawn per template, in (0, 1].
    pub sample_fraction: f64,
    pub seed: u64,
    /// Word budget applied to each context before rendering.
    pub budget_words: Option<usize>,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            sample_fraction: 1.0,
            seed: 0,
            budget_words: Some(crate::context::DEFAULT_BUDGET_WORDS),
        }
    }
}

/// Per-stratum draw sizes that add up to `floor(fraction * total)`.
/// Each stratum gets its floor share; a leftover slot goes to the stratum
/// with the larger fractional remainder (papers with leaderboards on ties).
fn stratum_sizes(with: usize, without: usize, fraction: f64) -> (usize, usize) {
    let total = ((with + without) as f64 * fraction + 1e-9).floor() as usize;
    let want_with = with as f64 * fraction;
    let want_without = without as f64 * fraction;
    let mut a = (want_with + 1e-9).floor() as usize;
    let mut b = (want_without + 1e-9).floor() as usize;
    while a + b < total {
        let rem_a = want_with - a as f64;
        let rem_b = want_without - b as f64;
        if (rem_a >= rem_b && a < with) || b >= without {
            a += 1;
        } else {
            b += 1;
        }
    }
    (a, b)
}

fn draw<'a>(pool: &[&'a PaperRecord], k: usize, rng: &mut ChaCha8Rng) -> Vec<&'a PaperRecord> {
    rand::seq::index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Instantiates every template over a seeded sample of the corpus.
///
/// Each template draws independently, from a stream keyed by the seed and the
/// template id; papers with and without leaderboards are sampled separately
/// at the same fraction. Output is sorted by (template_id, paper_id).
pub fn build_dataset(
    corpus: &Corpus,
    contexts: &HashMap<String, ContextDocument>,
    templates: &[InstructionTemplate],
    question: &SotaQuestion,
    opts: &DatasetOptions,
) -> Result<Vec<PromptInstance>> {
    if !(opts.sample_fraction > 0.0 && opts.sample_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "sample fraction must lie in (0, 1], got {}",
            opts.sample_fraction
        )));
    }
    let mut with: Vec<&PaperRecord> = corpus.records().iter().filter(|r| r.annotations.has_leaderboard()).collect();
    let mut without: Vec<&PaperRecord> = corpus.records().iter().filter(|r| !r.annotations.has_leaderboard()).collect();
    with.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    without.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    let (n_with, n_without) = stratum_sizes(with.len(), without.len(), opts.sample_fraction);

    let mut out = Vec::new();
    for template in templates {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(u64::from(template.id));
        let mut papers = draw(&with, n_with, &mut rng);
        papers.extend(draw(&without, n_without, &mut rng));
        papers.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));

        for paper in papers {
            let ctx = contexts
                .get(&paper.paper_id)
                .ok_or_else(|| Error::MissingContext(paper.paper_id.clone()))?;
            let ctx = match opts.budget_words {
                Some(b) => truncate_context(ctx, b)?,
                None => ctx.clone(),
            };
            out.push(PromptInstance {
                paper_id: paper.paper_id.clone(),
                template_id: template.id,
                context_kind: ctx.kind,
                split: paper.split,
                prompt: render(template, &ctx, question)?,
                target: serialize_target(&paper.annotations),
            });
        }
    }
    out.sort_by(|a, b| (a.template_id, &a.paper_id).cmp(&(b.template_id, &b.paper_id)));
    Ok(out)
}

pub fn write_dataset(path: &Path, instances: &[PromptInstance]) -> Result<()> {
    let mut buf = Vec::new();
    for inst in instances {
        serde_json::to_writer(&mut buf, inst)?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<PromptInstance>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
