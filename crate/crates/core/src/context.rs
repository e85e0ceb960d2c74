//! The three context renderings of a paper.
//!
//! * DocTAET: title, abstract, experimental-setup sections and every table.
//! * DocREC: results, experiments and conclusion sections.
//! * DocFULL: the whole document.
//!
//! Selected LaTeX fragments are assembled into a synthetic document that
//! keeps the original preamble, then rendered with [`to_plain`].

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::texflat::plain::{document_title, strip_latex};
use crate::texflat::{scan, to_plain, ConverterCmd, FlatTex};

/// Default word budget applied before prompting.
pub const DEFAULT_BUDGET_WORDS: usize = 2400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContextKind {
    #[serde(rename = "DocTAET")]
    DocTaet,
    #[serde(rename = "DocREC")]
    DocRec,
    #[serde(rename = "DocFULL")]
    DocFull,
}

impl ContextKind {
    pub const ALL: [ContextKind; 3] = [ContextKind::DocTaet, ContextKind::DocRec, ContextKind::DocFull];

    pub fn as_str(self) -> &'static str {
        match self {
            ContextKind::DocTaet => "DocTAET",
            ContextKind::DocRec => "DocREC",
            ContextKind::DocFull => "DocFULL",
        }
    }
}

impl fmt::Display for ContextKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ContextKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "doctaet" | "taet" => Ok(ContextKind::DocTaet),
            "docrec" | "rec" => Ok(ContextKind::DocRec),
            "docfull" | "full" => Ok(ContextKind::DocFull),
            _ => Err(Error::Config(format!("unknown context kind `{s}`"))),
        }
    }
}

/// Case-insensitive substring patterns for section headings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadingPatternSet {
    pub kind: ContextKind,
    pub patterns: Vec<String>,
}

/// Heading patterns for both section-selecting contexts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSets {
    pub doctaet: Vec<String>,
    pub docrec: Vec<String>,
}

impl Default for PatternSets {
    fn default() -> Self {
        PatternSets {
            doctaet: ["experiment", "setup", "implementation detail", "training detail", "evaluation"]
                .map(String::from)
                .to_vec(),
            docrec: ["result", "experiment", "conclusion"].map(String::from).to_vec(),
        }
    }
}

impl PatternSets {
    pub fn for_kind(&self, kind: ContextKind) -> Option<HeadingPatternSet> {
        let patterns = match kind {
            ContextKind::DocTaet => self.doctaet.clone(),
            ContextKind::DocRec => self.docrec.clone(),
            ContextKind::DocFull => return None,
        };
        Some(HeadingPatternSet { kind, patterns })
    }

    pub fn validate(&self) -> Result<()> {
        if self.doctaet.iter().all(|p| p.trim().is_empty()) || self.docrec.iter().all(|p| p.trim().is_empty()) {
            return Err(Error::Config("heading pattern sets must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ContextOptions {
    pub patterns: PatternSets,
    /// `None` selects the built-in stripper.
    pub converter: Option<ConverterCmd>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDocument {
    pub paper_id: String,
    pub kind: ContextKind,
    pub text: String,
    pub word_count: usize,
    pub sections_used: Vec<String>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl ContextDocument {
    fn new(paper_id: &str, kind: ContextKind, text: String, sections_used: Vec<String>) -> Self {
        let mut doc = ContextDocument {
            paper_id: paper_id.to_owned(),
            kind,
            word_count: scan::word_count(&text),
            text,
            sections_used,
            warnings: Vec::new(),
        };
        if doc.text.is_empty() {
            doc.warn(format!("{}: empty {} context", doc.paper_id, kind));
        }
        doc
    }

    fn warn(&mut self, msg: String) {
        warn!("{msg}");
        self.warnings.push(msg);
    }
}

fn normalize_heading(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// True iff the lowercased, whitespace-collapsed heading contains any pattern.
pub fn match_section_heading(heading: &str, patterns: &HeadingPatternSet) -> bool {
    let h = normalize_heading(heading);
    patterns
        .patterns
        .iter()
        .map(|p| normalize_heading(p))
        .any(|p| !p.is_empty() && h.contains(&p))
}

/// A sectioning command and the span of its body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    /// 0 chapter, 1 section, 2 subsection, 3 subsubsection.
    pub level: u8,
    /// Heading rendered to plain text.
    pub heading: String,
    pub start: usize,
    pub body_start: usize,
    pub body_end: usize,
}

const SECTIONING: [(&str, u8); 4] = [("chapter", 0), ("section", 1), ("subsection", 2), ("subsubsection", 3)];

/// Points where every open section ends.
const HARD_STOPS: [&str; 3] = ["appendix", "bibliography", "printbibliography"];

/// Sections of a comment-free document body, in document order. A body runs
/// to the next sectioning command of equal or higher level.
pub fn parse_sections(body: &str) -> Vec<Section> {
    let mut heads: Vec<(u8, String, usize, usize)> = Vec::new();
    let mut stops: Vec<usize> = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'\\' {
            i += 1;
            continue;
        }
        let Some((name, after)) = scan::command_name(body, i) else {
            break;
        };
        if let Some(&(_, level)) = SECTIONING.iter().find(|(n, _)| *n == name) {
            let mut p = after;
            if bytes.get(p) == Some(&b'*') {
                p += 1;
            }
            if let Some((_, e)) = scan::bracket_arg(body, p) {
                p = e;
            }
            if let Some((heading, e)) = scan::brace_arg(body, p) {
                heads.push((level, strip_latex(heading), i, e));
                i = e;
                continue;
            }
        } else if HARD_STOPS.contains(&name) || (name == "begin" && body[after..].starts_with("{thebibliography}")) {
            stops.push(i);
        }
        i = after;
    }

    heads
        .iter()
        .enumerate()
        .map(|(k, (level, heading, start, body_start))| {
            let next_head = heads[k + 1..]
                .iter()
                .find(|(l, ..)| l <= level)
                .map(|(_, _, s, _)| *s);
            let next_stop = stops.iter().copied().find(|s| s > start);
            let body_end = [next_head, next_stop]
                .into_iter()
                .flatten()
                .min()
                .unwrap_or(body.len());
            Section {
                level: *level,
                heading: heading.clone(),
                start: *start,
                body_start: *body_start,
                body_end,
            }
        })
        .collect()
}

/// Sections (and subsections) whose headings match, skipping any nested
/// inside an already-selected section.
fn select_sections(sections: &[Section], patterns: &HeadingPatternSet) -> Vec<Section> {
    let mut chosen: Vec<Section> = Vec::new();
    for s in sections {
        if !(1..=2).contains(&s.level) {
            continue;
        }
        if chosen.last().is_some_and(|c| s.start < c.body_end) {
            continue;
        }
        if match_section_heading(&s.heading, patterns) {
            chosen.push(s.clone());
        }
    }
    chosen
}

/// Comment-free source split into preamble and body.
struct Parsed {
    preamble: String,
    body: String,
}

impl Parsed {
    fn new(flat: &FlatTex) -> Self {
        let clean = scan::strip_comments(&flat.source);
        let (pre, body) = scan::split_document(&clean);
        Parsed {
            preamble: pre.to_owned(),
            body: body.to_owned(),
        }
    }

    fn title(&self) -> Option<String> {
        document_title(&self.preamble).or_else(|| document_title(&self.body))
    }

    fn abstract_text(&self) -> Option<String> {
        [&self.preamble, &self.body].into_iter().find_map(|src| {
            scan::find_environment(src, "abstract", 0).map(|(_, s, e, _)| src[s..e].to_owned())
        })
    }

    /// Renders fragments as one synthetic document that reuses the preamble.
    fn render(
        &self,
        paper_id: &str,
        kind: ContextKind,
        pieces: &[String],
        sections_used: Vec<String>,
        converter: Option<&ConverterCmd>,
    ) -> Result<ContextDocument> {
        let pieces: Vec<&str> = pieces
            .iter()
            .map(|p| p.trim())
            .filter(|p| !p.is_empty())
            .collect();
        if pieces.is_empty() {
            return Ok(ContextDocument::new(paper_id, kind, String::new(), sections_used));
        }
        let mut src = String::new();
        src.push_str(&self.preamble);
        src.push_str("\\begin{document}\n");
        src.push_str(&pieces.join("\n\n"));
        src.push_str("\n\\end{document}\n");
        let text = rendered_or_empty(&FlatTex::from_source(paper_id, src), converter)?;
        Ok(ContextDocument::new(paper_id, kind, text, sections_used))
    }
}

fn rendered_or_empty(flat: &FlatTex, converter: Option<&ConverterCmd>) -> Result<String> {
    match to_plain(flat, converter) {
        Ok(p) => Ok(p.text),
        Err(Error::EmptyRendering(_)) => Ok(String::new()),
        Err(e) => Err(e),
    }
}

/// Top-level tabular environments of `body` as (start, end) spans.
fn tabular_spans(body: &str) -> Vec<(usize, usize)> {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for env in ["tabular", "tabular*", "tabularx", "tabulary", "longtable"] {
        let mut from = 0;
        while let Some((b, _, _, end)) = scan::find_environment(body, env, from) {
            spans.push((b, end));
            from = end;
        }
    }
    spans.sort();
    let mut top: Vec<(usize, usize)> = Vec::new();
    for s in spans {
        if top.last().is_some_and(|t| s.0 < t.1) {
            continue;
        }
        top.push(s);
    }
    top
}

pub fn extract_doctaet(flat: &FlatTex, opts: &ContextOptions) -> Result<ContextDocument> {
    let parsed = Parsed::new(flat);
    let patterns = opts.patterns.for_kind(ContextKind::DocTaet).expect("section context");
    let title = parsed.title();
    let abstract_text = parsed.abstract_text();
    let selected = select_sections(&parse_sections(&parsed.body), &patterns);

    let mut pieces = Vec::new();
    pieces.extend(title.clone());
    pieces.extend(abstract_text.clone());
    for s in &selected {
        pieces.push(parsed.body[s.body_start..s.body_end].to_owned());
    }
    for (b, e) in tabular_spans(&parsed.body) {
        let inside_selected = selected.iter().any(|s| b >= s.body_start && e <= s.body_end);
        if !inside_selected {
            pieces.push(parsed.body[b..e].to_owned());
        }
    }
    let used = selected.into_iter().map(|s| s.heading).collect();
    let mut doc = parsed.render(&flat.paper_id, ContextKind::DocTaet, &pieces, used, opts.converter.as_ref())?;
    if title.is_none() && abstract_text.is_none() {
        doc.warn(format!("{}: no title and no abstract found", flat.paper_id));
    }
    Ok(doc)
}

pub fn extract_docrec(flat: &FlatTex, opts: &ContextOptions) -> Result<ContextDocument> {
    let parsed = Parsed::new(flat);
    let patterns = opts.patterns.for_kind(ContextKind::DocRec).expect("section context");
    let selected = select_sections(&parse_sections(&parsed.body), &patterns);
    let pieces: Vec<String> = selected
        .iter()
        .map(|s| parsed.body[s.body_start..s.body_end].to_owned())
        .collect();
    let used = selected.into_iter().map(|s| s.heading).collect();
    let mut doc = parsed.render(&flat.paper_id, ContextKind::DocRec, &pieces, used, opts.converter.as_ref())?;
    if pieces.is_empty() {
        doc.warn(format!("{}: no results/experiments/conclusion section", flat.paper_id));
    }
    Ok(doc)
}

pub fn extract_docfull(flat: &FlatTex, opts: &ContextOptions) -> Result<ContextDocument> {
    let text = if flat.source.trim().is_empty() {
        String::new()
    } else {
        rendered_or_empty(flat, opts.converter.as_ref())?
    };
    Ok(ContextDocument::new(&flat.paper_id, ContextKind::DocFull, text, Vec::new()))
}

pub fn extract(kind: ContextKind, flat: &FlatTex, opts: &ContextOptions) -> Result<ContextDocument> {
    match kind {
        ContextKind::DocTaet => extract_doctaet(flat, opts),
        ContextKind::DocRec => extract_docrec(flat, opts),
        ContextKind::DocFull => extract_docfull(flat, opts),
    }
}

/// Keeps the first `budget_words` whitespace tokens, preserving the original
/// spacing of the kept prefix.
pub fn truncate_context(doc: &ContextDocument, budget_words: usize) -> Result<ContextDocument> {
    if budget_words == 0 {
        return Err(Error::Config("word budget must be positive".into()));
    }
    let mut out = doc.clone();
    if doc.word_count <= budget_words {
        return Ok(out);
    }
    let base = doc.text.as_ptr() as usize;
    let last = doc
        .text
        .split_whitespace()
        .nth(budget_words - 1)
        .expect("word_count > budget");
    let end = last.as_ptr() as usize - base + last.len();
    out.text = doc.text[..end].to_owned();
    out.word_count = budget_words;
    out.warn(format!(
        "{}: {} truncated from {} to {} words",
        doc.paper_id, doc.kind, doc.word_count, budget_words
    ));
    Ok(out)
}

pub fn write_context_dump(path: &Path, docs: &[ContextDocument]) -> Result<()> {
    let mut buf = Vec::new();
    for d in docs {
        serde_json::to_writer(&mut buf, d)?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_context_dump(path: &Path) -> Result<Vec<ContextDocument>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PAPER: &str = r"\documentclass{article}
\title{Fast Nets}
\begin{document}
\maketitle
\begin{abstract}
We propose fast nets.
\end{abstract}
\section{Introduction}
Intro text here.
\section{Related Work}
Others did things.
\section{Experiments}
We train on CIFAR.
\subsection{Results}
Accuracy improves.
\begin{table}
\begin{tabular}{ll}
Model & Acc \\
Ours & 91.2 \\
\end{tabular}
\end{table}
\section{Analysis}
\begin{tabular}{ll}
Ablation & 88.0 \\
\end{tabular}
\section{Conclusion}
It works.
\end{document}
";

    fn opts() -> ContextOptions {
        ContextOptions::default()
    }

    fn docrec_patterns() -> HeadingPatternSet {
        PatternSets::default().for_kind(ContextKind::DocRec).unwrap()
    }

    #[test]
    fn heading_matching() {
        let p = docrec_patterns();
        assert!(match_section_heading("Experimental Results", &p));
        assert!(!match_section_heading("Related Work", &p));
        assert!(match_section_heading("CONCLUSIONS  AND\tFUTURE WORK", &p));
    }

    #[test]
    fn section_spans_follow_levels() {
        let clean = scan::strip_comments(PAPER);
        let (_, body) = scan::split_document(&clean);
        let secs = parse_sections(body);
        let names: Vec<_> = secs.iter().map(|s| s.heading.as_str()).collect();
        assert_eq!(names, ["Introduction", "Related Work", "Experiments", "Results", "Analysis", "Conclusion"]);
        // "Experiments" runs through its "Results" subsection up to "Analysis".
        assert_eq!(secs[2].body_end, secs[4].start);
        assert_eq!(secs[3].body_end, secs[4].start);
    }

    #[test]
    fn docrec_takes_matched_bodies_in_order() {
        let flat = FlatTex::from_source("p", PAPER);
        let doc = extract_docrec(&flat, &opts()).unwrap();
        assert_eq!(doc.sections_used, ["Experiments", "Conclusion"]);
        assert_eq!(
            doc.text,
            "We train on CIFAR.\n\nResults\n\nAccuracy improves.\n\nModel | Acc\nOurs | 91.2\n\nIt works."
        );
    }

    #[test]
    fn doctaet_has_title_abstract_sections_and_all_tables() {
        let flat = FlatTex::from_source("p", PAPER);
        let doc = extract_doctaet(&flat, &opts()).unwrap();
        for needle in ["Fast Nets", "We propose fast nets.", "We train on CIFAR.", "Ours | 91.2", "Ablation | 88.0"] {
            assert!(doc.text.contains(needle), "missing {needle:?} in {:?}", doc.text);
        }
        for absent in ["Others did things", "Intro text", "It works"] {
            assert!(!doc.text.contains(absent), "{absent:?} leaked");
        }
        // The table inside the selected section is not repeated.
        assert_eq!(doc.text.matches("Ours | 91.2").count(), 1);
    }

    #[test]
    fn docfull_is_plain_rendering() {
        let flat = FlatTex::from_source("p", PAPER);
        let full = extract_docfull(&flat, &opts()).unwrap();
        assert_eq!(full.text, to_plain(&flat, None).unwrap().text);
        assert!(full.sections_used.is_empty());
        let taet = extract_doctaet(&flat, &opts()).unwrap();
        let rec = extract_docrec(&flat, &opts()).unwrap();
        assert!(taet.word_count <= full.word_count);
        assert!(rec.word_count <= full.word_count);
    }

    #[test]
    fn title_only_paper() {
        let flat = FlatTex::from_source("p", "\\title{Only A Title}\\begin{document}\\end{document}");
        let doc = extract_doctaet(&flat, &opts()).unwrap();
        assert_eq!(doc.text, "Only A Title");
    }

    #[test]
    fn no_matches_gives_empty_with_warning() {
        let flat = FlatTex::from_source("p", "\\begin{document}\\section{Intro}x\\end{document}");
        let doc = extract_docrec(&flat, &opts()).unwrap();
        assert!(doc.text.is_empty());
        assert_eq!(doc.word_count, 0);
        assert!(!doc.warnings.is_empty());

        let empty = extract_docfull(&FlatTex::from_source("p", "\\begin{document}\\end{document}"), &opts()).unwrap();
        assert!(empty.text.is_empty());
        assert!(!empty.warnings.is_empty());

        let bare = extract_doctaet(&FlatTex::from_source("p", "\\begin{document}\\section{Intro}x\\end{document}"), &opts()).unwrap();
        assert!(bare.warnings.iter().any(|w| w.contains("no title")));
    }

    #[test]
    fn appendix_and_bibliography_end_sections() {
        let src = "\\begin{document}\\section{Conclusion}Done.\\appendix\\section{Extra}More.\\end{document}";
        let doc = extract_docrec(&FlatTex::from_source("p", src), &opts()).unwrap();
        assert_eq!(doc.text, "Done.");
        let src = "\\begin{document}\\section{Conclusion}Done.\n\\begin{thebibliography}{9}\\bibitem{a} Ref.\\end{thebibliography}\\end{document}";
        let doc = extract_docrec(&FlatTex::from_source("p", src), &opts()).unwrap();
        assert_eq!(doc.text, "Done.");
    }

    fn doc_with(text: &str) -> ContextDocument {
        ContextDocument::new("p", ContextKind::DocFull, text.to_owned(), vec![])
    }

    #[test]
    fn truncation() {
        let short = doc_with("one two three four five six seven eight nine ten");
        assert_eq!(truncate_context(&short, DEFAULT_BUDGET_WORDS).unwrap(), short);

        let long_text = (0..3000).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let cut = truncate_context(&doc_with(&long_text), 2400).unwrap();
        assert_eq!(cut.word_count, 2400);
        assert_eq!(scan::word_count(&cut.text), 2400);
        assert!(long_text.starts_with(&cut.text));
        assert!(cut.warnings.iter().any(|w| w.contains("truncated")));

        assert_eq!(truncate_context(&doc_with("a b c"), 1).unwrap().text, "a");
        assert!(truncate_context(&doc_with("a"), 0).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctx.jsonl");
        let doc = extract_docrec(&FlatTex::from_source("p", PAPER), &opts()).unwrap();
        write_context_dump(&path, std::slice::from_ref(&doc)).unwrap();
        let line = fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5);
        assert_eq!(v["kind"], "DocREC");
        assert_eq!(read_context_dump(&path).unwrap(), vec![doc]);
    }

    proptest! {
        #[test]
        fn truncation_is_a_prefix(words in prop::collection::vec("[a-z]{1,6}", 0..50), budget in 1usize..60) {
            let doc = doc_with(&words.join(" \n "));
            let cut = truncate_context(&doc, budget).unwrap();
            prop_assert!(doc.text.starts_with(&cut.text));
            prop_assert_eq!(cut.word_count, words.len().min(budget));
            prop_assert_eq!(scan::word_count(&cut.text), cut.word_count);
        }

        #[test]
        fn docrec_sections_are_a_subsequence(picks in prop::collection::vec(0usize..6, 1..8)) {
            let names = ["Introduction", "Experiments", "Results", "Method", "Conclusions", "Discussion"];
            let mut src = String::from("\\begin{document}\n");
            for (i, &k) in picks.iter().enumerate() {
                src.push_str(&format!("\\section{{{}}}\nbody {i}\n", names[k]));
            }
            src.push_str("\\end{document}");
            let flat = FlatTex::from_source("p", src.clone());
            let a = extract_docrec(&flat, &opts()).unwrap();
            let b = extract_docrec(&flat, &opts()).unwrap();
            prop_assert_eq!(&a, &b);
            let headings: Vec<&str> = picks.iter().map(|&k| names[k]).collect();
            let mut it = headings.iter();
            for used in &a.sections_used {
                prop_assert!(it.any(|h| h == used));
            }
            let full = extract_docfull(&flat, &opts()).unwrap();
            prop_assert!(a.word_count <= full.word_count);
        }
    }
}
