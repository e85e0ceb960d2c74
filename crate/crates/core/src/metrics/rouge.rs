use std::collections::HashMap;

use super::Prf;

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram overlap. Panics unless `n` is 1 or 2.
pub fn rouge_n<S: AsRef<str>>(pred: &[S], reference: &[S], n: usize) -> Prf {
    assert!(n == 1 || n == 2, "rouge_n supports n = 1 or 2, got {n}");
    let p = ngram_counts(pred, n);
    let r = ngram_counts(reference, n);
    let overlap: usize = p.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
    Prf::from_counts(overlap, p.values().sum(), r.values().sum())
}

fn lcs_table<S: AsRef<str>>(a: &[S], b: &[S]) -> Vec<Vec<usize>> {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1].as_ref() == b[j - 1].as_ref() {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t
}

pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    lcs_table(a, b)[a.len()][b.len()]
}

pub fn rouge_l<S: AsRef<str>>(pred: &[S], reference: &[S]) -> Prf {
    let l = lcs_len(pred, reference);
    Prf::from_counts(l, pred.len(), reference.len())
}

/// Positions in `reference` on one LCS path against `cand`.
fn lcs_positions<S: AsRef<str>>(reference: &[S], cand: &[S]) -> Vec<usize> {
    let t = lcs_table(reference, cand);
    let (mut i, mut j) = (reference.len(), cand.len());
    let mut out = Vec::new();
    while i > 0 && j > 0 {
        if reference[i - 1].as_ref() == cand[j - 1].as_ref() {
            out.push(i - 1);
            i -= 1;
            j -= 1;
        } else if t[i][j - 1] > t[i - 1][j] {
            j -= 1;
        } else {
            i -= 1;
        }
    }
    out.reverse();
    out
}

/// Sentences end at a newline or at a period followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let end = match c {
            '\n' => Some(i),
            '.' if chars.peek().is_some_and(|(_, n)| n.is_whitespace()) => Some(i + 1),
            _ => None,
        };
        if let Some(e) = end {
            out.push(&text[start..e]);
            start = if c == '\n' { i + 1 } else { e };
        }
    }
    out.push(&text[start..]);
    out.into_iter().filter(|s| !s.trim().is_empty()).collect()
}

/// Summary-level ROUGE-L with union-LCS over sentences.
pub fn rouge_lsum(pred_text: &str, ref_text: &str) -> Prf {
    let pred: Vec<Vec<String>> = split_sentences(pred_text).into_iter().map(tokenize).filter(|s| !s.is_empty()).collect();
    let reference: Vec<Vec<String>> = split_sentences(ref_text).into_iter().map(tokenize).filter(|s| !s.is_empty()).collect();
    let n_pred: usize = pred.iter().map(Vec::len).sum();
    let n_ref: usize = reference.iter().map(Vec::len).sum();
    if n_pred == 0 || n_ref == 0 {
        return Prf::default();
    }
    let mut left_pred: HashMap<&str, usize> = HashMap::new();
    for t in pred.iter().flatten() {
        *left_pred.entry(t).or_insert(0) += 1;
    }
    let mut left_ref: HashMap<&str, usize> = HashMap::new();
    for t in reference.iter().flatten() {
        *left_ref.entry(t).or_insert(0) += 1;
    }
    let mut hits = 0;
    for r in &reference {
        let mut union: Vec<usize> = pred.iter().flat_map(|p| lcs_positions(r, p)).collect();
        union.sort_unstable();
        union.dedup();
        for pos in union {
            let tok = r[pos].as_str();
            let (Some(cp), Some(cr)) = (left_pred.get(tok).copied(), left_ref.get(tok).copied()) else {
                continue;
            };
            if cp > 0 && cr > 0 {
                hits += 1;
                left_pred.insert(tok, cp - 1);
                left_ref.insert(tok, cr - 1);
            }
        }
    }
    Prf::from_counts(hits, n_pred, n_ref)
}
