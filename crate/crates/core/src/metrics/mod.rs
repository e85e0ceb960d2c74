//! ROUGE, general accuracy and per-field precision/recall/F1 with exact or
//! fuzzy matching. Every score is on a 0..100 scale.

pub mod rouge;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationSet, TdmsQuadruple};
use crate::inference::{ModelPrediction, Parsed};
use crate::promptgen::serialize_target;

pub use rouge::{lcs_len, rouge_l, rouge_lsum, rouge_n, split_sentences, tokenize};

pub const DEFAULT_PARTIAL_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        Prf {
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    }

    /// `hits / n_pred` and `hits / n_gold`, with 0 for an empty denominator.
    pub fn from_counts(hits: usize, n_pred: usize, n_gold: usize) -> Self {
        let ratio = |d: usize| if d == 0 { 0.0 } else { 100.0 * hits as f64 / d as f64 };
        Prf::new(ratio(n_pred), ratio(n_gold))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScores {
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    #[serde(rename = "rougeLsum")]
    pub rouge_lsum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    Exact,
    Partial { threshold: f64 },
}

impl MatchMode {
    pub fn partial() -> Self {
        MatchMode::Partial {
            threshold: DEFAULT_PARTIAL_THRESHOLD,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MatchMode::Exact => "Exact",
            MatchMode::Partial { .. } => "Partial",
        }
    }

    pub fn compatible(&self, pred: &str, gold: &str) -> bool {
        match self {
            MatchMode::Exact => normalize_string(pred) == normalize_string(gold),
            MatchMode::Partial { threshold } => fuzzy_ratio(pred, gold) >= *threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    Task,
    Dataset,
    Metric,
    Score,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Task, Field::Dataset, Field::Metric, Field::Score];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Task => "Task",
            Field::Dataset => "Dataset",
            Field::Metric => "Metric",
            Field::Score => "Score",
        }
    }

    pub fn project(self, q: &TdmsQuadruple) -> &str {
        match self {
            Field::Task => &q.task,
            Field::Dataset => &q.dataset,
            Field::Metric => &q.metric,
            Field::Score => &q.score,
        }
    }
}

/// Trim, lowercase, collapse whitespace runs.
pub fn normalize_string(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Indel similarity of the normalized strings: `200 * lcs / (|a| + |b|)`
/// over characters. Two empty strings score 100.
pub fn fuzzy_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = normalize_string(a).chars().collect();
    let b: Vec<char> = normalize_string(b).chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 100.0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ca in &a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    200.0 * prev[b.len()] as f64 / total as f64
}

/// Size of a maximum matching between predicted and gold values, where an
/// edge joins values compatible under `mode`.
pub fn match_field<P: AsRef<str>, G: AsRef<str>>(pred: &[P], gold: &[G], mode: MatchMode) -> usize {
    let adj: Vec<Vec<usize>> = pred
        .iter()
        .map(|p| {
            (0..gold.len())
                .filter(|&j| mode.compatible(p.as_ref(), gold[j].as_ref()))
                .collect()
        })
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; gold.len()];
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    (0..pred.len())
        .filter(|&u| augment(u, &adj, &mut vec![false; gold.len()], &mut owner))
        .count()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldCounts {
    pub matched: usize,
    pub n_pred: usize,
    pub n_gold: usize,
}

/// Counts per field, in `Field::ALL` order.
pub type PaperCounts = [FieldCounts; 4];

pub fn score_paper(pred: &Parsed, gold: &AnnotationSet, mode: MatchMode) -> PaperCounts {
    let p = pred.quadruples();
    let g = gold.quadruples();
    Field::ALL.map(|f| {
        let pv: Vec<&str> = p.iter().map(|q| f.project(q)).collect();
        let gv: Vec<&str> = g.iter().map(|q| f.project(q)).collect();
        FieldCounts {
            matched: match_field(&pv, &gv, mode),
            n_pred: pv.len(),
            n_gold: gv.len(),
        }
    })
}

/// How the Overall row combines the four fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverallMode {
    /// Mean of the four per-field values.
    #[default]
    Macro,
    /// Counts pooled across fields.
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldScores {
    pub mode: MatchMode,
    pub overall_mode: OverallMode,
    pub task: Prf,
    pub dataset: Prf,
    pub metric: Prf,
    pub score: Prf,
    pub overall: Prf,
}

impl FieldScores {
    pub fn field(&self, f: Field) -> Prf {
        match f {
            Field::Task => self.task,
            Field::Dataset => self.dataset,
            Field::Metric => self.metric,
            Field::Score => self.score,
        }
    }
}

/// Micro-pooled per-field scores over papers.
pub fn aggregate(papers: &[PaperCounts], mode: MatchMode, overall_mode: OverallMode) -> FieldScores {
    let mut sums = [FieldCounts::default(); 4];
    for p in papers {
        for (s, c) in sums.iter_mut().zip(p) {
            s.matched += c.matched;
            s.n_pred += c.n_pred;
            s.n_gold += c.n_gold;
        }
    }
    let per = sums.map(|s| Prf::from_counts(s.matched, s.n_pred, s.n_gold));
    let overall = match overall_mode {
        OverallMode::Macro => {
            let mean = |g: fn(&Prf) -> f64| per.iter().map(g).sum::<f64>() / 4.0;
            Prf {
                precision: mean(|p| p.precision),
                recall: mean(|p| p.recall),
                f1: mean(|p| p.f1),
            }
        }
        OverallMode::Micro => {
            let t = sums.iter().fold(FieldCounts::default(), |a, s| FieldCounts {
                matched: a.matched + s.matched,
                n_pred: a.n_pred + s.n_pred,
                n_gold: a.n_gold + s.n_gold,
            });
            Prf::from_counts(t.matched, t.n_pred, t.n_gold)
        }
    };
    FieldScores {
        mode,
        overall_mode,
        task: per[0],
        dataset: per[1],
        metric: per[2],
        score: per[3],
        overall,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneralAccuracy {
    pub value: f64,
    pub n_correct: usize,
    pub n_total: usize,
}

/// Whether the prediction puts the paper on the right side of the
/// leaderboard / no-leaderboard divide.
pub fn is_correct(pred: &Parsed, gold: &AnnotationSet) -> bool {
    matches!(
        (pred, gold),
        (Parsed::Unanswerable, AnnotationSet::Unanswerable) | (Parsed::Answerable(_), AnnotationSet::Leaderboard(_))
    )
}

pub fn general_accuracy(pairs: &[(&ModelPrediction, &AnnotationSet)]) -> GeneralAccuracy {
    let n_correct = pairs.iter().filter(|(p, g)| is_correct(&p.parsed, g)).count();
    let n_total = pairs.len();
    GeneralAccuracy {
        value: if n_total == 0 { 0.0 } else { 100.0 * n_correct as f64 / n_total as f64 },
        n_correct,
        n_total,
    }
}

/// ROUGE F-measures of one reply. Texts with identical token sequences score
/// 100 throughout, even when too short to hold a bigram.
pub fn rouge_pair(pred_text: &str, ref_text: &str) -> RougeScores {
    let p = tokenize(pred_text);
    let r = tokenize(ref_text);
    if p == r {
        return RougeScores {
            rouge1: 100.0,
            rouge2: 100.0,
            rouge_l: 100.0,
            rouge_lsum: 100.0,
        };
    }
    RougeScores {
        rouge1: rouge_n(&p, &r, 1).f1,
        rouge2: rouge_n(&p, &r, 2).f1,
        rouge_l: rouge_l(&p, &r).f1,
        rouge_lsum: rouge_lsum(pred_text, ref_text).f1,
    }
}

/// Mean per-paper ROUGE F-measures of raw replies against serialized gold.
pub fn rouge_eval(pairs: &[(&ModelPrediction, &AnnotationSet)]) -> RougeScores {
    if pairs.is_empty() {
        return RougeScores::default();
    }
    let mut sum = RougeScores::default();
    for (p, g) in pairs {
        let s = rouge_pair(&p.raw, &serialize_target(g));
        sum.rouge1 += s.rouge1;
        sum.rouge2 += s.rouge2;
        sum.rouge_l += s.rouge_l;
        sum.rouge_lsum += s.rouge_lsum;
    }
    let n = pairs.len() as f64;
    RougeScores {
        rouge1: sum.rouge1 / n,
        rouge2: sum.rouge2 / n,
        rouge_l: sum.rouge_l / n,
        rouge_lsum: sum.rouge_lsum / n,
    }
}

/// Exact and partial field scores over prediction/gold pairs.
pub fn field_scores(
    pairs: &[(&ModelPrediction, &AnnotationSet)],
    mode: MatchMode,
    overall_mode: OverallMode,
) -> FieldScores {
    let counts: Vec<PaperCounts> = pairs.iter().map(|(p, g)| score_paper(&p.parsed, g, mode)).collect();
    aggregate(&counts, mode, overall_mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    fn q(t: &str, d: &str, m: &str, s: &str) -> TdmsQuadruple {
        TdmsQuadruple::new(t, d, m, s).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_string(" ImageNet "), "imagenet");
        assert_eq!(normalize_string("Top  1"), "top 1");
        assert_eq!(normalize_string(""), "");
    }

    #[test]
    fn fuzzy_examples() {
        assert!(close(fuzzy_ratio("accuracy", "top-1 accuracy"), 200.0 * 8.0 / 22.0));
        assert!(close(fuzzy_ratio("f1", "f1-score"), 40.0));
        assert!(close(fuzzy_ratio("imagenet", "imagenet-1k"), 200.0 * 8.0 / 19.0));
        assert_eq!(fuzzy_ratio("", ""), 100.0);
        assert_eq!(fuzzy_ratio("abc", ""), 0.0);
    }

    #[test]
    fn matching_examples() {
        assert_eq!(match_field(&["x"], &["x"], MatchMode::Exact), 1);
        assert_eq!(match_field(&["imagenet"], &["imagenet-1k"], MatchMode::Exact), 0);
        assert_eq!(match_field(&["imagenet"], &["imagenet-1k"], MatchMode::partial()), 1);
        assert_eq!(match_field(&["a", "a"], &["a"], MatchMode::Exact), 1);
        assert_eq!(match_field(&["f1"], &["f1-score"], MatchMode::partial()), 0);
    }

    #[test]
    fn matching_needs_augmenting_paths() {
        // Greedy pairing of "ab" with "ab" would strand "a".
        let pred = ["ab", "a"];
        let gold = ["ab", "abx"];
        assert_eq!(match_field(&pred, &gold, MatchMode::Partial { threshold: 66.0 }), 2);
    }

    #[test]
    fn score_paper_examples() {
        let gold = AnnotationSet::leaderboard(vec![q("T", "D", "M", "1"), q("T2", "D2", "M2", "2")]).unwrap();
        let c = score_paper(&Parsed::Unanswerable, &gold, MatchMode::Exact);
        assert!(c.iter().all(|f| *f == FieldCounts { matched: 0, n_pred: 0, n_gold: 2 }));

        let one = AnnotationSet::leaderboard(vec![q("T", "D", "M", "1")]).unwrap();
        let c = score_paper(&Parsed::Answerable(one.quadruples().to_vec()), &one, MatchMode::Exact);
        assert!(c.iter().all(|f| *f == FieldCounts { matched: 1, n_pred: 1, n_gold: 1 }));

        let gold3 = AnnotationSet::leaderboard(vec![q("A", "d1", "m1", "1"), q("B", "d2", "m2", "2"), q("C", "d3", "m3", "3")]).unwrap();
        let pred = Parsed::Answerable(vec![q("A", "x1", "y1", "9"), q("Z", "x2", "y2", "8")]);
        let c = score_paper(&pred, &gold3, MatchMode::Exact);
        assert_eq!(c[0], FieldCounts { matched: 1, n_pred: 2, n_gold: 3 });
        for f in &c[1..] {
            assert_eq!(*f, FieldCounts { matched: 0, n_pred: 2, n_gold: 3 });
        }
    }

    #[test]
    fn aggregate_examples() {
        let perfect = [FieldCounts { matched: 1, n_pred: 1, n_gold: 1 }; 4];
        let s = aggregate(&[perfect], MatchMode::Exact, OverallMode::Macro);
        assert!(close(s.overall.f1, 100.0) && close(s.task.precision, 100.0));

        let half = [FieldCounts { matched: 1, n_pred: 1, n_gold: 2 }; 4];
        let s = aggregate(&[half, half], MatchMode::Exact, OverallMode::Macro);
        assert!(close(s.task.precision, 100.0) && close(s.task.recall, 50.0));
        assert!(close(s.task.f1, 200.0 / 3.0));

        let none = [FieldCounts { matched: 0, n_pred: 0, n_gold: 3 }; 4];
        let s = aggregate(&[none], MatchMode::Exact, OverallMode::Micro);
        assert_eq!((s.overall.precision, s.overall.recall, s.overall.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn macro_and_micro_overall_differ() {
        let mixed = [
            FieldCounts { matched: 1, n_pred: 1, n_gold: 1 },
            FieldCounts { matched: 0, n_pred: 3, n_gold: 3 },
            FieldCounts { matched: 0, n_pred: 3, n_gold: 3 },
            FieldCounts { matched: 0, n_pred: 3, n_gold: 3 },
        ];
        let ma = aggregate(&[mixed], MatchMode::Exact, OverallMode::Macro);
        let mi = aggregate(&[mixed], MatchMode::Exact, OverallMode::Micro);
        assert!(close(ma.overall.f1, 25.0));
        assert!(close(mi.overall.f1, 10.0));
    }

    #[test]
    fn accuracy_examples() {
        let gold_lb = AnnotationSet::leaderboard(vec![q("T", "D", "M", "1")]).unwrap();
        let gold_un = AnnotationSet::Unanswerable;
        let a = ModelPrediction::from_raw("a", 1, "unanswerable".into());
        let b = ModelPrediction::from_raw("b", 1, serialize_target(&gold_lb));
        let c = ModelPrediction::from_raw("c", 1, "garbage".into());
        let ga = general_accuracy(&[(&a, &gold_un), (&b, &gold_lb), (&c, &gold_lb)]);
        assert_eq!((ga.n_correct, ga.n_total), (2, 3));
        assert!(close(ga.value, 200.0 / 3.0));
        assert_eq!(general_accuracy(&[]).value, 0.0);
    }

    #[test]
    fn rouge_eval_examples() {
        let g1 = AnnotationSet::leaderboard(vec![q("Image Classification", "ImageNet", "Top-1", "76.5")]).unwrap();
        let g2 = AnnotationSet::Unanswerable;
        let p1 = ModelPrediction::from_raw("a", 1, serialize_target(&g1));
        let p2 = ModelPrediction::from_raw("b", 1, serialize_target(&g2));
        let r = rouge_eval(&[(&p1, &g1), (&p2, &g2)]);
        for v in [r.rouge1, r.rouge2, r.rouge_l, r.rouge_lsum] {
            assert!(close(v, 100.0));
        }
        let e = ModelPrediction::from_raw("a", 1, String::new());
        let r = rouge_eval(&[(&e, &g1)]);
        assert_eq!(r, RougeScores::default());
        let r = rouge_pair("unanswerable", "unanswerable");
        assert_eq!(r.rouge2, 100.0);
        assert_eq!(rouge_pair("x", "unanswerable").rouge2, 0.0);
        let wrong = ModelPrediction::from_raw("b", 1, "zzz".into());
        let r = rouge_eval(&[(&p1, &g1), (&wrong, &g2)]);
        assert!(close(r.rouge1, 50.0));
    }

    fn word() -> impl Strategy<Value = String> {
        "[a-c ]{0,6}"
    }

    proptest! {
        #[test]
        fn fuzzy_symmetric_and_bounded(a in word(), b in word()) {
            let x = fuzzy_ratio(&a, &b);
            prop_assert!(close(x, fuzzy_ratio(&b, &a)));
            prop_assert!((0.0..=100.0).contains(&x));
            prop_assert_eq!(x == 100.0, normalize_string(&a) == normalize_string(&b));
        }

        #[test]
        fn exact_matching_symmetric(a in prop::collection::vec(word(), 0..6), b in prop::collection::vec(word(), 0..6)) {
            prop_assert_eq!(match_field(&a, &b, MatchMode::Exact), match_field(&b, &a, MatchMode::Exact));
        }

        #[test]
        fn partial_100_is_exact(a in prop::collection::vec(word(), 0..6), b in prop::collection::vec(word(), 0..6)) {
            prop_assert_eq!(
                match_field(&a, &b, MatchMode::Partial { threshold: 100.0 }),
                match_field(&a, &b, MatchMode::Exact)
            );
        }

        #[test]
        fn prf_bounds(hits in 0usize..20, extra_p in 0usize..20, extra_g in 0usize..20) {
            let s = Prf::from_counts(hits, hits + extra_p, hits + extra_g);
            for v in [s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=100.0 + 1e-9).contains(&v));
            }
            if s.precision > 0.0 && s.recall > 0.0 {
                prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-9);
                prop_assert!(s.f1 >= s.precision.min(s.recall) - 1e-9);
            }
        }

        #[test]
        fn rouge1_single_token(a in "[a-d]", b in "[a-d]") {
            let s = rouge_n(&[a.as_str()], &[b.as_str()], 1).f1;
            prop_assert_eq!(s, if a == b { 100.0 } else { 0.0 });
        }
    }
}
