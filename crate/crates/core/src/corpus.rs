//! Annotated paper corpus: manifest I/O, split statistics and the
//! unanswerable-paper sampler.
//!
//! A manifest is UTF-8 JSON Lines, one paper per line:
//!
//! ```text
//! {"paper_id":"1901.00001","title":"...","split":"train","latex_root":"papers/1901.00001","annotations":[{"Task":"...","Dataset":"...","Metric":"...","Score":"76.5"}]}
//! {"paper_id":"1901.00002","title":"...","split":"few_shot","latex_root":"papers/1901.00002","annotations":"unanswerable"}
//! ```
//!
//! Relative `latex_root` values resolve against the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// One (Task, Dataset, Metric, Score) tuple. Every field is kept as text,
/// scores included ("76.5" and "76.5%" stay distinct).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TdmsQuadruple {
    #[serde(rename = "Task")]
    pub task: String,
    #[serde(rename = "Dataset")]
    pub dataset: String,
    #[serde(rename = "Metric")]
    pub metric: String,
    #[serde(rename = "Score")]
    pub score: String,
}

impl TdmsQuadruple {
    /// Builds a quadruple with surrounding whitespace trimmed, rejecting empty
    /// fields and control characters.
    pub fn new(
        task: impl AsRef<str>,
        dataset: impl AsRef<str>,
        metric: impl AsRef<str>,
        score: impl AsRef<str>,
    ) -> Result<Self> {
        let q = TdmsQuadruple {
            task: task.as_ref().trim().to_owned(),
            dataset: dataset.as_ref().trim().to_owned(),
            metric: metric.as_ref().trim().to_owned(),
            score: score.as_ref().trim().to_owned(),
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.fields() {
            if value.trim().is_empty() {
                return Err(Error::InvalidRecord(format!("empty {name} field")));
            }
            if value.chars().any(char::is_control) {
                return Err(Error::InvalidRecord(format!(
                    "{name} field contains a control character"
                )));
            }
        }
        Ok(())
    }

    pub fn fields(&self) -> [(&'static str, &str); 4] {
        [
            ("Task", &self.task),
            ("Dataset", &self.dataset),
            ("Metric", &self.metric),
            ("Score", &self.score),
        ]
    }

    /// The (task, dataset, metric) projection.
    pub fn tdm(&self) -> (&str, &str, &str) {
        (&self.task, &self.dataset, &self.metric)
    }
}

/// Gold annotation of one paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationSet {
    Leaderboard(Vec<TdmsQuadruple>),
    Unanswerable,
}

impl AnnotationSet {
    /// Order-preserving dedup on the exact 4-tuple; an empty list is rejected.
    pub fn leaderboard(quads: Vec<TdmsQuadruple>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(quads.len());
        for q in quads {
            q.validate()?;
            if seen.insert(q.clone()) {
                out.push(q);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidRecord(
                "leaderboard annotation list is empty".into(),
            ));
        }
        Ok(AnnotationSet::Leaderboard(out))
    }

    pub fn quadruples(&self) -> &[TdmsQuadruple] {
        match self {
            AnnotationSet::Leaderboard(q) => q,
            AnnotationSet::Unanswerable => &[],
        }
    }

    pub fn has_leaderboard(&self) -> bool {
        matches!(self, AnnotationSet::Leaderboard(_))
    }
}

impl Serialize for AnnotationSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AnnotationSet::Unanswerable => serializer.serialize_str("unanswerable"),
            AnnotationSet::Leaderboard(q) => q.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for AnnotationSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Label(String),
            List(Vec<TdmsQuadruple>),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Label(s) if s == "unanswerable" => Ok(AnnotationSet::Unanswerable),
            Raw::Label(s) => Err(de::Error::custom(format!(
                "annotation label must be \"unanswerable\", got {s:?}"
            ))),
            Raw::List(list) => {
                let trimmed = list
                    .into_iter()
                    .map(|q| TdmsQuadruple::new(q.task, q.dataset, q.metric, q.score))
                    .collect::<Result<Vec<_>>>()
                    .map_err(de::Error::custom)?;
                AnnotationSet::leaderboard(trimmed).map_err(de::Error::custom)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitLabel {
    Train,
    FewShot,
    ZeroShot,
}

impl SplitLabel {
    pub const ALL: [SplitLabel; 3] = [SplitLabel::Train, SplitLabel::FewShot, SplitLabel::ZeroShot];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitLabel::Train => "train",
            SplitLabel::FewShot => "few_shot",
            SplitLabel::ZeroShot => "zero_shot",
        }
    }

    /// Column heading used in the statistics tables.
    pub fn display_name(self) -> &'static str {
        match self {
            SplitLabel::Train => "Train",
            SplitLabel::FewShot => "Test-Few-shot",
            SplitLabel::ZeroShot => "Test-Zero-shot",
        }
    }
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SplitLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitLabel::Train),
            "few_shot" => Ok(SplitLabel::FewShot),
            "zero_shot" => Ok(SplitLabel::ZeroShot),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    pub split: SplitLabel,
    pub latex_root: PathBuf,
    pub annotations: AnnotationSet,
    /// arXiv categories, used only by [`select_unanswerable_pool`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

/// An immutable, validated set of papers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    records: Vec<PaperRecord>,
    base_dir: PathBuf,
}

impl Corpus {
    /// Builds a corpus from in-memory records, checking id uniqueness only.
    pub fn from_records(records: Vec<PaperRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.paper_id.as_str()) {
                return Err(Error::DuplicatePaper(r.paper_id.clone()));
            }
        }
        Ok(Corpus {
            records,
            base_dir: base_dir.into(),
        })
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn get(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.records.iter().find(|r| r.paper_id == paper_id)
    }

    /// The LaTeX root of `record`, resolved against the manifest directory.
    pub fn resolve_root(&self, record: &PaperRecord) -> PathBuf {
        if record.latex_root.is_absolute() {
            record.latex_root.clone()
        } else {
            self.base_dir.join(&record.latex_root)
        }
    }

    pub fn split(&self, split: SplitLabel) -> impl Iterator<Item = &PaperRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Sub-corpus holding only the papers of `split`.
    pub fn filter_split(&self, split: SplitLabel) -> Corpus {
        Corpus {
            records: self.split(split).cloned().collect(),
            base_dir: self.base_dir.clone(),
        }
    }
}

/// Loads a manifest, rejecting the whole file on the first bad record.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Manifest {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let record: PaperRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if record.paper_id.trim().is_empty() {
            return Err(bad("empty paper_id".into()));
        }
        if !seen.insert(record.paper_id.clone()) {
            return Err(bad(format!("duplicate paper_id `{}`", record.paper_id)));
        }
        let root = if record.latex_root.is_absolute() {
            record.latex_root.clone()
        } else {
            base_dir.join(&record.latex_root)
        };
        if !contains_tex(&root) {
            return Err(bad(format!(
                "latex_root {} does not exist or holds no .tex file",
                root.display()
            )));
        }
        records.push(record);
    }
    Ok(Corpus { records, base_dir })
}

/// Writes `corpus` in manifest format. `latex_root` values are written as stored.
pub fn save_manifest(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for r in corpus.records() {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

fn contains_tex(root: &Path) -> bool {
    if root.is_file() {
        return has_tex_extension(root);
    }
    root.is_dir()
        && WalkDir::new(root)
            .into_iter()
            .filter_map(|e| e.ok())
            .any(|e| e.file_type().is_file() && has_tex_extension(e.path()))
}

pub(crate) fn has_tex_extension(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("tex"))
}

/// Leaderboard statistics for one split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub papers_with_leaderboards: usize,
    pub papers_without: usize,
    /// (task, dataset, metric) projections counted once per gold quadruple.
    pub total_tdm_triples: usize,
    pub distinct_tdm_triples: usize,
    pub distinct_tasks: usize,
    pub distinct_datasets: usize,
    pub distinct_metrics: usize,
    pub avg_tdm_per_paper: f64,
    pub avg_tdms_per_paper: f64,
}

pub fn compute_stats(corpus: &Corpus, split: SplitLabel) -> CorpusStats {
    stats_over(corpus.split(split))
}

/// Statistics over an arbitrary set of records. Averages are taken over
/// papers with leaderboards; an empty input yields all zeros.
pub fn stats_over<'a>(records: impl IntoIterator<Item = &'a PaperRecord>) -> CorpusStats {
    let mut stats = CorpusStats::default();
    let mut tdm = HashSet::new();
    let mut tasks = HashSet::new();
    let mut datasets = HashSet::new();
    let mut metrics = HashSet::new();
    let mut quads = 0usize;

    for r in records {
        match &r.annotations {
            AnnotationSet::Unanswerable => stats.papers_without += 1,
            AnnotationSet::Leaderboard(list) => {
                stats.papers_with_leaderboards += 1;
                quads += list.len();
                for q in list {
                    stats.total_tdm_triples += 1;
                    tdm.insert(q.tdm());
                    tasks.insert(q.task.as_str());
                    datasets.insert(q.dataset.as_str());
                    metrics.insert(q.metric.as_str());
                }
            }
        }
    }

    stats.distinct_tdm_triples = tdm.len();
    stats.distinct_tasks = tasks.len();
    stats.distinct_datasets = datasets.len();
    stats.distinct_metrics = metrics.len();
    if stats.papers_with_leaderboards > 0 {
        let n = stats.papers_with_leaderboards as f64;
        stats.avg_tdm_per_paper = stats.total_tdm_triples as f64 / n;
        stats.avg_tdms_per_paper = quads as f64 / n;
    }
    stats
}

const STAT_ROWS: [&str; 9] = [
    "Papers w/ leaderboards",
    "Papers w/o leaderboards",
    "Total TDM-triples",
    "Distinct TDM-triples",
    "Distinct Tasks",
    "Distinct Datasets",
    "Distinct Metrics",
    "Avg. no. of TDM per paper",
    "Avg. no. of TDMS per paper",
];

fn stat_cells(s: &CorpusStats) -> [String; 9] {
    [
        s.papers_with_leaderboards.to_string(),
        s.papers_without.to_string(),
        s.total_tdm_triples.to_string(),
        s.distinct_tdm_triples.to_string(),
        s.distinct_tasks.to_string(),
        s.distinct_datasets.to_string(),
        s.distinct_metrics.to_string(),
        format!("{:.2}", s.avg_tdm_per_paper),
        format!("{:.2}", s.avg_tdms_per_paper),
    ]
}

/// Renders per-split statistics as CSV: one row per statistic, one column per split.
pub fn stats_csv(columns: &[(SplitLabel, CorpusStats)]) -> String {
    let mut out = String::from("statistic");
    for (split, _) in columns {
        out.push(',');
        out.push_str(split.display_name());
    }
    out.push('\n');
    let cells: Vec<_> = columns.iter().map(|(_, s)| stat_cells(s)).collect();
    for (i, name) in STAT_ROWS.iter().enumerate() {
        out.push_str(name);
        for c in &cells {
            out.push(',');
            out.push_str(&c[i]);
        }
        out.push('\n');
    }
    out
}

pub fn stats_markdown(columns: &[(SplitLabel, CorpusStats)]) -> String {
    let mut out = String::from("| |");
    for (split, _) in columns {
        out.push_str(&format!(" {} |", split.display_name()));
    }
    out.push_str("\n|---|");
    for _ in columns {
        out.push_str("---:|");
    }
    out.push('\n');
    let cells: Vec<_> = columns.iter().map(|(_, s)| stat_cells(s)).collect();
    for (i, name) in STAT_ROWS.iter().enumerate() {
        out.push_str(&format!("| {name} |"));
        for c in &cells {
            out.push_str(&format!(" {} |", c[i]));
        }
        out.push('\n');
    }
    out
}

/// Which arXiv categories qualify a paper for the unanswerable pool.
///
/// A category matches a pattern when it equals it or starts with it
/// (`"stat."` covers every stat subject). A paper qualifies when at least one
/// of its categories matches `include` (or `include` is empty) and none
/// matches `exclude`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryFilter {
    #[serde(default)]
    pub include: Vec<String>,
    #[serde(default)]
    pub exclude: Vec<String>,
}

impl CategoryFilter {
    /// Excludes AI, ML and statistics subjects.
    pub fn non_ai() -> Self {
        CategoryFilter {
            include: Vec::new(),
            exclude: [
                "cs.AI", "cs.LG", "cs.CL", "cs.CV", "cs.NE", "cs.IR", "cs.RO", "cs.MA", "cs.HC",
                "stat.", "eess.AS", "eess.IV", "eess.SP",
            ]
            .map(String::from)
            .to_vec(),
        }
    }

    pub fn accepts(&self, categories: &[String]) -> bool {
        let hit = |pats: &[String], c: &str| pats.iter().any(|p| c == p || c.starts_with(p.as_str()));
        let included = self.include.is_empty() || categories.iter().any(|c| hit(&self.include, c));
        included && !categories.iter().any(|c| hit(&self.exclude, c))
    }
}

/// Draws `n` papers whose categories pass `filter` and relabels them as
/// unanswerable. The draw depends only on the filtered set (ordered by
/// paper id), the seed and `n`.
pub fn select_unanswerable_pool(
    records: &[PaperRecord],
    filter: &CategoryFilter,
    seed: u64,
    n: usize,
) -> Result<Vec<PaperRecord>> {
    let mut pool: Vec<&PaperRecord> = records
        .iter()
        .filter(|r| filter.accepts(&r.categories))
        .collect();
    if n > pool.len() {
        return Err(Error::PoolTooSmall {
            available: pool.len(),
            requested: n,
        });
    }
    pool.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    pool.dedup_by(|a, b| a.paper_id == b.paper_id);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked
        .into_iter()
        .map(|i| PaperRecord {
            annotations: AnnotationSet::Unanswerable,
            ..pool[i].clone()
        })
        .collect())
}

/// Groups papers by split, keeping manifest order within a split.
pub fn by_split(corpus: &Corpus) -> BTreeMap<SplitLabel, Vec<&PaperRecord>> {
    let mut map: BTreeMap<SplitLabel, Vec<&PaperRecord>> = BTreeMap::new();
    for r in corpus.records() {
        map.entry(r.split).or_default().push(r);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(t: &str, d: &str, m: &str, s: &str) -> TdmsQuadruple {
        TdmsQuadruple::new(t, d, m, s).unwrap()
    }

    fn rec(id: &str, ann: AnnotationSet) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            title: format!("Paper {id}"),
            split: SplitLabel::Train,
            latex_root: PathBuf::from(format!("papers/{id}")),
            annotations: ann,
            categories: vec![],
        }
    }

    fn write_project(dir: &Path, id: &str) {
        let p = dir.join("papers").join(id);
        fs::create_dir_all(&p).unwrap();
        fs::write(p.join("main.tex"), "\\documentclass{article}").unwrap();
    }

    #[test]
    fn quadruple_rejects_empty_and_control_chars() {
        assert!(TdmsQuadruple::new(" ", "d", "m", "1").is_err());
        assert!(TdmsQuadruple::new("t", "d\u{7}", "m", "1").is_err());
        let ok = TdmsQuadruple::new(" NER ", "CoNLL", "F1", "91.2").unwrap();
        assert_eq!(ok.task, "NER");
    }

    #[test]
    fn leaderboard_dedups_and_rejects_empty() {
        let a = q("A", "B", "C", "1");
        let set = AnnotationSet::leaderboard(vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(set.quadruples().len(), 1);
        assert!(AnnotationSet::leaderboard(vec![]).is_err());
    }

    #[test]
    fn load_two_records() {
        let dir = tempfile::tempdir().unwrap();
        write_project(dir.path(), "p1");
        write_project(dir.path(), "p2");
        let lines = [
            r#"{"paper_id":"p1","title":"One","split":"train","latex_root":"papers/p1","annotations":"unanswerable"}"#,
            r#"{"paper_id":"p2","title":"Two","split":"few_shot","latex_root":"papers/p2","annotations":[{"Task":"A","Dataset":"B","Metric":"C","Score":"1"},{"Task":"A","Dataset":"B","Metric":"C","Score":"2"},{"Task":"X","Dataset":"Y","Metric":"Z","Score":"3"}]}"#,
        ];
        let manifest = dir.path().join("m.jsonl");
        fs::write(&manifest, lines.join("\n")).unwrap();
        let corpus = load_manifest(&manifest).unwrap();
        assert_eq!(corpus.len(), 2);

        // Hand count: p1 has no leaderboard, p2 has three quadruples.
        let all = stats_over(corpus.records());
        assert_eq!(all.papers_with_leaderboards, 1);
        assert_eq!(all.papers_without, 1);
        assert_eq!(all.total_tdm_triples, 3);
    }

    #[test]
    fn duplicate_id_is_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        write_project(dir.path(), "p1");
        let line = r#"{"paper_id":"p1","title":"One","split":"train","latex_root":"papers/p1","annotations":"unanswerable"}"#;
        let manifest = dir.path().join("m.jsonl");
        fs::write(&manifest, format!("{line}\n{line}\n")).unwrap();
        let err = load_manifest(&manifest).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        assert!(err.contains("p1"), "{err}");
    }

    #[test]
    fn missing_manifest_and_missing_root_fail() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_manifest(dir.path().join("nope.jsonl")),
            Err(Error::Io { .. })
        ));
        let manifest = dir.path().join("m.jsonl");
        fs::write(
            &manifest,
            r#"{"paper_id":"p1","title":"One","split":"train","latex_root":"papers/p1","annotations":"unanswerable"}"#,
        )
        .unwrap();
        assert!(matches!(load_manifest(&manifest), Err(Error::Manifest { line: 1, .. })));
    }

    #[test]
    fn bad_label_and_empty_list_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_project(dir.path(), "p1");
        let manifest = dir.path().join("m.jsonl");
        for ann in [r#""none""#, "[]", r#"[{"Task":"","Dataset":"B","Metric":"C","Score":"1"}]"#] {
            fs::write(
                &manifest,
                format!(r#"{{"paper_id":"p1","title":"t","split":"train","latex_root":"papers/p1","annotations":{ann}}}"#),
            )
            .unwrap();
            assert!(load_manifest(&manifest).is_err(), "{ann}");
        }
    }

    #[test]
    fn stats_single_quadruple() {
        let r = rec("a", AnnotationSet::leaderboard(vec![q("A", "B", "C", "1")]).unwrap());
        let s = stats_over([&r]);
        assert_eq!(s.total_tdm_triples, 1);
        assert_eq!(s.avg_tdm_per_paper, 1.0);
        assert_eq!(s.avg_tdms_per_paper, 1.0);
    }

    #[test]
    fn stats_two_papers_hand_enumerated() {
        let a = rec(
            "a",
            AnnotationSet::leaderboard(vec![q("A", "B", "C", "1"), q("A", "B", "C", "2")]).unwrap(),
        );
        let b = rec("b", AnnotationSet::leaderboard(vec![q("X", "Y", "Z", "3")]).unwrap());
        let s = stats_over([&a, &b]);
        assert_eq!(s.total_tdm_triples, 3);
        assert_eq!(s.distinct_tdm_triples, 2);
        assert_eq!(s.distinct_tasks, 2);
        assert!((s.avg_tdm_per_paper - 1.5).abs() < 1e-12);
        assert!((s.avg_tdms_per_paper - 1.5).abs() < 1e-12);
    }

    #[test]
    fn stats_empty_split_is_zero() {
        let corpus = Corpus::default();
        assert_eq!(compute_stats(&corpus, SplitLabel::ZeroShot), CorpusStats::default());
    }

    #[test]
    fn stats_tables_have_one_row_per_statistic() {
        let r = rec("a", AnnotationSet::leaderboard(vec![q("A", "B", "C", "1")]).unwrap());
        let cols = vec![(SplitLabel::Train, stats_over([&r])), (SplitLabel::FewShot, CorpusStats::default())];
        let csv = stats_csv(&cols);
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("statistic,Train,Test-Few-shot\n"));
        assert!(csv.contains("Avg. no. of TDMS per paper,1.00,0.00"));
        let md = stats_markdown(&cols);
        assert!(md.contains("| Total TDM-triples | 1 | 0 |"));
    }

    fn pool(n: usize) -> Vec<PaperRecord> {
        (0..n)
            .map(|i| PaperRecord {
                categories: vec!["math.AG".into()],
                ..rec(&format!("m{i:02}"), AnnotationSet::leaderboard(vec![q("A", "B", "C", "1")]).unwrap())
            })
            .collect()
    }

    #[test]
    fn unanswerable_pool_full_and_bounded() {
        let records = pool(10);
        let all = select_unanswerable_pool(&records, &CategoryFilter::non_ai(), 7, 10).unwrap();
        assert_eq!(all.len(), 10);
        assert!(all.iter().all(|r| r.annotations == AnnotationSet::Unanswerable));

        let err = select_unanswerable_pool(&pool(3), &CategoryFilter::non_ai(), 7, 5).unwrap_err();
        assert_eq!(err.to_string(), "pool size 3 < requested 5");
    }

    #[test]
    fn unanswerable_pool_is_deterministic_and_filters() {
        let mut records = pool(10);
        records[0].categories = vec!["cs.LG".into()];
        records[1].categories = vec!["stat.ML".into(), "math.ST".into()];
        let a = select_unanswerable_pool(&records, &CategoryFilter::non_ai(), 42, 4).unwrap();
        let b = select_unanswerable_pool(&records, &CategoryFilter::non_ai(), 42, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.paper_id != "m00" && r.paper_id != "m01"));
        assert!(select_unanswerable_pool(&records, &CategoryFilter::non_ai(), 42, 9).is_err());
    }

    proptest! {
        #[test]
        fn pool_ignores_input_order(seed in any::<u64>(), n in 0usize..8, rot in 0usize..8) {
            let records = pool(8);
            let mut shuffled = records.clone();
            shuffled.rotate_left(rot);
            shuffled.reverse();
            let a = select_unanswerable_pool(&records, &CategoryFilter::default(), seed, n).unwrap();
            let b = select_unanswerable_pool(&shuffled, &CategoryFilter::default(), seed, n).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn occurrence_counts_add_over_disjoint_splits(
            sizes in prop::collection::vec(0usize..4, 1..10),
            cut in 0usize..10,
        ) {
            let records: Vec<PaperRecord> = sizes.iter().enumerate().map(|(i, &k)| {
                let ann = if k == 0 {
                    AnnotationSet::Unanswerable
                } else {
                    AnnotationSet::leaderboard((0..k).map(|j| q("T", &format!("D{j}"), "M", &i.to_string())).collect()).unwrap()
                };
                rec(&format!("p{i}"), ann)
            }).collect();
            let cut = cut.min(records.len());
            let (left, right) = records.split_at(cut);
            let whole = stats_over(&records);
            let l = stats_over(left);
            let r = stats_over(right);
            prop_assert_eq!(whole.papers_with_leaderboards, l.papers_with_leaderboards + r.papers_with_leaderboards);
            prop_assert_eq!(whole.papers_without, l.papers_without + r.papers_without);
            prop_assert_eq!(whole.total_tdm_triples, l.total_tdm_triples + r.total_tdm_triples);
            prop_assert!(whole.distinct_tdm_triples <= whole.total_tdm_triples);
            prop_assert!(whole.avg_tdm_per_paper <= whole.avg_tdms_per_paper);
        }

        #[test]
        fn manifest_round_trip(n in 1usize..6, seed in any::<u64>()) {
            let dir = tempfile::tempdir().unwrap();
            let records: Vec<PaperRecord> = (0..n).map(|i| {
                write_project(dir.path(), &format!("p{i}"));
                let ann = if (seed >> i) & 1 == 0 {
                    AnnotationSet::Unanswerable
                } else {
                    AnnotationSet::leaderboard(vec![q("T \"quoted\"", "D", "M", &format!("{i}.5%"))]).unwrap()
                };
                PaperRecord { split: SplitLabel::ALL[i % 3], ..rec(&format!("p{i}"), ann) }
            }).collect();
            let corpus = Corpus::from_records(records, dir.path()).unwrap();
            let path = dir.path().join("m.jsonl");
            save_manifest(&corpus, &path).unwrap();
            let back = load_manifest(&path).unwrap();
            prop_assert_eq!(back, corpus);
        }
    }
}
