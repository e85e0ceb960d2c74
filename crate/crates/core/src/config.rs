//! Run configuration: a JSON file plus command-line overrides.
//!
//! Every field has a default except `manifest` and the inference endpoint.
//! Unknown keys are rejected. The API key never lives here; only the name of
//! the environment variable holding it does.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::context::{ContextKind, PatternSets, DEFAULT_BUDGET_WORDS};
use crate::error::{Error, Result};
use crate::inference::InferenceConfig;
use crate::metrics::{OverallMode, DEFAULT_PARTIAL_THRESHOLD};
use crate::promptgen::bare_drop_template_id;
use crate::texflat::{ConverterCmd, DEFAULT_CONVERTER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub partial_threshold: f64,
    /// Template ids to score; `None` scores every template.
    pub template_filter: Option<Vec<u32>>,
    pub overall_mode: OverallMode,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            partial_threshold: DEFAULT_PARTIAL_THRESHOLD,
            template_filter: Some(vec![bare_drop_template_id()]),
            overall_mode: OverallMode::Macro,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub outdir: PathBuf,
    pub seed: u64,
    pub contexts: Vec<ContextKind>,
    /// External LaTeX-to-text command; `null` selects the built-in stripper.
    pub converter: Option<String>,
    pub patterns: PatternSets,
    pub budget_words: usize,
    pub sample_fraction: f64,
    /// Worker threads for flattening and context extraction; 0 means one per core.
    pub jobs: usize,
    pub inference: InferenceConfig,
    pub eval: EvalSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            outdir: PathBuf::from("lbx-out"),
            seed: 0,
            contexts: ContextKind::ALL.to_vec(),
            converter: Some(DEFAULT_CONVERTER.to_owned()),
            patterns: PatternSets::default(),
            budget_words: DEFAULT_BUDGET_WORDS,
            sample_fraction: 1.0,
            jobs: 0,
            inference: InferenceConfig::default(),
            eval: EvalSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The file at `path` when given, defaults otherwise.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_file(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.patterns.validate()?;
        if self.budget_words == 0 {
            return Err(Error::Config("budget_words must be positive".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::Config(format!("sample_fraction must lie in (0, 1], got {}", self.sample_fraction)));
        }
        if !(0.0..=100.0).contains(&self.eval.partial_threshold) {
            return Err(Error::Config("eval.partial_threshold must lie in [0, 100]".into()));
        }
        if self.contexts.is_empty() {
            return Err(Error::Config("at least one context kind is required".into()));
        }
        if let Some(c) = &self.converter {
            ConverterCmd::parse(c)?;
        }
        Ok(())
    }

    pub fn manifest(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::Config("no corpus manifest: set `manifest` in the config file or pass --manifest".into()))
    }

    pub fn converter_cmd(&self) -> Result<Option<ConverterCmd>> {
        self.converter.as_deref().map(ConverterCmd::parse).transpose()
    }

    pub fn workers(&self) -> usize {
        if self.jobs > 0 {
            self.jobs
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }

    /// SHA-256 over the canonical JSON of everything that affects results.
    /// The output directory and worker count are left out.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.outdir = PathBuf::new();
        c.jobs = 0;
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
