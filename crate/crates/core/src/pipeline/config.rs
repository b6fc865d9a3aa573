use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::aligner::AlignLevel;
use crate::cache::sha256_hex;
use crate::metrics::BleuConfig;
use crate::t2i::{PairMode, TrainConfig};
use crate::waitk::WaitKConfig;

/// File locations. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Dialogue corpus, one JSON record per line.
    pub corpus: PathBuf,
    /// JSON rule list for the clean stage; the default rules when absent.
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Alignment and provider cache; `<out>/cache` when absent.
    #[serde(default)]
    pub cache: Option<PathBuf>,
    /// Reviewed test triples (JSONL) used instead of the held-out split.
    #[serde(default)]
    pub annotated_test: Option<PathBuf>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanSection {
    /// Utterances shorter than this many words are left out of the Raw
    /// interpretation corpus.
    pub raw_min_words: usize,
}

impl Default for CleanSection {
    fn default() -> Self {
        CleanSection { raw_min_words: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Lexical,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignSection {
    pub level: AlignLevel,
    pub provider: ProviderKind,
    /// Triples scoring below this go to `align/low_score.jsonl`.
    pub min_score: Option<f64>,
    pub length_ratio: (f64, f64),
}

impl Default for AlignSection {
    fn default() -> Self {
        AlignSection {
            level: AlignLevel::SuperSentence,
            provider: ProviderKind::Lexical,
            min_score: None,
            length_ratio: crate::cleaning::DEFAULT_LENGTH_RATIO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    /// Share of dialogues held out as the test set.
    pub test_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { test_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct T2iSection {
    pub mode: PairMode,
    pub lang: String,
    pub pivot: String,
    pub train: TrainConfig,
}

impl Default for T2iSection {
    fn default() -> Self {
        T2iSection {
            mode: PairMode::Supervised,
            lang: "en".into(),
            pivot: "de".into(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub clean: CleanSection,
    #[serde(default)]
    pub align: AlignSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub t2i: T2iSection,
    #[serde(default)]
    pub waitk: WaitKConfig,
    #[serde(default)]
    pub bleu: BleuConfig,
    #[serde(default = "default_max_n")]
    pub ngram_max_n: usize,
}

fn default_seed() -> u64 {
    13
}

fn default_max_n() -> usize {
    4
}

impl PipelineConfig {
    /// A config with defaults everywhere except the corpus and output paths.
    pub fn new(corpus: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            seed: default_seed(),
            paths: Paths {
                corpus: corpus.into(),
                rules: None,
                out: out.into(),
                cache: None,
                annotated_test: None,
            },
            clean: CleanSection::default(),
            align: AlignSection::default(),
            split: SplitSection::default(),
            t2i: T2iSection::default(),
            waitk: WaitKConfig::default(),
            bleu: BleuConfig::default(),
            ngram_max_n: default_max_n(),
        }
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut config: PipelineConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.resolve(base);
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        self
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        join(&mut paths.corpus);
        join(&mut paths.out);
        for p in [
            &mut paths.rules,
            &mut paths.cache,
            &mut paths.annotated_test,
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.paths
            .cache
            .clone()
            .unwrap_or_else(|| self.paths.out.join("cache"))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fraction = self.split.test_fraction;
        if !(fraction > 0.0 && fraction < 1.0) && self.paths.annotated_test.is_none() {
            return Err(PipelineError::Config(format!(
                "split.test_fraction must be in (0, 1), got {fraction}"
            )));
        }
        let (low, high) = self.align.length_ratio;
        if !(low > 0.0 && low < 1.0 && high > 1.0) {
            return Err(PipelineError::Config(format!(
                "align.length_ratio must satisfy 0 < low < 1 < high, got ({low}, {high})"
            )));
        }
        if self.waitk.k == 0 {
            return Err(PipelineError::Config("waitk.k must be at least 1".into()));
        }
        if self.ngram_max_n == 0 {
            return Err(PipelineError::Config(
                "ngram_max_n must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the settings that influence artifacts; output and cache
    /// locations are left out so identical runs in different directories
    /// agree.
    pub fn fingerprint(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let paths = value["paths"].as_object_mut().expect("paths object");
        paths.remove("out");
        paths.remove("cache");
        for key in ["corpus", "rules", "annotated_test"] {
            if let Some(name) = paths
                .get(key)
                .and_then(|v| v.as_str())
                .and_then(|p| Path::new(p).file_name())
                .map(|n| n.to_string_lossy().into_owned())
            {
                paths.insert(key.into(), name.into());
            }
        }
        sha256_hex(value.to_string().as_bytes())
    }
}
