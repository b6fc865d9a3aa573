//! End-to-end orchestration: clean, align, style transfer, simultaneous
//! simulation, scoring and n-gram analysis over on-disk artifacts.
//!
//! Every stage reads the files written by earlier stages and overwrites its
//! own outputs, so a run can resume from any stage. `manifest.json` in the
//! output directory records a SHA-256 for every input and output.

mod config;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    AlignSection, CleanSection, Paths, PipelineConfig, ProviderKind, SplitSection, T2iSection,
};
pub use stages::{open_review_store, split_train_test, Artifacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "clean")]
    Clean,
    #[serde(rename = "align")]
    Align,
    #[serde(rename = "t2i-train")]
    T2iTrain,
    #[serde(rename = "t2i-apply")]
    T2iApply,
    #[serde(rename = "simulate")]
    Simulate,
    #[serde(rename = "score")]
    Score,
    #[serde(rename = "ngram-report")]
    NgramReport,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Clean,
        Stage::Align,
        Stage::T2iTrain,
        Stage::T2iApply,
        Stage::Simulate,
        Stage::Score,
        Stage::NgramReport,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Clean => "clean",
            Stage::Align => "align",
            Stage::T2iTrain => "t2i-train",
            Stage::T2iApply => "t2i-apply",
            Stage::Simulate => "simulate",
            Stage::Score => "score",
            Stage::NgramReport => "ngram-report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: Stage, message: String },
    #[error("stage {stage} needs {} from an earlier stage", path.display())]
    MissingArtifact { stage: Stage, path: PathBuf },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    pub fn stage(stage: Stage, err: impl fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            message: err.to_string(),
        }
    }
}

/// Hashes of what one stage read and wrote, keyed by path.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Option<Stage>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub config_sha256: String,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Option<Self>, PipelineError> {
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    fn replace(&mut self, record: StageRecord) {
        self.stages.retain(|r| r.stage != record.stage);
        self.stages.push(record);
        self.stages.sort_by_key(|r| r.stage);
    }
}

/// Runs every stage from `from` onward and returns the final manifest.
pub fn run_pipeline(
    config: &PipelineConfig,
    from: Option<Stage>,
) -> Result<RunManifest, PipelineError> {
    run_stages(config, from.unwrap_or(Stage::Clean), Stage::NgramReport)
}

/// Runs the stages `first..=last` in order, stopping at the first failure.
pub fn run_stages(
    config: &PipelineConfig,
    first: Stage,
    last: Stage,
) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let artifacts = Artifacts::new(config);
    std::fs::create_dir_all(&artifacts.out)?;
    let manifest_path = artifacts.out.join("manifest.json");
    let mut manifest = match RunManifest::load(&manifest_path)? {
        Some(m) if first != Stage::Clean => m,
        _ => RunManifest::default(),
    };
    manifest.seed = config.seed;
    manifest.config_sha256 = config.fingerprint();
    for stage in Stage::ALL
        .into_iter()
        .filter(|s| (first..=last).contains(s))
    {
        log::info!("stage {stage}");
        let record = stages::run_stage(stage, config, &artifacts)?;
        manifest.replace(record);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&manifest_path, json + "\n")?;
    }
    Ok(manifest)
}
