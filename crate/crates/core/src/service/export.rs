use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::store::{ReviewStatus, ReviewStore, StoreError};
use crate::corpus::{AlignedTriple, Provenance};

/// An annotated triple as exported, with both interpretation versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    #[serde(flatten)]
    pub triple: AlignedTriple,
    pub asr_interpretation: String,
    pub annotators: Vec<String>,
    /// Whether at least two annotators touched the triple.
    pub cross_checked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSetExport {
    pub set: String,
    pub records: Vec<ExportRecord>,
    pub excluded_unannotated: usize,
    pub excluded_rejected: usize,
}

impl ReviewStore {
    /// Reviewed triples in dialogue order; unreviewed and rejected triples
    /// are left out and counted.
    pub fn export(&self, set: &str) -> TestSetExport {
        let mut out = TestSetExport {
            set: set.to_string(),
            records: Vec::new(),
            excluded_unannotated: 0,
            excluded_rejected: 0,
        };
        for d in self.dialogues() {
            for t in &d.triples {
                match t.status {
                    ReviewStatus::Unreviewed => out.excluded_unannotated += 1,
                    ReviewStatus::Rejected => out.excluded_rejected += 1,
                    ReviewStatus::Accepted => {
                        let mut triple = t.triple.clone();
                        triple.provenance = Provenance::Annotated;
                        triple.corrected = triple.interpretation != t.asr_interpretation;
                        out.records.push(ExportRecord {
                            triple,
                            asr_interpretation: t.asr_interpretation.clone(),
                            annotators: t.annotators.iter().cloned().collect(),
                            cross_checked: t.annotators.len() >= 2,
                        });
                    }
                }
            }
        }
        if out.excluded_unannotated > 0 {
            log::warn!(
                "{} unannotated triples left out of the {set} export",
                out.excluded_unannotated
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportFiles {
    pub source: PathBuf,
    pub translation: PathBuf,
    pub interpretation_asr: PathBuf,
    pub interpretation: PathBuf,
    pub triples: PathBuf,
}

fn write_lines<'a>(path: &Path, lines: impl Iterator<Item = &'a str>) -> std::io::Result<()> {
    let mut body = String::new();
    for line in lines {
        body.push_str(&line.replace('\n', " "));
        body.push('\n');
    }
    fs::write(path, body)
}

/// Writes the line-aligned test-set files: source, translation, the ASR and
/// corrected interpretations, and the full records.
pub fn export_testsets(
    export: &TestSetExport,
    dir: impl AsRef<Path>,
) -> Result<ExportFiles, StoreError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let set = &export.set;
    let files = ExportFiles {
        source: dir.join(format!("{set}.source.txt")),
        translation: dir.join(format!("{set}.translation.txt")),
        interpretation_asr: dir.join(format!("{set}.interpretation_asr.txt")),
        interpretation: dir.join(format!("{set}.interpretation.txt")),
        triples: dir.join(format!("{set}.triples.jsonl")),
    };
    let r = &export.records;
    write_lines(&files.source, r.iter().map(|x| x.triple.source.as_str()))?;
    write_lines(
        &files.translation,
        r.iter().map(|x| x.triple.translation.as_str()),
    )?;
    write_lines(
        &files.interpretation_asr,
        r.iter().map(|x| x.asr_interpretation.as_str()),
    )?;
    write_lines(
        &files.interpretation,
        r.iter().map(|x| x.triple.interpretation.as_str()),
    )?;
    let mut jsonl = String::new();
    for record in r {
        jsonl
            .push_str(&serde_json::to_string(record).map_err(|e| StoreError::Data(e.to_string()))?);
        jsonl.push('\n');
    }
    fs::write(&files.triples, jsonl)?;
    Ok(files)
}
