mod common;

use std::fs;
use std::time::{Duration, Instant};

use common::{fixture_config, snapshot};
use simulcorpus::pipeline::{run_pipeline, run_stages, PipelineError, RunManifest, Stage};

const EXPECTED: &[&str] = &[
    "clean/dialogues.jsonl",
    "clean/raw.jsonl",
    "clean/report.json",
    "align/alignments.jsonl",
    "align/clean_triples.jsonl",
    "align/split.json",
    "align/test.interpretation.txt",
    "align/test.source.txt",
    "align/test.translation.txt",
    "align/train.jsonl",
    "t2i/model/lm.arpa",
    "t2i/model/phrase-table.tsv",
    "t2i/model/decoder.json",
    "t2i/pseudo_i.txt",
    "t2i/pseudo_i.txt.manifest.json",
    "simulate/baseline.txt",
    "simulate/t2i.jsonl",
    "score/report.json",
    "ngram/figure.csv",
    "ngram/table.txt",
    "manifest.json",
];

#[test]
fn fixture_run_is_complete_fast_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let manifest = run_pipeline(&fixture_config(a.path()), None).unwrap();
    assert!(start.elapsed() < Duration::from_secs(60));
    assert_eq!(manifest.stages.len(), Stage::ALL.len());
    run_pipeline(&fixture_config(b.path()), None).unwrap();

    let first = snapshot(a.path());
    for rel in EXPECTED {
        assert!(first.contains_key(*rel), "missing {rel}");
    }
    let second = snapshot(b.path());
    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>()
    );
    for (rel, bytes) in &first {
        assert!(bytes == &second[rel], "{rel} differs between runs");
    }

    // a rerun in place reuses the cache and still changes nothing
    run_pipeline(&fixture_config(a.path()), None).unwrap();
    assert_eq!(snapshot(a.path()), first);
}

#[test]
fn manifest_hashes_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&fixture_config(dir.path()), None).unwrap();
    let on_disk = RunManifest::load(&dir.path().join("manifest.json"))
        .unwrap()
        .unwrap();
    assert_eq!(manifest, on_disk);
    for record in &manifest.stages {
        assert!(!record.outputs.is_empty(), "{:?}", record.stage);
        for (rel, hash) in &record.outputs {
            let bytes = fs::read(dir.path().join(rel)).unwrap();
            assert_eq!(&simulcorpus::cache::sha256_hex(&bytes), hash, "{rel}");
        }
    }
    // outputs of one stage are inputs of the next, with the same hash
    let align = manifest
        .stages
        .iter()
        .find(|r| r.stage == Some(Stage::Align))
        .unwrap();
    let clean = manifest
        .stages
        .iter()
        .find(|r| r.stage == Some(Stage::Clean))
        .unwrap();
    assert_eq!(
        align.inputs["clean/dialogues.jsonl"],
        clean.outputs["clean/dialogues.jsonl"]
    );
}

#[test]
fn continue_from_reuses_earlier_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config(dir.path());
    run_pipeline(&cfg, None).unwrap();
    let before = snapshot(dir.path());
    fs::remove_dir_all(dir.path().join("score")).unwrap();
    fs::remove_dir_all(dir.path().join("ngram")).unwrap();
    let manifest = run_pipeline(&cfg, Some(Stage::Score)).unwrap();
    assert_eq!(manifest.stages.len(), Stage::ALL.len());
    assert_eq!(snapshot(dir.path()), before);
}

#[test]
fn continuing_without_earlier_artifacts_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_pipeline(&fixture_config(dir.path()), Some(Stage::T2iApply)).unwrap_err();
    assert!(
        matches!(
            err,
            PipelineError::MissingArtifact {
                stage: Stage::T2iApply,
                ..
            }
        ),
        "{err}"
    );
    assert!(err.to_string().contains("t2i-apply"), "{err}");
}

fn cache_files(root: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn corrupt_cache_entry_fails_the_align_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config(dir.path());
    run_stages(&cfg, Stage::Clean, Stage::Align).unwrap();
    let files = cache_files(&cfg.cache_dir().join("align"));
    assert!(!files.is_empty());
    let victim = &files[files.len() / 2];
    let text = fs::read_to_string(victim).unwrap();
    fs::write(
        victim,
        text.replacen("\"score\":", "\"score\": 1e-3, \"x\":", 1),
    )
    .unwrap();

    let err = run_stages(&cfg, Stage::Align, Stage::Align).unwrap_err();
    let message = err.to_string();
    assert!(message.contains("stage align failed"), "{message}");
    assert!(message.contains("cache checksum mismatch"), "{message}");
}

#[test]
fn failing_stage_halts_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(dir.path());
    cfg.paths.corpus = dir.path().join("absent.jsonl");
    let err = run_pipeline(&cfg, None).unwrap_err();
    assert!(err.to_string().contains("clean"), "{err}");
    assert!(!dir.path().join("align").exists());
}

#[test]
fn seed_changes_the_split() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_stages(&fixture_config(a.path()), Stage::Clean, Stage::Align).unwrap();
    let cfg = fixture_config(b.path()).with_seed(Some(99));
    run_stages(&cfg, Stage::Clean, Stage::Align).unwrap();
    let split = |d: &std::path::Path| fs::read_to_string(d.join("align/split.json")).unwrap();
    assert_ne!(split(a.path()), split(b.path()));
}

#[test]
fn baseline_shows_the_evaluation_gap() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&fixture_config(dir.path()), None).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("score/report.json")).unwrap())
            .unwrap();
    let systems = report["systems"].as_array().unwrap();
    let baseline = &systems[0];
    let t2i = &systems[1];
    assert_eq!(baseline["generator"], "baseline");
    assert!(baseline["gap"].as_f64().unwrap() > 0.0);
    assert!(
        t2i["bleu_interpretation"].as_f64().unwrap()
            > baseline["bleu_interpretation"].as_f64().unwrap()
    );
}
