use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{PipelineConfig, ProviderKind};
use super::{PipelineError, Stage, StageRecord};
use crate::aligner::{align_dialogue, split_by_score, AlignLevel, DialogueAlignment};
use crate::cache::{sha256_hex, ContentCache};
use crate::cleaning::{
    default_dialogue_rules, filter_dialogues, filter_raw_interpretations, length_ratio_filter,
    load_rules,
};
use crate::corpus::{
    read_corpus, read_triples, tokenize, write_corpus, write_triples, AlignedTriple, ReadMode,
};
use crate::ngram_analysis::{ngram_report, FigureTable};
use crate::service::ReviewStore;
use crate::similarity::{EmbeddingClient, HttpEmbeddingTransport, SimilarityProvider};
use crate::t2i::{
    apply_t2i_files, build_t2i_pairs, train_t2i, CorpusLabel, HttpMtTransport, Labeled, MtClient,
    PairMode, T2iInputs,
};
use crate::waitk::{score_simulations, simulate_corpus, EvalReport, Simulation, TableGenerator};

/// Simulated systems: one trained on offline translations, one on Pseudo-I.
pub const SYSTEMS: [&str; 2] = ["baseline", "t2i"];

/// Artifact locations under the output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub out: PathBuf,
}

impl Artifacts {
    pub fn new(config: &PipelineConfig) -> Self {
        Artifacts {
            out: config.paths.out.clone(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn clean_dialogues(&self) -> PathBuf {
        self.path("clean/dialogues.jsonl")
    }

    pub fn raw_dialogues(&self) -> PathBuf {
        self.path("clean/raw.jsonl")
    }

    pub fn alignments(&self) -> PathBuf {
        self.path("align/alignments.jsonl")
    }

    pub fn model_dir(&self) -> PathBuf {
        self.path("t2i/model")
    }

    pub fn pseudo_i(&self) -> PathBuf {
        self.path("t2i/pseudo_i.txt")
    }

    pub fn review_dir(&self) -> PathBuf {
        self.path("review")
    }

    pub fn hypotheses(&self, system: &str) -> PathBuf {
        self.path(&format!("simulate/{system}.txt"))
    }

    pub fn simulations(&self, system: &str) -> PathBuf {
        self.path(&format!("simulate/{system}.jsonl"))
    }
}

trait At<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Display> At<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::stage(stage, e))
    }
}

struct Recorder<'a> {
    stage: Stage,
    out: &'a Path,
    record: StageRecord,
}

impl<'a> Recorder<'a> {
    fn new(stage: Stage, out: &'a Path) -> Self {
        Recorder {
            stage,
            out,
            record: StageRecord {
                stage: Some(stage),
                ..StageRecord::default()
            },
        }
    }

    fn key(&self, path: &Path) -> String {
        match path.strip_prefix(self.out) {
            Ok(rel) => rel.to_string_lossy().replace('\\', "/"),
            Err(_) => path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }

    fn hash(&self, path: &Path) -> Result<String, PipelineError> {
        let bytes = fs::read(path).at(self.stage)?;
        Ok(sha256_hex(&bytes))
    }

    /// Hashes an existing input; a missing one means an earlier stage has
    /// not run.
    fn input(&mut self, path: &Path) -> Result<(), PipelineError> {
        if !path.is_file() {
            return Err(PipelineError::MissingArtifact {
                stage: self.stage,
                path: path.to_path_buf(),
            });
        }
        let hash = self.hash(path)?;
        self.record.inputs.insert(self.key(path), hash);
        Ok(())
    }

    fn output(&mut self, path: &Path) -> Result<(), PipelineError> {
        let hash = self.hash(path)?;
        self.record.outputs.insert(self.key(path), hash);
        Ok(())
    }
}

fn ensure_parent(path: &Path, stage: Stage) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).at(stage)?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T, stage: Stage) -> Result<(), PipelineError> {
    ensure_parent(path, stage)?;
    let json = serde_json::to_string_pretty(value).at(stage)?;
    fs::write(path, json + "\n").at(stage)
}

fn read_json<T: DeserializeOwned>(path: &Path, stage: Stage) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).at(stage)?;
    serde_json::from_str(&text).at(stage)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T], stage: Stage) -> Result<(), PipelineError> {
    ensure_parent(path, stage)?;
    let mut body = String::new();
    for item in items {
        body.push_str(&serde_json::to_string(item).at(stage)?);
        body.push('\n');
    }
    fs::write(path, body).at(stage)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path, stage: Stage) -> Result<Vec<T>, PipelineError> {
    fs::read_to_string(path)
        .at(stage)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).at(stage))
        .collect()
}

fn write_lines<S: AsRef<str>>(path: &Path, lines: &[S], stage: Stage) -> Result<(), PipelineError> {
    ensure_parent(path, stage)?;
    let mut body = String::new();
    for line in lines {
        body.push_str(&line.as_ref().replace('\n', " "));
        body.push('\n');
    }
    fs::write(path, body).at(stage)
}

fn read_lines(path: &Path, stage: Stage) -> Result<Vec<String>, PipelineError> {
    Ok(fs::read_to_string(path)
        .at(stage)?
        .lines()
        .map(String::from)
        .collect())
}

fn tokenized(text: &str) -> String {
    tokenize(text, false).joined()
}

/// Dialogue ids assigned to each side of the train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Shuffles `ids` with `seed` and holds out `ceil(fraction * n)` of them
/// (at least one, and never all when `n > 1`). Both sides keep input order.
pub fn split_train_test(ids: &[String], fraction: f64, seed: u64) -> Split {
    let n = ids.len();
    let mut held = ((fraction * n as f64).ceil() as usize).max(1).min(n);
    if n > 1 && held == n {
        held = n - 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test: BTreeSet<usize> = order[..held].iter().copied().collect();
    let (test_ids, train_ids): (Vec<_>, Vec<_>) = (0..n).partition(|i| test.contains(i));
    Split {
        train: train_ids.into_iter().map(|i| ids[i].clone()).collect(),
        test: test_ids.into_iter().map(|i| ids[i].clone()).collect(),
    }
}

pub(super) fn run_stage(
    stage: Stage,
    config: &PipelineConfig,
    artifacts: &Artifacts,
) -> Result<StageRecord, PipelineError> {
    let mut rec = Recorder::new(stage, &artifacts.out);
    match stage {
        Stage::Clean => clean(config, artifacts, &mut rec)?,
        Stage::Align => align(config, artifacts, &mut rec)?,
        Stage::T2iTrain => t2i_train(config, artifacts, &mut rec)?,
        Stage::T2iApply => t2i_apply(artifacts, &mut rec)?,
        Stage::Simulate => simulate(config, artifacts, &mut rec)?,
        Stage::Score => score(config, artifacts, &mut rec)?,
        Stage::NgramReport => ngram(config, artifacts, &mut rec)?,
    }
    Ok(rec.record)
}

fn clean(config: &PipelineConfig, a: &Artifacts, rec: &mut Recorder) -> Result<(), PipelineError> {
    let stage = Stage::Clean;
    rec.input(&config.paths.corpus)?;
    let corpus = read_corpus(&config.paths.corpus, ReadMode::Strict).at(stage)?;
    let rules = match &config.paths.rules {
        Some(path) => {
            rec.input(path)?;
            load_rules(path).at(stage)?
        }
        None => default_dialogue_rules(),
    };
    let filtered = filter_dialogues(&corpus, &rules).at(stage)?;
    log::info!("dialogue filter:\n{}", filtered.report);
    let raw = filter_raw_interpretations(&filtered.kept, config.clean.raw_min_words);

    let outputs = [
        a.clean_dialogues(),
        a.path("clean/report.json"),
        a.raw_dialogues(),
        a.path("clean/raw_report.json"),
    ];
    ensure_parent(&outputs[0], stage)?;
    write_corpus(&outputs[0], &filtered.kept).at(stage)?;
    write_json(&outputs[1], &filtered.report, stage)?;
    write_corpus(&outputs[2], &raw.kept).at(stage)?;
    write_json(&outputs[3], &raw.report, stage)?;
    for p in &outputs {
        rec.output(p)?;
    }
    Ok(())
}

fn provider(config: &PipelineConfig) -> Result<SimilarityProvider, PipelineError> {
    Ok(match config.align.provider {
        ProviderKind::Lexical => SimilarityProvider::LexicalTfIdf,
        ProviderKind::Embedding => {
            let transport = HttpEmbeddingTransport::from_env().at(Stage::Align)?;
            let client = EmbeddingClient::new("external_embedding", Box::new(transport))
                .with_cache_dir(config.cache_dir().join("embedding"));
            SimilarityProvider::ExternalEmbedding(client)
        }
    })
}

fn level_name(level: AlignLevel) -> &'static str {
    match level {
        AlignLevel::SuperSentence => "super_sentence",
        AlignLevel::Sentence => "sentence",
    }
}

#[derive(Serialize)]
struct AlignReport<'a> {
    dialogues: usize,
    flags: BTreeMap<&'static str, usize>,
    triples: usize,
    low_score: usize,
    length_ratio: &'a crate::cleaning::FilterReport,
    train_triples: usize,
    test_triples: usize,
}

fn align(config: &PipelineConfig, a: &Artifacts, rec: &mut Recorder) -> Result<(), PipelineError> {
    let stage = Stage::Align;
    let input = a.clean_dialogues();
    rec.input(&input)?;
    let dialogues = read_corpus(&input, ReadMode::Strict).at(stage)?;
    let provider = provider(config)?;
    let cache: ContentCache<DialogueAlignment> =
        ContentCache::persistent("align", config.cache_dir().join("align"));
    let level = config.align.level;
    let alignments: Vec<DialogueAlignment> = dialogues
        .par_iter()
        .map(|d| {
            let body = serde_json::to_string(d).at(stage)?;
            let key = cache.key(&[provider.id(), level_name(level), &body]);
            if let Some(hit) = cache.get(&key).at(stage)? {
                return Ok(hit);
            }
            let aligned = align_dialogue(d, level, &provider).at(stage)?;
            cache.insert(&key, &aligned).at(stage)?;
            Ok(aligned)
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut flags = BTreeMap::new();
    for al in &alignments {
        if let Some(flag) = al.flag {
            *flags.entry(flag.as_str()).or_insert(0) += 1;
        }
    }
    let all: Vec<AlignedTriple> = alignments
        .iter()
        .flat_map(|al| al.triples.clone())
        .collect();
    let (kept, low) = match config.align.min_score {
        Some(min) => split_by_score(all.clone(), min),
        None => (all.clone(), Vec::new()),
    };
    let (lo, hi) = config.align.length_ratio;
    let clean = length_ratio_filter(&kept, lo, hi).at(stage)?;

    let (train, test) = match &config.paths.annotated_test {
        Some(path) => {
            rec.input(path)?;
            let test = read_triples(path, ReadMode::Strict).at(stage)?;
            let held: BTreeSet<&str> = test.iter().map(|t| t.dialogue_id.as_str()).collect();
            let train: Vec<AlignedTriple> = clean
                .kept
                .iter()
                .filter(|t| !held.contains(t.dialogue_id.as_str()))
                .cloned()
                .collect();
            (train, test)
        }
        None => {
            let mut ids: Vec<String> = Vec::new();
            for t in &clean.kept {
                if ids.last() != Some(&t.dialogue_id) {
                    ids.push(t.dialogue_id.clone());
                }
            }
            let split = split_train_test(&ids, config.split.test_fraction, config.seed);
            let held: BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
            clean
                .kept
                .iter()
                .cloned()
                .partition(|t| !held.contains(t.dialogue_id.as_str()))
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(PipelineError::stage(
            stage,
            format!(
                "split left {} train and {} test triples",
                train.len(),
                test.len()
            ),
        ));
    }
    let split = Split {
        train: dedup_ids(&train),
        test: dedup_ids(&test),
    };

    let report = AlignReport {
        dialogues: dialogues.len(),
        flags,
        triples: all.len(),
        low_score: low.len(),
        length_ratio: &clean.report,
        train_triples: train.len(),
        test_triples: test.len(),
    };
    write_jsonl(&a.alignments(), &alignments, stage)?;
    let triple_files = [
        ("align/triples.jsonl", &all),
        ("align/low_score.jsonl", &low),
        ("align/clean_triples.jsonl", &clean.kept),
        ("align/train.jsonl", &train),
        ("align/test.jsonl", &test),
    ];
    for (rel, triples) in triple_files {
        write_triples(a.path(rel), triples).at(stage)?;
    }
    write_json(&a.path("align/split.json"), &split, stage)?;
    write_json(&a.path("align/report.json"), &report, stage)?;
    let columns: [(&str, fn(&AlignedTriple) -> &str); 3] = [
        ("align/test.source.txt", |t| &t.source),
        ("align/test.translation.txt", |t| &t.translation),
        ("align/test.interpretation.txt", |t| &t.interpretation),
    ];
    for (rel, field) in columns {
        let lines: Vec<&str> = test.iter().map(field).collect();
        write_lines(&a.path(rel), &lines, stage)?;
    }

    rec.output(&a.alignments())?;
    for (rel, _) in triple_files {
        rec.output(&a.path(rel))?;
    }
    for rel in ["align/split.json", "align/report.json"] {
        rec.output(&a.path(rel))?;
    }
    for (rel, _) in columns {
        rec.output(&a.path(rel))?;
    }
    Ok(())
}

fn dedup_ids(triples: &[AlignedTriple]) -> Vec<String> {
    let mut ids: Vec<String> = Vec::new();
    for t in triples {
        if !ids.contains(&t.dialogue_id) {
            ids.push(t.dialogue_id.clone());
        }
    }
    ids
}

#[derive(Serialize)]
struct TrainReport {
    mode: PairMode,
    pairs: usize,
    model_hash: String,
}

fn t2i_train(
    config: &PipelineConfig,
    a: &Artifacts,
    rec: &mut Recorder,
) -> Result<(), PipelineError> {
    let stage = Stage::T2iTrain;
    let section = &config.t2i;
    let pairs = match section.mode {
        PairMode::Supervised => {
            let path = a.path("align/train.jsonl");
            rec.input(&path)?;
            let train = read_triples(&path, ReadMode::Strict).at(stage)?;
            build_t2i_pairs(
                PairMode::Supervised,
                T2iInputs::Clean(&Labeled::new(CorpusLabel::Clean, train)),
            )
            .at(stage)?
        }
        PairMode::Unsupervised => {
            let split_path = a.path("align/split.json");
            rec.input(&a.raw_dialogues())?;
            rec.input(&split_path)?;
            let split: Split = read_json(&split_path, stage)?;
            let train: BTreeSet<&str> = split.train.iter().map(String::as_str).collect();
            let raw = read_corpus(a.raw_dialogues(), ReadMode::Strict).at(stage)?;
            let lines: Vec<String> = raw
                .iter()
                .filter(|d| train.contains(d.id.as_str()))
                .flat_map(|d| d.transcript_utterances.iter().cloned())
                .collect();
            let transport = HttpMtTransport::from_env().at(stage)?;
            let client = MtClient::new("mt", Box::new(transport))
                .with_cache_dir(config.cache_dir().join("mt"));
            let interpretations = Labeled::new(CorpusLabel::Raw, lines);
            build_t2i_pairs(
                PairMode::Unsupervised,
                T2iInputs::Raw {
                    interpretations: &interpretations,
                    client: &client,
                    lang: &section.lang,
                    pivot: &section.pivot,
                },
            )
            .at(stage)?
        }
    };
    let bundle = train_t2i(&pairs, &section.train).at(stage)?;
    let dir = a.model_dir();
    let model_hash = bundle.save(&dir).at(stage)?;
    let report_path = a.path("t2i/train_report.json");
    write_json(
        &report_path,
        &TrainReport {
            mode: section.mode,
            pairs: pairs.len(),
            model_hash,
        },
        stage,
    )?;
    for name in crate::t2i::MODEL_FILES {
        rec.output(&dir.join(name))?;
    }
    rec.output(&report_path)
}

fn t2i_apply(a: &Artifacts, rec: &mut Recorder) -> Result<(), PipelineError> {
    let stage = Stage::T2iApply;
    let dir = a.model_dir();
    for name in crate::t2i::MODEL_FILES {
        rec.input(&dir.join(name))?;
    }
    let input = a.path("align/test.translation.txt");
    rec.input(&input)?;
    let output = a.pseudo_i();
    apply_t2i_files(&dir, &input, &output).at(stage)?;
    rec.output(&output)?;
    rec.output(&crate::t2i::ApplyManifest::sidecar_path(&output))
}

fn simulate(
    config: &PipelineConfig,
    a: &Artifacts,
    rec: &mut Recorder,
) -> Result<(), PipelineError> {
    let stage = Stage::Simulate;
    let src_path = a.path("align/test.source.txt");
    let tgt_path = a.path("align/test.translation.txt");
    for p in [&src_path, &tgt_path, &a.pseudo_i()] {
        rec.input(p)?;
    }
    let sources: Vec<String> = read_lines(&src_path, stage)?
        .iter()
        .map(|s| tokenized(s))
        .collect();
    let translations: Vec<String> = read_lines(&tgt_path, stage)?
        .iter()
        .map(|s| tokenized(s))
        .collect();
    let pseudo = read_lines(&a.pseudo_i(), stage)?;
    if pseudo.len() != sources.len() || translations.len() != sources.len() {
        return Err(PipelineError::stage(
            stage,
            format!(
                "line counts differ: {} sources, {} translations, {} Pseudo-I",
                sources.len(),
                translations.len(),
                pseudo.len()
            ),
        ));
    }
    let sources_path = a.path("simulate/sources.txt");
    write_lines(&sources_path, &sources, stage)?;
    rec.output(&sources_path)?;
    for (system, targets) in SYSTEMS.into_iter().zip([&translations, &pseudo]) {
        let generator = TableGenerator::from_pairs(system, sources.iter().zip(targets.iter()));
        let sims = simulate_corpus(&sources, &config.waitk, &generator).at(stage)?;
        let hyps: Vec<String> = sims.iter().map(Simulation::text).collect();
        write_lines(&a.hypotheses(system), &hyps, stage)?;
        write_jsonl(&a.simulations(system), &sims, stage)?;
        rec.output(&a.hypotheses(system))?;
        rec.output(&a.simulations(system))?;
    }
    Ok(())
}

/// Scores of every simulated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub systems: Vec<EvalReport>,
}

fn score(config: &PipelineConfig, a: &Artifacts, rec: &mut Recorder) -> Result<(), PipelineError> {
    let stage = Stage::Score;
    let t_path = a.path("align/test.translation.txt");
    let i_path = a.path("align/test.interpretation.txt");
    rec.input(&t_path)?;
    rec.input(&i_path)?;
    let refs_t = read_lines(&t_path, stage)?;
    let refs_i = read_lines(&i_path, stage)?;
    let mut systems = Vec::new();
    for system in SYSTEMS {
        rec.input(&a.simulations(system))?;
        let sims: Vec<Simulation> = read_jsonl(&a.simulations(system), stage)?;
        let report = score_simulations(
            system,
            config.waitk.k,
            &sims,
            &refs_t,
            &refs_i,
            &config.bleu,
        )
        .at(stage)?;
        log::info!(
            "{system}: BLEU translation {:.2}, interpretation {:.2}, AP {:.3}, AL {:.3}",
            report.bleu_translation,
            report.bleu_interpretation,
            report.latency.ap,
            report.latency.al
        );
        systems.push(report);
    }
    let out = a.path("score/report.json");
    write_json(&out, &ScoreReport { systems }, stage)?;
    rec.output(&out)
}

fn ngram(config: &PipelineConfig, a: &Artifacts, rec: &mut Recorder) -> Result<(), PipelineError> {
    let stage = Stage::NgramReport;
    let gold_path = a.path("align/test.interpretation.txt");
    rec.input(&gold_path)?;
    let gold: Vec<String> = read_lines(&gold_path, stage)?
        .iter()
        .map(|s| tokenized(s))
        .collect();
    rec.input(&a.hypotheses(SYSTEMS[0]))?;
    let baseline = read_lines(&a.hypotheses(SYSTEMS[0]), stage)?;
    let mut systems = Vec::new();
    for system in &SYSTEMS[1..] {
        rec.input(&a.hypotheses(system))?;
        systems.push((
            system.to_string(),
            read_lines(&a.hypotheses(system), stage)?,
        ));
    }
    let reports = ngram_report(&gold, &baseline, &systems, config.ngram_max_n).at(stage)?;
    let figure = FigureTable::from_reports(&reports);
    let outputs = [
        a.path("ngram/report.json"),
        a.path("ngram/figure.csv"),
        a.path("ngram/table.txt"),
    ];
    write_json(&outputs[0], &reports, stage)?;
    fs::write(&outputs[1], figure.to_csv()).at(stage)?;
    fs::write(&outputs[2], figure.render()).at(stage)?;
    for p in &outputs {
        rec.output(p)?;
    }
    Ok(())
}

/// Opens the review store under `<out>/review`, seeding it from the
/// cleaned dialogues and their alignments on first use.
pub fn open_review_store(config: &PipelineConfig) -> Result<ReviewStore, PipelineError> {
    let a = Artifacts::new(config);
    let dir = a.review_dir();
    if dir.exists() {
        return ReviewStore::open(&dir)
            .map_err(|e| PipelineError::Config(format!("review store: {e}")));
    }
    let stage = Stage::Align;
    for path in [a.clean_dialogues(), a.alignments()] {
        if !path.is_file() {
            return Err(PipelineError::MissingArtifact { stage, path });
        }
    }
    let dialogues = read_corpus(a.clean_dialogues(), ReadMode::Strict).at(stage)?;
    let alignments: Vec<DialogueAlignment> = read_jsonl(&a.alignments(), stage)?;
    ReviewStore::from_alignments(&dialogues, &alignments)
        .persist_to(dir)
        .map_err(|e| PipelineError::Config(format!("review store: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i:02}")).collect()
    }

    #[test]
    fn split_is_seeded_and_disjoint() {
        let all = ids(20);
        let a = split_train_test(&all, 0.2, 13);
        assert_eq!(a, split_train_test(&all, 0.2, 13));
        assert_eq!(a.test.len(), 4);
        assert_eq!(a.train.len(), 16);
        assert!(a.test.iter().all(|t| !a.train.contains(t)));
        assert_ne!(a.test, split_train_test(&all, 0.2, 14).test);
    }

    #[test]
    fn split_keeps_both_sides_nonempty() {
        let s = split_train_test(&ids(2), 0.9, 1);
        assert_eq!((s.train.len(), s.test.len()), (1, 1));
        let s = split_train_test(&ids(5), 0.01, 1);
        assert_eq!(s.test.len(), 1);
    }
}
