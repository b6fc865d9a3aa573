use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::decoder::{decode, DecoderConfig};
use super::lm::{train_lm, LmSmoothing, NGramLM};
use super::model1::{train_model1, viterbi_align};
use super::phrases::PhraseTable;
use super::provider::{round_trip, MtClient};
use super::symmetrize::{symmetrize, Symmetrization};
use super::{CorpusLabel, Labeled, Link, T2iError};
use crate::corpus::{tokenize, AlignedTriple};

pub const PHRASE_TABLE_FILE: &str = "phrase-table.tsv";
pub const LM_FILE: &str = "lm.arpa";
pub const DECODER_FILE: &str = "decoder.json";

pub const MODEL_FILES: [&str; 3] = [PHRASE_TABLE_FILE, LM_FILE, DECODER_FILE];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    Supervised,
    Unsupervised,
}

impl std::str::FromStr for PairMode {
    type Err = T2iError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "supervised" => Ok(PairMode::Supervised),
            "unsupervised" => Ok(PairMode::Unsupervised),
            other => Err(T2iError::Config(format!("unknown pair mode {other:?}"))),
        }
    }
}

pub enum T2iInputs<'a> {
    /// Aligned triples labelled `Clean`.
    Clean(&'a Labeled<AlignedTriple>),
    /// Interpretations labelled `Raw`, round-tripped through `client`.
    Raw {
        interpretations: &'a Labeled<String>,
        client: &'a MtClient,
        lang: &'a str,
        pivot: &'a str,
    },
}

/// Builds `(translation-style, interpretation-style)` training pairs.
///
/// Lines whose round trip failed are left out of the unsupervised pairs.
pub fn build_t2i_pairs(
    mode: PairMode,
    inputs: T2iInputs<'_>,
) -> Result<Vec<(String, String)>, T2iError> {
    let pairs: Vec<(String, String)> = match (mode, inputs) {
        (PairMode::Supervised, T2iInputs::Clean(clean)) => clean
            .expect(CorpusLabel::Clean)?
            .iter()
            .map(|t| (t.translation.clone(), t.interpretation.clone()))
            .collect(),
        (
            PairMode::Unsupervised,
            T2iInputs::Raw {
                interpretations,
                client,
                lang,
                pivot,
            },
        ) => {
            let interps = interpretations.expect(CorpusLabel::Raw)?;
            let rt = round_trip(interps, client, lang, pivot)?;
            for (i, e) in &rt.errors {
                log::warn!("round trip failed for line {}: {e}", i + 1);
            }
            let fb = rt.texts.expect(CorpusLabel::TranslationFB)?;
            fb.iter()
                .zip(interps)
                .filter_map(|(f, i)| f.as_ref().map(|f| (f.clone(), i.clone())))
                .collect()
        }
        (PairMode::Supervised, _) => {
            return Err(T2iError::Config(
                "supervised pairs need Clean triples".into(),
            ))
        }
        (PairMode::Unsupervised, _) => {
            return Err(T2iError::Config(
                "unsupervised pairs need Raw interpretations and a translation provider".into(),
            ))
        }
    };
    if pairs.is_empty() {
        return Err(T2iError::EmptyInput("no training pairs".into()));
    }
    log::info!("built {} {:?} training pairs", pairs.len(), mode);
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub order: usize,
    pub max_phrase_len: usize,
    pub symmetrization: Symmetrization,
    pub decoder: DecoderConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 10,
            order: 3,
            max_phrase_len: 5,
            symmetrization: Symmetrization::GrowDiag,
            decoder: DecoderConfig::default(),
        }
    }
}

/// Everything needed to rewrite text: phrase table, language model and
/// decoder settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub phrase_table: PhraseTable,
    pub lm: NGramLM,
    pub decoder: DecoderConfig,
}

fn tokens(text: &str) -> Vec<String> {
    tokenize(text, false).tokens
}

/// Trains a rewriter from `(src, tgt)` pairs.
pub fn train_t2i(
    pairs: &[(String, String)],
    config: &TrainConfig,
) -> Result<ModelBundle, T2iError> {
    if pairs.is_empty() {
        return Err(T2iError::EmptyInput("no training pairs".into()));
    }
    if config.max_phrase_len == 0 {
        return Err(T2iError::Config("max_phrase_len must be at least 1".into()));
    }
    config.decoder.validate()?;
    let tokenized: Vec<(Vec<String>, Vec<String>)> =
        pairs.iter().map(|(s, t)| (tokens(s), tokens(t))).collect();
    let reversed: Vec<(Vec<String>, Vec<String>)> = tokenized
        .iter()
        .map(|(s, t)| (t.clone(), s.clone()))
        .collect();

    // reverse links come back as (tgt, src)
    let forward = train_model1(&tokenized, config.iterations)?;
    let reverse = train_model1(&reversed, config.iterations)?;
    let aligned: Vec<(Vec<String>, Vec<String>, Vec<Link>)> = tokenized
        .par_iter()
        .map(|(s, t)| {
            let fwd = viterbi_align(s, t, &forward.table);
            let rev: Vec<Link> = viterbi_align(t, s, &reverse.table)
                .into_iter()
                .map(|(j, i)| (i, j))
                .collect();
            let links = symmetrize(&fwd, &rev, config.symmetrization);
            (s.clone(), t.clone(), links)
        })
        .collect();
    let phrase_table = PhraseTable::from_aligned(&aligned, config.max_phrase_len);
    let targets: Vec<Vec<String>> = tokenized.into_iter().map(|(_, t)| t).collect();
    let lm = train_lm(&targets, config.order, LmSmoothing::WittenBell)?;
    log::info!(
        "trained rewriter: {} phrase pairs, {}-gram model",
        phrase_table.len(),
        lm.order
    );
    Ok(ModelBundle {
        phrase_table,
        lm,
        decoder: config.decoder,
    })
}

impl ModelBundle {
    /// A bundle that copies every word through unchanged.
    pub fn identity<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words.into_iter().map(|w| w.as_ref().to_string()).collect();
        ModelBundle {
            phrase_table: PhraseTable::identity(words.iter().cloned()),
            lm: NGramLM::uniform(words),
            decoder: DecoderConfig::default(),
        }
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<String, T2iError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(PHRASE_TABLE_FILE), self.phrase_table.to_tsv())?;
        fs::write(dir.join(LM_FILE), self.lm.to_arpa())?;
        let decoder = serde_json::to_string_pretty(&self.decoder)
            .map_err(|e| T2iError::Format(e.to_string()))?;
        fs::write(dir.join(DECODER_FILE), decoder + "\n")?;
        model_hash(dir)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, T2iError> {
        let dir = dir.as_ref();
        let paths = component_paths(dir)?;
        let decoder: DecoderConfig = serde_json::from_str(&fs::read_to_string(&paths[2])?)
            .map_err(|e| T2iError::Format(format!("{DECODER_FILE}: {e}")))?;
        decoder.validate()?;
        Ok(ModelBundle {
            phrase_table: PhraseTable::load(&paths[0])?,
            lm: NGramLM::load(&paths[1])?,
            decoder,
        })
    }

    pub fn rewrite(&self, line: &str) -> Result<String, T2iError> {
        Ok(decode(&tokens(line), &self.phrase_table, &self.lm, &self.decoder)?.join(" "))
    }
}

fn component_paths(dir: &Path) -> Result<Vec<PathBuf>, T2iError> {
    MODEL_FILES
        .iter()
        .map(|name| {
            let path = dir.join(name);
            if path.is_file() {
                Ok(path)
            } else {
                Err(T2iError::MissingComponent(name.to_string()))
            }
        })
        .collect()
}

/// SHA-256 over the bundle files, each prefixed by its name.
pub fn model_hash(dir: impl AsRef<Path>) -> Result<String, T2iError> {
    let mut hasher = Sha256::new();
    for (name, path) in MODEL_FILES.iter().zip(component_paths(dir.as_ref())?) {
        let bytes = fs::read(path)?;
        hasher.update(name.as_bytes());
        hasher.update([0]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Rewrites every line; output line `i` comes from input line `i`.
pub fn apply_t2i(
    translations: &[String],
    bundle: &ModelBundle,
) -> Result<Labeled<String>, T2iError> {
    let out = translations
        .par_iter()
        .map(|line| bundle.rewrite(line))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Labeled::new(CorpusLabel::PseudoI, out))
}

/// Sidecar written next to a Pseudo-I corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplyManifest {
    pub label: CorpusLabel,
    pub model_hash: String,
    pub decoder: DecoderConfig,
    pub input_sha256: String,
    pub output_sha256: String,
    pub lines: usize,
}

impl ApplyManifest {
    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}

/// File-level `apply_t2i`: reads one sentence per line, writes the Pseudo-I
/// corpus and its manifest sidecar.
pub fn apply_t2i_files(
    model_dir: impl AsRef<Path>,
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
) -> Result<ApplyManifest, T2iError> {
    let model_dir = model_dir.as_ref();
    let bundle = ModelBundle::load(model_dir)?;
    let hash = model_hash(model_dir)?;
    let text = fs::read_to_string(input.as_ref())?;
    let lines: Vec<String> = text.lines().map(String::from).collect();
    let pseudo = apply_t2i(&lines, &bundle)?;
    let mut body = pseudo.items.join("\n");
    if !pseudo.items.is_empty() {
        body.push('\n');
    }
    let output = output.as_ref();
    if let Some(parent) = output.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(output, &body)?;
    let manifest = ApplyManifest {
        label: pseudo.label,
        model_hash: hash,
        decoder: bundle.decoder,
        input_sha256: crate::cache::sha256_hex(text.as_bytes()),
        output_sha256: crate::cache::sha256_hex(body.as_bytes()),
        lines: pseudo.items.len(),
    };
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| T2iError::Format(e.to_string()))?;
    fs::write(ApplyManifest::sidecar_path(output), json + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Provenance, Span};
    use crate::t2i::phrases::PhraseEntry;
    use crate::t2i::MtTransport;
    use std::collections::BTreeMap;

    fn triple(i: usize, translation: &str, interpretation: &str) -> AlignedTriple {
        AlignedTriple {
            dialogue_id: "d".into(),
            index: i,
            source: format!("quelle {i}"),
            translation: translation.into(),
            interpretation: interpretation.into(),
            span: Span::new(i, i + 1),
            score: 0.5,
            provenance: Provenance::Auto,
            corrected: false,
        }
    }

    fn clean_fixture() -> Labeled<AlignedTriple> {
        let rows = [
            (
                "the committee must prepare its programme",
                "the committee has to draw up the program",
            ),
            (
                "we must prepare its programme now",
                "we have to draw up the program now",
            ),
            (
                "I would urge you to endorse this",
                "I would ask you to agree with that",
            ),
            ("the vote takes place tomorrow", "we vote tomorrow"),
            ("thank you very much", "thank you"),
        ];
        Labeled::new(
            CorpusLabel::Clean,
            rows.iter()
                .enumerate()
                .map(|(i, (t, s))| triple(i, t, s))
                .collect(),
        )
    }

    struct Echo;

    impl MtTransport for Echo {
        fn translate(&self, texts: &[String], _: &str, _: &str) -> Result<Vec<String>, String> {
            Ok(texts.to_vec())
        }
    }

    #[test]
    fn supervised_pairs_take_translation_as_source() {
        let clean = clean_fixture();
        let pairs = build_t2i_pairs(PairMode::Supervised, T2iInputs::Clean(&clean)).unwrap();
        assert_eq!(pairs.len(), 5);
        for (p, t) in pairs.iter().zip(&clean.items) {
            assert_eq!(p.0, t.translation);
            assert_eq!(p.1, t.interpretation);
        }
    }

    #[test]
    fn unsupervised_identity_round_trip() {
        let raw = Labeled::new(
            CorpusLabel::Raw,
            vec!["we vote now".to_string(), "thank you".to_string()],
        );
        let client = MtClient::new("echo", Box::new(Echo));
        let pairs = build_t2i_pairs(
            PairMode::Unsupervised,
            T2iInputs::Raw {
                interpretations: &raw,
                client: &client,
                lang: "en",
                pivot: "de",
            },
        )
        .unwrap();
        assert_eq!(
            pairs,
            raw.items
                .iter()
                .map(|i| (i.clone(), i.clone()))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn labels_are_enforced() {
        let mut clean = clean_fixture();
        clean.label = CorpusLabel::Raw;
        let err = build_t2i_pairs(PairMode::Supervised, T2iInputs::Clean(&clean)).unwrap_err();
        assert!(matches!(err, T2iError::WrongLabel { .. }));
        let empty = Labeled::new(CorpusLabel::Clean, Vec::new());
        assert!(matches!(
            build_t2i_pairs(PairMode::Supervised, T2iInputs::Clean(&empty)),
            Err(T2iError::EmptyInput(_))
        ));
    }

    #[test]
    fn identity_bundle_copies_input() {
        let lines = vec![
            "the vote takes place tomorrow .".to_string(),
            "thank you , madam president .".to_string(),
        ];
        let bundle = ModelBundle::identity(lines.iter().flat_map(|l| l.split(' ')));
        let out = apply_t2i(&lines, &bundle).unwrap();
        assert_eq!(out.label, CorpusLabel::PseudoI);
        assert_eq!(out.items, lines);
    }

    fn programme_bundle() -> ModelBundle {
        let mut counts = BTreeMap::new();
        let words = "the council must prepare its programme".split(' ');
        for w in words {
            counts.insert((vec![w.to_string()], vec![w.to_string()]), 1);
        }
        let p = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        counts.insert((p("prepare its programme"), p("draw up the program")), 9);
        counts.insert((p("prepare its programme"), p("prepare its programme")), 1);
        let lm = train_lm(
            &[
                p("the council must draw up the program"),
                p("we draw up the program"),
            ],
            3,
            LmSmoothing::WittenBell,
        )
        .unwrap();
        ModelBundle {
            phrase_table: PhraseTable::from_counts(counts, 5),
            lm,
            decoder: DecoderConfig::default(),
        }
    }

    #[test]
    fn dominant_phrase_entry_rewrites() {
        let bundle = programme_bundle();
        let entries: &[PhraseEntry] = bundle.phrase_table.lookup(
            &"prepare its programme"
                .split(' ')
                .map(String::from)
                .collect::<Vec<_>>(),
        );
        assert_eq!(entries.len(), 2);
        let out = bundle
            .rewrite("the council must prepare its programme")
            .unwrap();
        assert_eq!(out, "the council must draw up the program");
    }

    #[test]
    fn trained_bundle_round_trips_through_disk() {
        let clean = clean_fixture();
        let pairs = build_t2i_pairs(PairMode::Supervised, T2iInputs::Clean(&clean)).unwrap();
        let bundle = train_t2i(&pairs, &TrainConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let hash = bundle.save(dir.path()).unwrap();
        let loaded = ModelBundle::load(dir.path()).unwrap();
        assert_eq!(loaded.phrase_table, bundle.phrase_table);
        assert_eq!(loaded.decoder, bundle.decoder);
        let line = "we must prepare its programme now";
        assert_eq!(loaded.rewrite(line).unwrap(), bundle.rewrite(line).unwrap());
        assert_eq!(model_hash(dir.path()).unwrap(), hash);
    }

    #[test]
    fn missing_component_is_named() {
        let dir = tempfile::tempdir().unwrap();
        programme_bundle().save(dir.path()).unwrap();
        fs::remove_file(dir.path().join(LM_FILE)).unwrap();
        let err = ModelBundle::load(dir.path()).unwrap_err();
        assert!(err.to_string().contains(LM_FILE), "{err}");
    }

    #[test]
    fn hash_tracks_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let base = programme_bundle().save(dir.path()).unwrap();
        assert_eq!(model_hash(dir.path()).unwrap(), base);
        for name in MODEL_FILES {
            let path = dir.path().join(name);
            let original = fs::read(&path).unwrap();
            let mut edited = original.clone();
            edited.extend_from_slice(b"\n");
            fs::write(&path, &edited).unwrap();
            assert_ne!(model_hash(dir.path()).unwrap(), base, "{name}");
            fs::write(&path, &original).unwrap();
            assert_eq!(model_hash(dir.path()).unwrap(), base);
        }
    }

    #[test]
    fn file_apply_writes_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let model = dir.path().join("model");
        let hash = programme_bundle().save(&model).unwrap();
        let input = dir.path().join("translations.txt");
        fs::write(
            &input,
            "the council must prepare its programme\nthe council\n",
        )
        .unwrap();
        let output = dir.path().join("pseudo_i.txt");
        let manifest = apply_t2i_files(&model, &input, &output).unwrap();
        assert_eq!(manifest.model_hash, hash);
        assert_eq!(manifest.lines, 2);
        assert_eq!(manifest.label, CorpusLabel::PseudoI);
        let written = fs::read_to_string(&output).unwrap();
        assert_eq!(
            written,
            "the council must draw up the program\nthe council\n"
        );
        assert!(ApplyManifest::sidecar_path(&output).is_file());
    }
}
