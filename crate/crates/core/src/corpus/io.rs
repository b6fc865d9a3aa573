use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use super::tokenize::normalize;
use super::{AlignedTriple, Dialogue};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing field {field} at line {line}")]
    MissingField { field: &'static str, line: usize },
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("duplicate id {id} at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl CorpusError {
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::MissingField { line, .. }
            | CorpusError::Malformed { line, .. }
            | CorpusError::DuplicateId { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// Strict reads abort on the first bad line; lenient reads log and skip it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadMode {
    #[default]
    Strict,
    Lenient,
}

const DIALOGUE_FIELDS: [&str; 5] = [
    "id",
    "source_units",
    "translation_units",
    "transcript_utterances",
    "meta",
];

fn malformed(line: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::Malformed {
        line,
        reason: reason.into(),
    }
}

fn parse_object(raw: &str, line: usize) -> Result<Map<String, Value>, CorpusError> {
    match serde_json::from_str::<Value>(raw) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(malformed(line, "record is not an object")),
        Err(e) => Err(malformed(line, e.to_string())),
    }
}

fn take<'a>(
    map: &'a Map<String, Value>,
    field: &'static str,
    line: usize,
) -> Result<&'a Value, CorpusError> {
    map.get(field)
        .ok_or(CorpusError::MissingField { field, line })
}

fn text_list(value: &Value, field: &str, line: usize) -> Result<Vec<String>, CorpusError> {
    let items = value
        .as_array()
        .ok_or_else(|| malformed(line, format!("{field} must be an array")))?;
    items
        .iter()
        .map(|item| {
            let text = item
                .as_str()
                .ok_or_else(|| malformed(line, format!("{field} must contain strings")))?;
            if text.contains(['\n', '\r']) {
                return Err(malformed(line, format!("{field} entry contains a newline")));
            }
            Ok(normalize(text))
        })
        .collect()
}

fn parse_dialogue(raw: &str, line: usize) -> Result<Dialogue, CorpusError> {
    let map = parse_object(raw, line)?;
    let id = take(&map, "id", line)?
        .as_str()
        .ok_or_else(|| malformed(line, "id must be a string"))?;
    if id.is_empty() {
        return Err(malformed(line, "id is empty"));
    }
    let source_units = text_list(take(&map, "source_units", line)?, "source_units", line)?;
    let translation_units = text_list(
        take(&map, "translation_units", line)?,
        "translation_units",
        line,
    )?;
    let transcript_utterances = text_list(
        take(&map, "transcript_utterances", line)?,
        "transcript_utterances",
        line,
    )?;

    let mut meta = BTreeMap::new();
    // unknown top-level fields first so explicit meta entries win
    for (key, value) in &map {
        if !DIALOGUE_FIELDS.contains(&key.as_str()) {
            meta.insert(key.clone(), value_to_string(value));
        }
    }
    match map.get("meta") {
        None | Some(Value::Null) => {}
        Some(Value::Object(entries)) => {
            for (key, value) in entries {
                meta.insert(key.clone(), value_to_string(value));
            }
        }
        Some(_) => return Err(malformed(line, "meta must be an object")),
    }

    Ok(Dialogue {
        id: normalize(id),
        source_units,
        translation_units,
        transcript_utterances,
        meta,
    })
}

fn value_to_string(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

const TRIPLE_FIELDS: [&str; 9] = [
    "dialogue_id",
    "index",
    "source",
    "translation",
    "interpretation",
    "span",
    "score",
    "provenance",
    "corrected",
];

fn parse_triple(raw: &str, line: usize) -> Result<AlignedTriple, CorpusError> {
    let map = parse_object(raw, line)?;
    for field in TRIPLE_FIELDS {
        take(&map, field, line)?;
    }
    let mut triple: AlignedTriple =
        serde_json::from_value(Value::Object(map)).map_err(|e| malformed(line, e.to_string()))?;
    if triple.span.is_empty() {
        return Err(malformed(line, format!("empty span {}", triple.span)));
    }
    for text in [
        &mut triple.source,
        &mut triple.translation,
        &mut triple.interpretation,
    ] {
        if text.contains(['\n', '\r']) {
            return Err(malformed(line, "text contains a newline"));
        }
        *text = normalize(text);
    }
    Ok(triple)
}

fn read_lines<T, R, P>(reader: R, mode: ReadMode, mut parse: P) -> Result<Vec<T>, CorpusError>
where
    R: BufRead,
    P: FnMut(&str, usize) -> Result<T, CorpusError>,
{
    let mut records = Vec::new();
    for (idx, raw) in reader.lines().enumerate() {
        let line = idx + 1;
        let raw = raw?;
        if raw.trim().is_empty() {
            continue;
        }
        match parse(&raw, line) {
            Ok(record) => records.push(record),
            Err(err) if mode == ReadMode::Lenient => log::warn!("skipping record: {err}"),
            Err(err) => return Err(err),
        }
    }
    Ok(records)
}

pub fn read_corpus_from<R: BufRead>(
    reader: R,
    mode: ReadMode,
) -> Result<Vec<Dialogue>, CorpusError> {
    let mut seen = HashSet::new();
    read_lines(reader, mode, |raw, line| {
        let dialogue = parse_dialogue(raw, line)?;
        if !seen.insert(dialogue.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: dialogue.id,
                line,
            });
        }
        Ok(dialogue)
    })
}

pub fn read_corpus(path: impl AsRef<Path>, mode: ReadMode) -> Result<Vec<Dialogue>, CorpusError> {
    read_corpus_from(BufReader::new(File::open(path)?), mode)
}

pub fn write_corpus_to<W: Write>(mut writer: W, dialogues: &[Dialogue]) -> Result<(), CorpusError> {
    for dialogue in dialogues {
        serde_json::to_writer(&mut writer, dialogue)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_corpus(path: impl AsRef<Path>, dialogues: &[Dialogue]) -> Result<(), CorpusError> {
    write_corpus_to(BufWriter::new(File::create(path)?), dialogues)
}

pub fn read_triples_from<R: BufRead>(
    reader: R,
    mode: ReadMode,
) -> Result<Vec<AlignedTriple>, CorpusError> {
    read_lines(reader, mode, parse_triple)
}

pub fn read_triples(
    path: impl AsRef<Path>,
    mode: ReadMode,
) -> Result<Vec<AlignedTriple>, CorpusError> {
    read_triples_from(BufReader::new(File::open(path)?), mode)
}

pub fn write_triples_to<W: Write>(
    mut writer: W,
    triples: &[AlignedTriple],
) -> Result<(), CorpusError> {
    for triple in triples {
        serde_json::to_writer(&mut writer, triple)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_triples(path: impl AsRef<Path>, triples: &[AlignedTriple]) -> Result<(), CorpusError> {
    write_triples_to(BufWriter::new(File::create(path)?), triples)
}
