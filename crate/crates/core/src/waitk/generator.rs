use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::sha256_hex;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("no mapping for source sentence {0}")]
    Unmapped(String),
    #[error("generator protocol error: {0}")]
    Protocol(String),
    #[error("generator io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid generator spec {0:?}")]
    Spec(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Token(String),
    End,
}

/// One decoding step as seen by the generator.
#[derive(Debug, Clone, Copy)]
pub struct StepRequest<'a> {
    /// Opaque identifier of the sentence being decoded; see [`sentence_key`].
    pub sentence_key: &'a str,
    pub source_prefix: &'a [String],
    pub target_prefix: &'a [String],
}

/// A model that extends a target prefix given a source prefix.
///
/// Generators are shared across simulation workers, so they must be
/// `Sync`; implementations with mutable state serialize access internally.
pub trait IncrementalGenerator: Send + Sync {
    fn id(&self) -> &str;

    fn next_token(&self, request: &StepRequest<'_>) -> Result<Step, GeneratorError>;
}

/// Key identifying a source sentence without revealing its tokens.
pub fn sentence_key(tokens: &[String]) -> String {
    sha256_hex(tokens.join(" ").as_bytes())
}

/// Copies the source: target token `t` is source token `t`.
#[derive(Debug, Clone, Default)]
pub struct EchoGenerator;

impl IncrementalGenerator for EchoGenerator {
    fn id(&self) -> &str {
        "echo"
    }

    fn next_token(&self, request: &StepRequest<'_>) -> Result<Step, GeneratorError> {
        Ok(request
            .source_prefix
            .get(request.target_prefix.len())
            .map_or(Step::End, |t| Step::Token(t.clone())))
    }
}

/// Emits a fixed target per source sentence, whatever the prefixes.
#[derive(Debug, Clone)]
pub struct TableGenerator {
    id: String,
    table: HashMap<String, Vec<String>>,
}

impl TableGenerator {
    /// Builds the table from `(source, target)` texts, both split on
    /// whitespace.
    pub fn from_pairs<I, S, T>(id: impl Into<String>, pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let table = pairs
            .into_iter()
            .map(|(s, t)| {
                let src: Vec<String> = s.as_ref().split_whitespace().map(String::from).collect();
                let tgt = t.as_ref().split_whitespace().map(String::from).collect();
                (sentence_key(&src), tgt)
            })
            .collect();
        TableGenerator {
            id: id.into(),
            table,
        }
    }

    /// Reads `source<TAB>target` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeneratorError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (s, t) = line.split_once('\t').ok_or_else(|| {
                GeneratorError::Protocol(format!(
                    "{}:{}: expected source<TAB>target",
                    path.display(),
                    i + 1
                ))
            })?;
            pairs.push((s.to_string(), t.to_string()));
        }
        Ok(TableGenerator::from_pairs(
            format!("table:{}", path.display()),
            pairs,
        ))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl IncrementalGenerator for TableGenerator {
    fn id(&self) -> &str {
        &self.id
    }

    fn next_token(&self, request: &StepRequest<'_>) -> Result<Step, GeneratorError> {
        let target = self
            .table
            .get(request.sentence_key)
            .ok_or_else(|| GeneratorError::Unmapped(request.sentence_key.to_string()))?;
        Ok(target
            .get(request.target_prefix.len())
            .map_or(Step::End, |t| Step::Token(t.clone())))
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    source_prefix: &'a [String],
    target_prefix: &'a [String],
}

#[derive(Deserialize)]
struct WireResponse {
    token: Option<String>,
    #[serde(default)]
    end: bool,
}

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// Talks to an external model over stdin/stdout, one JSON object per line.
///
/// Each request is `{"source_prefix": [..], "target_prefix": [..]}` and the
/// reply is `{"token": ".."}` or `{"end": true}`. Calls are serialized.
pub struct ProcessGenerator {
    id: String,
    pipe: Mutex<Pipe>,
}

impl ProcessGenerator {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, GeneratorError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ProcessGenerator {
            id: format!("process:{program}"),
            pipe: Mutex::new(Pipe {
                child,
                stdin,
                stdout,
            }),
        })
    }
}

impl IncrementalGenerator for ProcessGenerator {
    fn id(&self) -> &str {
        &self.id
    }

    fn next_token(&self, request: &StepRequest<'_>) -> Result<Step, GeneratorError> {
        let mut pipe = self
            .pipe
            .lock()
            .map_err(|_| GeneratorError::Protocol("poisoned".into()))?;
        let mut line = serde_json::to_string(&WireRequest {
            source_prefix: request.source_prefix,
            target_prefix: request.target_prefix,
        })
        .map_err(|e| GeneratorError::Protocol(e.to_string()))?;
        line.push('\n');
        pipe.stdin.write_all(line.as_bytes())?;
        pipe.stdin.flush()?;
        let mut reply = String::new();
        if pipe.stdout.read_line(&mut reply)? == 0 {
            return Err(GeneratorError::Protocol(
                "generator closed its output".into(),
            ));
        }
        let response: WireResponse = serde_json::from_str(reply.trim())
            .map_err(|e| GeneratorError::Protocol(format!("{e}: {}", reply.trim())))?;
        match (response.token, response.end) {
            (_, true) => Ok(Step::End),
            (Some(token), false) if !token.is_empty() => Ok(Step::Token(token)),
            _ => Err(GeneratorError::Protocol(format!(
                "bad reply {}",
                reply.trim()
            ))),
        }
    }
}

impl Drop for ProcessGenerator {
    fn drop(&mut self) {
        if let Ok(pipe) = self.pipe.get_mut() {
            let _ = pipe.child.kill();
            let _ = pipe.child.wait();
        }
    }
}

/// Builds a generator from a spec: `echo`, `table:<map.tsv>` or
/// `process:<program> [args..]`.
pub fn generator_from_spec(spec: &str) -> Result<Box<dyn IncrementalGenerator>, GeneratorError> {
    if spec == "echo" {
        return Ok(Box::new(EchoGenerator));
    }
    if let Some(path) = spec.strip_prefix("table:") {
        return Ok(Box::new(TableGenerator::load(path)?));
    }
    if let Some(command) = spec.strip_prefix("process:") {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| GeneratorError::Spec(spec.into()))?;
        let args: Vec<String> = parts.map(String::from).collect();
        return Ok(Box::new(ProcessGenerator::spawn(program, &args)?));
    }
    Err(GeneratorError::Spec(spec.into()))
}
