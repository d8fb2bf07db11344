//! External model adapters speaking line-delimited JSON.
//!
//! One request object per record, one response object back:
//!
//! ```text
//! detector:    {"x": [tok…]}                              -> {"labels": ["A"|"M"|"F"|"N"…]}
//! transformer: {"xM": [tok…], "xF": [tok…], "yB": [tok…]} -> {"yM": [tok…], "yF": [tok…]}
//! aligner:     {"x": [tok…], "yA": [tok…]}                -> {"aligned": [0|1…]}
//! ```
//!
//! Transformer requests carry `"promptM"`/`"promptF"` when a prompt
//! configuration is attached. The aligner is called once per structure with
//! the structure wrapped in `|` tokens.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::prompt::{build_editor_prompt, EditorAdapterConfig};
use super::{Aligner, Detector, PipelineError, SourceLabel, Transformer};
use crate::align::{aligner_requests, entity_from_tags, AlignerResponse};
use crate::bitext::TaggedSource;
use crate::corpus::AnnotatedSource;
use crate::derive::AlignmentMap;
use crate::structure::{Gender, PlainTranslation, StructuredTranslation};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("adapter I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("adapter closed its output")]
    Closed,
    #[error("adapter returned malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("adapter failed: {0}")]
    Remote(String),
}

/// Sends one JSON request and returns the JSON response.
pub trait Transport: Send + Sync {
    fn call(&self, request: &Value) -> Result<Value, TransportError>;
}

impl<F> Transport for F
where
    F: Fn(&Value) -> Result<Value, TransportError> + Send + Sync,
{
    fn call(&self, request: &Value) -> Result<Value, TransportError> {
        self(request)
    }
}

impl Transport for Box<dyn Transport> {
    fn call(&self, request: &Value) -> Result<Value, TransportError> {
        (**self).call(request)
    }
}

struct Pipe {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A long-running child process reading requests on stdin and writing one
/// response line per request on stdout. Calls are serialized.
pub struct SubprocessTransport {
    child: Child,
    pipe: Mutex<Pipe>,
}

impl SubprocessTransport {
    /// Spawns `program` with `args`.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, TransportError> {
        let mut child = Command::new(program).args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn()?;
        let stdin = child.stdin.take().ok_or(TransportError::Closed)?;
        let stdout = BufReader::new(child.stdout.take().ok_or(TransportError::Closed)?);
        Ok(Self { child, pipe: Mutex::new(Pipe { stdin, stdout }) })
    }

    /// Spawns a whitespace-separated command line.
    pub fn spawn_command_line(command: &str) -> Result<Self, TransportError> {
        let mut parts = command.split_whitespace();
        let program = parts.next().ok_or_else(|| TransportError::Remote("empty adapter command".into()))?;
        let args: Vec<String> = parts.map(str::to_owned).collect();
        Self::spawn(program, &args)
    }
}

impl Transport for SubprocessTransport {
    fn call(&self, request: &Value) -> Result<Value, TransportError> {
        let mut pipe = self.pipe.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        serde_json::to_writer(&mut pipe.stdin, request)?;
        pipe.stdin.write_all(b"\n")?;
        pipe.stdin.flush()?;
        let mut line = String::new();
        if pipe.stdout.read_line(&mut line)? == 0 {
            return Err(TransportError::Closed);
        }
        Ok(serde_json::from_str(&line)?)
    }
}

impl Drop for SubprocessTransport {
    fn drop(&mut self) {
        // the adapter may be blocked reading stdin; do not wait for it to notice EOF
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn exchange<Q: Serialize, R: DeserializeOwned>(transport: &dyn Transport, request: &Q) -> Result<R, TransportError> {
    let response = transport.call(&serde_json::to_value(request)?)?;
    if let Some(err) = response.get("error").and_then(Value::as_str) {
        return Err(TransportError::Remote(err.to_owned()));
    }
    Ok(serde_json::from_value(response)?)
}

// ---------------------------------------------------------------------------

pub struct AdapterDetector<T> {
    pub transport: T,
}

#[derive(Serialize)]
struct DetectRequest<'a> {
    x: &'a [String],
}

#[derive(Deserialize)]
struct DetectResponse {
    labels: Vec<SourceLabel>,
}

impl<T: Transport> Detector for AdapterDetector<T> {
    fn annotate(&self, tokens: &[String]) -> Result<Vec<SourceLabel>, PipelineError> {
        let response: DetectResponse = exchange(&self.transport, &DetectRequest { x: tokens })?;
        Ok(response.labels)
    }
}

pub struct AdapterTransformer<T> {
    pub transport: T,
    pub prompt: Option<EditorAdapterConfig>,
}

#[derive(Serialize)]
struct TransformRequest<'a> {
    #[serde(rename = "xM")]
    x_m: &'a [String],
    #[serde(rename = "xF")]
    x_f: &'a [String],
    #[serde(rename = "yB")]
    y_b: &'a [String],
    #[serde(rename = "promptM", skip_serializing_if = "Option::is_none")]
    prompt_m: Option<String>,
    #[serde(rename = "promptF", skip_serializing_if = "Option::is_none")]
    prompt_f: Option<String>,
}

#[derive(Deserialize)]
struct TransformResponse {
    #[serde(rename = "yM")]
    y_m: Vec<String>,
    #[serde(rename = "yF")]
    y_f: Vec<String>,
}

impl<T: Transport> Transformer for AdapterTransformer<T> {
    fn variants(
        &self,
        x_masculine: &TaggedSource,
        x_feminine: &TaggedSource,
        base: &PlainTranslation,
    ) -> Result<(PlainTranslation, PlainTranslation), PipelineError> {
        let untagged: Vec<String> = super::untagged(x_masculine);
        let prompt = |g| self.prompt.as_ref().map(|cfg| build_editor_prompt(cfg, &untagged, base, g));
        let request = TransformRequest {
            x_m: &x_masculine.tokens,
            x_f: &x_feminine.tokens,
            y_b: &base.tokens,
            prompt_m: prompt(Gender::Masculine),
            prompt_f: prompt(Gender::Feminine),
        };
        let response: TransformResponse = exchange(&self.transport, &request)?;
        let plain = |tokens| PlainTranslation::new(tokens).map_err(|e| PipelineError::Transformer(e.to_string()));
        Ok((plain(response.y_m)?, plain(response.y_f)?))
    }
}

pub struct AdapterAligner<T> {
    pub transport: T,
}

impl<T: Transport> Aligner for AdapterAligner<T> {
    fn align(&self, source: &AnnotatedSource, ys: &StructuredTranslation) -> Result<AlignmentMap, PipelineError> {
        let mut out = Vec::with_capacity(ys.structure_count());
        for request in aligner_requests(source, ys) {
            let response: AlignerResponse = exchange(&self.transport, &request)?;
            out.push(entity_from_tags(source, &response)?);
        }
        Ok(AlignmentMap::new(out))
    }
}
