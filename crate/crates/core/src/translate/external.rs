//! Adapter for translation models that live in another process.
//!
//! Wire protocol, UTF-8, one JSON object per line:
//!
//! ```text
//! -> {"id":0,"src":["best","pizza","ever"]}
//! <- {"id":0,"tgt":["worst","pizza","ever"]}
//! ```
//!
//! Responses must come back in request order and the subprocess must flush
//! after each one. The command runs under `sh -c`, once per batch. Training
//! pairs are written to a JSONL file (`{"src":[..],"tgt":[..]}` per line)
//! whose path is passed in the `IMAT_TRAIN_PAIRS` environment variable.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Backend, TranslateError, TranslationModel};
use crate::corpus::{Sentence, Token};

pub const TRAIN_PAIRS_ENV: &str = "IMAT_TRAIN_PAIRS";

#[derive(Debug, Serialize, Deserialize)]
pub struct Request {
    pub id: usize,
    pub src: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Response {
    pub id: usize,
    pub tgt: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ExternalModel {
    pub command: String,
    pub timeout: Duration,
    train_file: Option<Arc<tempfile::TempPath>>,
}

impl ExternalModel {
    /// A model that has not seen any training pairs.
    pub fn new(command: impl Into<String>, timeout: Duration) -> Self {
        ExternalModel {
            command: command.into(),
            timeout,
            train_file: None,
        }
    }
}

impl TranslationModel for ExternalModel {
    fn translate_batch(&self, sentences: &[Sentence]) -> Result<Vec<Sentence>, TranslateError> {
        translate_batch_external(self, sentences)
    }

    fn metadata(&self) -> serde_json::Value {
        json!({
            "backend": "external",
            "command": self.command,
            "timeout_secs": self.timeout.as_secs_f64(),
        })
    }
}

fn tokens_of(s: &Sentence) -> Vec<String> {
    s.tokens.iter().map(|t| t.as_str().to_string()).collect()
}

/// Sends one batch through a fresh subprocess and reads the aligned replies.
pub fn translate_batch_external(model: &ExternalModel, sentences: &[Sentence]) -> Result<Vec<Sentence>, TranslateError> {
    let mut cmd = Command::new("sh");
    cmd.arg("-c")
        .arg(&model.command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit());
    if let Some(path) = &model.train_file {
        cmd.env(TRAIN_PAIRS_ENV, path.as_os_str());
    }
    let mut child = cmd.spawn().map_err(|source| TranslateError::Spawn {
        command: model.command.clone(),
        source,
    })?;

    let mut payload = String::new();
    for (id, s) in sentences.iter().enumerate() {
        let line = serde_json::to_string(&Request { id, src: tokens_of(s) }).expect("request serializes");
        payload.push_str(&line);
        payload.push('\n');
    }
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = thread::spawn(move || {
        // a server that exits early closes the pipe; the reader reports that
        let _ = stdin.write_all(payload.as_bytes());
    });

    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let deadline = Instant::now() + model.timeout;
    let result = read_responses(sentences, &rx, deadline, model.timeout);
    if result.is_err() {
        let _ = child.kill();
    }
    let _ = writer.join();
    let status = child.wait()?;
    let out = result?;
    if !status.success() {
        return Err(TranslateError::Exit(status.to_string()));
    }
    Ok(out)
}

fn read_responses(
    sentences: &[Sentence],
    rx: &mpsc::Receiver<std::io::Result<String>>,
    deadline: Instant,
    timeout: Duration,
) -> Result<Vec<Sentence>, TranslateError> {
    let n = sentences.len();
    let mut got: Vec<Response> = Vec::with_capacity(n);
    while got.len() < n {
        let remaining = deadline.saturating_duration_since(Instant::now());
        let line = match rx.recv_timeout(remaining) {
            Ok(line) => line?,
            Err(mpsc::RecvTimeoutError::Timeout) => return Err(TranslateError::Timeout(timeout)),
            Err(mpsc::RecvTimeoutError::Disconnected) => break,
        };
        let resp: Response = serde_json::from_str(&line).map_err(|e| {
            TranslateError::Protocol(format!("malformed response on line {}: {e}: {line:?}", got.len() + 1))
        })?;
        got.push(resp);
    }

    let mut seen = vec![false; n];
    for r in &got {
        if r.id >= n || seen[r.id] {
            return Err(TranslateError::Protocol(format!("unexpected or duplicate response id {}", r.id)));
        }
        seen[r.id] = true;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(TranslateError::Protocol(format!(
            "missing response for id {missing} ({} of {n} responses received)",
            got.len()
        )));
    }
    if let Some(pos) = got.iter().enumerate().position(|(i, r)| r.id != i) {
        return Err(TranslateError::Protocol(format!(
            "out-of-order response, expected id {pos} but got id {}",
            got[pos].id
        )));
    }

    got.into_iter()
        .zip(sentences)
        .map(|(resp, src)| {
            let tokens = resp
                .tgt
                .into_iter()
                .map(|t| {
                    Token::new(t.clone())
                        .ok_or_else(|| TranslateError::Protocol(format!("invalid token {t:?} in response {}", resp.id)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Sentence::new(src.id, tokens))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ExternalBackend {
    pub command: String,
    pub timeout: Duration,
}

impl ExternalBackend {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalBackend {
            command: command.into(),
            timeout: Duration::from_secs(600),
        }
    }
}

impl Backend for ExternalBackend {
    fn name(&self) -> String {
        format!("external:{}", self.command)
    }

    fn train(&self, pairs: &[(Sentence, Sentence)], _seed: u64) -> Result<Box<dyn TranslationModel>, TranslateError> {
        if pairs.is_empty() {
            return Err(TranslateError::EmptyPairs);
        }
        let mut file = tempfile::Builder::new().prefix("imat-train-").suffix(".jsonl").tempfile()?;
        {
            let mut w = std::io::BufWriter::new(file.as_file_mut());
            for (src, tgt) in pairs {
                let line = json!({ "src": tokens_of(src), "tgt": tokens_of(tgt) });
                writeln!(w, "{line}")?;
            }
            w.flush()?;
        }
        Ok(Box::new(ExternalModel {
            command: self.command.clone(),
            timeout: self.timeout,
            train_file: Some(Arc::new(file.into_temp_path())),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ECHO: &str = r#"sed -u 's/"src"/"tgt"/'"#;

    fn batch(n: usize) -> Vec<Sentence> {
        (0..n).map(|i| Sentence::parse(i, &format!("tok{i} shared"))).collect()
    }

    fn model(cmd: &str) -> ExternalModel {
        ExternalModel::new(cmd, Duration::from_secs(20))
    }

    #[test]
    fn echo_server_is_identity() {
        let input = batch(5);
        assert_eq!(translate_batch_external(&model(ECHO), &input).unwrap(), input);
    }

    #[test]
    fn out_of_order_is_protocol_error() {
        let cmd = r#"cat > /dev/null; printf '{"id":1,"tgt":["a"]}\n{"id":0,"tgt":["b"]}\n'"#;
        match translate_batch_external(&model(cmd), &batch(2)) {
            Err(TranslateError::Protocol(msg)) => assert!(msg.contains("out-of-order"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn omitted_id_is_named() {
        let cmd = r#"grep -v '"id":3,' | sed -u 's/"src"/"tgt"/'"#;
        match translate_batch_external(&model(cmd), &batch(5)) {
            Err(TranslateError::Protocol(msg)) => assert!(msg.contains("id 3"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_and_truncated_output() {
        let garbage = "cat > /dev/null; echo not-json";
        assert!(matches!(
            translate_batch_external(&model(garbage), &batch(1)),
            Err(TranslateError::Protocol(_))
        ));
        let short = "head -n 1 | sed -u 's/\"src\"/\"tgt\"/'";
        match translate_batch_external(&model(short), &batch(3)) {
            Err(TranslateError::Protocol(msg)) => assert!(msg.contains("id 1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn timeout_kills_server() {
        let slow = ExternalModel::new("sleep 30", Duration::from_millis(200));
        let started = Instant::now();
        assert!(matches!(
            translate_batch_external(&slow, &batch(1)),
            Err(TranslateError::Timeout(_))
        ));
        assert!(started.elapsed() < Duration::from_secs(10));
    }

    #[test]
    fn nonzero_exit_is_reported() {
        let cmd = r#"sed -u 's/"src"/"tgt"/'; exit 3"#;
        assert!(matches!(
            translate_batch_external(&model(cmd), &batch(2)),
            Err(TranslateError::Exit(_))
        ));
    }

    #[test]
    fn training_file_is_visible_to_server() {
        let backend = ExternalBackend::new(format!(
            r#"test -s "${TRAIN_PAIRS_ENV}" && {ECHO}"#
        ));
        let pairs = vec![(Sentence::parse(0, "a"), Sentence::parse(0, "b"))];
        let m = backend.train(&pairs, 0).unwrap();
        assert_eq!(m.translate_batch(&batch(2)).unwrap(), batch(2));
    }
}
