//! Translation backends trained from scratch on each iteration's pairs.
//!
//! A [`Backend`] turns the current pseudo-parallel pairs into a fresh
//! [`TranslationModel`]. Two backends ship with the crate: the lexical
//! channel (EM word alignment plus per-token substitution) and an adapter
//! that talks to an external process over line-delimited JSON.

mod external;
mod lexical;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentence;

pub use external::{translate_batch_external, ExternalBackend, ExternalModel, Request, Response};
pub use lexical::{train_lexical, LexicalBackend, LexicalChannel, Substitution};

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("cannot train on an empty pair list")]
    EmptyPairs,
    #[error("invalid training parameter: {0}")]
    InvalidParameter(String),
    #[error("failed to spawn `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o with translation subprocess: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("translation subprocess timed out after {0:?}")]
    Timeout(Duration),
    #[error("translation subprocess exited with {0}")]
    Exit(String),
}

/// A trained, immutable model.
pub trait TranslationModel: Send + Sync {
    fn translate_batch(&self, sentences: &[Sentence]) -> Result<Vec<Sentence>, TranslateError>;

    /// JSON description written next to the final checkpoint.
    fn metadata(&self) -> serde_json::Value;
}

/// Translates a single sentence through a batch call.
pub fn translate(model: &dyn TranslationModel, s: &Sentence) -> Result<Sentence, TranslateError> {
    let mut out = model.translate_batch(std::slice::from_ref(s))?;
    match (out.pop(), out.is_empty()) {
        (Some(t), true) => Ok(t),
        _ => Err(TranslateError::Protocol("expected exactly one translation".into())),
    }
}

/// Trains a new model from scratch. Implementations must not carry state
/// from one call to the next.
pub trait Backend: Send + Sync {
    fn name(&self) -> String;

    fn train(&self, pairs: &[(Sentence, Sentence)], seed: u64) -> Result<Box<dyn TranslationModel>, TranslateError>;
}

/// Backend selection as written on the command line: `builtin` or `external:CMD`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum BackendSpec {
    #[default]
    Builtin,
    External(String),
}

impl BackendSpec {
    pub fn build(&self) -> Box<dyn Backend> {
        match self {
            BackendSpec::Builtin => Box::new(LexicalBackend::default()),
            BackendSpec::External(cmd) => Box::new(ExternalBackend::new(cmd.clone())),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Builtin => f.write_str("builtin"),
            BackendSpec::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin" {
            return Ok(BackendSpec::Builtin);
        }
        match s.strip_prefix("external:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(BackendSpec::External(cmd.to_string())),
            _ => Err(format!("unknown backend {s:?} (expected builtin|external:CMD)")),
        }
    }
}

impl From<BackendSpec> for String {
    fn from(spec: BackendSpec) -> Self {
        spec.to_string()
    }
}

impl TryFrom<String> for BackendSpec {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_spec_parsing() {
        assert_eq!("builtin".parse::<BackendSpec>().unwrap(), BackendSpec::Builtin);
        assert_eq!(
            "external:./echo --fast".parse::<BackendSpec>().unwrap(),
            BackendSpec::External("./echo --fast".into())
        );
        assert!("external:".parse::<BackendSpec>().is_err());
        assert!("neural".parse::<BackendSpec>().is_err());
        assert_eq!(BackendSpec::External("x".into()).to_string(), "external:x");
    }
}
