//! Line-oriented corpora: one pre-tokenized sentence per line.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single whitespace-free, non-empty token.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    /// Returns `None` for empty strings or strings containing whitespace.
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            None
        } else {
            Some(Token(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Token {
    type Error = String;

    fn try_from(value: String) -> std::result::Result<Self, Self::Error> {
        Token::new(value.clone()).ok_or_else(|| format!("invalid token {value:?}"))
    }
}

impl From<Token> for String {
    fn from(token: Token) -> Self {
        token.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Name of one of the two attributes taking part in a run.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeLabel(pub String);

impl AttributeLabel {
    pub fn new(name: impl Into<String>) -> Self {
        AttributeLabel(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AttributeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    /// Corpus-local index. Translation outputs carry the id of their source.
    pub id: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(id: usize, tokens: Vec<Token>) -> Self {
        Sentence { id, tokens }
    }

    /// Tokenizes `text` with the default configuration. Test and CLI helper.
    pub fn parse(id: usize, text: &str) -> Self {
        Sentence::new(id, tokenize(text, &TokenizeConfig::default()))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn text(&self) -> String {
        join_tokens(&self.tokens)
    }

    pub fn same_tokens(&self, other: &Sentence) -> bool {
        self.tokens == other.tokens
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_str());
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizeConfig {
    pub lowercase: bool,
    pub max_len: usize,
}

impl Default for TokenizeConfig {
    fn default() -> Self {
        TokenizeConfig {
            lowercase: true,
            max_len: 100,
        }
    }
}

/// Splits on runs of whitespace. No punctuation splitting.
pub fn tokenize(line: &str, cfg: &TokenizeConfig) -> Vec<Token> {
    line.split_whitespace()
        .map(|w| {
            if cfg.lowercase {
                Token(w.to_lowercase())
            } else {
                Token(w.to_string())
            }
        })
        .filter(|t| !t.0.is_empty())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub attribute: AttributeLabel,
    pub source_path: PathBuf,
    /// Lines dropped for exceeding `max_len`.
    pub dropped: usize,
}

impl Corpus {
    /// Builds a corpus from in-memory lines using the same rules as [`load_corpus`].
    pub fn from_lines<I, S>(lines: I, attribute: AttributeLabel, cfg: &TokenizeConfig) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let path = PathBuf::from("<memory>");
        let mut sentences = Vec::new();
        let mut dropped = 0;
        for line in lines {
            push_line(line.as_ref(), cfg, &mut sentences, &mut dropped);
        }
        finish(sentences, attribute, path, dropped)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Sentence> {
        self.sentences.get(id)
    }

    /// One sentence per line, tokens separated by single spaces, LF endings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(&s.text());
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_text().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn push_line(line: &str, cfg: &TokenizeConfig, sentences: &mut Vec<Sentence>, dropped: &mut usize) {
    let tokens = tokenize(line, cfg);
    if tokens.is_empty() {
        return;
    }
    if tokens.len() > cfg.max_len {
        *dropped += 1;
        return;
    }
    let id = sentences.len();
    sentences.push(Sentence::new(id, tokens));
}

fn finish(sentences: Vec<Sentence>, attribute: AttributeLabel, path: PathBuf, dropped: usize) -> Result<Corpus> {
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} sentence(s) longer than the length cap", path.display());
    }
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus { path });
    }
    Ok(Corpus {
        sentences,
        attribute,
        source_path: path,
        dropped,
    })
}

/// Loads a UTF-8 corpus, one sentence per line. LF and CRLF endings are accepted.
pub fn load_corpus(path: &Path, attribute: AttributeLabel, cfg: &TokenizeConfig) -> Result<Corpus> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut sentences = Vec::new();
    let mut dropped = 0;
    for (lineno, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|_| Error::InvalidUtf8 {
            path: path.to_path_buf(),
            line: lineno + 1,
        })?;
        push_line(line, cfg, &mut sentences, &mut dropped);
    }
    finish(sentences, attribute, path.to_path_buf(), dropped)
}

/// Reads one sentence per line keeping blank lines as empty sentences, so
/// that files stay line-aligned with each other. No length cap is applied.
pub fn load_aligned_lines(path: &Path, cfg: &TokenizeConfig) -> Result<Vec<Sentence>> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut body: &[u8] = &text;
    if let Some(rest) = body.strip_suffix(b"\n") {
        body = rest;
    }
    if body.is_empty() && text.is_empty() {
        return Ok(Vec::new());
    }
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, raw)| {
            let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
            let line = std::str::from_utf8(raw).map_err(|_| Error::InvalidUtf8 {
                path: path.to_path_buf(),
                line: i + 1,
            })?;
            Ok(Sentence::new(i, tokenize(line, cfg)))
        })
        .collect()
}

/// Token → dense id map with per-token frequencies. Ids follow first occurrence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, usize>,
    tokens: Vec<String>,
    counts: Vec<u64>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn count(&self, token: &str) -> u64 {
        self.id(token).map_or(0, |i| self.counts[i])
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn add(&mut self, token: &str) -> usize {
        if let Some(&id) = self.ids.get(token) {
            self.counts[id] += 1;
            return id;
        }
        let id = self.tokens.len();
        self.ids.insert(token.to_string(), id);
        self.tokens.push(token.to_string());
        self.counts.push(1);
        id
    }
}

pub fn build_vocab(corpora: &[&Corpus]) -> Result<Vocabulary> {
    if corpora.is_empty() {
        return Err(Error::Config("vocabulary needs at least one corpus".into()));
    }
    let mut vocab = Vocabulary::default();
    for corpus in corpora {
        for s in &corpus.sentences {
            for t in &s.tokens {
                vocab.add(t.as_str());
            }
        }
    }
    Ok(vocab)
}
