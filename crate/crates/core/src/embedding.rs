//! Plain-text word vectors and averaged sentence vectors.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::corpus::{Sentence, Token};
use crate::error::{Error, Result};

/// Token → vector map with a fixed dimension. Rows live in one flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            dim,
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    /// Builds a table from `(token, vector)` entries. Later duplicates overwrite.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = EmbeddingTable::new(dim)?;
        for (token, v) in entries {
            table.insert(token.into(), &v)?;
        }
        Ok(table)
    }

    /// Inserts or overwrites a row. Returns `true` when a row was overwritten.
    pub fn insert(&mut self, token: String, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("non-finite component in vector for {token:?}")));
        }
        if let Some(&row) = self.index.get(&token) {
            self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(vector);
            return Ok(true);
        }
        let row = self.index.len();
        self.index.insert(token, row);
        self.data.extend_from_slice(vector);
        Ok(false)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        EmbeddingTable {
            dim: self.dim,
            index: self.index.clone(),
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }
}

fn is_header(fields: &[&str]) -> bool {
    fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
}

/// Loads a whitespace-separated word-vector file.
///
/// Each line is a token followed by its components. A first line consisting
/// of exactly two integers is read as a `count dim` header.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, message: String| Error::Embedding {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut table: Option<EmbeddingTable> = None;
    let mut header_dim = None;
    let mut duplicates = 0usize;
    let mut buf = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if i == 0 && is_header(&fields) {
            let dim: usize = fields[1].parse().unwrap_or(0);
            if dim == 0 {
                return Err(err(lineno, "header declares dimension 0".into()));
            }
            header_dim = Some(dim);
            continue;
        }
        if fields.len() < 2 {
            return Err(err(lineno, format!("row for {:?} has no components", fields[0])));
        }
        buf.clear();
        for f in &fields[1..] {
            match f.parse::<f64>() {
                Ok(x) if x.is_finite() => buf.push(x),
                _ => return Err(err(lineno, format!("unparseable component {f:?}"))),
            }
        }
        let expected = table.as_ref().map(|t| t.dim).or(header_dim);
        if let Some(dim) = expected {
            if buf.len() != dim {
                return Err(err(
                    lineno,
                    format!("inconsistent dimension: expected {dim}, found {}", buf.len()),
                ));
            }
        }
        let t = match &mut table {
            Some(t) => t,
            None => table.insert(EmbeddingTable::new(buf.len())?),
        };
        if t.insert(fields[0].to_string(), &buf)? {
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        log::warn!("{}: {duplicates} duplicate token(s) overwritten", path.display());
    }
    table.ok_or_else(|| Error::EmptyEmbeddings {
        path: path.to_path_buf(),
    })
}

/// Mean of in-vocabulary token vectors plus the fraction of tokens covered.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceVector {
    pub values: Vec<f64>,
    pub coverage: f64,
}

impl SentenceVector {
    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Averages token vectors left to right; `None` when no token is in the table.
pub fn embed_tokens(tokens: &[Token], table: &EmbeddingTable) -> Option<SentenceVector> {
    let mut sum = vec![0.0; table.dim()];
    let mut hits = 0usize;
    for t in tokens {
        if let Some(v) = table.get(t.as_str()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            hits += 1;
        }
    }
    if hits == 0 {
        return None;
    }
    let n = hits as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Some(SentenceVector {
        values: sum,
        coverage: n / tokens.len() as f64,
    })
}

pub fn sentence_embedding(s: &Sentence, table: &EmbeddingTable) -> Option<SentenceVector> {
    embed_tokens(&s.tokens, table)
}

/// Cosine of two raw vectors given their precomputed squared norms. Shared by
/// the matcher so both paths round identically. Taking one square root of the
/// product makes the cosine of a vector with itself exactly 1.
#[inline]
pub(crate) fn cosine_with_sq_norms(u: &[f64], uu: f64, v: &[f64], vv: f64) -> f64 {
    (dot(u, v) / (uu * vv).sqrt()).clamp(-1.0, 1.0)
}

pub fn cosine_similarity(u: &SentenceVector, v: &SentenceVector) -> Result<f64> {
    if u.values.len() != v.values.len() {
        return Err(Error::DimensionMismatch {
            left: u.values.len(),
            right: v.values.len(),
        });
    }
    let (uu, vv) = (dot(&u.values, &u.values), dot(&v.values, &v.values));
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(cosine_with_sq_norms(&u.values, uu, &v.values, vv))
}
