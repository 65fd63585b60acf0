//! Word-substitution model learned by EM word alignment.
//!
//! Translation probabilities `t(target | source)` are estimated IBM Model 1
//! style over the pair set, with an empty source word (NULL) available to
//! every target position. The channel keeps, per source token, its most
//! probable target token; at translation time a token is substituted when
//! that probability reaches `min_score` and copied otherwise.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Backend, TranslateError, TranslationModel};
use crate::corpus::{Sentence, Token};

const NULL: u32 = 0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub target: Token,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LexicalChannel {
    pub table: BTreeMap<String, Substitution>,
    pub min_score: f64,
    pub copy_fallback: bool,
    pub seed: u64,
    /// Training log-likelihood before the first round and after each round.
    pub log_likelihood: Vec<f64>,
}

impl LexicalChannel {
    /// Channel with an empty table: translates every sentence to itself.
    pub fn identity() -> Self {
        LexicalChannel {
            table: BTreeMap::new(),
            min_score: 0.5,
            copy_fallback: true,
            seed: 0,
            log_likelihood: Vec::new(),
        }
    }

    pub fn lookup(&self, token: &str) -> Option<&Substitution> {
        self.table.get(token)
    }

    pub fn translate(&self, s: &Sentence) -> Sentence {
        let tokens = s
            .tokens
            .iter()
            .map(|t| match self.table.get(t.as_str()) {
                Some(sub) if sub.score >= self.min_score || !self.copy_fallback => sub.target.clone(),
                _ => t.clone(),
            })
            .collect();
        Sentence::new(s.id, tokens)
    }
}

impl TranslationModel for LexicalChannel {
    fn translate_batch(&self, sentences: &[Sentence]) -> Result<Vec<Sentence>, TranslateError> {
        Ok(sentences.par_iter().map(|s| self.translate(s)).collect())
    }

    fn metadata(&self) -> serde_json::Value {
        let table: BTreeMap<&str, (&str, f64)> = self
            .table
            .iter()
            .map(|(k, v)| (k.as_str(), (v.target.as_str(), v.score)))
            .collect();
        json!({
            "backend": "builtin",
            "model": "lexical",
            "min_score": self.min_score,
            "copy_fallback": self.copy_fallback,
            "seed": self.seed,
            "em_rounds": self.log_likelihood.len().saturating_sub(1),
            "log_likelihood": self.log_likelihood,
            "table": table,
        })
    }
}

struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn new() -> Self {
        Interner {
            ids: HashMap::new(),
            names: Vec::new(),
        }
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(s.to_string(), id);
        self.names.push(s.to_string());
        id
    }
}

/// Per pair: `target_len × (source_len + 1)` parameter indices, NULL first in each row.
struct AlignmentLayout {
    source_len: Vec<usize>,
    cells: Vec<Vec<u32>>,
}

fn log_likelihood_and_counts(layout: &AlignmentLayout, t: &[f64], counts: Option<&mut [f64]>) -> f64 {
    let mut ll = 0.0;
    let mut counts = counts;
    for (cells, &l) in layout.cells.iter().zip(&layout.source_len) {
        let width = l + 1;
        for row in cells.chunks_exact(width) {
            let denom: f64 = row.iter().map(|&p| t[p as usize]).sum();
            ll += (denom / width as f64).ln();
            if let Some(c) = counts.as_deref_mut() {
                for &p in row {
                    c[p as usize] += t[p as usize] / denom;
                }
            }
        }
    }
    ll
}

/// Runs `iters` EM rounds and keeps the best target per source token.
pub fn train_lexical(pairs: &[(Sentence, Sentence)], iters: usize, seed: u64) -> Result<LexicalChannel, TranslateError> {
    train_lexical_with(pairs, iters, seed, 0.5)
}

pub fn train_lexical_with(
    pairs: &[(Sentence, Sentence)],
    iters: usize,
    seed: u64,
    min_score: f64,
) -> Result<LexicalChannel, TranslateError> {
    if pairs.is_empty() {
        return Err(TranslateError::EmptyPairs);
    }
    if iters == 0 {
        return Err(TranslateError::InvalidParameter("EM rounds must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&min_score) {
        return Err(TranslateError::InvalidParameter(format!("min_score {min_score} outside [0, 1]")));
    }

    let mut src_vocab = Interner::new();
    src_vocab.intern("");
    let mut tgt_vocab = Interner::new();
    let mut param_of: HashMap<(u32, u32), u32> = HashMap::new();
    let mut params: Vec<(u32, u32)> = Vec::new();
    let mut layout = AlignmentLayout {
        source_len: Vec::with_capacity(pairs.len()),
        cells: Vec::with_capacity(pairs.len()),
    };

    for (src, tgt) in pairs {
        let mut e_ids = vec![NULL];
        e_ids.extend(src.tokens.iter().map(|t| src_vocab.intern(t.as_str())));
        let mut cells = Vec::with_capacity(tgt.len() * e_ids.len());
        for f in &tgt.tokens {
            let f_id = tgt_vocab.intern(f.as_str());
            for &e in &e_ids {
                let next = params.len() as u32;
                let p = *param_of.entry((e, f_id)).or_insert_with(|| {
                    params.push((e, f_id));
                    next
                });
                cells.push(p);
            }
        }
        layout.source_len.push(src.len());
        layout.cells.push(cells);
    }

    let uniform = 1.0 / tgt_vocab.names.len().max(1) as f64;
    let mut t = vec![uniform; params.len()];
    let mut counts = vec![0.0; params.len()];
    let mut totals = vec![0.0; src_vocab.names.len()];
    let mut history = Vec::with_capacity(iters + 1);

    for _ in 0..iters {
        counts.fill(0.0);
        history.push(log_likelihood_and_counts(&layout, &t, Some(&mut counts)));
        totals.fill(0.0);
        for (k, &(e, _)) in params.iter().enumerate() {
            totals[e as usize] += counts[k];
        }
        for (k, &(e, _)) in params.iter().enumerate() {
            t[k] = counts[k] / totals[e as usize];
        }
    }
    history.push(log_likelihood_and_counts(&layout, &t, None));

    let mut best: Vec<Option<(u32, f64)>> = vec![None; src_vocab.names.len()];
    for (k, &(e, f)) in params.iter().enumerate() {
        if e == NULL {
            continue;
        }
        let candidate = (f, t[k]);
        let slot = &mut best[e as usize];
        let better = match *slot {
            None => true,
            Some((bf, bp)) => {
                let (name, best_name) = (&tgt_vocab.names[f as usize], &tgt_vocab.names[bf as usize]);
                let source = &src_vocab.names[e as usize];
                candidate.1 > bp
                    || (candidate.1 == bp
                        && ((name == source && best_name != source) || (best_name != source && name < best_name)))
            }
        };
        if better {
            *slot = Some(candidate);
        }
    }

    let mut table = BTreeMap::new();
    for (e, slot) in best.into_iter().enumerate().skip(1) {
        if let Some((f, score)) = slot {
            let target = Token::new(tgt_vocab.names[f as usize].clone()).expect("target tokens come from sentences");
            table.insert(src_vocab.names[e].clone(), Substitution { target, score });
        }
    }

    Ok(LexicalChannel {
        table,
        min_score,
        copy_fallback: true,
        seed,
        log_likelihood: history,
    })
}

/// The built-in backend.
#[derive(Clone, Debug, PartialEq)]
pub struct LexicalBackend {
    pub em_rounds: usize,
    pub min_score: f64,
}

impl Default for LexicalBackend {
    fn default() -> Self {
        LexicalBackend {
            em_rounds: 10,
            min_score: 0.5,
        }
    }
}

impl Backend for LexicalBackend {
    fn name(&self) -> String {
        "builtin".into()
    }

    fn train(&self, pairs: &[(Sentence, Sentence)], seed: u64) -> Result<Box<dyn TranslationModel>, TranslateError> {
        Ok(Box::new(train_lexical_with(pairs, self.em_rounds, seed, self.min_score)?))
    }
}
