use std::collections::{HashMap, HashSet};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Interpolated trigram model.
///
/// `p(w | u, v) = λ3·p3(w | u, v) + λ2·p2(w | v) + λ1·p1(w)` where `p1` is the
/// add-one smoothed unigram distribution over the training vocabulary plus
/// `</s>` and `<unk>`, and `p2`, `p3` are maximum-likelihood estimates that
/// fall back to the next lower order when their history was never observed.
/// Each sentence is padded with two `<s>` and one `</s>`.
#[derive(Clone, Debug)]
pub struct NgramLm {
    lambdas: [f64; 3],
    vocab: HashSet<String>,
    unigram: HashMap<String, u64>,
    unigram_total: u64,
    bigram: HashMap<(String, String), u64>,
    bigram_history: HashMap<String, u64>,
    trigram: HashMap<(String, String, String), u64>,
    trigram_history: HashMap<(String, String), u64>,
}

pub const DEFAULT_LAMBDAS: [f64; 3] = [0.6, 0.3, 0.1];

fn padded(s: &Sentence) -> Vec<&str> {
    let mut v = vec![BOS, BOS];
    v.extend(s.tokens.iter().map(|t| t.as_str()));
    v.push(EOS);
    v
}

pub fn train_lm(corpus: &[Sentence]) -> Result<NgramLm> {
    train_lm_with(corpus, DEFAULT_LAMBDAS)
}

/// `lambdas` are `(λ3, λ2, λ1)`: positive and summing to one.
pub fn train_lm_with(corpus: &[Sentence], lambdas: [f64; 3]) -> Result<NgramLm> {
    if corpus.is_empty() {
        return Err(Error::Eval("language model needs a non-empty training corpus".into()));
    }
    if lambdas.iter().any(|&l| l <= 0.0) || (lambdas.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Eval(format!("interpolation weights {lambdas:?} must be positive and sum to 1")));
    }
    let mut lm = NgramLm {
        lambdas,
        vocab: HashSet::new(),
        unigram: HashMap::new(),
        unigram_total: 0,
        bigram: HashMap::new(),
        bigram_history: HashMap::new(),
        trigram: HashMap::new(),
        trigram_history: HashMap::new(),
    };
    lm.vocab.insert(EOS.to_string());
    lm.vocab.insert(UNK.to_string());
    for s in corpus {
        let p = padded(s);
        for i in 2..p.len() {
            let (u, v, w) = (p[i - 2], p[i - 1], p[i]);
            lm.vocab.insert(w.to_string());
            *lm.unigram.entry(w.to_string()).or_insert(0) += 1;
            lm.unigram_total += 1;
            *lm.bigram.entry((v.to_string(), w.to_string())).or_insert(0) += 1;
            *lm.bigram_history.entry(v.to_string()).or_insert(0) += 1;
            *lm.trigram.entry((u.to_string(), v.to_string(), w.to_string())).or_insert(0) += 1;
            *lm.trigram_history.entry((u.to_string(), v.to_string())).or_insert(0) += 1;
        }
    }
    Ok(lm)
}

impl NgramLm {
    /// Size of the predicted vocabulary, including `</s>` and `<unk>`.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn map<'a>(&self, w: &'a str) -> &'a str {
        if w == BOS || self.vocab.contains(w) {
            w
        } else {
            UNK
        }
    }

    fn unigram_prob(&self, w: &str) -> f64 {
        let c = self.unigram.get(w).copied().unwrap_or(0) as f64;
        (c + 1.0) / (self.unigram_total as f64 + self.vocab.len() as f64)
    }

    fn bigram_prob(&self, v: &str, w: &str) -> f64 {
        match self.bigram_history.get(v) {
            Some(&h) => {
                let c = self.bigram.get(&(v.to_string(), w.to_string())).copied().unwrap_or(0);
                c as f64 / h as f64
            }
            None => self.unigram_prob(w),
        }
    }

    fn trigram_prob(&self, u: &str, v: &str, w: &str) -> f64 {
        match self.trigram_history.get(&(u.to_string(), v.to_string())) {
            Some(&h) => {
                let c = self
                    .trigram
                    .get(&(u.to_string(), v.to_string(), w.to_string()))
                    .copied()
                    .unwrap_or(0);
                c as f64 / h as f64
            }
            None => self.bigram_prob(v, w),
        }
    }

    /// Interpolated `p(w | u, v)`; out-of-vocabulary words are scored as `<unk>`.
    pub fn prob(&self, u: &str, v: &str, w: &str) -> f64 {
        let (u, v, w) = (self.map(u), self.map(v), self.map(w));
        let [l3, l2, l1] = self.lambdas;
        l3 * self.trigram_prob(u, v, w) + l2 * self.bigram_prob(v, w) + l1 * self.unigram_prob(w)
    }

    /// Every word the model can predict, for normalization checks.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    /// Sum of natural-log probabilities and the number of predicted tokens.
    pub fn log_prob(&self, s: &Sentence) -> (f64, usize) {
        let p = padded(s);
        let mut total = 0.0;
        for i in 2..p.len() {
            total += self.prob(p[i - 2], p[i - 1], p[i]).ln();
        }
        (total, p.len() - 2)
    }
}

/// `exp(-(1/N) Σ ln p)`, with N counting tokens plus one end marker per sentence.
pub fn perplexity(lm: &NgramLm, corpus: &[Sentence]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Eval("perplexity of an empty corpus".into()));
    }
    let (mut ll, mut n) = (0.0, 0usize);
    for s in corpus {
        let (l, k) = lm.log_prob(s);
        ll += l;
        n += k;
    }
    Ok((-ll / n as f64).exp())
}
