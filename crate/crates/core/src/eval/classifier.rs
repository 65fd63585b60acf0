use std::collections::{HashMap, HashSet};

use crate::corpus::{AttributeLabel, Corpus, Sentence};
use crate::error::{Error, Result};

/// Two-class multinomial naive Bayes over unigram and bigram counts, add-one smoothed.
#[derive(Clone, Debug)]
pub struct AttributeClassifier {
    labels: [AttributeLabel; 2],
    log_prior: [f64; 2],
    counts: [HashMap<String, u64>; 2],
    totals: [u64; 2],
    vocab_size: usize,
}

fn features(s: &Sentence) -> Vec<String> {
    let mut out: Vec<String> = s.tokens.iter().map(|t| t.as_str().to_string()).collect();
    for w in s.tokens.windows(2) {
        out.push(format!("{} {}", w[0], w[1]));
    }
    out
}

/// Trains on two corpora; their attribute labels become the class names.
/// Class priors follow corpus sizes.
pub fn train_classifier(pos: &Corpus, neg: &Corpus) -> Result<AttributeClassifier> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Eval("classifier needs at least one sentence per class".into()));
    }
    let mut counts = [HashMap::new(), HashMap::new()];
    let mut totals = [0u64; 2];
    let mut vocab = HashSet::new();
    for (k, corpus) in [pos, neg].into_iter().enumerate() {
        for s in &corpus.sentences {
            for f in features(s) {
                vocab.insert(f.clone());
                *counts[k].entry(f).or_insert(0) += 1;
                totals[k] += 1;
            }
        }
    }
    let n = (pos.len() + neg.len()) as f64;
    Ok(AttributeClassifier {
        labels: [pos.attribute.clone(), neg.attribute.clone()],
        log_prior: [(pos.len() as f64 / n).ln(), (neg.len() as f64 / n).ln()],
        counts,
        totals,
        vocab_size: vocab.len(),
    })
}

impl AttributeClassifier {
    pub fn labels(&self) -> &[AttributeLabel; 2] {
        &self.labels
    }

    /// Joint log-probabilities. Features never seen in training are ignored.
    pub fn log_scores(&self, s: &Sentence) -> [f64; 2] {
        let mut scores = self.log_prior;
        for f in features(s) {
            let seen = self.counts[0].contains_key(&f) || self.counts[1].contains_key(&f);
            if !seen {
                continue;
            }
            for (k, score) in scores.iter_mut().enumerate() {
                let c = self.counts[k].get(&f).copied().unwrap_or(0) as f64;
                *score += ((c + 1.0) / (self.totals[k] as f64 + self.vocab_size as f64)).ln();
            }
        }
        scores
    }

    pub fn posteriors(&self, s: &Sentence) -> [f64; 2] {
        let [a, b] = self.log_scores(s);
        let m = a.max(b);
        let (ea, eb) = ((a - m).exp(), (b - m).exp());
        [ea / (ea + eb), eb / (ea + eb)]
    }

    /// Most probable label and its posterior; ties go to the first class.
    pub fn classify(&self, s: &Sentence) -> (AttributeLabel, f64) {
        let [a, b] = self.log_scores(s);
        let p = self.posteriors(s);
        if b > a {
            (self.labels[1].clone(), p[1])
        } else {
            (self.labels[0].clone(), p[0])
        }
    }

    /// Fraction of sentences classified as `expected`.
    pub fn accuracy(&self, sentences: &[Sentence], expected: &AttributeLabel) -> Result<f64> {
        if sentences.is_empty() {
            return Err(Error::Eval("accuracy over an empty corpus".into()));
        }
        let hits = sentences.iter().filter(|s| &self.classify(s).0 == expected).count();
        Ok(hits as f64 / sentences.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenizeConfig;

    fn corpus(lines: &[&str], label: &str) -> Corpus {
        Corpus::from_lines(lines, AttributeLabel::new(label), &TokenizeConfig::default()).unwrap()
    }

    fn separable() -> (Corpus, Corpus) {
        (
            corpus(&["great food", "lovely staff great", "great place"], "pos"),
            corpus(&["awful food", "rude staff", "awful awful place", "never again"], "neg"),
        )
    }

    #[test]
    fn separable_training_accuracy() {
        let (p, n) = separable();
        let clf = train_classifier(&p, &n).unwrap();
        assert_eq!(clf.accuracy(&p.sentences, &p.attribute).unwrap(), 1.0);
        assert_eq!(clf.accuracy(&n.sentences, &n.attribute).unwrap(), 1.0);
        let (label, post) = clf.classify(&p.sentences[0]);
        assert_eq!(label.as_str(), "pos");
        assert!(post > 0.5);
    }

    #[test]
    fn one_sentence_per_class() {
        let clf = train_classifier(&corpus(&["good"], "pos"), &corpus(&["bad"], "neg")).unwrap();
        assert_eq!(clf.classify(&Sentence::parse(0, "good")).0.as_str(), "pos");
        assert_eq!(clf.classify(&Sentence::parse(0, "bad")).0.as_str(), "neg");
    }

    #[test]
    fn unknown_words_fall_back_to_priors() {
        let (p, n) = separable();
        let clf = train_classifier(&p, &n).unwrap();
        let (label, post) = clf.classify(&Sentence::parse(0, "zzz qqq"));
        assert_eq!(label.as_str(), "neg");
        assert!((post - 4.0 / 7.0).abs() < 1e-12);
        let balanced = train_classifier(&corpus(&["a"], "pos"), &corpus(&["b"], "neg")).unwrap();
        assert_eq!(balanced.classify(&Sentence::parse(0, "zzz")).0.as_str(), "pos");
    }

    #[test]
    fn posteriors_sum_to_one() {
        let (p, n) = separable();
        let clf = train_classifier(&p, &n).unwrap();
        for s in p.sentences.iter().chain(&n.sentences) {
            let [a, b] = clf.posteriors(s);
            assert!((a + b - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_inputs_rejected() {
        let (p, n) = separable();
        let clf = train_classifier(&p, &n).unwrap();
        assert!(clf.accuracy(&[], &p.attribute).is_err());
    }
}
