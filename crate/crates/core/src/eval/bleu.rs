use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Token};
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Corpus-level BLEU-4 on a 0–100 scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    #[serde(rename = "bleu")]
    pub value: f64,
    /// Modified n-gram precisions after smoothing, orders 1 to 4.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn ngram_counts(tokens: &[Token], n: usize) -> HashMap<&[Token], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Reference length closest to `len`; ties go to the shorter reference.
fn closest_ref_len(len: usize, refs: &[Sentence]) -> usize {
    refs.iter()
        .map(Sentence::len)
        .min_by_key(|&r| (r.abs_diff(len), r))
        .unwrap_or(0)
}

/// Multi-reference BLEU-4.
///
/// Hypothesis n-gram counts are clipped by their maximum count in any single
/// reference. Orders 2 to 4 with zero matches are smoothed by adding one to
/// both numerator and denominator; unigram precision is never smoothed. The
/// brevity penalty uses the closest reference length per sentence.
pub fn bleu_multi_ref(hyps: &[Sentence], refs: &[Vec<Sentence>]) -> Result<BleuScore> {
    if hyps.is_empty() {
        return Err(Error::Eval("empty hypothesis set".into()));
    }
    if hyps.len() != refs.len() {
        return Err(Error::Eval(format!(
            "{} hypotheses but {} reference sets",
            hyps.len(),
            refs.len()
        )));
    }
    if let Some(i) = refs.iter().position(Vec::is_empty) {
        return Err(Error::Eval(format!("hypothesis {i} has no references")));
    }

    let mut matched = [0usize; MAX_ORDER];
    let mut total = [0usize; MAX_ORDER];
    let mut hyp_len = 0;
    let mut ref_len = 0;
    for (hyp, rs) in hyps.iter().zip(refs) {
        hyp_len += hyp.len();
        ref_len += closest_ref_len(hyp.len(), rs);
        for n in 1..=MAX_ORDER {
            let hyp_counts = ngram_counts(&hyp.tokens, n);
            let mut max_ref: HashMap<&[Token], usize> = HashMap::new();
            for r in rs {
                for (g, c) in ngram_counts(&r.tokens, n) {
                    let slot = max_ref.entry(g).or_insert(0);
                    *slot = (*slot).max(c);
                }
            }
            for (g, c) in &hyp_counts {
                matched[n - 1] += (*c).min(max_ref.get(g).copied().unwrap_or(0));
                total[n - 1] += c;
            }
        }
    }

    let mut precisions = [0.0; MAX_ORDER];
    for k in 0..MAX_ORDER {
        precisions[k] = if k > 0 && matched[k] == 0 {
            1.0 / (total[k] + 1) as f64
        } else if total[k] == 0 {
            0.0
        } else {
            matched[k] as f64 / total[k] as f64
        };
    }

    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };

    let value = if precisions[0] == 0.0 || brevity_penalty == 0.0 {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        brevity_penalty * log_mean.exp() * 100.0
    };

    Ok(BleuScore {
        value,
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Sentence {
        Sentence::parse(0, text)
    }

    #[test]
    fn perfect_match_is_exactly_100() {
        let hyps = vec![s("the cat sat on the mat"), s("a dog")];
        let refs: Vec<Vec<Sentence>> = hyps.iter().map(|h| vec![h.clone()]).collect();
        let b = bleu_multi_ref(&hyps, &refs).unwrap();
        assert_eq!(b.value, 100.0);
        assert_eq!(b.brevity_penalty, 1.0);
    }

    #[test]
    fn clipping_against_short_reference() {
        let b = bleu_multi_ref(&[s("the the the the")], &[vec![s("the cat")]]).unwrap();
        assert_eq!(b.precisions[0], 0.25);
        // bigrams: 0 of 3 -> 1/4, trigrams 0 of 2 -> 1/3, 4-grams 0 of 1 -> 1/2
        assert_eq!(b.precisions[1], 0.25);
        assert_eq!(b.precisions[2], 1.0 / 3.0);
        assert_eq!(b.precisions[3], 0.5);
        assert_eq!(b.brevity_penalty, 1.0);
    }

    #[test]
    fn closest_reference_tie_prefers_shorter() {
        assert_eq!(closest_ref_len(4, &[s("a b c d e"), s("a b c")]), 3);
        assert_eq!(closest_ref_len(4, &[s("a b c d e f"), s("a b c")]), 3);
    }

    #[test]
    fn errors() {
        assert!(bleu_multi_ref(&[], &[]).is_err());
        assert!(bleu_multi_ref(&[s("a")], &[]).is_err());
        assert!(bleu_multi_ref(&[s("a")], &[vec![]]).is_err());
    }

    #[test]
    fn no_unigram_match_is_zero() {
        let b = bleu_multi_ref(&[s("x y")], &[vec![s("a b")]]).unwrap();
        assert_eq!(b.value, 0.0);
    }
}
