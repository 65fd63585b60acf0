#![allow(dead_code)]

pub mod lp;
pub mod synthetic;

use imat::Sentence;

/// Fraction of positions where `out` agrees with `gold`; a length mismatch
/// counts every position of the longer sentence as wrong.
pub fn token_accuracy(outputs: &[Sentence], gold: &[Sentence]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for (o, g) in outputs.iter().zip(gold) {
        total += o.len().max(g.len());
        if o.len() == g.len() {
            hit += o.tokens.iter().zip(&g.tokens).filter(|(a, b)| a == b).count();
        }
    }
    hit as f64 / total as f64
}

/// Accuracy restricted to positions whose source token is in `lexicon`.
pub fn lexicon_accuracy(
    sources: &[Sentence],
    outputs: &[Sentence],
    lexicon: &std::collections::BTreeMap<String, String>,
) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for (s, o) in sources.iter().zip(outputs) {
        for (i, t) in s.tokens.iter().enumerate() {
            if let Some(want) = lexicon.get(t.as_str()) {
                total += 1;
                if o.tokens.get(i).map(|x| x.as_str()) == Some(want.as_str()) {
                    hit += 1;
                }
            }
        }
    }
    hit as f64 / total.max(1) as f64
}
