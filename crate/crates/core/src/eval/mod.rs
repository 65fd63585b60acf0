//! Automatic evaluation: multi-reference BLEU, attribute accuracy under a
//! naive-Bayes classifier, and perplexity under an interpolated trigram model.

mod bleu;
mod classifier;
mod lm;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{load_aligned_lines, Sentence, TokenizeConfig};
use crate::error::{Error, Result};
use crate::pipeline::IterationTrace;

pub use bleu::{bleu_multi_ref, BleuScore, MAX_ORDER};
pub use classifier::{train_classifier, AttributeClassifier};
pub use lm::{perplexity, train_lm, train_lm_with, NgramLm, BOS, DEFAULT_LAMBDAS, EOS, UNK};

/// Evaluation results; a field is present only when its inputs were supplied.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub bleu: Option<BleuScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterations: Vec<IterationTrace>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// BLEU of a hypothesis file against line-aligned reference files.
pub fn bleu_files(hyp: &Path, refs: &[PathBuf]) -> Result<BleuScore> {
    let tok = TokenizeConfig::default();
    let hyps = load_aligned_lines(hyp, &tok)?;
    let mut sets: Vec<Vec<Sentence>> = vec![Vec::with_capacity(refs.len()); hyps.len()];
    for path in refs {
        let lines = load_aligned_lines(path, &tok)?;
        if lines.len() != hyps.len() {
            return Err(Error::Eval(format!(
                "{} has {} lines but {} has {}",
                path.display(),
                lines.len(),
                hyp.display(),
                hyps.len()
            )));
        }
        for (set, r) in sets.iter_mut().zip(lines) {
            set.push(r);
        }
    }
    bleu_multi_ref(&hyps, &sets)
}
