use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

/// Where a pair's current target came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// Retrieved verbatim from the target corpus.
    Match,
    /// Produced by the translation model of iteration `iter_set`.
    Trans,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoPair {
    pub src_id: usize,
    pub src: Sentence,
    pub tgt: Sentence,
    /// WMD between `src` and `tgt`.
    pub cost: f64,
    pub origin: Origin,
    pub iter_set: usize,
}

/// The aligned source subset and its evolving targets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PseudoParallelState {
    pub pairs: Vec<PseudoPair>,
    /// Index of the last completed iteration.
    pub iteration: usize,
    pub update_rate_history: Vec<f64>,
}

impl PseudoParallelState {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(source, target)` training pairs in state order.
    pub fn training_pairs(&self) -> Vec<(Sentence, Sentence)> {
        self.pairs.iter().map(|p| (p.src.clone(), p.tgt.clone())).collect()
    }

    pub fn sources(&self) -> Vec<Sentence> {
        self.pairs.iter().map(|p| p.src.clone()).collect()
    }

    pub fn targets(&self) -> Vec<Sentence> {
        self.pairs.iter().map(|p| p.tgt.clone()).collect()
    }
}

/// Sum of per-pair transport costs.
pub fn total_cost(state: &PseudoParallelState) -> f64 {
    state.pairs.iter().map(|p| p.cost).sum()
}

fn changed_pairs(before: &PseudoParallelState, after: &PseudoParallelState) -> Result<usize> {
    if before.pairs.len() != after.pairs.len() {
        return Err(Error::StateMismatch(format!(
            "{} pairs before, {} after",
            before.pairs.len(),
            after.pairs.len()
        )));
    }
    let mut changed = 0;
    for (b, a) in before.pairs.iter().zip(&after.pairs) {
        if b.src_id != a.src_id {
            return Err(Error::StateMismatch(format!("source id {} vs {}", b.src_id, a.src_id)));
        }
        if !b.tgt.same_tokens(&a.tgt) {
            changed += 1;
        }
    }
    Ok(changed)
}

/// Fraction of pairs whose target token sequence differs between the states.
pub fn update_rate(before: &PseudoParallelState, after: &PseudoParallelState) -> Result<f64> {
    let changed = changed_pairs(before, after)?;
    if before.pairs.is_empty() {
        return Ok(0.0);
    }
    Ok(changed as f64 / before.pairs.len() as f64)
}
