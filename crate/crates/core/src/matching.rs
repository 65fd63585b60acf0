//! Exact nearest-neighbor matching between corpora.
//!
//! The initial pseudo-parallel corpus pairs each source sentence with its most
//! similar target sentence (cosine over averaged word vectors) when that
//! similarity clears the threshold. Later iterations re-match each current
//! target against the target corpus and keep the retrieved sentence only when
//! it lowers the pair's WMD.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence};
use crate::embedding::{cosine_with_sq_norms, dot, embed_tokens, SentenceVector};
use crate::error::{Error, Result};
use crate::pipeline::{Origin, PseudoPair, PseudoParallelState};
use crate::wmd::{NBow, WordMover};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Similarity threshold; a pair is kept when its similarity is strictly greater.
    pub gamma: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { gamma: 0.7 }
    }
}

impl MatchConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        let cfg = MatchConfig { gamma };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub source_id: usize,
    pub target_id: usize,
    pub similarity: f64,
}

/// Index of the best target by cosine similarity; ties go to the lowest index.
pub fn nearest_neighbor(q: &SentenceVector, targets: &[SentenceVector]) -> Result<(usize, f64)> {
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let qn = dot(&q.values, &q.values);
    if qn == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut best: Option<(usize, f64)> = None;
    for (id, t) in targets.iter().enumerate() {
        if t.values.len() != q.values.len() {
            return Err(Error::DimensionMismatch {
                left: q.values.len(),
                right: t.values.len(),
            });
        }
        let tn = dot(&t.values, &t.values);
        if tn == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let sim = cosine_with_sq_norms(&q.values, qn, &t.values, tn);
        if best.is_none_or(|(_, b)| sim > b) {
            best = Some((id, sim));
        }
    }
    Ok(best.expect("non-empty targets"))
}

struct IndexEntry {
    id: usize,
    values: Vec<f64>,
    sq_norm: f64,
}

/// Searchable view of the target corpus.
///
/// Sentences without a usable embedding (zero coverage, zero norm) or without
/// a bag of words are left out: they could never produce a finite cost.
pub struct TargetIndex<'c> {
    corpus: &'c Corpus,
    entries: Vec<IndexEntry>,
    excluded: usize,
}

impl<'c> TargetIndex<'c> {
    pub fn build(corpus: &'c Corpus, wm: &WordMover<'_>) -> Self {
        let built: Vec<Option<IndexEntry>> = corpus
            .sentences
            .par_iter()
            .map(|s| {
                let v = embed_tokens(&s.tokens, wm.table)?;
                let n = dot(&v.values, &v.values);
                if n == 0.0 || wm.nbow(&s.tokens).is_none() {
                    return None;
                }
                Some(IndexEntry {
                    id: s.id,
                    values: v.values,
                    sq_norm: n,
                })
            })
            .collect();
        let excluded = built.iter().filter(|e| e.is_none()).count();
        if excluded > 0 {
            log::warn!("{excluded} target sentence(s) excluded from matching: no usable embedding");
        }
        TargetIndex {
            corpus,
            entries: built.into_iter().flatten().collect(),
            excluded,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn excluded(&self) -> usize {
        self.excluded
    }

    pub fn sentence(&self, id: usize) -> &'c Sentence {
        &self.corpus.sentences[id]
    }

    /// Exhaustive scan in id order with strict improvement, so the lowest id wins ties.
    pub fn nearest(&self, query: &[f64]) -> Option<(usize, f64)> {
        let qn = dot(query, query);
        if qn == 0.0 {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for e in &self.entries {
            let sim = cosine_with_sq_norms(query, qn, &e.values, e.sq_norm);
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((e.id, sim));
            }
        }
        best
    }
}

/// Nearest neighbors for every source sentence that has a usable embedding.
/// No threshold is applied here.
pub fn match_sources(x: &Corpus, index: &TargetIndex<'_>, wm: &WordMover<'_>) -> Vec<MatchResult> {
    x.sentences
        .par_iter()
        .filter_map(|s| {
            wm.nbow(&s.tokens)?;
            let v = embed_tokens(&s.tokens, wm.table)?;
            let (target_id, similarity) = index.nearest(&v.values)?;
            Some(MatchResult {
                source_id: s.id,
                target_id,
                similarity,
            })
        })
        .collect()
}

/// Initial pseudo-parallel corpus: sources whose best similarity exceeds gamma,
/// in ascending source id order, each with its WMD cost.
pub fn build_initial_pairs(x: &Corpus, y: &Corpus, wm: &WordMover<'_>, cfg: &MatchConfig) -> Result<PseudoParallelState> {
    let index = TargetIndex::build(y, wm);
    initial_pairs_with_index(x, &index, wm, cfg).map(|(state, _)| state)
}

pub(crate) fn initial_pairs_with_index(
    x: &Corpus,
    index: &TargetIndex<'_>,
    wm: &WordMover<'_>,
    cfg: &MatchConfig,
) -> Result<(PseudoParallelState, Vec<MatchResult>)> {
    cfg.validate()?;
    if index.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let all = match_sources(x, index, wm);
    let skipped = x.len() - all.len();
    if skipped > 0 {
        log::warn!("{skipped} source sentence(s) skipped: no usable embedding");
    }
    let kept: Vec<MatchResult> = all.into_iter().filter(|m| m.similarity > cfg.gamma).collect();
    if kept.is_empty() {
        return Err(Error::NoMatches { gamma: cfg.gamma });
    }
    let pairs = kept
        .par_iter()
        .map(|m| {
            let src = &x.sentences[m.source_id];
            let tgt = index.sentence(m.target_id);
            let cost = wm
                .distance(&src.tokens, &tgt.tokens)
                .ok_or_else(|| Error::Internal(format!("undefined WMD for indexed pair {}", m.source_id)))?;
            Ok(PseudoPair {
                src_id: src.id,
                src: src.clone(),
                tgt: tgt.clone(),
                cost,
                origin: Origin::Match,
                iter_set: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        PseudoParallelState {
            pairs,
            iteration: 0,
            update_rate_history: Vec::new(),
        },
        kept,
    ))
}

/// Distinguishes a meaningful improvement from a tie under the centroid bound.
fn bound_rules_out(bound: f64, cost: f64) -> bool {
    bound > cost + 1e-12 * cost.max(1.0)
}

/// Re-matches every current target against the target corpus.
///
/// A pair takes the retrieved sentence only when it has a strictly lower WMD
/// to the source. Returns the new state and the number of replaced pairs.
pub fn rematch_pairs(
    state: &PseudoParallelState,
    index: &TargetIndex<'_>,
    wm: &WordMover<'_>,
    iteration: usize,
) -> (PseudoParallelState, usize) {
    let updated: Vec<Option<PseudoPair>> = state
        .pairs
        .par_iter()
        .map(|p| {
            let v = embed_tokens(&p.tgt.tokens, wm.table)?;
            let (mid, _) = index.nearest(&v.values)?;
            let candidate = index.sentence(mid);
            if candidate.same_tokens(&p.tgt) {
                return None;
            }
            let src_bow: NBow = wm.nbow(&p.src.tokens)?;
            let cand_bow = wm.nbow(&candidate.tokens)?;
            if let Some(lb) = wm.lower_bound(&src_bow, &cand_bow) {
                if bound_rules_out(lb, p.cost) {
                    return None;
                }
            }
            let cost = wm.between(&src_bow, &cand_bow);
            (cost < p.cost).then(|| PseudoPair {
                src_id: p.src_id,
                src: p.src.clone(),
                tgt: candidate.clone(),
                cost,
                origin: Origin::Match,
                iter_set: iteration,
            })
        })
        .collect();
    let mut next = state.clone();
    let mut changed = 0;
    for (slot, new) in next.pairs.iter_mut().zip(updated) {
        if let Some(new) = new {
            *slot = new;
            changed += 1;
        }
    }
    (next, changed)
}
