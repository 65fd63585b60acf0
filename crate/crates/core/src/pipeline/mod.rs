//! The iterative matching-and-translation driver.
//!
//! Iteration 0 builds the initial pairs by thresholded nearest-neighbor
//! matching, trains a model on them and refines. Every later iteration
//! re-matches, retrains from scratch and refines. A target is replaced only by
//! a candidate with strictly lower WMD to its source, so per-pair and total
//! costs never increase. The loop stops when the fraction of changed targets
//! in an iteration drops below the update threshold, or after `max_iters`
//! iterations.

mod checkpoint;
mod state;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::corpus::Corpus;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::matching::{initial_pairs_with_index, rematch_pairs, MatchConfig, TargetIndex};
use crate::translate::{Backend, BackendSpec, TranslationModel};
use crate::wmd::{WmdOptions, WordMover};

pub use checkpoint::{checkpoint_path, read_checkpoint, write_checkpoint, Checkpoint};
pub use state::{total_cost, update_rate, Origin, PseudoPair, PseudoParallelState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub gamma: f64,
    /// Hard cap on the number of iterations (iteration indices `0..max_iters`).
    pub max_iters: usize,
    /// Convergence when an iteration's update rate is strictly below this.
    pub update_threshold: f64,
    pub seed: u64,
    pub backend: BackendSpec,
    pub wmd: WmdOptions,
    #[serde(skip)]
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gamma: 0.7,
            max_iters: 5,
            update_threshold: 0.005,
            seed: 42,
            backend: BackendSpec::Builtin,
            wmd: WmdOptions::default(),
            checkpoint_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        MatchConfig::new(self.gamma)?;
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.update_threshold > 0.0 && self.update_threshold < 1.0) {
            return Err(Error::Config(format!(
                "update threshold must lie in (0, 1), got {}",
                self.update_threshold
            )));
        }
        Ok(())
    }

    /// Short digest of every setting that influences results.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    InitialMatch,
    Rematch,
    Refine,
}

/// One state transition, reported to observers before it is committed.
pub struct PhaseEvent<'a> {
    pub iteration: usize,
    pub phase: Phase,
    pub before: &'a PseudoParallelState,
    pub after: &'a PseudoParallelState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub pairs: usize,
    pub rematch_updates: usize,
    pub refine_updates: usize,
    pub rematch_rate: f64,
    pub refine_rate: f64,
    pub update_rate: f64,
    pub total_cost: f64,
}

pub struct ImatRun {
    /// Model trained on the final state.
    pub model: Box<dyn TranslationModel>,
    pub state: PseudoParallelState,
    pub report: EvalReport,
    pub converged: bool,
}

/// Replaces each target with the model's translation of its source when that
/// translation has a strictly lower WMD. Translations identical to their
/// source are never accepted. Returns the new state and the number
/// of replaced pairs; `state` is untouched on error.
pub fn refine_step(
    state: &PseudoParallelState,
    model: &dyn TranslationModel,
    wm: &WordMover<'_>,
    iteration: usize,
) -> Result<(PseudoParallelState, usize)> {
    let sources = state.sources();
    let translations = model.translate_batch(&sources)?;
    if translations.len() != sources.len() {
        return Err(Error::Internal(format!(
            "backend returned {} translations for {} sources",
            translations.len(),
            sources.len()
        )));
    }
    let costs: Vec<Option<f64>> = state
        .pairs
        .par_iter()
        .zip(translations.par_iter())
        .map(|(p, trans)| {
            // a verbatim copy of the source cannot carry the other attribute
            if trans.same_tokens(&p.tgt) || trans.same_tokens(&p.src) {
                return None;
            }
            wm.distance(&p.src.tokens, &trans.tokens).filter(|&c| c < p.cost)
        })
        .collect();
    let mut next = state.clone();
    let mut changed = 0;
    for ((slot, trans), cost) in next.pairs.iter_mut().zip(translations).zip(costs) {
        if let Some(cost) = cost {
            slot.tgt = trans;
            slot.cost = cost;
            slot.origin = Origin::Trans;
            slot.iter_set = iteration;
            changed += 1;
        }
    }
    Ok((next, changed))
}

fn check_monotone(before: &PseudoParallelState, after: &PseudoParallelState) -> Result<()> {
    for (b, a) in before.pairs.iter().zip(&after.pairs) {
        if a.cost > b.cost {
            return Err(Error::Internal(format!(
                "cost of pair {} increased from {} to {}",
                b.src_id, b.cost, a.cost
            )));
        }
    }
    Ok(())
}

fn corpus_digest(c: &Corpus) -> String {
    let digest = Sha256::digest(c.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct RunFiles<'a> {
    dir: &'a Path,
    manifest_head: serde_json::Value,
}

impl RunFiles<'_> {
    fn write_manifest(&self, traces: &[IterationTrace], converged: bool, finished: bool) -> Result<()> {
        let mut m = self.manifest_head.clone();
        m["iterations"] = serde_json::to_value(traces).expect("traces serialize");
        m["converged"] = json!(converged);
        m["finished"] = json!(finished);
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        text.push('\n');
        write_atomic(&self.dir.join("manifest.json"), text.as_bytes())
    }
}

/// Runs the full loop with the backend named in `cfg`.
pub fn run_imat(x: &Corpus, y: &Corpus, table: &EmbeddingTable, cfg: &PipelineConfig) -> Result<ImatRun> {
    let backend = cfg.backend.build();
    run_imat_with(x, y, table, cfg, backend.as_ref(), &mut |_| {})
}

/// Runs the full loop with an explicit backend, reporting every phase to `observer`.
pub fn run_imat_with(
    x: &Corpus,
    y: &Corpus,
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
    backend: &dyn Backend,
    observer: &mut dyn FnMut(&PhaseEvent<'_>),
) -> Result<ImatRun> {
    cfg.validate()?;
    let config_hash = cfg.hash();
    let wm = WordMover::new(table, &cfg.wmd);
    let index = TargetIndex::build(y, &wm);

    let files = match &cfg.checkpoint_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            Some(RunFiles {
                dir,
                manifest_head: json!({
                    "config": cfg,
                    "config_hash": config_hash,
                    "seed": cfg.seed,
                    "backend": backend.name(),
                    "source": {
                        "path": x.source_path,
                        "attribute": x.attribute,
                        "sentences": x.len(),
                        "sha256": corpus_digest(x),
                    },
                    "target": {
                        "path": y.source_path,
                        "attribute": y.attribute,
                        "sentences": y.len(),
                        "sha256": corpus_digest(y),
                    },
                    "embeddings": { "dim": table.dim(), "entries": table.len() },
                }),
            })
        }
        None => None,
    };

    let match_cfg = MatchConfig::new(cfg.gamma)?;
    let (mut state, matches) = initial_pairs_with_index(x, &index, &wm, &match_cfg)?;
    log::info!(
        "initial matching kept {} of {} source sentences (gamma {})",
        matches.len(),
        x.len(),
        cfg.gamma
    );
    observer(&PhaseEvent {
        iteration: 0,
        phase: Phase::InitialMatch,
        before: &PseudoParallelState::default(),
        after: &state,
    });

    let n = state.len() as f64;
    let mut traces = Vec::new();
    let mut converged = false;
    for t in 0..cfg.max_iters {
        let start = state.clone();
        let mut rematched = 0;
        if t > 0 {
            let (next, changed) = rematch_pairs(&state, &index, &wm, t);
            check_monotone(&state, &next)?;
            observer(&PhaseEvent {
                iteration: t,
                phase: Phase::Rematch,
                before: &state,
                after: &next,
            });
            state = next;
            rematched = changed;
        }

        let model = backend.train(&state.training_pairs(), cfg.seed)?;
        let (next, refined) = refine_step(&state, model.as_ref(), &wm, t)?;
        check_monotone(&state, &next)?;
        observer(&PhaseEvent {
            iteration: t,
            phase: Phase::Refine,
            before: &state,
            after: &next,
        });
        state = next;

        let rate = update_rate(&start, &state)?;
        state.iteration = t;
        state.update_rate_history.push(rate);
        let trace = IterationTrace {
            iteration: t,
            pairs: state.len(),
            rematch_updates: rematched,
            refine_updates: refined,
            rematch_rate: rematched as f64 / n,
            refine_rate: refined as f64 / n,
            update_rate: rate,
            total_cost: total_cost(&state),
        };
        log::info!(
            "iteration {t}: {rematched} re-matched, {refined} refined, update rate {rate:.6}, total cost {:.6}",
            trace.total_cost
        );
        traces.push(trace);
        converged = rate < cfg.update_threshold;

        if let Some(files) = &files {
            write_checkpoint(&state, &config_hash, &checkpoint_path(files.dir, t))?;
            files.write_manifest(&traces, converged, false)?;
        }
        if converged {
            break;
        }
    }

    let model = backend.train(&state.training_pairs(), cfg.seed)?;
    if let Some(files) = &files {
        let mut meta = serde_json::to_string_pretty(&model.metadata()).expect("metadata serializes");
        meta.push('\n');
        write_atomic(&files.dir.join("final_model.meta"), meta.as_bytes())?;
        files.write_manifest(&traces, converged, true)?;
    }

    Ok(ImatRun {
        model,
        state,
        report: EvalReport {
            iterations: traces,
            ..EvalReport::default()
        },
        converged,
    })
}
