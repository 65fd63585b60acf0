//! Iterative matching and translation for unsupervised attribute rewriting.
//!
//! Given two non-parallel corpora that differ in one attribute (sentiment,
//! formality, ...), the engine builds a pseudo-parallel corpus by
//! nearest-neighbor matching over averaged word embeddings, trains a
//! translation model on it, and refines the pairs round after round. A pair's
//! target is only ever replaced by a candidate with a strictly lower Word
//! Mover's Distance to its source, so the total transport cost of the
//! pseudo-parallel corpus never increases.
//!
//! Module map:
//!
//! - [`corpus`]: line-oriented corpora, tokenization, vocabulary
//! - [`embedding`]: text-format word vectors, sentence vectors, cosine
//! - [`matching`]: exact nearest-neighbor matching and re-matching
//! - [`wmd`]: Word Mover's Distance on top of an exact min-cost-flow solver
//! - [`translate`]: pluggable translation backends (lexical EM, subprocess)
//! - [`pipeline`]: the iterative driver, state, checkpoints
//! - [`eval`]: BLEU, naive-Bayes attribute classifier, trigram perplexity
//! - [`cli`]: the `imat` command-line front end

pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod matching;
pub mod pipeline;
pub mod translate;
pub mod wmd;

pub use corpus::{build_vocab, load_aligned_lines, load_corpus, tokenize, AttributeLabel, Corpus, Sentence, Token, TokenizeConfig, Vocabulary};
pub use embedding::{cosine_similarity, load_embeddings, sentence_embedding, EmbeddingTable, SentenceVector};
pub use error::{Error, Result};
pub use matching::{build_initial_pairs, nearest_neighbor, rematch_pairs, MatchConfig, MatchResult};
pub use pipeline::{
    refine_step, run_imat, total_cost, update_rate, ImatRun, Origin, PipelineConfig, PseudoPair,
    PseudoParallelState,
};
pub use translate::{translate, Backend, BackendSpec, TranslateError, TranslationModel};
pub use wmd::{wmd, GroundCost, NBow, WmdOptions, WordMover};
