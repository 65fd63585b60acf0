//! C interface to the imat engine.
//!
//! Every function returns an `int` status: `IMAT_OK`, `IMAT_UNDEFINED` for a
//! well-formed request without a value, or a negative error code. On error the
//! message is available from `imat_last_error` on the same thread until the
//! next call. Strings are NUL-terminated UTF-8. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use imat::eval::bleu_files;
use imat::{
    cosine_similarity, load_corpus, load_embeddings, run_imat, sentence_embedding, total_cost, wmd, AttributeLabel,
    BackendSpec, EmbeddingTable, Error, PipelineConfig, Sentence, TokenizeConfig,
};

pub const IMAT_OK: c_int = 0;
/// The value does not exist, e.g. WMD with no covered token on one side.
pub const IMAT_UNDEFINED: c_int = 1;
/// Null pointer or non-UTF-8 string argument.
pub const IMAT_ERR_ARGUMENT: c_int = -1;
pub const IMAT_ERR_CONFIG: c_int = -2;
pub const IMAT_ERR_IO: c_int = -3;
pub const IMAT_ERR_CORPUS: c_int = -4;
pub const IMAT_ERR_EMBEDDING: c_int = -5;
/// No target sentences, or no source sentence above the threshold.
pub const IMAT_ERR_MATCH: c_int = -6;
pub const IMAT_ERR_TRANSLATE: c_int = -7;
pub const IMAT_ERR_CHECKPOINT: c_int = -8;
pub const IMAT_ERR_EVAL: c_int = -9;
pub const IMAT_ERR_INTERNAL: c_int = -10;
/// A Rust panic was caught at the boundary.
pub const IMAT_ERR_PANIC: c_int = -11;

/// Word vectors loaded from a text file.
pub struct ImatEmbeddings {
    table: EmbeddingTable,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ImatRunConfig {
    pub source: *const c_char,
    pub target: *const c_char,
    pub embeddings: *const c_char,
    /// Checkpoint directory, or null to skip writing.
    pub out_dir: *const c_char,
    /// `builtin` or `external:CMD`; null means builtin.
    pub backend: *const c_char,
    pub gamma: f64,
    pub max_iters: u32,
    pub update_threshold: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ImatRunSummary {
    pub pairs: u64,
    pub iterations: u32,
    pub converged: bool,
    pub total_cost: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(c_int, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(-e.exit_code(), e.to_string())
    }
}

fn argument(msg: impl Into<String>) -> Failure {
    Failure(IMAT_ERR_ARGUMENT, msg.into())
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<c_int, Failure>) -> c_int {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(code)) => code,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            IMAT_ERR_PANIC
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(argument(format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| argument(format!("{name} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn handle<'a>(p: *const ImatEmbeddings) -> Result<&'a EmbeddingTable, Failure> {
    p.as_ref().map(|h| &h.table).ok_or_else(|| argument("embeddings handle is null"))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or_else(|| argument(format!("{name} is null")))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn imat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads word vectors; on success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn imat_embeddings_load(path: *const c_char, out: *mut *mut ImatEmbeddings) -> c_int {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let table = load_embeddings(Path::new(path))?;
        *out = Box::into_raw(Box::new(ImatEmbeddings { table }));
        Ok(IMAT_OK)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `emb` must come from `imat_embeddings_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn imat_embeddings_free(emb: *mut ImatEmbeddings) {
    if !emb.is_null() {
        drop(Box::from_raw(emb));
    }
}

/// Vector dimension, or 0 for a null handle.
///
/// # Safety
/// `emb` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn imat_embeddings_dim(emb: *const ImatEmbeddings) -> usize {
    emb.as_ref().map_or(0, |h| h.table.dim())
}

/// Word Mover's Distance between two whitespace-tokenized strings.
/// Returns `IMAT_UNDEFINED` when either side has no token with a vector.
///
/// # Safety
/// Pointers must be valid; `emb` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn imat_wmd(
    emb: *const ImatEmbeddings,
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
) -> c_int {
    guard(|| {
        let table = handle(emb)?;
        let out = out_arg(out, "out")?;
        let (a, b) = (Sentence::parse(0, str_arg(a, "a")?), Sentence::parse(1, str_arg(b, "b")?));
        match wmd(&a, &b, table) {
            Some(d) => {
                *out = d;
                Ok(IMAT_OK)
            }
            None => Ok(IMAT_UNDEFINED),
        }
    })
}

/// Cosine similarity of the averaged word vectors of two strings.
/// Returns `IMAT_UNDEFINED` when either side has no token with a vector.
///
/// # Safety
/// Pointers must be valid; `emb` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn imat_sentence_similarity(
    emb: *const ImatEmbeddings,
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
) -> c_int {
    guard(|| {
        let table = handle(emb)?;
        let out = out_arg(out, "out")?;
        let (a, b) = (Sentence::parse(0, str_arg(a, "a")?), Sentence::parse(1, str_arg(b, "b")?));
        let (Some(u), Some(v)) = (sentence_embedding(&a, table), sentence_embedding(&b, table)) else {
            return Ok(IMAT_UNDEFINED);
        };
        match cosine_similarity(&u, &v) {
            Ok(c) => {
                *out = c;
                Ok(IMAT_OK)
            }
            Err(Error::ZeroNorm) => Ok(IMAT_UNDEFINED),
            Err(e) => Err(e.into()),
        }
    })
}

/// Corpus BLEU (0 to 100) of a hypothesis file against `n_refs` line-aligned
/// reference files.
///
/// # Safety
/// `refs` must point to `n_refs` valid C strings.
#[no_mangle]
pub unsafe extern "C" fn imat_bleu_files(
    hyp: *const c_char,
    refs: *const *const c_char,
    n_refs: usize,
    out: *mut f64,
) -> c_int {
    guard(|| {
        let out = out_arg(out, "out")?;
        let hyp = str_arg(hyp, "hyp")?;
        if refs.is_null() || n_refs == 0 {
            return Err(argument("at least one reference file is required"));
        }
        let paths = std::slice::from_raw_parts(refs, n_refs)
            .iter()
            .map(|&p| str_arg(p, "reference path").map(PathBuf::from))
            .collect::<Result<Vec<_>, _>>()?;
        *out = bleu_files(Path::new(hyp), &paths)?.value;
        Ok(IMAT_OK)
    })
}

/// Defaults for every numeric field; path fields are null.
#[no_mangle]
pub extern "C" fn imat_run_config_default() -> ImatRunConfig {
    let d = PipelineConfig::default();
    ImatRunConfig {
        source: ptr::null(),
        target: ptr::null(),
        embeddings: ptr::null(),
        out_dir: ptr::null(),
        backend: ptr::null(),
        gamma: d.gamma,
        max_iters: d.max_iters as u32,
        update_threshold: d.update_threshold,
        seed: d.seed,
    }
}

/// Runs the full loop on two corpus files.
///
/// # Safety
/// `config` and `summary` must be valid pointers; string fields must be null
/// where allowed or valid C strings.
#[no_mangle]
pub unsafe extern "C" fn imat_run(config: *const ImatRunConfig, summary: *mut ImatRunSummary) -> c_int {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| argument("config is null"))?;
        let summary = out_arg(summary, "summary")?;
        let backend = match opt_str_arg(c.backend, "backend")? {
            Some(s) => s.parse::<BackendSpec>().map_err(|e| Failure(IMAT_ERR_CONFIG, e))?,
            None => BackendSpec::Builtin,
        };
        let cfg = PipelineConfig {
            gamma: c.gamma,
            max_iters: c.max_iters as usize,
            update_threshold: c.update_threshold,
            seed: c.seed,
            backend,
            checkpoint_dir: opt_str_arg(c.out_dir, "out_dir")?.map(PathBuf::from),
            ..PipelineConfig::default()
        };
        cfg.validate()?;
        let tok = TokenizeConfig::default();
        let x = load_corpus(Path::new(str_arg(c.source, "source")?), AttributeLabel::new("source"), &tok)?;
        let y = load_corpus(Path::new(str_arg(c.target, "target")?), AttributeLabel::new("target"), &tok)?;
        let table = load_embeddings(Path::new(str_arg(c.embeddings, "embeddings")?))?;
        let run = run_imat(&x, &y, &table, &cfg)?;
        *summary = ImatRunSummary {
            pairs: run.state.len() as u64,
            iterations: run.report.iterations.len() as u32,
            converged: run.converged,
            total_cost: total_cost(&run.state),
        };
        Ok(IMAT_OK)
    })
}
