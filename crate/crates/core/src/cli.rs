//! The `imat` command-line front end.
//!
//! Every optional flag can also be given in a `key = value` file passed with
//! `--config`; flags on the command line take precedence. Keys are the long
//! flag names without the leading dashes (`max-iters` or `max_iters`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::corpus::{load_corpus, AttributeLabel, Corpus, Sentence, TokenizeConfig};
use crate::embedding::{load_embeddings, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::{bleu_files, perplexity, train_classifier, train_lm, EvalReport};
use crate::matching::{initial_pairs_with_index, MatchConfig, TargetIndex};
use crate::pipeline::{checkpoint_path, run_imat, write_checkpoint, PipelineConfig};
use crate::translate::BackendSpec;
use crate::wmd::{GroundCost, WmdOptions, WordMover};

#[derive(Debug, Parser)]
#[command(name = "imat", version, about = "Unsupervised attribute rewriting by iterative matching and translation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full matching and translation loop.
    Run(RunArgs),
    /// Print the Word Mover's Distance between two token strings.
    Wmd(WmdArgs),
    /// Evaluate outputs.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Build and write the initial pairs only.
    Match(MatchArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Source-attribute corpus, one sentence per line
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Target-attribute corpus, one sentence per line
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Word vectors in text format
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Similarity threshold for initial matching [default: 0.7]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Seed recorded in the run configuration [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to IMAT_THREADS [default: auto]
    #[arg(long)]
    pub threads: Option<usize>,
    /// WMD ground cost: euclidean|cosine [default: euclidean]
    #[arg(long)]
    pub cost: Option<GroundCost>,
    /// File of tokens to leave out of WMD, whitespace separated [default: none]
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    /// Label of the source attribute [default: source]
    #[arg(long)]
    pub source_attr: Option<String>,
    /// Label of the target attribute [default: target]
    #[arg(long)]
    pub target_attr: Option<String>,
    /// key = value file with defaults for any of these flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CorpusArgs,
    /// Maximum number of iterations [default: 5]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Stop when the update rate falls below this [default: 0.005]
    #[arg(long)]
    pub update_threshold: Option<f64>,
    /// Translation backend: builtin|external:CMD [default: builtin]
    #[arg(long)]
    pub backend: Option<BackendSpec>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub common: CorpusArgs,
}

#[derive(Debug, Args)]
pub struct WmdArgs {
    /// First sentence
    #[arg(long)]
    pub a: String,
    /// Second sentence
    #[arg(long)]
    pub b: String,
    /// Word vectors in text format
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Ground cost: euclidean|cosine [default: euclidean]
    #[arg(long)]
    pub cost: Option<GroundCost>,
    /// File of tokens to leave out, whitespace separated [default: none]
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Corpus BLEU-4 against one or more line-aligned reference files.
    Bleu {
        /// Hypotheses, one per line
        #[arg(long)]
        hyp: PathBuf,
        /// Comma-separated reference files
        #[arg(long, value_delimiter = ',', required = true)]
        refs: Vec<PathBuf>,
    },
    /// Attribute accuracy under a naive-Bayes classifier.
    Acc {
        /// Training sentences of class `pos`
        #[arg(long)]
        train_pos: PathBuf,
        /// Training sentences of class `neg`
        #[arg(long)]
        train_neg: PathBuf,
        /// Sentences to classify
        #[arg(long)]
        input: PathBuf,
        /// Expected label: pos|neg
        #[arg(long)]
        expect: String,
    },
    /// Perplexity under a trigram language model.
    Ppl {
        /// Training corpus
        #[arg(long)]
        train: PathBuf,
        /// Sentences to score
        #[arg(long)]
        input: PathBuf,
    },
}

/// Parses argv, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Match(args) => cmd_match(args),
        Command::Wmd(args) => cmd_wmd(args),
        Command::Eval(cmd) => cmd_eval(cmd),
    }
}

/// Entries of a `key = value` file; keys are normalized to dashes.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        // whole-line comments only, values may contain '#'
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{}:{}: expected `key = value`", path.display(), i + 1)))?;
        let v = v.trim();
        let v = v.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(v);
        map.insert(k.trim().replace('_', "-"), v.to_string());
    }
    Ok(map)
}

/// Config-file values, consumed as flags are resolved.
struct FileValues(BTreeMap<String, String>);

impl FileValues {
    /// Reads the file and rejects any key outside `allowed`.
    fn load(path: Option<&Path>, allowed: &[&[&str]]) -> Result<Self> {
        let map = match path {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        if let Some(k) = map.keys().find(|k| !allowed.iter().any(|set| set.contains(&k.as_str()))) {
            return Err(Error::Config(format!("unknown config key {k:?}")));
        }
        Ok(FileValues(map))
    }

    /// Flag value if given, else the file's, parsed.
    fn take<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let from_file = self.0.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|v| v.parse().map_err(|e| Error::Config(format!("config key {key}: {e}"))))
            .transpose()
    }

}

const COMMON_KEYS: &[&str] = &[
    "source", "target", "embeddings", "out", "gamma", "seed", "threads", "cost", "stoplist", "source-attr", "target-attr",
];
const RUN_KEYS: &[&str] = &["max-iters", "update-threshold", "backend"];

struct Common {
    source: PathBuf,
    target: PathBuf,
    embeddings: PathBuf,
    out: PathBuf,
    gamma: f64,
    seed: u64,
    threads: Option<usize>,
    wmd: WmdOptions,
    source_attr: String,
    target_attr: String,
}

fn required(key: &str, v: Option<PathBuf>) -> Result<PathBuf> {
    v.ok_or_else(|| Error::Config(format!("missing required flag --{key}")))
}

fn resolve_common(a: CorpusArgs, file: &mut FileValues) -> Result<Common> {
    let stoplist = file.take("stoplist", a.stoplist)?;
    let mut threads = file.take("threads", a.threads)?;
    if threads.is_none() {
        if let Ok(v) = std::env::var("IMAT_THREADS") {
            threads = Some(v.trim().parse().map_err(|e| Error::Config(format!("IMAT_THREADS: {e}")))?);
        }
    }
    if threads == Some(0) {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    Ok(Common {
        source: required("source", file.take("source", a.source)?)?,
        target: required("target", file.take("target", a.target)?)?,
        embeddings: required("embeddings", file.take("embeddings", a.embeddings)?)?,
        out: required("out", file.take("out", a.out)?)?,
        gamma: file.take("gamma", a.gamma)?.unwrap_or(0.7),
        seed: file.take("seed", a.seed)?.unwrap_or(42),
        threads,
        wmd: WmdOptions {
            cost: file.take("cost", a.cost)?.unwrap_or_default(),
            stoplist: stoplist.as_deref().map(read_stoplist).transpose()?,
        },
        source_attr: file.take("source-attr", a.source_attr)?.unwrap_or_else(|| "source".into()),
        target_attr: file.take("target-attr", a.target_attr)?.unwrap_or_else(|| "target".into()),
    })
}

fn read_stoplist(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.split_whitespace().map(str::to_lowercase).collect())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn load_inputs(c: &Common) -> Result<(Corpus, Corpus, EmbeddingTable)> {
    let tok = TokenizeConfig::default();
    let x = load_corpus(&c.source, AttributeLabel::new(c.source_attr.clone()), &tok)?;
    let y = load_corpus(&c.target, AttributeLabel::new(c.target_attr.clone()), &tok)?;
    let table = load_embeddings(&c.embeddings)?;
    Ok((x, y, table))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let mut text = String::new();
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut file = FileValues::load(args.common.config.as_deref(), &[COMMON_KEYS, RUN_KEYS])?;
    let max_iters = file.take("max-iters", args.max_iters)?.unwrap_or(5);
    let update_threshold = file.take("update-threshold", args.update_threshold)?.unwrap_or(0.005);
    let backend = file.take("backend", args.backend)?.unwrap_or_default();
    let c = resolve_common(args.common, &mut file)?;

    let cfg = PipelineConfig {
        gamma: c.gamma,
        max_iters,
        update_threshold,
        seed: c.seed,
        backend,
        wmd: c.wmd.clone(),
        checkpoint_dir: Some(c.out.clone()),
    };
    cfg.validate()?;
    let (x, y, table) = load_inputs(&c)?;
    create_dir(&c.out)?;

    with_threads(c.threads, || {
        let run = run_imat(&x, &y, &table, &cfg)?;
        let sources = run.state.sources();
        let outputs = run.model.translate_batch(&sources)?;
        write_lines(&c.out.join("transferred.txt"), outputs.iter().map(Sentence::text))?;
        write_lines(&c.out.join("transferred.ids"), run.state.pairs.iter().map(|p| p.src_id.to_string()))?;
        println!(
            "pairs {} iterations {} converged {}",
            run.state.len(),
            run.report.iterations.len(),
            run.converged
        );
        Ok(())
    })
}

fn cmd_match(args: MatchArgs) -> Result<()> {
    let mut file = FileValues::load(args.common.config.as_deref(), &[COMMON_KEYS])?;
    let c = resolve_common(args.common, &mut file)?;
    let match_cfg = MatchConfig::new(c.gamma)?;
    let cfg = PipelineConfig {
        gamma: c.gamma,
        seed: c.seed,
        wmd: c.wmd.clone(),
        ..PipelineConfig::default()
    };
    let (x, y, table) = load_inputs(&c)?;
    create_dir(&c.out)?;

    with_threads(c.threads, || {
        let wm = WordMover::new(&table, &cfg.wmd);
        let index = TargetIndex::build(&y, &wm);
        let (state, matches) = initial_pairs_with_index(&x, &index, &wm, &match_cfg)?;
        write_checkpoint(&state, &cfg.hash(), &checkpoint_path(&c.out, 0))?;
        let mean = matches.iter().map(|m| m.similarity).sum::<f64>() / matches.len() as f64;
        println!("pairs {}", matches.len());
        println!("mean_similarity {mean:.6}");
        Ok(())
    })
}

fn cmd_wmd(args: WmdArgs) -> Result<()> {
    let table = load_embeddings(&args.embeddings)?;
    let opts = WmdOptions {
        cost: args.cost.unwrap_or_default(),
        stoplist: args.stoplist.as_deref().map(read_stoplist).transpose()?,
    };
    let wm = WordMover::new(&table, &opts);
    let (a, b) = (Sentence::parse(0, &args.a), Sentence::parse(1, &args.b));
    match wm.distance(&a.tokens, &b.tokens) {
        Some(d) => println!("{d:.9}"),
        None => println!("undefined"),
    }
    Ok(())
}

fn cmd_eval(cmd: EvalCommand) -> Result<()> {
    let tok = TokenizeConfig::default();
    let report = match cmd {
        EvalCommand::Bleu { hyp, refs } => EvalReport {
            bleu: Some(bleu_files(&hyp, &refs)?),
            ..Default::default()
        },
        EvalCommand::Acc {
            train_pos,
            train_neg,
            input,
            expect,
        } => {
            if expect != "pos" && expect != "neg" {
                return Err(Error::Config(format!("--expect must be pos or neg, got {expect:?}")));
            }
            let pos = load_corpus(&train_pos, AttributeLabel::new("pos"), &tok)?;
            let neg = load_corpus(&train_neg, AttributeLabel::new("neg"), &tok)?;
            let clf = train_classifier(&pos, &neg)?;
            let inputs = load_corpus(&input, AttributeLabel::new(expect.clone()), &tok)?;
            EvalReport {
                accuracy: Some(clf.accuracy(&inputs.sentences, &AttributeLabel::new(expect))?),
                ..Default::default()
            }
        }
        EvalCommand::Ppl { train, input } => {
            let train = load_corpus(&train, AttributeLabel::new("train"), &tok)?;
            let lm = train_lm(&train.sentences)?;
            let inputs = load_corpus(&input, AttributeLabel::new("input"), &tok)?;
            EvalReport {
                perplexity: Some(perplexity(&lm, &inputs.sentences)?),
                ..Default::default()
            }
        }
    };
    println!("{}", report.to_json());
    Ok(())
}
