//! Synthetic two-style corpus with a planted antonym lexicon.
//!
//! Both styles are filled from the same templates and content words. Polarity
//! slots take words from one side of a bijective antonym list, so the gold
//! rewrite of a source sentence is known exactly: swap every polarity word for
//! its antonym and keep everything else. Antonyms get nearby vectors, all
//! vectors share a common offset so sentence cosines clear the default
//! threshold, and a fraction of positions carry random noise tokens.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use imat::{AttributeLabel, Corpus, EmbeddingTable, Sentence, TokenizeConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ANTONYMS: [(&str, &str); 20] = [
    ("good", "bad"),
    ("great", "awful"),
    ("tasty", "bland"),
    ("friendly", "rude"),
    ("clean", "dirty"),
    ("fast", "slow"),
    ("fresh", "stale"),
    ("cheap", "pricey"),
    ("warm", "cold"),
    ("love", "hate"),
    ("best", "worst"),
    ("amazing", "terrible"),
    ("polite", "careless"),
    ("helpful", "useless"),
    ("cozy", "cramped"),
    ("quiet", "noisy"),
    ("generous", "stingy"),
    ("perfect", "mediocre"),
    ("happy", "angry"),
    ("recommend", "avoid"),
];

const NOUNS: [&str; 40] = [
    "food", "pizza", "burrito", "staff", "service", "waiter", "place", "room", "coffee", "tea", "bread", "salad",
    "soup", "price", "menu", "table", "music", "bar", "patio", "owner", "chef", "manager", "pasta", "steak", "fries",
    "burger", "sushi", "noodles", "dessert", "cake", "wine", "beer", "view", "parking", "location", "decor", "lunch",
    "dinner", "breakfast", "sauce",
];

const VERBS: [&str; 8] = ["ordered", "tried", "had", "got", "ate", "visited", "saw", "shared"];

// P: polarity slot, N: noun, V: verb
const TEMPLATES: [&str; 12] = [
    "the N was P",
    "P N and P N",
    "i V the N and it was P",
    "the N here is so P",
    "we V a N the N was P",
    "really P N",
    "the N and the N were P",
    "they have P N",
    "this N is P",
    "P N every time",
    "my N was P but the N was P",
    "i V the P N",
];

pub const DIM: usize = 32;
const OFFSET: f64 = 3.0;
const SPREAD: f64 = 0.5;
// Polarity words sit further apart than content words so that sentence
// vectors are pulled toward the antonym slot; at 0.5 some seeds leave an
// antonym whose first matches are too scattered to ever be learned.
const POLARITY_SPREAD: f64 = 1.0;
const ANTONYM_GAP: f64 = 0.15;
const NOISE_TYPES: usize = 300;

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub sentences: usize,
    /// Probability of a noise token after each template token.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            sentences: 2000,
            noise: 0.1,
            seed: 7,
        }
    }
}

pub struct SyntheticTask {
    /// Source style, polarity words from the left column.
    pub x: Corpus,
    /// Target style, generated independently of `x`.
    pub y: Corpus,
    /// Gold rewrite of each source sentence, indexed by source id.
    pub gold: Vec<Sentence>,
    pub heldout_pos: Corpus,
    pub heldout_neg: Corpus,
    pub table: EmbeddingTable,
    pub mapping: BTreeMap<String, String>,
}

fn noise_word(k: usize) -> String {
    format!("zq{k:03}")
}

/// One sentence in both renderings: (positive, negative).
fn sentence(rng: &mut ChaCha8Rng, noise: f64) -> (String, String) {
    let template = TEMPLATES.choose(rng).unwrap();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for slot in template.split(' ') {
        match slot {
            "P" => {
                let (p, n) = ANTONYMS[rng.gen_range(0..ANTONYMS.len())];
                pos.push(p.to_string());
                neg.push(n.to_string());
            }
            "N" => {
                let w = NOUNS.choose(rng).unwrap().to_string();
                pos.push(w.clone());
                neg.push(w);
            }
            "V" => {
                let w = VERBS.choose(rng).unwrap().to_string();
                pos.push(w.clone());
                neg.push(w);
            }
            w => {
                pos.push(w.to_string());
                neg.push(w.to_string());
            }
        }
        if rng.gen_bool(noise) {
            let w = noise_word(rng.gen_range(0..NOISE_TYPES));
            pos.push(w.clone());
            neg.push(w);
        }
    }
    (pos.join(" "), neg.join(" "))
}

fn random_vector(rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    (0..DIM).map(|_| rng.gen_range(-1.0..1.0) * scale).collect()
}

fn word_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v = random_vector(rng, SPREAD);
    v[0] += OFFSET;
    v
}

pub fn embeddings(seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
    for (p, n) in ANTONYMS {
        let mut base = random_vector(&mut rng, POLARITY_SPREAD);
        base[0] += OFFSET;
        let dir = random_vector(&mut rng, 1.0);
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let shift: Vec<f64> = dir.iter().map(|d| d / len * ANTONYM_GAP).collect();
        entries.push((p.into(), base.iter().zip(&shift).map(|(b, s)| b + s).collect()));
        entries.push((n.into(), base.iter().zip(&shift).map(|(b, s)| b - s).collect()));
    }
    let mut plain: Vec<String> = NOUNS.iter().chain(&VERBS).map(|w| w.to_string()).collect();
    for t in TEMPLATES {
        for w in t.split(' ') {
            if !matches!(w, "P" | "N" | "V") && !plain.iter().any(|p| p == w) {
                plain.push(w.to_string());
            }
        }
    }
    plain.extend((0..NOISE_TYPES).map(noise_word));
    for w in plain {
        let v = word_vector(&mut rng);
        entries.push((w, v));
    }
    EmbeddingTable::from_entries(DIM, entries).unwrap()
}

fn corpus(lines: &[String], label: &str) -> Corpus {
    Corpus::from_lines(lines, AttributeLabel::new(label), &TokenizeConfig::default()).unwrap()
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticTask {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.sentences;
    let (xs, gold): (Vec<String>, Vec<String>) = (0..n).map(|_| sentence(&mut rng, cfg.noise)).unzip();
    let ys: Vec<String> = (0..n).map(|_| sentence(&mut rng, cfg.noise).1).collect();
    let hp: Vec<String> = (0..n).map(|_| sentence(&mut rng, cfg.noise).0).collect();
    let hn: Vec<String> = (0..n).map(|_| sentence(&mut rng, cfg.noise).1).collect();
    let x = corpus(&xs, "pos");
    assert_eq!(x.len(), n, "generator lines never exceed the length cap");
    let gold = gold.iter().enumerate().map(|(i, g)| Sentence::parse(i, g)).collect();
    SyntheticTask {
        x,
        y: corpus(&ys, "neg"),
        gold,
        heldout_pos: corpus(&hp, "pos"),
        heldout_neg: corpus(&hn, "neg"),
        table: embeddings(cfg.seed),
        mapping: ANTONYMS.iter().map(|(p, n)| (p.to_string(), n.to_string())).collect(),
    }
}

pub struct TaskFiles {
    pub source: PathBuf,
    pub target: PathBuf,
    pub embeddings: PathBuf,
}

pub fn write_embeddings(table: &EmbeddingTable, words: impl IntoIterator<Item = String>, path: &Path) {
    let mut text = String::new();
    for w in words {
        let v = table.get(&w).unwrap();
        text.push_str(&w);
        for x in v {
            write!(text, " {x}").unwrap();
        }
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

/// Writes source, target and embeddings into `dir` in the CLI's input formats.
pub fn write_task(task: &SyntheticTask, dir: &Path) -> TaskFiles {
    let files = TaskFiles {
        source: dir.join("source.txt"),
        target: dir.join("target.txt"),
        embeddings: dir.join("embeddings.txt"),
    };
    task.x.write(&files.source).unwrap();
    task.y.write(&files.target).unwrap();
    let mut words: Vec<String> = Vec::new();
    for s in task.x.sentences.iter().chain(&task.y.sentences) {
        for t in &s.tokens {
            words.push(t.as_str().to_string());
        }
    }
    words.sort();
    words.dedup();
    write_embeddings(&task.table, words, &files.embeddings);
    files
}
