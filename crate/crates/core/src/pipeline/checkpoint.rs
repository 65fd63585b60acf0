//! Line-delimited JSON checkpoints, one file per iteration.
//!
//! Line 1 is a header (`type`, `iteration`, `config_hash`, `pairs`,
//! `update_rate_history`); each following line is one pair with `src_id`,
//! `src`, `tgt`, `tgt_id`, `cost`, `origin` and `iter_set`. Sentences are
//! stored as space-joined tokens.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::state::{Origin, PseudoPair, PseudoParallelState};
use crate::corpus::{Sentence, Token};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    #[serde(rename = "type")]
    kind: String,
    iteration: usize,
    config_hash: String,
    pairs: usize,
    update_rate_history: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    src_id: usize,
    src: String,
    tgt: String,
    tgt_id: usize,
    cost: f64,
    origin: Origin,
    iter_set: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub state: PseudoParallelState,
    pub config_hash: String,
    /// Set when the stored hash differs from the one the caller expected.
    pub hash_mismatch: Option<String>,
}

pub fn checkpoint_path(dir: &Path, iteration: usize) -> PathBuf {
    dir.join(format!("iter_{iteration:03}.jsonl"))
}

pub fn write_checkpoint(state: &PseudoParallelState, config_hash: &str, path: &Path) -> Result<()> {
    let mut out = String::new();
    let header = Header {
        kind: "header".into(),
        iteration: state.iteration,
        config_hash: config_hash.into(),
        pairs: state.pairs.len(),
        update_rate_history: state.update_rate_history.clone(),
    };
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    for p in &state.pairs {
        let rec = Record {
            src_id: p.src_id,
            src: p.src.text(),
            tgt: p.tgt.text(),
            tgt_id: p.tgt.id,
            cost: p.cost,
            origin: p.origin,
            iter_set: p.iter_set,
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    let tmp = path.with_extension("jsonl.tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn parse_sentence(id: usize, text: &str) -> Option<Sentence> {
    let tokens = text.split(' ').filter(|t| !t.is_empty()).map(Token::new).collect::<Option<Vec<_>>>()?;
    Some(Sentence::new(id, tokens))
}

/// Reads a checkpoint. A differing config hash is logged and reported, not fatal.
pub fn read_checkpoint(path: &Path, expected_hash: Option<&str>) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, message: String| Error::Checkpoint {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate();
    let header: Header = match lines.next() {
        Some((_, l)) => serde_json::from_str(l).map_err(|e| err(1, format!("malformed header: {e}")))?,
        None => return Err(err(1, "empty checkpoint".into())),
    };
    if header.kind != "header" {
        return Err(err(1, format!("expected header record, found type {:?}", header.kind)));
    }

    let mut pairs = Vec::with_capacity(header.pairs);
    for (i, line) in lines {
        let lineno = i + 1;
        let rec: Record = serde_json::from_str(line).map_err(|e| err(lineno, format!("malformed record: {e}")))?;
        let src = parse_sentence(rec.src_id, &rec.src).ok_or_else(|| err(lineno, "invalid source tokens".into()))?;
        let tgt = parse_sentence(rec.tgt_id, &rec.tgt).ok_or_else(|| err(lineno, "invalid target tokens".into()))?;
        pairs.push(PseudoPair {
            src_id: rec.src_id,
            src,
            tgt,
            cost: rec.cost,
            origin: rec.origin,
            iter_set: rec.iter_set,
        });
    }
    if pairs.len() != header.pairs {
        return Err(err(
            pairs.len() + 1,
            format!("header announces {} pairs, found {}", header.pairs, pairs.len()),
        ));
    }

    let hash_mismatch = match expected_hash {
        Some(h) if h != header.config_hash => {
            let msg = format!(
                "{} was written with config hash {}, current config hash is {h}",
                path.display(),
                header.config_hash
            );
            log::warn!("{msg}");
            Some(msg)
        }
        _ => None,
    };

    Ok(Checkpoint {
        state: PseudoParallelState {
            pairs,
            iteration: header.iteration,
            update_rate_history: header.update_rate_history,
        },
        config_hash: header.config_hash,
        hash_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> PseudoParallelState {
        PseudoParallelState {
            pairs: vec![
                PseudoPair {
                    src_id: 0,
                    src: Sentence::parse(0, "best pizza ever ever"),
                    tgt: Sentence::parse(4, "worst burrito ever ever"),
                    cost: 0.123_456_789_012_345_68,
                    origin: Origin::Match,
                    iter_set: 0,
                },
                PseudoPair {
                    src_id: 3,
                    src: Sentence::parse(3, "i will return often"),
                    tgt: Sentence::parse(3, "i will not return !"),
                    cost: 1.0 / 3.0,
                    origin: Origin::Trans,
                    iter_set: 2,
                },
            ],
            iteration: 2,
            update_rate_history: vec![0.5, 0.25, 0.0],
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = checkpoint_path(dir.path(), 2);
        assert!(path.ends_with("iter_002.jsonl"));
        write_checkpoint(&sample(), "abc", &path).unwrap();
        let cp = read_checkpoint(&path, Some("abc")).unwrap();
        assert_eq!(cp.state, sample());
        assert!(cp.hash_mismatch.is_none());
    }

    #[test]
    fn truncated_last_line_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.jsonl");
        write_checkpoint(&sample(), "abc", &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() - 20]).unwrap();
        match read_checkpoint(&path, None) {
            Err(Error::Checkpoint { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_line_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.jsonl");
        write_checkpoint(&sample(), "abc", &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let kept: Vec<&str> = text.lines().take(2).collect();
        fs::write(&path, kept.join("\n")).unwrap();
        assert!(matches!(read_checkpoint(&path, None), Err(Error::Checkpoint { line: 2, .. })));
    }

    #[test]
    fn hash_mismatch_warns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.jsonl");
        write_checkpoint(&sample(), "aaaa", &path).unwrap();
        let cp = read_checkpoint(&path, Some("bbbb")).unwrap();
        let msg = cp.hash_mismatch.unwrap();
        assert!(msg.contains("aaaa") && msg.contains("bbbb"));
        assert_eq!(cp.state, sample());
    }

    proptest! {
        #[test]
        fn costs_survive_round_trip(costs in proptest::collection::vec(0.0f64..1e6, 1..8)) {
            let mut st = sample();
            st.pairs = costs.iter().enumerate().map(|(i, &c)| PseudoPair { src_id: i, cost: c, ..sample().pairs[0].clone() }).collect();
            for (i, p) in st.pairs.iter_mut().enumerate() {
                p.src.id = i;
            }
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("cp.jsonl");
            write_checkpoint(&st, "h", &path).unwrap();
            prop_assert_eq!(read_checkpoint(&path, None).unwrap().state, st);
        }
    }
}
