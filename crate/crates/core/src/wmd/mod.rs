//! Word Mover's Distance between sentences.
//!
//! A sentence becomes a normalized bag of words (token counts over the
//! in-vocabulary tokens, summing to one). The distance is the optimal
//! transport cost between two such bags, with the ground cost measured
//! between word vectors.

mod flow;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Token};
use crate::embedding::{dot, norm, EmbeddingTable};

pub use flow::solve_transport;

/// Ground cost between two word vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundCost {
    #[default]
    Euclidean,
    /// `1 - cos(u, v)`, clamped at zero. Not a metric; the centroid lower bound does not apply.
    Cosine,
}

impl GroundCost {
    pub fn between(self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            GroundCost::Euclidean => u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            GroundCost::Cosine => {
                let (nu, nv) = (norm(u), norm(v));
                if nu == 0.0 || nv == 0.0 {
                    return if nu == nv { 0.0 } else { 1.0 };
                }
                (1.0 - dot(u, v) / (nu * nv)).max(0.0)
            }
        }
    }
}

impl std::str::FromStr for GroundCost {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(GroundCost::Euclidean),
            "cosine" => Ok(GroundCost::Cosine),
            other => Err(format!("unknown ground cost {other:?} (expected euclidean|cosine)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WmdOptions {
    pub cost: GroundCost,
    /// Tokens excluded from the bag of words.
    pub stoplist: Option<BTreeSet<String>>,
}

/// Normalized bag of words over in-vocabulary tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct NBow {
    pub support: Vec<(Token, Vec<f64>)>,
    pub counts: Vec<u64>,
    pub weights: Vec<f64>,
}

impl NBow {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Weighted mean of the support vectors.
    pub fn centroid(&self) -> Vec<f64> {
        let dim = self.support.first().map_or(0, |(_, v)| v.len());
        let mut c = vec![0.0; dim];
        for ((_, v), w) in self.support.iter().zip(&self.weights) {
            for (ci, x) in c.iter_mut().zip(v) {
                *ci += w * x;
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl CostMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub flows: Vec<f64>,
    pub objective: f64,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.flows[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Builds the bag of words for `tokens`, skipping OOV and stop-listed tokens.
/// Support order follows first occurrence.
pub fn nbow_tokens(tokens: &[Token], table: &EmbeddingTable, stoplist: Option<&BTreeSet<String>>) -> Option<NBow> {
    let mut support: Vec<(Token, Vec<f64>)> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    for t in tokens {
        if stoplist.is_some_and(|s| s.contains(t.as_str())) {
            continue;
        }
        let Some(v) = table.get(t.as_str()) else { continue };
        match support.iter().position(|(s, _)| s == t) {
            Some(k) => counts[k] += 1,
            None => {
                support.push((t.clone(), v.to_vec()));
                counts.push(1);
            }
        }
    }
    if support.is_empty() {
        return None;
    }
    let total: u64 = counts.iter().sum();
    let weights = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Some(NBow {
        support,
        counts,
        weights,
    })
}

pub fn nbow(s: &Sentence, table: &EmbeddingTable) -> Option<NBow> {
    nbow_tokens(&s.tokens, table, None)
}

pub fn cost_matrix_with(a: &NBow, b: &NBow, cost: GroundCost) -> CostMatrix {
    let mut entries = Vec::with_capacity(a.len() * b.len());
    for (_, u) in &a.support {
        for (_, v) in &b.support {
            entries.push(cost.between(u, v));
        }
    }
    CostMatrix {
        rows: a.len(),
        cols: b.len(),
        entries,
    }
}

/// Euclidean ground-cost matrix.
pub fn cost_matrix(a: &NBow, b: &NBow) -> CostMatrix {
    cost_matrix_with(a, b, GroundCost::Euclidean)
}

/// Exact optimal transport between two bags.
///
/// Weights are rescaled to integer masses over the least common multiple of
/// the two token totals before solving, then reported back as fractions.
pub fn emd_solve(a: &NBow, b: &NBow, c: &CostMatrix) -> TransportPlan {
    let (ta, tb) = (a.total(), b.total());
    let lcm = ta / gcd(ta, tb) * tb;
    let supply: Vec<u64> = a.counts.iter().map(|&k| k * (lcm / ta)).collect();
    let demand: Vec<u64> = b.counts.iter().map(|&k| k * (lcm / tb)).collect();
    let int_flows = solve_transport(&supply, &demand, &c.entries);
    let scale = lcm as f64;
    let flows: Vec<f64> = int_flows.iter().map(|&f| f as f64 / scale).collect();
    let objective = int_flows
        .iter()
        .zip(&c.entries)
        .filter(|(f, _)| **f > 0)
        .map(|(&f, &cij)| f as f64 * cij)
        .sum::<f64>()
        / scale;
    TransportPlan {
        rows: c.rows,
        cols: c.cols,
        flows,
        objective,
    }
}

/// Distance between weighted centroids; never exceeds the Euclidean WMD.
pub fn wcd_lower_bound(a: &NBow, b: &NBow) -> f64 {
    GroundCost::Euclidean.between(&a.centroid(), &b.centroid())
}

/// WMD with a fixed table and options.
#[derive(Clone, Copy, Debug)]
pub struct WordMover<'a> {
    pub table: &'a EmbeddingTable,
    pub options: &'a WmdOptions,
}

impl<'a> WordMover<'a> {
    pub fn new(table: &'a EmbeddingTable, options: &'a WmdOptions) -> Self {
        WordMover { table, options }
    }

    pub fn nbow(&self, tokens: &[Token]) -> Option<NBow> {
        nbow_tokens(tokens, self.table, self.options.stoplist.as_ref())
    }

    pub fn plan(&self, a: &NBow, b: &NBow) -> TransportPlan {
        emd_solve(a, b, &cost_matrix_with(a, b, self.options.cost))
    }

    pub fn between(&self, a: &NBow, b: &NBow) -> f64 {
        self.plan(a, b).objective
    }

    /// `None` when either side has no in-vocabulary tokens.
    pub fn distance(&self, a: &[Token], b: &[Token]) -> Option<f64> {
        Some(self.between(&self.nbow(a)?, &self.nbow(b)?))
    }

    /// Centroid lower bound, only available for the Euclidean ground cost.
    pub fn lower_bound(&self, a: &NBow, b: &NBow) -> Option<f64> {
        match self.options.cost {
            GroundCost::Euclidean => Some(wcd_lower_bound(a, b)),
            GroundCost::Cosine => None,
        }
    }
}

/// Euclidean WMD without a stop list.
pub fn wmd(s_a: &Sentence, s_b: &Sentence, table: &EmbeddingTable) -> Option<f64> {
    let opts = WmdOptions::default();
    WordMover::new(table, &opts).distance(&s_a.tokens, &s_b.tokens)
}
