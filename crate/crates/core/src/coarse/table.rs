use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entity → score map stored as parallel arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScoreTable {
    pub entities: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Descending score, ascending id on ties.
pub fn rank_order(a: (usize, f64), b: (usize, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

impl ScoreTable {
    pub fn new(entities: Vec<usize>, scores: Vec<f64>) -> Result<Self> {
        if entities.len() != scores.len() {
            return Err(Error::Contract(format!(
                "{} entities but {} scores",
                entities.len(),
                scores.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Numeric(format!(
                "score of entity {} is {}",
                entities[i], scores[i]
            )));
        }
        Ok(Self { entities, scores })
    }

    /// One row per entity `0..scores.len()`.
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        Self::new((0..scores.len()).collect(), scores.to_vec())
    }

    /// Only the entities whose mask entry is `true`.
    pub fn from_scores_masked(scores: &[f64], mask: &[bool]) -> Result<Self> {
        if mask.len() != scores.len() {
            return Err(Error::Contract(format!(
                "mask covers {} entities, scores {}",
                mask.len(),
                scores.len()
            )));
        }
        let entities: Vec<usize> = (0..scores.len()).filter(|&v| mask[v]).collect();
        let s = entities.iter().map(|&v| scores[v]).collect();
        Self::new(entities, s)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entities.iter().copied().zip(self.scores.iter().copied())
    }

    /// Rows sorted by descending score, ties by ascending entity id.
    pub fn sorted(&self) -> Vec<(usize, f64)> {
        let mut rows: Vec<(usize, f64)> = self.iter().collect();
        rows.sort_by(|&a, &b| rank_order(a, b));
        rows
    }

    /// Best row under [`rank_order`].
    pub fn argmax(&self) -> Option<(usize, f64)> {
        self.iter().min_by(|&a, &b| rank_order(a, b))
    }
}

/// Top-`k` and remaining rows of a score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitTable {
    pub high: ScoreTable,
    pub low: ScoreTable,
    pub k: usize,
}

impl SplitTable {
    pub fn len(&self) -> usize {
        self.high.len() + self.low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.high.is_empty() && self.low.is_empty()
    }
}

/// Entities ranked `1..=k` go to `high`, the rest to `low`; both keep rank
/// order.
pub fn split_table(table: &ScoreTable, k: usize) -> Result<SplitTable> {
    if k < 1 {
        return Err(Error::Contract("cutoff k must be at least 1".into()));
    }
    let sorted = table.sorted();
    let cut = k.min(sorted.len());
    let part = |rows: &[(usize, f64)]| ScoreTable {
        entities: rows.iter().map(|r| r.0).collect(),
        scores: rows.iter().map(|r| r.1).collect(),
    };
    Ok(SplitTable {
        high: part(&sorted[..cut]),
        low: part(&sorted[cut..]),
        k,
    })
}
