use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this standard deviation the scores count as collapsed.
pub const DEGENERATE_STD: f64 = 1e-12;

/// Counts of `|s_answer − s_v| / std(s)` over incorrect candidates `v`.
///
/// Bins are half-open `[edges[i], edges[i+1])`; gaps past the last edge land
/// in the last bin. After [`GapHistogram::merge`] `std` is the mean of the
/// per-query standard deviations and `degenerate` is set if any query was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub std: f64,
    pub degenerate: bool,
    pub queries: usize,
    pub degenerate_queries: usize,
}

/// `0, 0.02, …, 3.0`.
pub fn default_gap_edges() -> Vec<f64> {
    (0..=150).map(|i| i as f64 / 50.0).collect()
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::Contract("a histogram needs at least two edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Contract("histogram edges must be finite and strictly increasing".into()));
    }
    Ok(())
}

impl GapHistogram {
    pub fn empty(edges: &[f64]) -> Result<Self> {
        check_edges(edges)?;
        Ok(Self {
            edges: edges.to_vec(),
            counts: vec![0; edges.len() - 1],
            std: 0.0,
            degenerate: false,
            queries: 0,
            degenerate_queries: 0,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn bin(&self, gap: f64) -> usize {
        let idx = self.edges.partition_point(|&e| e <= gap);
        idx.saturating_sub(1).min(self.counts.len() - 1)
    }

    /// Pools another histogram over the same edges into this one.
    pub fn merge(&mut self, other: &GapHistogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::Contract("cannot merge histograms with different edges".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        let q = self.queries + other.queries;
        if q > 0 {
            self.std = (self.std * self.queries as f64 + other.std * other.queries as f64) / q as f64;
        }
        self.queries = q;
        self.degenerate |= other.degenerate;
        self.degenerate_queries += other.degenerate_queries;
        Ok(())
    }

    /// Fraction of counted candidates whose gap falls below the edge `x`.
    pub fn fraction_below(&self, x: f64) -> Result<f64> {
        let i = self
            .edges
            .iter()
            .position(|&e| e == x)
            .ok_or_else(|| Error::Contract(format!("{x} is not a bin edge")))?;
        let total = self.total();
        if total == 0 {
            return Ok(0.0);
        }
        Ok(self.counts[..i].iter().sum::<u64>() as f64 / total as f64)
    }

    /// `bin_lo,bin_hi,count` rows after a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{:.6},{:.6},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

/// Histogram of normalized score gaps between `answer` and every other
/// candidate of one query. The standard deviation is the population one over
/// all candidates (answer included); `mask[v] = false` drops `v`.
pub fn score_gap_histogram(
    scores: &[f64],
    answer: usize,
    edges: &[f64],
    mask: Option<&[bool]>,
) -> Result<GapHistogram> {
    let mut h = GapHistogram::empty(edges)?;
    if answer >= scores.len() || mask.is_some_and(|m| m.len() != scores.len() || !m[answer]) {
        return Err(Error::Contract(format!("answer {answer} is not a candidate")));
    }
    let candidates: Vec<usize> = (0..scores.len()).filter(|&v| mask.map_or(true, |m| m[v])).collect();
    if candidates.len() < 2 {
        return Err(Error::Contract("a score-gap histogram needs at least two candidates".into()));
    }
    if candidates.iter().any(|&v| !scores[v].is_finite()) {
        return Err(Error::Numeric("non-finite score in gap histogram".into()));
    }
    let n = candidates.len() as f64;
    let mean = candidates.iter().map(|&v| scores[v]).sum::<f64>() / n;
    let var = candidates.iter().map(|&v| (scores[v] - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    h.std = std;
    h.queries = 1;
    let incorrect = candidates.len() as u64 - 1;
    if std < DEGENERATE_STD {
        h.degenerate = true;
        h.degenerate_queries = 1;
        h.counts[0] = incorrect;
        return Ok(h);
    }
    for &v in &candidates {
        if v != answer {
            let b = h.bin((scores[answer] - scores[v]).abs() / std);
            h.counts[b] += 1;
        }
    }
    Ok(h)
}
