//! Ranking metrics, the score-gap histogram and the evaluation driver.

mod histogram;
mod metrics;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use histogram::{default_gap_edges, score_gap_histogram, GapHistogram, DEGENERATE_STD};
pub use metrics::{hits_at_k, mrr, rank_of};

use crate::canonical::{serialize_extended_f64, to_canonical_json};
use crate::coarse::EntityScorer;
use crate::error::{Error, Result};
use crate::fusion::training_queries;
use crate::inference::predict_from_scores;
use crate::kg::{DatasetSplit, FilterIndex, KnowledgeGraph, Mode, Query, Triple};
use crate::pathways::GraphContext;

/// How the final ranking is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Coarse shortlist, fine rescoring and the margin rule.
    #[default]
    CoarseToFine,
    /// Plain fine-model ranking.
    FineOnly,
    /// Plain coarse-model ranking.
    CoarseOnly,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown strategy {s:?}")))
    }
}

/// Whether other known answers are removed before ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    #[default]
    Filtered,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub delta: f64,
    pub strategy: Strategy,
    pub protocol: Protocol,
    pub hits: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 4,
            delta: 8.0,
            strategy: Strategy::CoarseToFine,
            protocol: Protocol::Filtered,
            hits: vec![1, 3, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mrr: f64,
    /// Cutoff → Hits@cutoff.
    pub hits: BTreeMap<usize, f64>,
    pub n_queries: usize,
    pub mode: Mode,
    pub k: usize,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub delta: f64,
    pub strategy: Strategy,
    pub protocol: Protocol,
}

impl EvalReport {
    /// Aggregates ranks and checks the relations that must hold between the
    /// metrics.
    pub fn from_ranks(ranks: &[f64], config: &EvalConfig, mode: Mode) -> Result<Self> {
        let m = mrr(ranks)?;
        let mut hits = BTreeMap::new();
        for &k in &config.hits {
            hits.insert(k, hits_at_k(ranks, k)?);
        }
        let h1 = hits_at_k(ranks, 1)?;
        // The smallest rank above 1 is 1.5 (one tie), so each non-hit adds at
        // most 2/3 to the reciprocal sum.
        if m + 1e-12 < h1 || m > h1 + (1.0 - h1) * 2.0 / 3.0 + 1e-12 {
            return Err(Error::Numeric(format!("MRR {m} inconsistent with Hits@1 {h1}")));
        }
        let values: Vec<f64> = hits.values().copied().collect();
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Numeric("Hits@k decreases in k".into()));
        }
        Ok(Self {
            mrr: m,
            hits,
            n_queries: ranks.len(),
            mode,
            k: config.k,
            delta: config.delta,
            strategy: config.strategy,
            protocol: config.protocol,
        })
    }

    pub fn hits_at(&self, k: usize) -> Option<f64> {
        self.hits.get(&k).copied()
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        to_canonical_json(self)
    }
}

/// Scores of one evaluation query under both models.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredQuery {
    pub query: Query,
    pub answer: usize,
    /// `false` for other known answers (filtered protocol only).
    pub mask: Vec<bool>,
    pub fine: Option<Vec<f64>>,
    pub coarse: Option<Vec<f64>>,
}

/// Tail queries and their inverse head queries for `triples`.
pub fn evaluation_queries(graph: &KnowledgeGraph, triples: &[Triple]) -> Vec<(Query, usize)> {
    training_queries(graph, triples)
        .into_iter()
        .map(|q| (q.query, q.answer))
        .collect()
}

/// A scorer that can be shared across evaluation threads.
pub type SharedScorer<'a> = &'a (dyn EntityScorer + Sync);

/// Scores every query (in parallel, results in query order) with whichever
/// models are given.
pub fn score_queries(
    fine: Option<SharedScorer<'_>>,
    coarse: Option<SharedScorer<'_>>,
    graph: &KnowledgeGraph,
    queries: &[(Query, usize)],
    filter: Option<&FilterIndex>,
) -> Result<Vec<ScoredQuery>> {
    let n = graph.num_entities();
    queries
        .par_iter()
        .map_init(
            || GraphContext::new(graph),
            |ctx, &(query, answer)| {
                let ctx = ctx.as_ref().map_err(|e| Error::Data(format!("graph context: {e}")))?;
                let mask = match filter {
                    Some(f) => f.filtered_candidates(query, answer, n),
                    None => vec![true; n],
                };
                Ok(ScoredQuery {
                    query,
                    answer,
                    mask,
                    fine: fine.map(|f| f.score_all(ctx, query)).transpose()?,
                    coarse: coarse.map(|c| c.score_all(ctx, query)).transpose()?,
                })
            },
        )
        .collect()
}

/// Scores the test queries of `split` under the configured protocol.
pub fn score_test_queries(
    fine: Option<SharedScorer<'_>>,
    coarse: Option<SharedScorer<'_>>,
    split: &DatasetSplit,
    protocol: Protocol,
) -> Result<Vec<ScoredQuery>> {
    if split.test.is_empty() {
        return Err(Error::Contract("the split has no test triples".into()));
    }
    let graph = &split.test_graph;
    let filter = (protocol == Protocol::Filtered).then(|| split.test_filter());
    score_queries(fine, coarse, graph, &evaluation_queries(graph, &split.test), filter.as_ref())
}

fn need<'a>(scores: &'a Option<Vec<f64>>, what: &str) -> Result<&'a [f64]> {
    scores
        .as_deref()
        .ok_or_else(|| Error::Contract(format!("the strategy needs {what} scores")))
}

/// Rank of the answer of one scored query under `config`.
pub fn rank_scored(q: &ScoredQuery, config: &EvalConfig) -> Result<f64> {
    let mask = Some(q.mask.as_slice());
    match config.strategy {
        Strategy::FineOnly => rank_of(need(&q.fine, "fine")?, q.answer, mask),
        Strategy::CoarseOnly => rank_of(need(&q.coarse, "coarse")?, q.answer, mask),
        Strategy::CoarseToFine => {
            let p = predict_from_scores(need(&q.coarse, "coarse")?, need(&q.fine, "fine")?, config.k, config.delta, mask)?;
            rank_of(&p.implied_scores(), q.answer, mask)
        }
    }
}

/// Metrics of already-scored queries; scoring once lets several strategies
/// share the model forwards.
pub fn report_scored(scored: &[ScoredQuery], config: &EvalConfig, mode: Mode) -> Result<EvalReport> {
    if scored.is_empty() {
        return Err(Error::Contract("no queries to evaluate".into()));
    }
    let ranks = scored
        .iter()
        .map(|q| rank_scored(q, config))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_ranks(&ranks, config, mode)
}

/// Scores the test queries of `split` in both directions and aggregates.
pub fn evaluate(
    fine: Option<SharedScorer<'_>>,
    coarse: Option<SharedScorer<'_>>,
    split: &DatasetSplit,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let (fine, coarse) = match config.strategy {
        Strategy::FineOnly => (fine, None),
        Strategy::CoarseOnly => (None, coarse),
        Strategy::CoarseToFine => (fine, coarse),
    };
    let scored = score_test_queries(fine, coarse, split, config.protocol)?;
    report_scored(&scored, config, split.mode)
}

/// Which score vector a histogram is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    Fine,
    Coarse,
}

/// Per-query gap histograms of the chosen scores, pooled over all queries.
pub fn pooled_gap_histogram(scored: &[ScoredQuery], source: ScoreSource, edges: &[f64]) -> Result<GapHistogram> {
    let mut pooled = GapHistogram::empty(edges)?;
    for q in scored {
        let scores = match source {
            ScoreSource::Fine => need(&q.fine, "fine")?,
            ScoreSource::Coarse => need(&q.coarse, "coarse")?,
        };
        pooled.merge(&score_gap_histogram(scores, q.answer, edges, Some(&q.mask))?)?;
    }
    Ok(pooled)
}

#[cfg(test)]
mod tests;
