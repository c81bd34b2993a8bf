//! Coarse-to-fine prediction: the coarse scorer shortlists the top `k`
//! candidates, the fine model rescores everything, and the best low-table
//! candidate only wins when it beats the best shortlisted one by more than
//! a margin `Δ`.

use serde::{Deserialize, Serialize};

use crate::coarse::{rank_order, split_table, EntityScorer, ScoreTable, SplitTable};
use crate::error::{Error, Result};
use crate::kg::Query;
use crate::pathways::GraphContext;

/// Which subtable the prediction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// Best entity of the high subtable and its fine score.
    pub e_h: usize,
    pub s_h: f64,
    /// Best entity of the low subtable, absent when it is empty.
    pub e_l: Option<usize>,
    pub s_l: Option<f64>,
    /// `s_l − s_h`, or `−∞` without a low subtable.
    pub gamma: f64,
    pub delta: f64,
    pub chosen: usize,
    pub source: Source,
}

/// Replaces every score by the fine model's score; membership stays put and
/// each subtable is re-sorted under the new scores.
pub fn refine_tables(split: &SplitTable, fine_scores: &[f64]) -> Result<SplitTable> {
    let refine = |table: &ScoreTable| -> Result<ScoreTable> {
        let scores = table
            .entities
            .iter()
            .map(|&v| {
                fine_scores.get(v).copied().ok_or_else(|| {
                    Error::Contract(format!(
                        "fine scores cover {} entities, table holds entity {v}",
                        fine_scores.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let refined = ScoreTable::new(table.entities.clone(), scores)?;
        let sorted = refined.sorted();
        Ok(ScoreTable {
            entities: sorted.iter().map(|r| r.0).collect(),
            scores: sorted.iter().map(|r| r.1).collect(),
        })
    };
    Ok(SplitTable {
        high: refine(&split.high)?,
        low: refine(&split.low)?,
        k: split.k,
    })
}

/// Picks the low-table winner only when its lead `γ` strictly exceeds `Δ`.
pub fn decide(split: &SplitTable, delta: f64) -> Result<Decision> {
    if delta.is_nan() {
        return Err(Error::Contract("threshold is NaN".into()));
    }
    let (e_h, s_h) = split
        .high
        .argmax()
        .ok_or_else(|| Error::Contract("high subtable is empty".into()))?;
    let low = split.low.argmax();
    let gamma = low.map_or(f64::NEG_INFINITY, |(_, s_l)| s_l - s_h);
    let (chosen, source) = match low {
        Some((e_l, _)) if gamma > delta => (e_l, Source::Low),
        _ => (e_h, Source::High),
    };
    Ok(Decision {
        e_h,
        s_h,
        e_l: low.map(|l| l.0),
        s_l: low.map(|l| l.1),
        gamma,
        delta,
        chosen,
        source,
    })
}

/// The chosen entity first, then every other entity of both subtables by
/// descending fine score (ascending id on ties).
pub fn final_ranking(split: &SplitTable, decision: &Decision) -> Vec<usize> {
    let mut rest: Vec<(usize, f64)> = split
        .high
        .iter()
        .chain(split.low.iter())
        .filter(|&(v, _)| v != decision.chosen)
        .collect();
    rest.sort_by(|&a, &b| rank_order(a, b));
    std::iter::once(decision.chosen).chain(rest.into_iter().map(|r| r.0)).collect()
}

/// Outcome of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub decision: Decision,
    /// Every entity; filtered-out ones trail in ascending id order.
    pub ranking: Vec<usize>,
    pub fine_scores: Vec<f64>,
}

impl Prediction {
    /// Scores consistent with the ranking: the fine scores with the chosen
    /// entity lifted above everything. Rank of the answer under these (with
    /// tie averaging) is what evaluation reports.
    pub fn implied_scores(&self) -> Vec<f64> {
        let mut s = self.fine_scores.clone();
        s[self.decision.chosen] = f64::INFINITY;
        s
    }
}

/// The pipeline on precomputed score vectors. `mask[v] = false` removes `v`
/// from both subtables before the split.
pub fn predict_from_scores(
    coarse_scores: &[f64],
    fine_scores: &[f64],
    k: usize,
    delta: f64,
    mask: Option<&[bool]>,
) -> Result<Prediction> {
    let n = coarse_scores.len();
    if fine_scores.len() != n {
        return Err(Error::Contract(format!(
            "coarse scores cover {n} entities, fine scores {}",
            fine_scores.len()
        )));
    }
    let keep = match mask {
        Some(m) => m.to_vec(),
        None => vec![true; n],
    };
    let coarse = ScoreTable::from_scores_masked(coarse_scores, &keep)?;
    if coarse.is_empty() {
        return Err(Error::Contract("every candidate is filtered out".into()));
    }
    let split = split_table(&coarse, k)?;
    let refined = refine_tables(&split, fine_scores)?;
    let decision = decide(&refined, delta)?;
    let mut ranking = final_ranking(&refined, &decision);
    ranking.extend((0..n).filter(|&v| !keep[v]));
    Ok(Prediction {
        decision,
        ranking,
        fine_scores: fine_scores.to_vec(),
    })
}

/// Scores `query` with both models and runs the pipeline.
pub fn predict(
    fine: &dyn EntityScorer,
    coarse: &dyn EntityScorer,
    ctx: &GraphContext,
    query: Query,
    k: usize,
    delta: f64,
    mask: Option<&[bool]>,
) -> Result<Prediction> {
    let coarse_scores = coarse.score_all(ctx, query)?;
    let fine_scores = fine.score_all(ctx, query)?;
    if let Some(m) = mask {
        if m.len() != ctx.num_entities {
            return Err(Error::Contract(format!(
                "mask covers {} entities, graph has {}",
                m.len(),
                ctx.num_entities
            )));
        }
    }
    predict_from_scores(&coarse_scores, &fine_scores, k, delta, mask)
}

/// One line of the prediction output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub head: String,
    pub relation: String,
    pub chosen: String,
    pub source: Source,
    /// `None` when the low subtable was empty (`γ = −∞`).
    pub gamma: Option<f64>,
    pub top10: Vec<String>,
}

impl PredictionRecord {
    /// Builds the record, naming entities and relations through the given
    /// lookups.
    pub fn new(
        query: Query,
        prediction: &Prediction,
        entity_name: impl Fn(usize) -> String,
        relation_name: impl Fn(usize) -> String,
    ) -> Self {
        let d = &prediction.decision;
        Self {
            head: entity_name(query.head),
            relation: relation_name(query.relation),
            chosen: entity_name(d.chosen),
            source: d.source,
            gamma: d.gamma.is_finite().then_some(d.gamma),
            top10: prediction.ranking.iter().take(10).map(|&v| entity_name(v)).collect(),
        }
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
