use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DuetModel;
use crate::error::{Error, Result};
use crate::kg::{sample_negatives_excluding, DatasetSplit, FilterIndex, KnowledgeGraph, Query, Triple};
use crate::numerics::{softplus, AdamConfig, AdamState, NodeId, Tape};
use crate::pathways::GraphContext;

/// `−ln σ(s_answer) − Σ ln(1 − σ(s_neg))`, written with softplus.
pub fn negative_sampling_loss(scores: &[f64], answer: usize, negatives: &[usize]) -> Result<f64> {
    check_negatives(scores.len(), answer, negatives)?;
    Ok(softplus(-scores[answer]) + negatives.iter().map(|&n| softplus(scores[n])).sum::<f64>())
}

fn check_negatives(n: usize, answer: usize, negatives: &[usize]) -> Result<()> {
    if negatives.is_empty() {
        return Err(Error::Contract("negative list is empty".into()));
    }
    if answer >= n || negatives.iter().any(|&x| x >= n) {
        return Err(Error::Contract(format!("score index outside {n} entities")));
    }
    if negatives.contains(&answer) {
        return Err(Error::Contract(format!(
            "answer {answer} appears among the negatives"
        )));
    }
    Ok(())
}

/// The same loss recorded on `tape` from a `|V| × 1` score column.
pub fn loss_on_tape(tape: &mut Tape, scores: NodeId, answer: usize, negatives: &[usize]) -> Result<NodeId> {
    check_negatives(tape.value(scores).rows(), answer, negatives)?;
    let pos = tape.gather_rows(scores, vec![answer])?;
    let pos = tape.scale(pos, -1.0);
    let pos = tape.softplus(pos);
    let neg = tape.gather_rows(scores, negatives.to_vec())?;
    let neg = tape.softplus(neg);
    let neg = tape.sum(neg);
    let pos = tape.sum(pos);
    tape.add(pos, neg)
}

/// Records the full forward pass and loss for one training query.
pub fn query_loss(
    model: &DuetModel,
    ctx: &GraphContext,
    query: Query,
    answer: usize,
    negatives: &[usize],
) -> Result<(Tape, NodeId)> {
    let mut tape = Tape::new();
    let f = model.forward(&mut tape, ctx, query, false)?;
    let loss = loss_on_tape(&mut tape, f.scores, answer, negatives)?;
    Ok((tape, loss))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub negatives: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            weight_decay: 1e-5,
            negatives: 128,
            epochs: 10,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub alpha: f64,
}

impl EpochStats {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain struct serialises")
    }
}

/// A training example: answer `answer` to `query`, whose supporting edge
/// `edge` (and its inverse) are hidden from message passing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingQuery {
    pub query: Query,
    pub answer: usize,
    pub edge: Triple,
}

/// Tail and head (via inverse relation) queries for every triple.
pub fn training_queries(graph: &KnowledgeGraph, triples: &[Triple]) -> Vec<TrainingQuery> {
    triples
        .iter()
        .flat_map(|t| {
            let inv = graph.inverse_of(t.relation);
            [
                TrainingQuery {
                    query: Query::new(t.head, t.relation),
                    answer: t.tail,
                    edge: *t,
                },
                TrainingQuery {
                    query: Query::new(t.tail, inv),
                    answer: t.head,
                    edge: *t,
                },
            ]
        })
        .collect()
}

/// Per-query Adam training of a [`DuetModel`].
#[derive(Debug)]
pub struct Trainer {
    pub model: DuetModel,
    pub config: TrainConfig,
    adam: AdamState,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(model: DuetModel, config: TrainConfig) -> Self {
        let adam = AdamState::new(
            AdamConfig {
                lr: config.lr,
                weight_decay: config.weight_decay,
                ..AdamConfig::default()
            },
            &model.store,
        );
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self {
            model,
            config,
            adam,
            rng,
            epoch: 0,
        }
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    /// One shuffled pass over every training query.
    pub fn train_epoch(&mut self, split: &DatasetSplit) -> Result<EpochStats> {
        let known = split.train_filter();
        self.train_epoch_on(&split.train_graph, &split.train, &known)
    }

    pub fn train_epoch_on(
        &mut self,
        graph: &KnowledgeGraph,
        triples: &[Triple],
        known: &FilterIndex,
    ) -> Result<EpochStats> {
        if triples.is_empty() {
            return Err(Error::Contract("no training triples".into()));
        }
        self.epoch += 1;
        let mut queries = training_queries(graph, triples);
        queries.shuffle(&mut self.rng);
        let empty = HashSet::new();
        let mut total = 0.0;
        for (i, q) in queries.iter().enumerate() {
            let hidden = [q.edge, Triple::new(q.edge.tail, graph.inverse_of(q.edge.relation), q.edge.head)];
            let ctx = GraphContext::without(graph, &hidden)?;
            let excluded = known.known(q.query).unwrap_or(&empty);
            let negatives = sample_negatives_excluding(
                graph.num_entities(),
                q.answer,
                excluded,
                self.config.negatives,
                &mut self.rng,
            )?;
            let (tape, loss) = query_loss(&self.model, &ctx, q.query, q.answer, &negatives)?;
            let value = tape.value(loss).item()?;
            if !value.is_finite() {
                return Err(Error::Divergence {
                    epoch: self.epoch,
                    query: i,
                    detail: self.dump(value, q),
                });
            }
            total += value;
            self.model.store.zero_grad();
            tape.backward(loss, &mut self.model.store)?;
            self.adam.step(&mut self.model.store)?;
        }
        Ok(EpochStats {
            epoch: self.epoch,
            mean_loss: total / queries.len() as f64,
            alpha: self.model.alpha(),
        })
    }

    fn dump(&self, loss: f64, q: &TrainingQuery) -> String {
        let norms: Vec<String> = self
            .model
            .store
            .iter()
            .map(|p| format!("{}={:.3e}", p.name(), p.value().frobenius_norm()))
            .collect();
        format!(
            "loss {loss} on query {:?} -> {}; alpha {}; parameter norms: {}",
            q.query,
            q.answer,
            self.model.alpha(),
            norms.join(", ")
        )
    }

    pub fn into_model(self) -> DuetModel {
        self.model
    }
}
