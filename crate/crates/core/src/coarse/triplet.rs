use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CoarseConfig;
use crate::error::{Error, Result};
use crate::fusion::{loss_on_tape, training_queries};
use crate::kg::{sample_negatives_excluding, DatasetSplit, Query};
use crate::numerics::{AdamConfig, AdamState, NodeId, ParamId, ParamStore, Tape, Tensor};

/// Multiplicative triplet scorer: `score(h, r, t) = Σ_d E[h]_d R[r]_d E[t]_d`.
#[derive(Debug, Clone)]
pub struct TripletCoarse {
    pub store: ParamStore,
    pub entity: ParamId,
    pub relation: ParamId,
}

impl TripletCoarse {
    pub fn new(num_entities: usize, num_relations: usize, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("coarse dimension must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let std = 1.0 / (dim as f64).sqrt();
        let entity = store.add("coarse.entity", Tensor::randn(&[num_entities, dim], std.sqrt(), &mut rng))?;
        let relation = store.add("coarse.relation", Tensor::randn(&[num_relations, dim], 1.0, &mut rng))?;
        Ok(Self {
            store,
            entity,
            relation,
        })
    }

    pub fn num_entities(&self) -> usize {
        self.store.value(self.entity).rows()
    }

    pub fn num_relations(&self) -> usize {
        self.store.value(self.relation).rows()
    }

    pub fn dim(&self) -> usize {
        self.store.value(self.entity).cols()
    }

    fn check(&self, h: usize, r: usize, t: usize) -> Result<()> {
        if h >= self.num_entities() || t >= self.num_entities() || r >= self.num_relations() {
            return Err(Error::Contract(format!(
                "({h}, {r}, {t}) outside {} entities / {} relations",
                self.num_entities(),
                self.num_relations()
            )));
        }
        Ok(())
    }

    pub fn triplet_score(&self, h: usize, r: usize, t: usize) -> Result<f64> {
        self.check(h, r, t)?;
        let e = self.store.value(self.entity);
        let rel = self.store.value(self.relation);
        Ok(e.row(h)
            .iter()
            .zip(rel.row(r))
            .zip(e.row(t))
            .map(|((a, b), c)| a * b * c)
            .sum())
    }

    /// Score of every tail for `query`.
    pub fn score_all(&self, query: Query) -> Result<Vec<f64>> {
        self.check(query.head, query.relation, 0)?;
        let e = self.store.value(self.entity);
        let q: Vec<f64> = e
            .row(query.head)
            .iter()
            .zip(self.store.value(self.relation).row(query.relation))
            .map(|(a, b)| a * b)
            .collect();
        Ok((0..e.rows())
            .map(|t| e.row(t).iter().zip(&q).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn scores_on_tape(&self, tape: &mut Tape, query: Query) -> Result<NodeId> {
        let e = tape.param(&self.store, self.entity);
        let r = tape.param(&self.store, self.relation);
        let eh = tape.gather_rows(e, vec![query.head])?;
        let rr = tape.gather_rows(r, vec![query.relation])?;
        let q = tape.mul(eh, rr)?;
        tape.matmul_nt(e, q)
    }

    pub fn train(&mut self, split: &DatasetSplit, config: &CoarseConfig) -> Result<Vec<f64>> {
        let graph = &split.train_graph;
        if self.num_entities() != graph.num_entities() || self.num_relations() != graph.num_relations() {
            return Err(Error::Contract("coarse model shape does not match the training graph".into()));
        }
        let known = split.train_filter();
        let empty = HashSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut adam = AdamState::new(
            AdamConfig {
                lr: config.lr,
                weight_decay: config.weight_decay,
                ..AdamConfig::default()
            },
            &self.store,
        );
        let mut losses = Vec::with_capacity(config.epochs);
        let mut queries = training_queries(graph, &split.train);
        for epoch in 0..config.epochs {
            queries.shuffle(&mut rng);
            let mut total = 0.0;
            for (i, q) in queries.iter().enumerate() {
                let excluded = known.known(q.query).unwrap_or(&empty);
                let negatives = sample_negatives_excluding(
                    graph.num_entities(),
                    q.answer,
                    excluded,
                    config.negatives,
                    &mut rng,
                )?;
                let mut tape = Tape::new();
                let scores = self.scores_on_tape(&mut tape, q.query)?;
                let loss = loss_on_tape(&mut tape, scores, q.answer, &negatives)?;
                let value = tape.value(loss).item()?;
                if !value.is_finite() {
                    return Err(Error::Divergence {
                        epoch: epoch + 1,
                        query: i,
                        detail: format!("coarse loss {value} on {:?}", q.query),
                    });
                }
                total += value;
                self.store.zero_grad();
                tape.backward(loss, &mut self.store)?;
                adam.step(&mut self.store)?;
            }
            losses.push(total / queries.len() as f64);
        }
        Ok(losses)
    }
}
