//! First-stage scorers that shortlist candidates before the fine model.

mod table;
mod triplet;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use table::{rank_order, split_table, ScoreTable, SplitTable};
pub use triplet::TripletCoarse;

use crate::checkpoint;
use crate::error::{CheckpointError, Error, Result};
use crate::fusion::{DuetModel, ModelConfig, TrainConfig, Trainer, Variant};
use crate::kg::{DatasetSplit, Mode, Query};
use crate::pathways::{AttentionKernel, GraphContext};

/// Anything that can score every candidate tail of a query.
pub trait EntityScorer {
    /// One score per entity of the graph behind `ctx`.
    fn score_all(&self, ctx: &GraphContext, query: Query) -> Result<Vec<f64>>;
}

/// Scores every entity and wraps them in a table.
pub fn coarse_score_all(scorer: &dyn EntityScorer, ctx: &GraphContext, query: Query) -> Result<ScoreTable> {
    ScoreTable::from_scores(&scorer.score_all(ctx, query)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoarseKind {
    /// Entity/relation embeddings; needs every scored entity seen in training.
    #[default]
    Triplet,
    /// Shallow local message passing with no per-entity parameters.
    Structural,
}

impl std::str::FromStr for CoarseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triplet" => Ok(CoarseKind::Triplet),
            "structural" => Ok(CoarseKind::Structural),
            other => Err(Error::Config(format!(
                "unknown coarse kind {other:?} (expected \"triplet\" or \"structural\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseConfig {
    pub kind: CoarseKind,
    pub dim: usize,
    /// Message-passing depth of the structural scorer.
    pub layers: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub negatives: usize,
    pub seed: u64,
}

impl Default for CoarseConfig {
    fn default() -> Self {
        Self {
            kind: CoarseKind::Triplet,
            dim: 32,
            layers: 2,
            epochs: 50,
            lr: 1e-2,
            weight_decay: 0.0,
            negatives: 32,
            seed: 4242,
        }
    }
}

/// Embedding-free scorer: a local-only fine model kept small.
#[derive(Debug, Clone)]
pub struct StructuralCoarse {
    pub model: DuetModel,
}

impl StructuralCoarse {
    pub fn new(num_relations: usize, dim: usize, layers: usize, seed: u64) -> Result<Self> {
        let config = ModelConfig {
            num_relations,
            hidden: dim,
            encoder_layers: 0,
            local_layers: layers,
            global_layers: 0,
            kernel: AttentionKernel::Softmax,
            activation: Default::default(),
            variant: Variant::LocalOnly,
        };
        Ok(Self {
            model: DuetModel::new(config, seed)?,
        })
    }
}

/// A trained first-stage scorer.
#[derive(Debug, Clone)]
pub enum Coarse {
    Triplet(TripletCoarse),
    Structural(StructuralCoarse),
}

impl EntityScorer for Coarse {
    fn score_all(&self, ctx: &GraphContext, query: Query) -> Result<Vec<f64>> {
        match self {
            Coarse::Triplet(t) => {
                if t.num_entities() != ctx.num_entities {
                    return Err(Error::Mode(format!(
                        "triplet coarse model knows {} entities, graph has {}",
                        t.num_entities(),
                        ctx.num_entities
                    )));
                }
                t.score_all(query)
            }
            Coarse::Structural(s) => s.model.score_all(ctx, query),
        }
    }
}

impl EntityScorer for TripletCoarse {
    fn score_all(&self, _ctx: &GraphContext, query: Query) -> Result<Vec<f64>> {
        TripletCoarse::score_all(self, query)
    }
}

impl EntityScorer for DuetModel {
    fn score_all(&self, ctx: &GraphContext, query: Query) -> Result<Vec<f64>> {
        DuetModel::score_all(self, ctx, query)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum CoarseManifest {
    Triplet { entities: usize, relations: usize, dim: usize },
    Structural { config: ModelConfig },
}

impl Coarse {
    pub fn kind(&self) -> CoarseKind {
        match self {
            Coarse::Triplet(_) => CoarseKind::Triplet,
            Coarse::Structural(_) => CoarseKind::Structural,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let (manifest, store) = match self {
            Coarse::Triplet(t) => (
                CoarseManifest::Triplet {
                    entities: t.num_entities(),
                    relations: t.num_relations(),
                    dim: t.dim(),
                },
                &t.store,
            ),
            Coarse::Structural(s) => (
                CoarseManifest::Structural {
                    config: s.model.config.clone(),
                },
                &s.model.store,
            ),
        };
        checkpoint::save(path, checkpoint::COARSE_MAGIC, serde_json::to_value(manifest)?, store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (manifest, tensors) = checkpoint::load(path, checkpoint::COARSE_MAGIC)?;
        let m: CoarseManifest = serde_json::from_value(manifest.model)
            .map_err(|e| CheckpointError::Inconsistent(format!("coarse manifest: {e}")))?;
        Ok(match m {
            CoarseManifest::Triplet { entities, relations, dim } => {
                let mut t = TripletCoarse::new(entities, relations, dim, 0)?;
                checkpoint::restore_into(&mut t.store, tensors)?;
                Coarse::Triplet(t)
            }
            CoarseManifest::Structural { config } => {
                let mut model = DuetModel::new(config, 0)?;
                checkpoint::restore_into(&mut model.store, tensors)?;
                Coarse::Structural(StructuralCoarse { model })
            }
        })
    }
}

/// Trains a fresh coarse scorer of `config.kind`; returns it with the mean
/// loss of every epoch.
pub fn train_coarse(split: &DatasetSplit, config: &CoarseConfig) -> Result<(Coarse, Vec<f64>)> {
    let g = &split.train_graph;
    match config.kind {
        CoarseKind::Triplet => {
            if split.mode == Mode::Inductive {
                return Err(Error::Mode(
                    "the triplet coarse scorer cannot score unseen inductive entities; use the structural scorer".into(),
                ));
            }
            let mut t = TripletCoarse::new(g.num_entities(), g.num_relations(), config.dim, config.seed)?;
            let losses = t.train(split, config)?;
            Ok((Coarse::Triplet(t), losses))
        }
        CoarseKind::Structural => {
            let s = StructuralCoarse::new(g.num_relations(), config.dim, config.layers, config.seed)?;
            let mut trainer = Trainer::new(
                s.model,
                TrainConfig {
                    lr: config.lr,
                    weight_decay: config.weight_decay,
                    negatives: config.negatives,
                    epochs: config.epochs,
                    seed: config.seed,
                },
            );
            let mut losses = Vec::with_capacity(config.epochs);
            for _ in 0..config.epochs {
                losses.push(trainer.train_epoch(split)?.mean_loss);
            }
            Ok((
                Coarse::Structural(StructuralCoarse {
                    model: trainer.into_model(),
                }),
                losses,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KnowledgeGraph, Triple};

    fn ten_entity_split() -> DatasetSplit {
        // Five "left" entities each linked to two "right" entities by two
        // relations. A multiplicative scorer is symmetric in head and tail,
        // so the facts avoid pairs whose reversal is also queried.
        let triples: Vec<Triple> = (0..5)
            .flat_map(|i| [Triple::new(i, 0, i + 5), Triple::new(i, 1, (i + 2) % 5 + 5)])
            .collect();
        let g = KnowledgeGraph::from_id_triples(10, 2, triples.iter().map(|t| (t.head, t.relation, t.tail))).unwrap();
        DatasetSplit::from_parts(g, triples, vec![], vec![]).unwrap()
    }

    fn train_hits1(coarse: &Coarse, split: &DatasetSplit) -> f64 {
        let ctx = GraphContext::new(&split.train_graph).unwrap();
        let filter = split.train_filter();
        let mut hits = 0;
        for t in &split.train {
            let scores = coarse.score_all(&ctx, Query::new(t.head, t.relation)).unwrap();
            let mask = filter.filtered_candidates(Query::new(t.head, t.relation), t.tail, 10);
            let best = ScoreTable::from_scores_masked(&scores, &mask).unwrap().argmax().unwrap().0;
            hits += usize::from(best == t.tail);
        }
        hits as f64 / split.train.len() as f64
    }

    #[test]
    fn tiny_graph_is_memorised() {
        let split = ten_entity_split();
        let config = CoarseConfig {
            dim: 16,
            epochs: 200,
            lr: 0.05,
            negatives: 8,
            seed: 11,
            ..CoarseConfig::default()
        };
        let (coarse, losses) = train_coarse(&split, &config).unwrap();
        assert!(losses.last().unwrap() < &losses[0]);
        assert_eq!(train_hits1(&coarse, &split), 1.0);
    }

    #[test]
    fn zero_lr_keeps_embeddings_and_seed_repeats() {
        let split = ten_entity_split();
        let config = CoarseConfig {
            epochs: 2,
            lr: 0.0,
            negatives: 4,
            ..CoarseConfig::default()
        };
        let (a, _) = train_coarse(&split, &config).unwrap();
        let fresh = TripletCoarse::new(10, 4, config.dim, config.seed).unwrap();
        let Coarse::Triplet(t) = &a else { panic!() };
        let values = |s: &crate::numerics::ParamStore| s.iter().map(|p| p.value().clone()).collect::<Vec<_>>();
        assert_eq!(values(&t.store), values(&fresh.store));
        let config = CoarseConfig { lr: 0.01, epochs: 3, ..config };
        let (x, lx) = train_coarse(&split, &config).unwrap();
        let (y, ly) = train_coarse(&split, &config).unwrap();
        assert_eq!(lx, ly);
        let (Coarse::Triplet(x), Coarse::Triplet(y)) = (x, y) else { panic!() };
        assert_eq!(values(&x.store), values(&y.store));
    }

    #[test]
    fn triplet_on_inductive_split_is_a_mode_error() {
        let mut split = ten_entity_split();
        split.mode = Mode::Inductive;
        assert!(matches!(
            train_coarse(&split, &CoarseConfig::default()),
            Err(Error::Mode(_))
        ));
        let structural = CoarseConfig {
            kind: CoarseKind::Structural,
            dim: 4,
            epochs: 1,
            negatives: 2,
            ..CoarseConfig::default()
        };
        assert!(train_coarse(&split, &structural).is_ok());
    }

    #[test]
    fn table_covers_every_entity_and_checkpoints_round_trip() {
        let split = ten_entity_split();
        let ctx = GraphContext::new(&split.train_graph).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for kind in [CoarseKind::Triplet, CoarseKind::Structural] {
            let config = CoarseConfig { kind, dim: 4, epochs: 1, negatives: 2, ..CoarseConfig::default() };
            let (c, _) = train_coarse(&split, &config).unwrap();
            let table = coarse_score_all(&c, &ctx, Query::new(3, 0)).unwrap();
            assert_eq!(table.len(), 10);
            let p = dir.path().join("c.ckpt");
            c.save(&p).unwrap();
            let back = Coarse::load(&p).unwrap();
            assert_eq!(back.kind(), kind);
            assert_eq!(back.score_all(&ctx, Query::new(3, 0)).unwrap(), table.scores);
            assert!(matches!(DuetModel::load(&p), Err(Error::Checkpoint(CheckpointError::BadMagic { .. }))));
        }
    }
}
