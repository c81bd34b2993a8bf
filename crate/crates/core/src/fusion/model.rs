use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::checkpoint;
use crate::error::{Error, Result};
use crate::kg::Query;
use crate::numerics::{NodeId, ParamId, ParamStore, Tape, Tensor};
use crate::pathways::{
    Activation, AttentionKernel, Encoder, EncoderState, GlobalPathway, GraphContext, LocalPathway,
};

/// Which pathways feed the scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `Z = α Z_local + (1 − α) Z_global`.
    #[default]
    Dual,
    LocalOnly,
    GlobalOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Relation count including inverses.
    pub num_relations: usize,
    pub hidden: usize,
    pub encoder_layers: usize,
    pub local_layers: usize,
    pub global_layers: usize,
    pub kernel: AttentionKernel,
    pub activation: Activation,
    pub variant: Variant,
}

impl ModelConfig {
    pub fn new(num_relations: usize) -> Self {
        Self {
            num_relations,
            hidden: 32,
            encoder_layers: 1,
            local_layers: 3,
            global_layers: 1,
            kernel: AttentionKernel::Softmax,
            activation: Activation::Relu,
            variant: Variant::Dual,
        }
    }
}

/// The fine model: encoder, both pathways, the fusion logit `a`, and the
/// row-wise scoring MLP. `α = sigmoid(a)`, initialised at 0.5.
#[derive(Debug, Clone)]
pub struct DuetModel {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub encoder: Encoder,
    pub local: LocalPathway,
    pub global: GlobalPathway,
    pub fusion_logit: ParamId,
    pub mlp: Mlp,
}

/// Tape handles of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub encoded: EncoderState,
    pub z_local: NodeId,
    pub z_global: NodeId,
    pub alpha: NodeId,
    pub z: NodeId,
    /// `|V| × 1` column of entity scores.
    pub scores: NodeId,
    pub attention: Vec<NodeId>,
}

impl DuetModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        if config.hidden == 0 {
            return Err(Error::Config("hidden dimension must be at least 1".into()));
        }
        if config.num_relations == 0 {
            return Err(Error::Config("model needs at least one relation".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let d = config.hidden;
        let encoder = Encoder::new(
            &mut store,
            "encoder",
            config.num_relations,
            d,
            config.encoder_layers,
            &mut rng,
        )?;
        let local = LocalPathway::new(
            &mut store,
            "local",
            config.num_relations,
            d,
            config.local_layers,
            config.activation,
            &mut rng,
        )?;
        let global = GlobalPathway::new(
            &mut store,
            "global",
            d,
            config.global_layers,
            config.kernel,
            &mut rng,
        )?;
        let fusion_logit = store.add("fusion.logit", Tensor::scalar(0.0))?;
        let mlp = Mlp::new(&mut store, "score", &[d, d, 1], config.activation, &mut rng)?;
        Ok(Self {
            config,
            store,
            encoder,
            local,
            global,
            fusion_logit,
            mlp,
        })
    }

    /// Current fusion weight `α = sigmoid(a)`.
    pub fn alpha(&self) -> f64 {
        crate::numerics::sigmoid(self.store.value(self.fusion_logit).data()[0])
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        ctx: &GraphContext,
        query: Query,
        return_attention: bool,
    ) -> Result<Forward> {
        let encoded = self.encoder.encode(tape, &self.store, ctx, query)?;
        let z_local = self.local.forward(tape, &self.store, ctx, &encoded)?;
        let g = self.global.forward(tape, &self.store, &encoded, return_attention)?;
        let a = tape.param(&self.store, self.fusion_logit);
        let alpha = tape.sigmoid(a);
        let z = match self.config.variant {
            Variant::Dual => fuse_on_tape(tape, z_local, g.z, alpha)?,
            Variant::LocalOnly => z_local,
            Variant::GlobalOnly => g.z,
        };
        let scores = self.mlp.forward(tape, &self.store, z)?;
        Ok(Forward {
            encoded,
            z_local,
            z_global: g.z,
            alpha,
            z,
            scores,
            attention: g.attention,
        })
    }

    /// Scores of every entity for `query` (no gradients kept).
    pub fn score_all(&self, ctx: &GraphContext, query: Query) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let f = self.forward(&mut tape, ctx, query, false)?;
        let s = tape.value(f.scores).data().to_vec();
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite fine score for query {query:?}"
            )));
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::save(
            path,
            checkpoint::FINE_MAGIC,
            serde_json::to_value(&self.config)?,
            &self.store,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (manifest, tensors) = checkpoint::load(path, checkpoint::FINE_MAGIC)?;
        let config: ModelConfig = serde_json::from_value(manifest.model).map_err(|e| {
            crate::error::CheckpointError::Inconsistent(format!("model config: {e}"))
        })?;
        let mut model = Self::new(config, 0)?;
        checkpoint::restore_into(&mut model.store, tensors)?;
        Ok(model)
    }
}

/// `α · Z_local + (1 − α) · Z_global` on concrete tensors.
pub fn fuse(z_local: &Tensor, z_global: &Tensor, alpha: f64) -> Result<Tensor> {
    if z_local.shape() != z_global.shape() {
        return Err(Error::Contract(format!(
            "cannot fuse {:?} with {:?}",
            z_local.shape(),
            z_global.shape()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Contract(format!("fusion weight {alpha} outside (0, 1)")));
    }
    z_local.zip_with(z_global, "fuse", |l, g| alpha * l + (1.0 - alpha) * g)
}

/// Differentiable fusion with a `1 × 1` weight node.
pub fn fuse_on_tape(tape: &mut Tape, z_local: NodeId, z_global: NodeId, alpha: NodeId) -> Result<NodeId> {
    if tape.value(z_local).shape() != tape.value(z_global).shape() {
        return Err(Error::Contract(format!(
            "cannot fuse {:?} with {:?}",
            tape.value(z_local).shape(),
            tape.value(z_global).shape()
        )));
    }
    let l = tape.scale_by(z_local, alpha)?;
    let beta = tape.one_minus(alpha);
    let g = tape.scale_by(z_global, beta)?;
    tape.add(l, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KnowledgeGraph;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_midpoint() {
        let l = Tensor::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let g = Tensor::from_rows(&[&[-1.0, 0.0], &[5.0, 8.0]]);
        assert!(fuse(&l, &g, 1.0 - 1e-12).unwrap().max_abs_diff(&l) < 1e-9);
        assert!(fuse(&l, &g, 1e-12).unwrap().max_abs_diff(&g) < 1e-9);
        let mid = fuse(&l, &g, 0.5).unwrap();
        assert_eq!(mid, Tensor::from_rows(&[&[0.0, 1.0], &[4.0, 6.0]]));
        assert!(matches!(fuse(&l, &g, 1.0), Err(Error::Contract(_))));
        assert!(matches!(
            fuse(&l, &Tensor::zeros(&[1, 2]), 0.5),
            Err(Error::Contract(_))
        ));
    }

    proptest! {
        #[test]
        fn fuse_is_linear(
            z1 in prop::collection::vec(-5.0f64..5.0, 6),
            z2 in prop::collection::vec(-5.0f64..5.0, 6),
            g1 in prop::collection::vec(-5.0f64..5.0, 6),
            g2 in prop::collection::vec(-5.0f64..5.0, 6),
            a in -3.0f64..3.0, b in -3.0f64..3.0, alpha in 0.01f64..0.99,
        ) {
            let t = |v: &Vec<f64>| Tensor::new(vec![2, 3], v.clone()).unwrap();
            let (z1, z2, g1, g2) = (t(&z1), t(&z2), t(&g1), t(&g2));
            let lhs = fuse(
                &z1.scale(a).add(&z2.scale(b)).unwrap(),
                &g1.scale(a).add(&g2.scale(b)).unwrap(),
                alpha,
            ).unwrap();
            let rhs = fuse(&z1, &g1, alpha).unwrap().scale(a)
                .add(&fuse(&z2, &g2, alpha).unwrap().scale(b)).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        }
    }

    #[test]
    fn initial_alpha_is_half_and_forward_is_deterministic() {
        let g = KnowledgeGraph::from_id_triples(6, 2, [(0, 0, 1), (1, 1, 2), (2, 0, 3), (4, 1, 5)])
            .unwrap()
            .add_inverse_relations()
            .unwrap();
        let ctx = GraphContext::new(&g).unwrap();
        let mut cfg = ModelConfig::new(4);
        cfg.hidden = 8;
        let m = DuetModel::new(cfg.clone(), 3).unwrap();
        assert_eq!(m.alpha(), 0.5);
        let a = m.score_all(&ctx, Query::new(0, 0)).unwrap();
        let b = DuetModel::new(cfg, 3).unwrap().score_all(&ctx, Query::new(0, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn variants_select_pathways() {
        let g = KnowledgeGraph::from_id_triples(4, 1, [(0, 0, 1), (1, 0, 2), (2, 0, 3)])
            .unwrap()
            .add_inverse_relations()
            .unwrap();
        let ctx = GraphContext::new(&g).unwrap();
        let mut cfg = ModelConfig::new(2);
        cfg.hidden = 4;
        for variant in [Variant::Dual, Variant::LocalOnly, Variant::GlobalOnly] {
            cfg.variant = variant;
            let m = DuetModel::new(cfg.clone(), 1).unwrap();
            let mut tape = Tape::new();
            let f = m.forward(&mut tape, &ctx, Query::new(0, 0), true).unwrap();
            let expected = match variant {
                Variant::Dual => fuse(tape.value(f.z_local), tape.value(f.z_global), 0.5).unwrap(),
                Variant::LocalOnly => tape.value(f.z_local).clone(),
                Variant::GlobalOnly => tape.value(f.z_global).clone(),
            };
            assert!(tape.value(f.z).max_abs_diff(&expected) < 1e-15);
            assert_eq!(f.attention.len(), 1);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut cfg = ModelConfig::new(6);
        cfg.hidden = 5;
        cfg.kernel = AttentionKernel::Linear;
        let m = DuetModel::new(cfg, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fine.ckpt");
        m.save(&p).unwrap();
        let back = DuetModel::load(&p).unwrap();
        assert_eq!(back.config, m.config);
        assert_eq!(back.store, m.store);
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2 + 40]).unwrap();
        assert!(matches!(
            DuetModel::load(&p),
            Err(Error::Checkpoint(crate::error::CheckpointError::Truncated { .. }))
        ));
    }
}
