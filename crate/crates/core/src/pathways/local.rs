use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EncoderState, GraphContext};
use crate::error::Result;
use crate::numerics::{NodeId, ParamId, ParamStore, Tape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: NodeId) -> NodeId {
        match self {
            Activation::Relu => tape.relu(x),
            Activation::Tanh => tape.tanh(x),
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalLayer {
    /// Per-layer relation vectors `W_{r'}` multiplied into each message.
    pub relation: ParamId,
    pub weight: ParamId,
    pub bias: ParamId,
}

/// Query-aware message passing.
///
/// Each layer computes, for every entity `v`,
/// `x'_v = act((mean_{(u,r',v)} x_u ⊙ W_{r'} + x_v) · W + b)`.
#[derive(Debug, Clone)]
pub struct LocalPathway {
    pub layers: Vec<LocalLayer>,
    pub activation: Activation,
}

impl LocalPathway {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        num_relations: usize,
        hidden: usize,
        num_layers: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let std = 1.0 / (hidden as f64).sqrt();
        let mut layers = Vec::with_capacity(num_layers);
        for l in 0..num_layers {
            layers.push(LocalLayer {
                relation: store.add(
                    format!("{prefix}.layer{l}.relation"),
                    Tensor::randn(&[num_relations, hidden], 1.0, rng),
                )?,
                weight: store.add(
                    format!("{prefix}.layer{l}.weight"),
                    Tensor::randn(&[hidden, hidden], std, rng),
                )?,
                bias: store.add(format!("{prefix}.layer{l}.bias"), Tensor::zeros(&[1, hidden]))?,
            });
        }
        Ok(Self { layers, activation })
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        ctx: &GraphContext,
        state: &EncoderState,
    ) -> Result<NodeId> {
        let mut x = state.x0;
        for layer in &self.layers {
            let rel_table = tape.param(store, layer.relation);
            let rel = tape.gather_rows(rel_table, ctx.rel.clone())?;
            let from = tape.gather_rows(x, ctx.src.clone())?;
            let msg = tape.mul(from, rel)?;
            let agg = tape.scatter_rows(
                msg,
                ctx.dst.clone(),
                Some(ctx.inv_in_degree.clone()),
                ctx.num_entities,
            )?;
            let pre = tape.add(agg, x)?;
            let w = tape.param(store, layer.weight);
            let b = tape.param(store, layer.bias);
            let lin = tape.matmul(pre, w)?;
            let lin = tape.add_row(lin, b)?;
            x = self.activation.apply(tape, lin);
        }
        Ok(x)
    }
}
