use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EncoderState;
use crate::error::{Error, Result};
use crate::numerics::{NodeId, ParamId, ParamStore, Tape, Tensor};

/// Largest entity count for which the attention matrix is materialised for
/// diagnostics.
pub const DIAGNOSTIC_CAP: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AttentionKernel {
    /// `P = softmax(QKᵀ / √d)`; always materialises `P`.
    #[default]
    Softmax,
    /// `P = rownorm(φ(Q) φ(K)ᵀ)` with `φ(x) = elu(x) + 1`; computable in
    /// `O(|V| d²)` without forming `P`.
    Linear,
}

#[derive(Debug, Clone)]
pub struct GlobalLayer {
    pub query: ParamId,
    pub key: ParamId,
    pub value: ParamId,
}

/// All-pairs attention over entities: per layer `X ← P · (X W_v)`.
#[derive(Debug, Clone)]
pub struct GlobalPathway {
    pub layers: Vec<GlobalLayer>,
    pub kernel: AttentionKernel,
}

#[derive(Debug, Clone)]
pub struct GlobalOutput {
    pub z: NodeId,
    /// Attention matrix of each layer, when requested.
    pub attention: Vec<NodeId>,
}

impl GlobalPathway {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        hidden: usize,
        num_layers: usize,
        kernel: AttentionKernel,
        rng: &mut R,
    ) -> Result<Self> {
        let std = 1.0 / (hidden as f64).sqrt();
        let mut layers = Vec::with_capacity(num_layers);
        for l in 0..num_layers {
            let mut mat = |name: &str| {
                store.add(
                    format!("{prefix}.layer{l}.{name}"),
                    Tensor::randn(&[hidden, hidden], std, rng),
                )
            };
            layers.push(GlobalLayer {
                query: mat("query")?,
                key: mat("key")?,
                value: mat("value")?,
            });
        }
        Ok(Self { layers, kernel })
    }

    /// Runs every layer. With `return_attention` the dense path is used and
    /// each layer's `P` is returned (size-capped); otherwise the linear kernel
    /// takes its `O(|V| d²)` route.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        state: &EncoderState,
        return_attention: bool,
    ) -> Result<GlobalOutput> {
        let n = tape.value(state.x0).rows();
        if return_attention && n > DIAGNOSTIC_CAP {
            return Err(Error::Size(format!(
                "attention matrix requested for {n} entities (cap {DIAGNOSTIC_CAP})"
            )));
        }
        let mut x = state.x0;
        let mut attention = Vec::new();
        for layer in &self.layers {
            let wq = tape.param(store, layer.query);
            let wk = tape.param(store, layer.key);
            let wv = tape.param(store, layer.value);
            let q = tape.matmul(x, wq)?;
            let k = tape.matmul(x, wk)?;
            let v = tape.matmul(x, wv)?;
            x = match (self.kernel, return_attention) {
                (AttentionKernel::Softmax, _) => {
                    let d = tape.value(q).cols() as f64;
                    let logits = tape.matmul_nt(q, k)?;
                    let logits = tape.scale(logits, 1.0 / d.sqrt());
                    let p = tape.softmax_rows(logits)?;
                    if return_attention {
                        attention.push(p);
                    }
                    tape.matmul(p, v)?
                }
                (AttentionKernel::Linear, true) => {
                    let (fq, fk) = (tape.elu_plus_one(q), tape.elu_plus_one(k));
                    let kernel = tape.matmul_nt(fq, fk)?;
                    let ones = tape.constant(Tensor::full(&[n, 1], 1.0));
                    let norm = tape.matmul(kernel, ones)?;
                    let p = tape.div_col(kernel, norm)?;
                    attention.push(p);
                    tape.matmul(p, v)?
                }
                (AttentionKernel::Linear, false) => {
                    let (fq, fk) = (tape.elu_plus_one(q), tape.elu_plus_one(k));
                    let fk_t = tape.transpose(fk)?;
                    let kv = tape.matmul(fk_t, v)?;
                    let ones = tape.constant(Tensor::full(&[n, 1], 1.0));
                    let k_sum = tape.matmul(fk_t, ones)?;
                    let num = tape.matmul(fq, kv)?;
                    let den = tape.matmul(fq, k_sum)?;
                    tape.div_col(num, den)?
                }
            };
        }
        Ok(GlobalOutput { z: x, attention })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KnowledgeGraph, Query};
    use crate::pathways::{Encoder, GraphContext};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, d: usize, kernel: AttentionKernel, enc_layers: usize, seed: u64) -> (ParamStore, Encoder, GlobalPathway, GraphContext) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<(usize, usize, usize)> = (0..n).map(|i| (i, 0, (i + 1) % n)).collect();
        let g = KnowledgeGraph::from_id_triples(n, 1, edges).unwrap().add_inverse_relations().unwrap();
        let mut store = ParamStore::new();
        let enc = Encoder::new(&mut store, "enc", 2, d, enc_layers, &mut rng).unwrap();
        let glob = GlobalPathway::new(&mut store, "glob", d, 1, kernel, &mut rng).unwrap();
        (store, enc, glob, GraphContext::new(&g).unwrap())
    }

    #[test]
    fn identical_rows_give_uniform_attention() {
        let (store, enc, glob, ctx) = setup(5, 4, AttentionKernel::Softmax, 0, 1);
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::full(&[5, 4], 0.7));
        let state = EncoderState { x0: x, relation: x };
        let out = glob.forward(&mut tape, &store, &state, true).unwrap();
        let p = tape.value(out.attention[0]);
        assert!(p.max_abs_diff(&Tensor::full(&[5, 5], 0.2)) < 1e-15);
        let _ = (enc, ctx);
    }

    #[test]
    fn rows_are_stochastic_and_match_dense_oracle() {
        let (n, d) = (5, 3);
        let (store, enc, glob, ctx) = setup(n, d, AttentionKernel::Softmax, 2, 2);
        let mut tape = Tape::new();
        let s = enc.encode(&mut tape, &store, &ctx, Query::new(1, 0)).unwrap();
        let out = glob.forward(&mut tape, &store, &s, true).unwrap();
        let x = tape.value(s.x0).clone();
        let p = tape.value(out.attention[0]);
        for i in 0..n {
            assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // Independent loop-based attention.
        let l = &glob.layers[0];
        let proj = |w: &Tensor| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..d).map(|j| (0..d).map(|k| x.get(i, k) * w.get(k, j)).sum()).collect())
                .collect()
        };
        let (q, k, v) = (proj(store.value(l.query)), proj(store.value(l.key)), proj(store.value(l.value)));
        for i in 0..n {
            let logits: Vec<f64> = (0..n)
                .map(|j| (0..d).map(|c| q[i][c] * k[j][c]).sum::<f64>() / (d as f64).sqrt())
                .collect();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = logits.iter().map(|x| (x - m).exp()).collect();
            let s: f64 = e.iter().sum();
            for c in 0..d {
                let z: f64 = (0..n).map(|j| e[j] / s * v[j][c]).sum();
                assert!((tape.value(out.z).get(i, c) - z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_form_matches_dense_form() {
        for seed in 0..10 {
            let (store, enc, glob, ctx) = setup(12, 4, AttentionKernel::Linear, 1, seed);
            let mut tape = Tape::new();
            let s = enc.encode(&mut tape, &store, &ctx, Query::new(3, 1)).unwrap();
            let dense = glob.forward(&mut tape, &store, &s, true).unwrap();
            let fast = glob.forward(&mut tape, &store, &s, false).unwrap();
            assert!(fast.attention.is_empty());
            assert!(tape.value(dense.z).max_abs_diff(tape.value(fast.z)) < 1e-6);
            let p = tape.value(dense.attention[0]);
            for i in 0..12 {
                assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn oversized_attention_request_is_a_size_error() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let glob = GlobalPathway::new(&mut store, "g", 2, 1, AttentionKernel::Linear, &mut rng).unwrap();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[DIAGNOSTIC_CAP + 1, 2]));
        let state = EncoderState { x0: x, relation: x };
        assert!(matches!(glob.forward(&mut tape, &store, &state, true), Err(Error::Size(_))));
        assert!(glob.forward(&mut tape, &store, &state, false).is_ok());
    }
}
