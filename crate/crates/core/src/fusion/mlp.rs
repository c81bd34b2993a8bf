use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{matmul, sigma_max, NodeId, ParamId, ParamStore, Tape, Tensor};
use crate::pathways::Activation;

/// Row-wise scoring network: hidden layers with `activation`, linear output.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<(ParamId, ParamId)>,
    pub activation: Activation,
}

impl Mlp {
    /// `widths = [in, hidden…, out]`.
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        widths: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config("an MLP needs at least input and output widths".into()));
        }
        let mut layers = Vec::new();
        for (l, w) in widths.windows(2).enumerate() {
            let std = 1.0 / (w[0] as f64).sqrt();
            let weight = store.add(
                format!("{prefix}.layer{l}.weight"),
                Tensor::randn(&[w[0], w[1]], std, rng),
            )?;
            let bias = store.add(format!("{prefix}.layer{l}.bias"), Tensor::zeros(&[1, w[1]]))?;
            layers.push((weight, bias));
        }
        Ok(Self { layers, activation })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let w = tape.param(store, w);
            let b = tape.param(store, b);
            let lin = tape.matmul(h, w)?;
            h = tape.add_row(lin, b)?;
            if i < last {
                h = self.activation.apply(tape, h);
            }
        }
        Ok(h)
    }

    /// Scores each row of `z` independently (plain evaluation, no tape).
    pub fn score_rows(&self, store: &ParamStore, z: &Tensor) -> Result<Vec<f64>> {
        let mut h = z.clone();
        let last = self.layers.len() - 1;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let mut next = matmul(&h, store.value(w))?;
            let bias = store.value(b);
            for r in 0..next.rows() {
                for (x, bb) in next.row_mut(r).iter_mut().zip(bias.data()) {
                    *x += bb;
                }
            }
            if i < last {
                next = next.map(|x| self.activation.eval(x));
            }
            h = next;
        }
        Ok(h.into_data())
    }

    pub fn weights<'a>(&self, store: &'a ParamStore) -> Vec<&'a Tensor> {
        self.layers.iter().map(|&(w, _)| store.value(w)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub method: LipschitzMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzMethod {
    /// Product of per-layer spectral norms (valid for 1-Lipschitz activations).
    SpectralProduct,
}

/// Upper bound on the Lipschitz constant of an MLP with 1-Lipschitz
/// activations, from the weight matrices in order.
pub fn estimate_lipschitz(weights: &[&Tensor]) -> Result<LipschitzEstimate> {
    let mut value = 1.0;
    for w in weights {
        // Power iteration stops when the residual is below tol·λ, so the
        // estimate may sit a hair under the true σ; pad by the tolerance.
        value *= sigma_max(w)? * (1.0 + 1e-9);
    }
    Ok(LipschitzEstimate {
        value,
        method: LipschitzMethod::SpectralProduct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_bias() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mlp = Mlp::new(&mut store, "m", &[3, 4, 1], Activation::Relu, &mut rng).unwrap();
        for &(w, b) in &mlp.layers {
            let s = store.value(w).shape().to_vec();
            *store.value_mut(w) = Tensor::zeros(&s);
            let s = store.value(b).shape().to_vec();
            *store.value_mut(b) = Tensor::full(&s, 0.0);
        }
        let last_bias = mlp.layers[1].1;
        *store.value_mut(last_bias) = Tensor::scalar(-1.25);
        let z = Tensor::randn(&[5, 3], 1.0, &mut rng);
        assert_eq!(mlp.score_rows(&store, &z).unwrap(), vec![-1.25; 5]);
    }

    #[test]
    fn tape_forward_matches_hand_rolled_oracle() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mlp = Mlp::new(&mut store, "m", &[3, 4, 1], Activation::Relu, &mut rng).unwrap();
        let b1 = mlp.layers[0].1;
        *store.value_mut(b1) = Tensor::randn(&[1, 4], 1.0, &mut rng);
        let z = Tensor::randn(&[6, 3], 1.0, &mut rng);
        let mut tape = Tape::new();
        let x = tape.constant(z.clone());
        let out = mlp.forward(&mut tape, &store, x).unwrap();
        let (w1, b1) = (store.value(mlp.layers[0].0), store.value(mlp.layers[0].1));
        let (w2, b2) = (store.value(mlp.layers[1].0), store.value(mlp.layers[1].1));
        for r in 0..6 {
            let mut s = b2.data()[0];
            for j in 0..4 {
                let mut h = b1.data()[j];
                for i in 0..3 {
                    h += z.get(r, i) * w1.get(i, j);
                }
                s += h.max(0.0) * w2.get(j, 0);
            }
            assert!((tape.value(out).data()[r] - s).abs() < 1e-12);
        }
        assert_eq!(tape.value(out).data(), mlp.score_rows(&store, &z).unwrap().as_slice());
    }

    #[test]
    fn row_permutation_permutes_scores() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mlp = Mlp::new(&mut store, "m", &[2, 3, 1], Activation::Tanh, &mut rng).unwrap();
        let z = Tensor::randn(&[4, 2], 1.0, &mut rng);
        let perm = [3, 1, 0, 2];
        let pz = Tensor::from_rows(&perm.iter().map(|&i| z.row(i)).collect::<Vec<_>>());
        let s = mlp.score_rows(&store, &z).unwrap();
        let ps = mlp.score_rows(&store, &pz).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(ps[k], s[i]);
        }
    }

    #[test]
    fn lipschitz_examples() {
        let d = Tensor::diag(&[2.0, 3.0]);
        assert!((estimate_lipschitz(&[&d]).unwrap().value - 3.0).abs() < 1e-8);
        let i = Tensor::identity(4);
        assert!((estimate_lipschitz(&[&i, &i]).unwrap().value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lipschitz_bounds_sampled_ratios() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mlp = Mlp::new(&mut store, "m", &[4, 6, 1], Activation::Relu, &mut rng).unwrap();
        let b1 = mlp.layers[0].1;
        *store.value_mut(b1) = Tensor::randn(&[1, 6], 1.0, &mut rng);
        let l = estimate_lipschitz(&mlp.weights(&store)).unwrap().value;
        let a = Tensor::randn(&[10_000, 4], 1.0, &mut rng);
        let b = Tensor::randn(&[10_000, 4], 1.0, &mut rng);
        let (sa, sb) = (mlp.score_rows(&store, &a).unwrap(), mlp.score_rows(&store, &b).unwrap());
        let mut worst: f64 = 0.0;
        for r in 0..10_000 {
            let dist: f64 = a.row(r).iter().zip(b.row(r)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            worst = worst.max((sa[r] - sb[r]).abs() / dist);
        }
        assert!(worst <= l, "{worst} > {l}");
    }
}
