//! Largest singular value by power iteration on `MᵀM`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{shape_err, Error, Result};

const START_SEED: u64 = 0x5eed_0f_5167;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub sigma_max: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on `MᵀM` from a fixed pseudo-random start vector.
///
/// Stops once the eigen-residual `‖MᵀMv − λv‖` drops below `tol·λ`, which
/// bounds the relative error of `σ = √λ` by roughly `tol / 2`.
pub fn spectral_norm(m: &Tensor, max_iters: usize, tol: f64) -> Result<SpectralEstimate> {
    if !m.is_matrix() || m.rows() == 0 || m.cols() == 0 {
        return Err(shape_err(
            "spectral_norm",
            format!("need a non-empty matrix, got {:?}", m.shape()),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::Contract(format!("tolerance must be positive, got {tol}")));
    }
    let (rows, cols) = (m.rows(), m.cols());
    let a = m.data();

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v: Vec<f64> = (0..cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut v);

    let mut mv = vec![0.0; rows];
    let mut w = vec![0.0; cols];
    let mut lambda = 0.0;
    for iter in 1..=max_iters {
        // w = Mᵀ(Mv)
        for (i, out) in mv.iter_mut().enumerate() {
            let row = &a[i * cols..(i + 1) * cols];
            *out = row.iter().zip(&v).map(|(x, y)| x * y).sum();
        }
        w.fill(0.0);
        for (i, &s) in mv.iter().enumerate() {
            let row = &a[i * cols..(i + 1) * cols];
            for (o, x) in w.iter_mut().zip(row) {
                *o += s * x;
            }
        }
        lambda = v.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>();
        if lambda <= 0.0 {
            // Mv = 0 on a unit vector: either M = 0 or v is orthogonal to
            // the row space. The norm of w decides.
            let wn = norm(&w);
            if wn == 0.0 {
                return Ok(SpectralEstimate {
                    sigma_max: 0.0,
                    iterations: iter,
                    converged: m.data().iter().all(|&x| x == 0.0),
                });
            }
        }
        let residual = v
            .iter()
            .zip(&w)
            .map(|(x, y)| (y - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt();
        let wn = norm(&w);
        if wn == 0.0 {
            break;
        }
        if residual <= tol * lambda.abs() {
            return Ok(SpectralEstimate {
                sigma_max: lambda.max(0.0).sqrt(),
                iterations: iter,
                converged: true,
            });
        }
        for (x, y) in v.iter_mut().zip(&w) {
            *x = y / wn;
        }
    }
    Ok(SpectralEstimate {
        sigma_max: lambda.max(0.0).sqrt(),
        iterations: max_iters,
        converged: false,
    })
}

/// [`spectral_norm`] with settings that reach ~1e-12 relative accuracy on
/// diagnostics-sized matrices.
pub fn sigma_max(m: &Tensor) -> Result<f64> {
    Ok(spectral_norm(m, 200_000, 1e-13)?.sigma_max)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    for x in v {
        *x /= n;
    }
}
