use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{compose_dual_pathway, PathwayMatrices};
use crate::error::{Error, Result};
use crate::fusion::{estimate_lipschitz, DuetModel, Mlp};
use crate::kg::{build_normalized_adjacency, KnowledgeGraph, Query};
use crate::numerics::{matmul, sigma_max, ParamStore, Tape, Tensor};
use crate::pathways::GraphContext;

/// Slack allowed between a measured gap and its bound.
pub const GAP_TOL: f64 = 1e-6;

/// Largest fusion weight for which the fused operator still has a larger
/// spectral norm than the composed one: `(σ_D + σ_O)/(1 + σ_O)`.
pub fn alpha_threshold(sigma_single: f64, sigma_dual: f64) -> f64 {
    (sigma_dual + sigma_single) / (1.0 + sigma_single)
}

/// `2·L_f·σ^ℓ·‖X0‖₂`: no two entity scores can differ by more after `ℓ`
/// propagation steps with operator norm `σ` and an `L_f`-Lipschitz scorer.
pub fn gap_upper_bound(lipschitz: f64, sigma: f64, ell: u32, x0_norm: f64) -> f64 {
    2.0 * lipschitz * sigma.powi(ell as i32) * x0_norm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub ell: u32,
    pub single_bound: f64,
    pub dual_bound: f64,
}

/// Gap bounds of the composed and fused operators for `ℓ = 0..=max_ell`.
pub fn bound_curves(lipschitz: f64, sigma_single: f64, sigma_dual: f64, x0_norm: f64, max_ell: u32) -> Vec<BoundPoint> {
    (0..=max_ell)
        .map(|ell| BoundPoint {
            ell,
            single_bound: gap_upper_bound(lipschitz, sigma_single, ell, x0_norm),
            dual_bound: gap_upper_bound(lipschitz, sigma_dual, ell, x0_norm),
        })
        .collect()
}

pub fn bound_curves_csv(points: &[BoundPoint]) -> String {
    let mut out = String::from("ell,single_bound,dual_bound\n");
    for p in points {
        out.push_str(&format!("{},{:.6e},{:.6e}\n", p.ell, p.single_bound, p.dual_bound));
    }
    out
}

/// A linearised instance: entity features `X0` propagated `depth` times by
/// the fused operator, then scored row by row with `mlp`.
#[derive(Debug, Clone)]
pub struct GapProbe {
    pub matrices: PathwayMatrices,
    pub x0: Tensor,
    pub depth: u32,
    pub mlp: Mlp,
    pub store: ParamStore,
}

impl GapProbe {
    /// Scores of every entity after propagation.
    pub fn scores(&self) -> Result<Vec<f64>> {
        let m = self.operator()?;
        let mut x = self.x0.clone();
        for _ in 0..self.depth {
            x = matmul(&m, &x)?;
        }
        self.mlp.score_rows(&self.store, &x)
    }

    fn operator(&self) -> Result<Tensor> {
        let m = &self.matrices;
        compose_dual_pathway(&m.p, &m.a, m.layers, m.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapBoundReport {
    pub depth: u32,
    /// `σ_max(M_D)` times the requested scale.
    pub sigma: f64,
    pub lipschitz: f64,
    pub x0_norm: f64,
    pub bound: f64,
    pub pairs: usize,
    pub max_gap: f64,
    pub violations: usize,
}

/// Samples `pairs` entity pairs and counts those whose score gap exceeds
/// the bound (plus [`GAP_TOL`]). `sigma_scale` shrinks the measured norm to
/// probe how tight the bound is; `1.0` is the real bound.
pub fn empirical_gap_vs_bound<R: Rng + ?Sized>(
    probe: &GapProbe,
    pairs: usize,
    sigma_scale: f64,
    rng: &mut R,
) -> Result<GapBoundReport> {
    let n = probe.matrices.n();
    if n < 2 {
        return Err(Error::Contract("need at least two entities to form pairs".into()));
    }
    if probe.x0.rows() != n {
        return Err(Error::Contract(format!("X0 has {} rows for {n} entities", probe.x0.rows())));
    }
    let scores = probe.scores()?;
    let sigma = sigma_max(&probe.operator()?)? * sigma_scale;
    let lipschitz = estimate_lipschitz(&probe.mlp.weights(&probe.store))?.value;
    let x0_norm = sigma_max(&probe.x0)?;
    let bound = gap_upper_bound(lipschitz, sigma, probe.depth, x0_norm);
    let (mut max_gap, mut violations) = (0.0f64, 0);
    for _ in 0..pairs {
        let u = rng.gen_range(0..n);
        let v = (u + rng.gen_range(1..n)) % n;
        let gap = (scores[u] - scores[v]).abs();
        max_gap = max_gap.max(gap);
        if gap > bound + GAP_TOL {
            violations += 1;
        }
    }
    Ok(GapBoundReport {
        depth: probe.depth,
        sigma,
        lipschitz,
        x0_norm,
        bound,
        pairs,
        max_gap,
        violations,
    })
}

/// Builds the linearised instance of a model at `query`: normalized
/// adjacency (with self-loops) of `graph`, the first global layer's
/// attention, the model's `α`, its encoded input and its scoring MLP.
pub fn model_gap_probe(model: &DuetModel, graph: &KnowledgeGraph, query: Query, depth: u32) -> Result<GapProbe> {
    if model.config.global_layers == 0 {
        return Err(Error::Contract("the model has no global layer to read attention from".into()));
    }
    let ctx = GraphContext::new(graph)?;
    let mut tape = Tape::new();
    let f = model.forward(&mut tape, &ctx, query, true)?;
    let p = tape.value(f.attention[0]).clone();
    let a = build_normalized_adjacency(graph, true)?;
    let matrices = PathwayMatrices::new(a, p, model.config.local_layers as u32, model.alpha())?;
    Ok(GapProbe {
        matrices,
        x0: tape.value(f.encoded.x0).clone(),
        depth,
        mlp: model.mlp.clone(),
        store: model.store.clone(),
    })
}
