//! Over-smoothing diagnostics on dense propagation operators.
//!
//! One propagation block of the local pathway is modelled by the power
//! `A^L` of the normalized adjacency, one block of the global pathway by a
//! row-stochastic attention matrix `P`. The single-pathway stack composes
//! them (`M_O = P·A^L`), the fused model mixes them
//! (`M_D = α·A^L + (1−α)·P`). The largest singular value of the operator
//! bounds how fast score differences between entities can shrink.

mod bounds;
mod montecarlo;

use serde::{Deserialize, Serialize};

pub use bounds::{
    alpha_threshold, bound_curves, bound_curves_csv, empirical_gap_vs_bound, gap_upper_bound,
    model_gap_probe, BoundPoint, GapBoundReport, GapProbe,
};
pub use montecarlo::{
    subtable_gap_lower_bound, verify_subtable_gap_montecarlo, MonteCarloReport, ScoreDistribution,
    MIN_TRIALS,
};

use crate::canonical::to_canonical_json;
use crate::error::{shape_err, Error, Result};
use crate::numerics::{matmul, matrix_power, sigma_max, Tensor};
use crate::pathways::DIAGNOSTIC_CAP;

/// Tolerance for symmetry of `A` and row sums of `P`.
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Slack on every asserted singular-value inequality.
pub const INEQUALITY_TOL: f64 = 1e-9;

/// `A`, `P`, the depth `L` and the fusion weight `α` of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PathwayMatrices {
    pub a: Tensor,
    pub p: Tensor,
    pub layers: u32,
    pub alpha: f64,
}

impl PathwayMatrices {
    pub fn new(a: Tensor, p: Tensor, layers: u32, alpha: f64) -> Result<Self> {
        let n = a.rows();
        if !a.is_matrix() || a.cols() != n || p.shape() != a.shape() {
            return Err(shape_err(
                "pathway_matrices",
                format!("A {:?} and P {:?} must be equal square matrices", a.shape(), p.shape()),
            ));
        }
        if n > DIAGNOSTIC_CAP {
            return Err(Error::Size(format!("{n} entities exceed the diagnostics cap {DIAGNOSTIC_CAP}")));
        }
        check_alpha(alpha)?;
        for i in 0..n {
            for j in 0..i {
                if (a.get(i, j) - a.get(j, i)).abs() > SYMMETRY_TOL {
                    return Err(Error::Contract(format!("A is not symmetric at ({i}, {j})")));
                }
            }
            let row = p.row(i);
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL || row.iter().any(|&x| x < 0.0) {
                return Err(Error::Contract(format!(
                    "P row {i} is not a probability vector (sum {sum})"
                )));
            }
        }
        Ok(Self { a, p, layers, alpha })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Whether every vertex has a self-loop and the nonzero pattern of `A`
    /// is connected; then `σ_max(A^L) = 1`.
    pub fn connected_with_self_loops(&self) -> bool {
        let n = self.n();
        if (0..n).any(|v| self.a.get(v, v) <= 0.0) {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = n > 0;
        while let Some(v) = stack.pop() {
            for (u, &x) in self.a.row(v).iter().enumerate() {
                if x != 0.0 && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Contract(format!("α = {alpha} is outside (0, 1)")));
    }
    Ok(())
}

/// `M_O = P · A^L`.
pub fn compose_single_pathway(p: &Tensor, a: &Tensor, layers: u32) -> Result<Tensor> {
    matmul(p, &matrix_power(a, layers)?)
}

/// `M_D = α·A^L + (1−α)·P`.
pub fn compose_dual_pathway(p: &Tensor, a: &Tensor, layers: u32, alpha: f64) -> Result<Tensor> {
    check_alpha(alpha)?;
    let al = matrix_power(a, layers)?;
    al.scale(alpha).add(&p.scale(1.0 - alpha))
}

/// One inequality evaluated on an instance: `holds` is `lhs ≤ rhs` (the
/// tolerance is already folded into `rhs`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub applicable: bool,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(name: &str, inequality: &str, lhs: f64, rhs: f64, applicable: bool) -> Self {
        Self {
            name: name.into(),
            inequality: inequality.into(),
            lhs,
            rhs,
            applicable,
            holds: lhs <= rhs,
        }
    }

    /// Inapplicable checks never fail.
    pub fn passed(&self) -> bool {
        !self.applicable || self.holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n: usize,
    pub layers: u32,
    pub alpha: f64,
    pub sigma_a_l: f64,
    pub sigma_p: f64,
    pub sigma_single: f64,
    pub sigma_dual: f64,
    /// `(σ_D + σ_O)/(1 + σ_O)` for the measured operators.
    pub alpha_threshold: f64,
    pub alpha_below_threshold: bool,
    /// Mathematically sound inequalities; any failure is a bug.
    pub checks: Vec<InequalityCheck>,
    /// Strict "< 1" statements about the operators, reported for
    /// inspection only: a row-stochastic `P` always has `σ_max(P) ≥ 1`.
    pub claims: Vec<InequalityCheck>,
}

impl SpectralReport {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(InequalityCheck::passed)
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        to_canonical_json(self)
    }
}

/// Measures `σ_max` of `A^L`, `P`, `M_O` and `M_D` and evaluates the
/// singular-value inequalities relating them.
pub fn singular_report(m: &PathwayMatrices) -> Result<SpectralReport> {
    let al = matrix_power(&m.a, m.layers)?;
    let single = matmul(&m.p, &al)?;
    let dual = compose_dual_pathway(&m.p, &m.a, m.layers, m.alpha)?;
    let (s_al, s_p) = (sigma_max(&al)?, sigma_max(&m.p)?);
    let (s_o, s_d) = (sigma_max(&single)?, sigma_max(&dual)?);
    let a = m.alpha;
    let unit = m.connected_with_self_loops();
    let checks = vec![
        InequalityCheck::new(
            "unit_adjacency_norm",
            "|σ_max(A^L) − 1| ≤ 1e-9 (connected graph with self-loops)",
            (s_al - 1.0).abs(),
            INEQUALITY_TOL,
            unit,
        ),
        InequalityCheck::new(
            "submultiplicativity",
            "σ_max(P·A^L) ≤ σ_max(P)·σ_max(A^L) + 1e-9",
            s_o,
            s_p * s_al + INEQUALITY_TOL,
            true,
        ),
        InequalityCheck::new(
            "triangle",
            "σ_max(M_D) ≤ α·σ_max(A^L) + (1−α)·σ_max(P) + 1e-9",
            s_d,
            a * s_al + (1.0 - a) * s_p + INEQUALITY_TOL,
            true,
        ),
        InequalityCheck::new(
            "reverse_triangle",
            "|α·σ_max(A^L) − (1−α)·σ_max(P)| − 1e-9 ≤ σ_max(M_D)",
            (a * s_al - (1.0 - a) * s_p).abs() - INEQUALITY_TOL,
            s_d,
            true,
        ),
    ];
    let claims = vec![
        InequalityCheck::new("attention_contracts", "σ_max(P) < 1", s_p, 1.0 - f64::EPSILON, true),
        InequalityCheck::new("single_contracts", "σ_max(M_O) < 1", s_o, 1.0 - f64::EPSILON, true),
        InequalityCheck::new("dual_contracts", "σ_max(M_D) < 1", s_d, 1.0 - f64::EPSILON, true),
        InequalityCheck::new(
            "dual_exceeds_single",
            "σ_max(M_O) ≤ σ_max(M_D)",
            s_o,
            s_d,
            true,
        ),
    ];
    let threshold = alpha_threshold(s_o, s_d);
    Ok(SpectralReport {
        n: m.n(),
        layers: m.layers,
        alpha: a,
        sigma_a_l: s_al,
        sigma_p: s_p,
        sigma_single: s_o,
        sigma_dual: s_d,
        alpha_threshold: threshold,
        alpha_below_threshold: a < threshold,
        checks,
        claims,
    })
}
