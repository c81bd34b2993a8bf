//! Singular-value report for the local and global propagation operators of
//! a small ring graph, plus the gap-bound curves they imply.
//!
//!     cargo run --example spectral_report -- [alpha]

use duetgraph::kg::{build_normalized_adjacency, KnowledgeGraph};
use duetgraph::numerics::{softmax_rows, Tensor};
use duetgraph::spectral::{bound_curves, singular_report, PathwayMatrices};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> duetgraph::Result<()> {
    let alpha: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let n = 24;
    let ring = KnowledgeGraph::from_id_triples(n, 1, (0..n).map(|i| (i, 0, (i + 1) % n)))?;
    let a = build_normalized_adjacency(&ring, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = softmax_rows(&Tensor::randn(&[n, n], 1.0, &mut rng))?;
    let report = singular_report(&PathwayMatrices::new(a, p, 2, alpha)?)?;
    print!("{}", report.to_canonical_json()?);
    for c in report.checks.iter().chain(&report.claims) {
        println!("{:<22} {:<40} {}", c.name, c.inequality, if c.holds { "holds" } else { "does not hold" });
    }
    println!("ell  single_bound  dual_bound");
    for p in bound_curves(1.0, report.sigma_single, report.sigma_dual, 1.0, 16).iter().step_by(4) {
        println!("{:>3}  {:>12.3e}  {:>10.3e}", p.ell, p.single_bound, p.dual_bound);
    }
    Ok(())
}
