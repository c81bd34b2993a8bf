//! Checks the expected top-score gap between a shortlist and the rest of
//! the candidates against its closed-form lower bound.
//!
//!     cargo run --release --example montecarlo_gap

use duetgraph::spectral::{subtable_gap_lower_bound, verify_subtable_gap_montecarlo, ScoreDistribution};

fn main() -> duetgraph::Result<()> {
    println!("bound for (4, 1) with sigma 1: {:.7}", subtable_gap_lower_bound(4, 1, 1.0)?);
    let dist = ScoreDistribution::default();
    println!("n_high  n_low  mean_gap  std_err   bound     exceeds");
    for n_high in [1, 2, 4, 8] {
        for n_low in [100, 1000] {
            let r = verify_subtable_gap_montecarlo(n_high, n_low, 100_000, &dist, 42)?;
            println!(
                "{:>6}  {:>5}  {:>8.4}  {:>7.5}  {:>8.5}  {}",
                r.n_high, r.n_low, r.mean_gap, r.std_error, r.bound, r.exceeds_bound
            );
        }
    }
    Ok(())
}
