//! Ranking metrics by hand: tie-averaged ranks, MRR and Hits@k, and the
//! canonical JSON report written by `duetgraph eval`.
//!
//!     cargo run --example metrics

use duetgraph::eval::{hits_at_k, mrr, rank_of, EvalConfig, EvalReport};
use duetgraph::kg::Mode;

fn main() -> duetgraph::Result<()> {
    // Answer is entity 2 in every query.
    let queries: [(&[f64], Option<&[bool]>); 4] = [
        (&[0.1, 0.3, 0.9, 0.2], None),
        (&[0.9, 0.3, 0.5, 0.2], None),
        // Entity 0 is another known answer and is filtered out.
        (&[0.9, 0.3, 0.5, 0.2], Some(&[false, true, true, true])),
        // Tied with two others: rank (1 + 3) / 2.
        (&[0.5, 0.5, 0.5, 0.1], None),
    ];
    let mut ranks = Vec::new();
    for (scores, mask) in queries {
        let r = rank_of(scores, 2, mask)?;
        println!("scores {scores:?} mask {mask:?} -> rank {r}");
        ranks.push(r);
    }
    println!("MRR {:.4}  Hits@1 {:.2}  Hits@3 {:.2}", mrr(&ranks)?, hits_at_k(&ranks, 1)?, hits_at_k(&ranks, 3)?);
    let report = EvalReport::from_ranks(&ranks, &EvalConfig::default(), Mode::Transductive)?;
    print!("{}", report.to_canonical_json()?);
    Ok(())
}
