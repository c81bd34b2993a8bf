//! Pooled normalized score-gap histogram of a briefly trained model on the
//! synthetic kinship graph, printed as CSV.
//!
//!     cargo run --release --example gap_histogram > gaps.csv

use duetgraph::eval::{default_gap_edges, pooled_gap_histogram, score_test_queries, Protocol, ScoreSource};
use duetgraph::fusion::{DuetModel, ModelConfig, TrainConfig, Trainer};
use duetgraph::kg::synthetic::{kinship, KinshipConfig};

fn main() -> duetgraph::Result<()> {
    let split = kinship(KinshipConfig { families: 8, ..KinshipConfig::default() })?;
    let model = DuetModel::new(ModelConfig::new(split.train_graph.num_relations()), 1)?;
    let mut trainer = Trainer::new(model, TrainConfig { lr: 5e-3, ..TrainConfig::default() });
    trainer.train_epoch(&split)?;
    let scored = score_test_queries(Some(&trainer.model), None, &split, Protocol::Filtered)?;
    let hist = pooled_gap_histogram(&scored, ScoreSource::Fine, &default_gap_edges())?;
    eprintln!(
        "{} queries ({} degenerate), {:.1}% of candidates within 0.02 std of the answer",
        hist.queries,
        hist.degenerate_queries,
        100.0 * hist.fraction_below(0.02)?
    );
    print!("{}", hist.to_csv());
    Ok(())
}
