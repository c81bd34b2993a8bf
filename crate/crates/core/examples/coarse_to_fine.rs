//! Trains both stages on the synthetic kinship graph, then walks a few test
//! queries through the coarse-to-fine decision and prints what it chose.
//!
//!     cargo run --release --example coarse_to_fine

use duetgraph::coarse::{train_coarse, CoarseConfig};
use duetgraph::eval::evaluation_queries;
use duetgraph::fusion::{DuetModel, ModelConfig, TrainConfig, Trainer};
use duetgraph::inference::{predict, Source};
use duetgraph::kg::synthetic::{kinship, KinshipConfig};
use duetgraph::pathways::GraphContext;

fn main() -> duetgraph::Result<()> {
    let split = kinship(KinshipConfig { families: 8, ..KinshipConfig::default() })?;
    let (coarse, _) = train_coarse(&split, &CoarseConfig { epochs: 3, ..CoarseConfig::default() })?;
    let model = DuetModel::new(ModelConfig::new(split.train_graph.num_relations()), 7)?;
    let mut trainer = Trainer::new(model, TrainConfig { lr: 5e-3, epochs: 1, ..TrainConfig::default() });
    trainer.train_epoch(&split)?;
    let fine = trainer.into_model();

    let graph = &split.test_graph;
    let ctx = GraphContext::new(graph)?;
    let filter = split.test_filter();
    let names = &graph.vocab().entities;
    let name = |v: usize| names.name(v).unwrap_or("?");
    for (k, delta) in [(4, 8.0), (4, f64::INFINITY), (4, f64::NEG_INFINITY)] {
        let (mut correct, mut from_low, mut total) = (0, 0, 0);
        for &(query, answer) in &evaluation_queries(graph, &split.test) {
            let mask = filter.filtered_candidates(query, answer, graph.num_entities());
            let p = predict(&fine, &coarse, &ctx, query, k, delta, Some(&mask))?;
            correct += usize::from(p.decision.chosen == answer);
            from_low += usize::from(p.decision.source == Source::Low);
            total += 1;
            if total == 1 && k == 4 && delta == 8.0 {
                println!(
                    "query ({}, r{}) answer {}: chose {} from {:?}, gamma {:.3}",
                    name(query.head),
                    query.relation,
                    name(answer),
                    name(p.decision.chosen),
                    p.decision.source,
                    p.decision.gamma
                );
            }
        }
        println!("k={k} delta={delta}: {correct}/{total} correct, {from_low} taken from the low subtable");
    }
    Ok(())
}
