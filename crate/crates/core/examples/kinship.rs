//! Trains the fine model on the synthetic kinship graph and reports
//! fine-only test metrics after every epoch.

use std::time::Instant;

use duetgraph::eval::{evaluate, EvalConfig, Strategy};
use duetgraph::fusion::{DuetModel, ModelConfig, TrainConfig, Trainer};
use duetgraph::kg::synthetic::{kinship, KinshipConfig};

fn main() -> duetgraph::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5e-3);
    let split = kinship(KinshipConfig::default())?;
    println!(
        "{} entities, {} train / {} valid / {} test triples",
        split.train_graph.num_entities(),
        split.train.len(),
        split.valid.len(),
        split.test.len()
    );
    let model = DuetModel::new(ModelConfig::new(split.train_graph.num_relations()), 42)?;
    let mut trainer = Trainer::new(model, TrainConfig { lr, epochs, ..TrainConfig::default() });
    let start = Instant::now();
    let config = EvalConfig { strategy: Strategy::FineOnly, ..EvalConfig::default() };
    for _ in 0..epochs {
        let stats = trainer.train_epoch(&split)?;
        let report = evaluate(Some(&trainer.model), None, &split, &config)?;
        println!(
            "epoch {} loss {:.4} alpha {:.3} test MRR {:.3} Hits@1 {:.3} ({:.1}s)",
            stats.epoch,
            stats.mean_loss,
            stats.alpha,
            report.mrr,
            report.hits_at(1).unwrap_or(0.0),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
