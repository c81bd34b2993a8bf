use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{write_manifest, Cli, Command, Common, RunConfig};
use crate::canonical::to_canonical_json;
use crate::coarse::{train_coarse, Coarse};
use crate::error::{Error, Result};
use crate::eval::{
    default_gap_edges, evaluate, evaluation_queries, pooled_gap_histogram, score_gap_histogram,
    score_test_queries, ScoreSource, SharedScorer, Strategy,
};
use crate::fusion::{DuetModel, Trainer};
use crate::inference::{predict, PredictionRecord};
use crate::kg::Query;
use crate::pathways::GraphContext;
use crate::spectral::{
    bound_curves, bound_curves_csv, empirical_gap_vs_bound, model_gap_probe, singular_report,
    verify_subtable_gap_montecarlo, GapBoundReport, MonteCarloReport, ScoreDistribution,
    SpectralReport,
};

pub(super) fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::TrainCoarse { common, out } => {
            let cfg = load(common)?;
            let out = output(out, &cfg, "coarse.ckpt")?;
            let split = cfg.load_dataset()?;
            let (coarse, losses) = train_coarse(&split, &cfg.coarse_config())?;
            for (i, loss) in losses.iter().enumerate() {
                println!("{}", serde_json::json!({"epoch": i + 1, "mean_loss": loss}));
            }
            coarse.save(&out)?;
            write_manifest(cli, "train-coarse", &out, &cfg)
        }
        Command::TrainFine { common, out, log } => {
            let cfg = load(common)?;
            let out = output(out, &cfg, "fine.ckpt")?;
            let split = cfg.load_dataset()?;
            let model = DuetModel::new(cfg.model_config(split.train_graph.num_relations()), cfg.seed)?;
            let mut trainer = Trainer::new(model, cfg.train_config());
            let mut lines = String::new();
            for _ in 0..cfg.epochs {
                let line = trainer.train_epoch(&split)?.to_json_line();
                println!("{line}");
                lines.push_str(&line);
                lines.push('\n');
            }
            trainer.model.save(&out)?;
            write_manifest(cli, "train-fine", &out, &cfg)?;
            if let Some(log) = log {
                std::fs::write(log, lines)?;
                write_manifest(cli, "train-fine", log, &cfg)?;
            }
            Ok(())
        }
        Command::Eval { common, coarse, fine, out } => {
            let cfg = load(common)?;
            let out = output(out, &cfg, "metrics.json")?;
            let split = cfg.load_dataset()?;
            let needs_fine = cfg.strategy != Strategy::CoarseOnly;
            let needs_coarse = cfg.strategy != Strategy::FineOnly;
            let fine = load_fine(fine.as_deref(), needs_fine)?;
            let coarse = load_coarse(coarse.as_deref(), needs_coarse)?;
            let report = evaluate(
                fine.as_ref().map(|m| m as SharedScorer),
                coarse.as_ref().map(|c| c as SharedScorer),
                &split,
                &cfg.eval_config(),
            )?;
            let json = report.to_canonical_json()?;
            print!("{json}");
            std::fs::write(&out, json)?;
            write_manifest(cli, "eval", &out, &cfg)
        }
        Command::Predict { common, coarse, fine, out, limit } => {
            let cfg = load(common)?;
            let out = output(out, &cfg, "predictions.jsonl")?;
            let split = cfg.load_dataset()?;
            let fine = DuetModel::load(fine)?;
            let coarse = Coarse::load(coarse)?;
            let graph = &split.test_graph;
            let ctx = GraphContext::new(graph)?;
            let filter = split.test_filter();
            let filtered = cfg.protocol == crate::eval::Protocol::Filtered;
            let vocab = graph.vocab();
            let entity = |v: usize| vocab.entities.name(v).unwrap_or("?").to_string();
            let relation = |r: usize| vocab.relations.name(r).unwrap_or("?").to_string();
            let mut file = std::io::BufWriter::new(std::fs::File::create(&out)?);
            let queries = evaluation_queries(graph, &split.test);
            for &(query, answer) in queries.iter().take(limit.unwrap_or(usize::MAX)) {
                let mask = filtered.then(|| filter.filtered_candidates(query, answer, graph.num_entities()));
                let p = predict(&fine, &coarse, &ctx, query, cfg.k, cfg.delta, mask.as_deref())?;
                writeln!(file, "{}", PredictionRecord::new(query, &p, entity, relation).to_json_line()?)?;
            }
            file.flush()?;
            write_manifest(cli, "predict", &out, &cfg)
        }
        Command::Diagnose { common, fine, out, curves } => {
            let cfg = load(common)?;
            let out = output(out, &cfg, "diagnostics.json")?;
            let curves = match curves {
                Some(c) => c.clone(),
                None => out.with_extension("curves.csv"),
            };
            let split = cfg.load_dataset()?;
            let model = DuetModel::load(fine)?;
            let (report, csv) = diagnose(&cfg, &model, &split)?;
            std::fs::write(&out, to_canonical_json(&report)?)?;
            std::fs::write(&curves, csv)?;
            write_manifest(cli, "diagnose", &out, &cfg)?;
            write_manifest(cli, "diagnose", &curves, &cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.passed {
                Ok(())
            } else {
                Err(Error::Numeric(format!(
                    "asserted inequality failed; see {}",
                    out.display()
                )))
            }
        }
        Command::GapHist { common, fine, coarse, source, per_query, out } => {
            let cfg = load(common)?;
            let out = output(out, &cfg, "gap_hist.csv")?;
            let split = cfg.load_dataset()?;
            let source = ScoreSource::from(*source);
            let fine = load_fine(fine.as_deref(), source == ScoreSource::Fine)?;
            let coarse = load_coarse(coarse.as_deref(), source == ScoreSource::Coarse)?;
            let scored = score_test_queries(
                fine.as_ref().map(|m| m as SharedScorer),
                coarse.as_ref().map(|c| c as SharedScorer),
                &split,
                cfg.protocol,
            )?;
            let edges = default_gap_edges();
            let csv = if *per_query {
                let mut csv = String::from("query,bin_lo,bin_hi,count\n");
                for (i, q) in scored.iter().enumerate() {
                    let scores = match source {
                        ScoreSource::Fine => q.fine.as_deref(),
                        ScoreSource::Coarse => q.coarse.as_deref(),
                    }
                    .unwrap_or_default();
                    let h = score_gap_histogram(scores, q.answer, &edges, Some(&q.mask))?;
                    for row in h.to_csv().lines().skip(1) {
                        csv.push_str(&format!("{i},{row}\n"));
                    }
                }
                csv
            } else {
                pooled_gap_histogram(&scored, source, &edges)?.to_csv()
            };
            std::fs::write(&out, csv)?;
            write_manifest(cli, "gap-hist", &out, &cfg)
        }
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    match &common.config {
        Some(p) => super::parse_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn output(explicit: &Option<PathBuf>, cfg: &RunConfig, default_name: &str) -> Result<PathBuf> {
    let path = explicit.clone().unwrap_or_else(|| cfg.output_dir.join(default_name));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(path)
}

fn load_fine(path: Option<&Path>, needed: bool) -> Result<Option<DuetModel>> {
    match (path, needed) {
        (Some(p), true) => Ok(Some(DuetModel::load(p)?)),
        (None, true) => Err(Error::Config("this run needs --fine <checkpoint>".into())),
        (_, false) => Ok(None),
    }
}

fn load_coarse(path: Option<&Path>, needed: bool) -> Result<Option<Coarse>> {
    match (path, needed) {
        (Some(p), true) => Ok(Some(Coarse::load(p)?)),
        (None, true) => Err(Error::Config("this run needs --coarse <checkpoint>".into())),
        (_, false) => Ok(None),
    }
}

#[derive(Debug, Serialize)]
pub(super) struct DiagnoseReport {
    pub subgraph_entities: usize,
    pub query_head: String,
    pub query_relation: String,
    pub spectral: SpectralReport,
    pub lipschitz: f64,
    pub x0_norm: f64,
    pub gap_checks: Vec<GapBoundReport>,
    /// Whether the fused bound strictly decreases over the curve (only
    /// meaningful when `σ_max(M_D) < 1`).
    pub dual_curve_decreasing: Option<bool>,
    pub monte_carlo: MonteCarloReport,
    pub warnings: Vec<String>,
    pub passed: bool,
}

/// Runs the spectral suite around the first test query of the split.
pub(super) fn diagnose(
    cfg: &RunConfig,
    model: &DuetModel,
    split: &crate::kg::DatasetSplit,
) -> Result<(DiagnoseReport, String)> {
    let graph = &split.test_graph;
    let first = split
        .test
        .first()
        .ok_or_else(|| Error::Contract("the split has no test triples".into()))?;
    let keep = graph.bfs_ball(first.head, cfg.diagnose_entities);
    let sub = graph.induced_subgraph(&keep)?;
    let query = Query::new(0, first.relation);
    let mut probe = model_gap_probe(model, &sub, query, 0)?;
    let spectral = singular_report(&probe.matrices)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gap_checks = Vec::new();
    for depth in 0..=3 {
        probe.depth = depth;
        gap_checks.push(empirical_gap_vs_bound(&probe, cfg.diagnose_pairs, 1.0, &mut rng)?);
    }
    let (lipschitz, x0_norm) = (gap_checks[0].lipschitz, gap_checks[0].x0_norm);
    let curve = bound_curves(lipschitz, spectral.sigma_single, spectral.sigma_dual, x0_norm, cfg.diagnose_max_ell);
    let dual_curve_decreasing = (spectral.sigma_dual < 1.0 && x0_norm > 0.0 && lipschitz > 0.0)
        .then(|| curve.windows(2).all(|w| w[1].dual_bound < w[0].dual_bound));
    let n = keep.len();
    let n_high = cfg.k.min(n - 1).max(1);
    let monte_carlo = verify_subtable_gap_montecarlo(
        n_high,
        (n - n_high).max(1),
        cfg.montecarlo_trials,
        &ScoreDistribution::default(),
        cfg.seed,
    )?;
    let mut warnings: Vec<String> = spectral
        .claims
        .iter()
        .filter(|c| !c.holds)
        .map(|c| format!("claim {} ({}) does not hold: {:.6} vs {:.6}", c.name, c.inequality, c.lhs, c.rhs))
        .collect();
    if !spectral.alpha_below_threshold {
        warnings.push(format!(
            "α = {:.6} is not below the threshold {:.6}",
            spectral.alpha, spectral.alpha_threshold
        ));
    }
    if !monte_carlo.exceeds_bound {
        warnings.push("Monte-Carlo mean gap does not exceed the subtable bound".into());
    }
    let passed = spectral.all_checks_pass()
        && gap_checks.iter().all(|g| g.violations == 0)
        && dual_curve_decreasing != Some(false);
    let names = sub.vocab();
    let report = DiagnoseReport {
        subgraph_entities: n,
        query_head: names.entities.name(0).unwrap_or("?").to_string(),
        query_relation: names.relations.name(query.relation).unwrap_or("?").to_string(),
        spectral,
        lipschitz,
        x0_norm,
        gap_checks,
        dual_curve_decreasing,
        monte_carlo,
        warnings,
        passed,
    };
    Ok((report, bound_curves_csv(&curve)))
}
