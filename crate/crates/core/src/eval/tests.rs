use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::kg::KnowledgeGraph;

/// Returns fixed score vectors per query.
struct Lookup(HashMap<Query, Vec<f64>>);

impl EntityScorer for Lookup {
    fn score_all(&self, _ctx: &GraphContext, query: Query) -> Result<Vec<f64>> {
        self.0
            .get(&query)
            .cloned()
            .ok_or_else(|| Error::Contract(format!("no scores for {query:?}")))
    }
}

fn scored(fine: Vec<f64>, coarse: Vec<f64>, answer: usize) -> ScoredQuery {
    ScoredQuery {
        query: Query::new(0, 0),
        answer,
        mask: vec![true; fine.len()],
        fine: Some(fine),
        coarse: Some(coarse),
    }
}

#[test]
fn single_perfect_query() {
    let q = scored(vec![3.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], 0);
    for strategy in [Strategy::FineOnly, Strategy::CoarseOnly, Strategy::CoarseToFine] {
        let config = EvalConfig { strategy, ..EvalConfig::default() };
        let r = report_scored(std::slice::from_ref(&q), &config, Mode::Transductive).unwrap();
        assert_eq!(r.mrr, 1.0);
        assert_eq!(r.hits_at(1), Some(1.0));
    }
    assert!(report_scored(&[], &EvalConfig::default(), Mode::Transductive).is_err());
}

#[test]
fn coarse_to_fine_rank_follows_final_ranking() {
    // Shortlist {0, 1} by coarse score; fine favours 3 by 10 > Δ = 8.
    let q = scored(vec![1.0, 0.5, 0.0, 11.0], vec![4.0, 3.0, 2.0, 1.0], 0);
    let config = EvalConfig { k: 2, ..EvalConfig::default() };
    assert_eq!(rank_scored(&q, &config).unwrap(), 2.0);
    // Answer 3 is promoted.
    let q3 = ScoredQuery { answer: 3, ..q.clone() };
    assert_eq!(rank_scored(&q3, &config).unwrap(), 1.0);
    // With Δ = +∞ the shortlisted 0 is promoted above 3.
    let inf = EvalConfig { delta: f64::INFINITY, ..config.clone() };
    assert_eq!(rank_scored(&q3, &inf).unwrap(), 2.0);
    assert_eq!(rank_scored(&q, &inf).unwrap(), 1.0);
}

#[test]
fn twenty_queries_hand_aggregated() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut queries = Vec::new();
    let mut expected_ranks = Vec::new();
    for _ in 0..20 {
        let n = 8;
        let fine: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        let answer = rng.gen_range(0..n);
        let higher = fine.iter().filter(|&&s| s > fine[answer]).count() as f64;
        let ties = fine.iter().filter(|&&s| s == fine[answer]).count() as f64 - 1.0;
        expected_ranks.push(1.0 + higher + ties / 2.0);
        queries.push(scored(fine, vec![0.0; n], answer));
    }
    let config = EvalConfig { strategy: Strategy::FineOnly, ..EvalConfig::default() };
    let r = report_scored(&queries, &config, Mode::Transductive).unwrap();
    let inv: f64 = expected_ranks.iter().map(|r| 1.0 / r).sum::<f64>() / 20.0;
    assert!((r.mrr - inv).abs() < 1e-12);
    let h10 = expected_ranks.iter().filter(|&&r| r <= 10.0).count() as f64 / 20.0;
    let h1 = expected_ranks.iter().filter(|&&r| r <= 1.0).count() as f64 / 20.0;
    assert_eq!(r.hits_at(10), Some(h10));
    assert_eq!(r.hits_at(1), Some(h1));
    assert_eq!(r.n_queries, 20);

    // Order of queries does not matter (up to float summation order).
    let mut shuffled = queries.clone();
    shuffled.shuffle(&mut rng);
    let s = report_scored(&shuffled, &config, Mode::Transductive).unwrap();
    assert!((s.mrr - r.mrr).abs() < 1e-12);
    assert_eq!(s.hits, r.hits);

    // Strictly increasing transforms of the scores leave metrics unchanged.
    let warped: Vec<ScoredQuery> = queries
        .iter()
        .map(|q| ScoredQuery {
            fine: q.fine.as_ref().map(|f| f.iter().map(|x| (x * 0.3).exp() - 7.0).collect()),
            ..q.clone()
        })
        .collect();
    assert_eq!(report_scored(&warped, &config, Mode::Transductive).unwrap(), r);
}

#[test]
fn report_json_is_canonical() {
    let q = scored(vec![3.0, 1.0], vec![1.0, 0.0], 1);
    let config = EvalConfig { delta: f64::INFINITY, ..EvalConfig::default() };
    let r = report_scored(&[q], &config, Mode::Inductive).unwrap();
    let json = r.to_canonical_json().unwrap();
    assert_eq!(
        json,
        "{\n  \"delta\": \"inf\",\n  \"hits\": {\n    \"1\": 0.000000,\n    \"10\": 1.000000,\n    \"3\": 1.000000\n  },\n  \"k\": 4,\n  \"mode\": \"inductive\",\n  \"mrr\": 0.500000,\n  \"n_queries\": 1,\n  \"protocol\": \"filtered\",\n  \"strategy\": \"coarse-to-fine\"\n}\n"
    );
}

#[test]
fn evaluate_covers_both_directions_with_filtering() {
    // 0 -r0-> 1 and 0 -r0-> 2 in train; test asks (0, r0, 3).
    let train = vec![Triple::new(0, 0, 1), Triple::new(0, 0, 2), Triple::new(1, 0, 3)];
    let g = KnowledgeGraph::from_id_triples(4, 1, train.iter().map(|t| (t.head, t.relation, t.tail))).unwrap();
    let split = DatasetSplit::from_parts(g, train, vec![], vec![Triple::new(0, 0, 3)]).unwrap();
    let inv = split.test_graph.inverse_of(0);
    let mut table = HashMap::new();
    // Tail query: 1 and 2 outrank 3 but are known answers.
    table.insert(Query::new(0, 0), vec![0.0, 5.0, 4.0, 3.0]);
    // Head query (3, r0⁻¹): answer 0 ties with 1, which is also known.
    table.insert(Query::new(3, inv), vec![2.0, 2.0, 1.0, 0.0]);
    let fine = Lookup(table);
    let config = EvalConfig { strategy: Strategy::FineOnly, ..EvalConfig::default() };
    let filtered = evaluate(Some(&fine), None, &split, &config).unwrap();
    assert_eq!(filtered.n_queries, 2);
    assert_eq!(filtered.mrr, 1.0);
    let raw = evaluate(Some(&fine), None, &split, &EvalConfig { protocol: Protocol::Raw, ..config }).unwrap();
    // Tail rank 3, head rank 1.5.
    assert!((raw.mrr - (1.0 / 3.0 + 1.0 / 1.5) / 2.0).abs() < 1e-12);
    assert!(evaluate(None, None, &split, &EvalConfig::default()).is_err());
}

#[test]
fn pooled_histogram_counts_incorrect_candidates() {
    let qs = vec![
        scored(vec![1.0, 2.0, 3.0, 4.0], vec![0.0; 4], 0),
        scored(vec![0.0, 0.0, 0.0], vec![0.0; 3], 1),
    ];
    let h = pooled_gap_histogram(&qs, ScoreSource::Fine, &default_gap_edges()).unwrap();
    assert_eq!(h.total(), 3 + 2);
    assert_eq!(h.queries, 2);
    assert_eq!(h.degenerate_queries, 1);
}
