use crate::error::{Error, Result};

/// Tie-averaged rank of `answer`: one plus the candidates scoring strictly
/// higher plus half of those tied with it. Entities with `mask[v] = false`
/// are ignored.
pub fn rank_of(scores: &[f64], answer: usize, mask: Option<&[bool]>) -> Result<f64> {
    if answer >= scores.len() {
        return Err(Error::Contract(format!(
            "answer {answer} outside {} scores",
            scores.len()
        )));
    }
    if let Some(m) = mask {
        if m.len() != scores.len() {
            return Err(Error::Contract(format!(
                "mask covers {} entities, scores {}",
                m.len(),
                scores.len()
            )));
        }
        if !m[answer] {
            return Err(Error::Contract(format!("answer {answer} is filtered out")));
        }
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score in ranking".into()));
    }
    let target = scores[answer];
    let (mut higher, mut tied) = (0usize, 0usize);
    for (v, &s) in scores.iter().enumerate() {
        if v == answer || mask.is_some_and(|m| !m[v]) {
            continue;
        }
        if s > target {
            higher += 1;
        } else if s == target {
            tied += 1;
        }
    }
    Ok(1.0 + higher as f64 + tied as f64 / 2.0)
}

fn check_ranks(ranks: &[f64]) -> Result<()> {
    if ranks.is_empty() {
        return Err(Error::Contract("no ranks to aggregate".into()));
    }
    if let Some(r) = ranks.iter().find(|r| !(**r >= 1.0)) {
        return Err(Error::Contract(format!("rank {r} is below 1")));
    }
    Ok(())
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[f64]) -> Result<f64> {
    check_ranks(ranks)?;
    Ok(ranks.iter().map(|r| 1.0 / r).sum::<f64>() / ranks.len() as f64)
}

/// Fraction of ranks at most `k`.
pub fn hits_at_k(ranks: &[f64], k: usize) -> Result<f64> {
    check_ranks(ranks)?;
    if k < 1 {
        return Err(Error::Contract("hits cutoff must be at least 1".into()));
    }
    Ok(ranks.iter().filter(|&&r| r <= k as f64).count() as f64 / ranks.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simple_ranks() {
        assert_eq!(rank_of(&[0.1, 0.9, 0.3], 1, None).unwrap(), 1.0);
        assert_eq!(rank_of(&[2.0; 7], 3, None).unwrap(), 4.0);
        assert_eq!(rank_of(&[5.0, 1.0, 3.0], 1, Some(&[false, true, true])).unwrap(), 2.0);
        assert!(matches!(rank_of(&[1.0, 2.0], 0, Some(&[false, true])), Err(Error::Contract(_))));
        assert!(rank_of(&[1.0], 3, None).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let r = [1.0, 2.0, 4.0];
        assert!((mrr(&r).unwrap() - 7.0 / 12.0).abs() < 1e-15);
        assert!((hits_at_k(&r, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(hits_at_k(&r, 10).unwrap(), 1.0);
        assert_eq!(mrr(&[1.0; 5]).unwrap(), 1.0);
        assert!(mrr(&[]).is_err());
        assert!(hits_at_k(&[], 1).is_err());
        assert!(mrr(&[0.5]).is_err());
    }

    #[test]
    fn ranks_match_pairwise_count_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let n = rng.gen_range(1..30);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
            let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.8)).collect();
            let answer = rng.gen_range(0..n);
            let mut mask = mask;
            mask[answer] = true;
            // Sort-based oracle: position of the tie block, then its midpoint.
            let mut kept: Vec<f64> = (0..n).filter(|&v| mask[v]).map(|v| scores[v]).collect();
            kept.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let first = kept.iter().position(|&s| s == scores[answer]).unwrap() + 1;
            let last = kept.iter().rposition(|&s| s == scores[answer]).unwrap() + 1;
            let expect = (first + last) as f64 / 2.0;
            assert_eq!(rank_of(&scores, answer, Some(&mask)).unwrap(), expect);
        }
    }

    #[test]
    fn aggregates_match_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ranks: Vec<f64> = (0..10_000).map(|_| 1.0 + rng.gen_range(0..200) as f64 / 2.0).collect();
        let mut inv = 0.0;
        let mut top = [0usize; 3];
        for &r in &ranks {
            inv += 1.0 / r;
            for (i, k) in [1.0, 3.0, 10.0].iter().enumerate() {
                if r <= *k {
                    top[i] += 1;
                }
            }
        }
        assert!((mrr(&ranks).unwrap() - inv / 1e4).abs() < 1e-12);
        for (i, k) in [1, 3, 10].iter().enumerate() {
            assert_eq!(hits_at_k(&ranks, *k).unwrap(), top[i] as f64 / 1e4);
        }
    }
}
