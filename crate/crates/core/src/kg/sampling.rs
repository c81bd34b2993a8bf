use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};

/// Draws `count` entity ids uniformly, with replacement, from every entity
/// except `answer`.
pub fn sample_negatives<R: Rng + ?Sized>(
    num_entities: usize,
    answer: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if num_entities < 2 {
        return Err(Error::Sampling(format!(
            "need at least two entities to sample negatives, have {num_entities}"
        )));
    }
    if answer >= num_entities {
        return Err(Error::Sampling(format!(
            "answer {answer} outside {num_entities} entities"
        )));
    }
    if count == 0 {
        return Err(Error::Sampling("negative count must be at least 1".into()));
    }
    Ok((0..count)
        .map(|_| {
            let x = rng.gen_range(0..num_entities - 1);
            if x >= answer {
                x + 1
            } else {
                x
            }
        })
        .collect())
}

/// Like [`sample_negatives`], but also rejects every id in `excluded`
/// (other known answers of the same query), so negatives are drawn uniformly
/// from the remaining unmasked entities.
pub fn sample_negatives_excluding<R: Rng + ?Sized>(
    num_entities: usize,
    answer: usize,
    excluded: &HashSet<usize>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let blocked = excluded.iter().filter(|&&e| e != answer && e < num_entities).count();
    if num_entities < 2 + blocked {
        return Err(Error::Sampling(format!(
            "no admissible negatives: {num_entities} entities, answer and {blocked} others masked"
        )));
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let draw = sample_negatives(num_entities, answer, count - out.len(), rng)?;
        out.extend(draw.into_iter().filter(|e| !excluded.contains(e)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn answer_is_excluded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_negatives(5, 2, 100, &mut rng).unwrap();
        assert_eq!(s.len(), 100);
        assert!(s.iter().all(|&x| x < 5 && x != 2));
    }

    #[test]
    fn seeded_sequences_repeat() {
        let a = sample_negatives(50, 7, 64, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = sample_negatives(50, 7, 64, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frequencies_within_binomial_bound() {
        let n = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = sample_negatives(5, 2, n, &mut rng).unwrap();
        let mut counts = [0usize; 5];
        for x in s {
            counts[x] += 1;
        }
        assert_eq!(counts[2], 0);
        // Each of the 4 admissible ids ~ Binomial(n, 1/4).
        let mean = n as f64 / 4.0;
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for (id, &c) in counts.iter().enumerate().filter(|(i, _)| *i != 2) {
            assert!(
                (c as f64 - mean).abs() < 5.0 * sd,
                "id {id}: {c} vs {mean} ± {}",
                5.0 * sd
            );
        }
    }

    #[test]
    fn excluded_ids_never_drawn() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let excluded: HashSet<usize> = [1, 3].into_iter().collect();
        let s = sample_negatives_excluding(6, 2, &excluded, 500, &mut rng).unwrap();
        assert_eq!(s.len(), 500);
        assert!(s.iter().all(|x| [0, 4, 5].contains(x)));
        let all: HashSet<usize> = (0..6).collect();
        assert!(sample_negatives_excluding(6, 2, &all, 1, &mut rng).is_err());
    }

    #[test]
    fn single_entity_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_negatives(1, 0, 3, &mut rng),
            Err(Error::Sampling(_))
        ));
    }
}
