//! Seeded kinship-style knowledge graphs for tests and demos.
//!
//! Each family has three generations: a founding couple, their two
//! children, the children's spouses, and two grandchildren per couple (ten
//! people). Parent and spouse facts are always kept for training; derived
//! relations (siblings, grandparents, uncles, aunts) are partially held out
//! as valid/test queries, each still derivable from the training facts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DatasetSplit, Interner, KnowledgeGraph, Triple, Vocab};
use crate::error::{Error, Result};

pub const KINSHIP_RELATIONS: [&str; 9] = [
    "father_of",
    "mother_of",
    "spouse_of",
    "sibling_of",
    "grandfather_of",
    "grandmother_of",
    "uncle_of",
    "aunt_of",
    "child_of",
];

const FATHER: usize = 0;
const MOTHER: usize = 1;
const SPOUSE: usize = 2;
const SIBLING: usize = 3;
const GRANDFATHER: usize = 4;
const GRANDMOTHER: usize = 5;
const UNCLE: usize = 6;
const AUNT: usize = 7;
const CHILD: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct KinshipConfig {
    pub families: usize,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for KinshipConfig {
    fn default() -> Self {
        Self {
            families: 20,
            valid_fraction: 0.05,
            test_fraction: 0.15,
            seed: 7,
        }
    }
}

/// People per family.
pub const FAMILY_SIZE: usize = 10;

#[derive(Clone, Copy)]
struct Person {
    id: usize,
    male: bool,
}

/// Generates a kinship split with `10 · families` entities.
pub fn kinship(config: KinshipConfig) -> Result<DatasetSplit> {
    if config.families == 0 {
        return Err(Error::Config("families must be at least 1".into()));
    }
    let held = config.valid_fraction + config.test_fraction;
    if !(0.0..1.0).contains(&held) || config.valid_fraction < 0.0 || config.test_fraction < 0.0 {
        return Err(Error::Config(format!(
            "valid/test fractions must be non-negative with sum < 1, got {} + {}",
            config.valid_fraction, config.test_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.families * FAMILY_SIZE;
    // Shuffled ids so that entity order carries no structural signal.
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let mut names = vec![String::new(); n];

    let mut base = Vec::new();
    let mut derived = Vec::new();
    for f in 0..config.families {
        let slot = |i: usize| ids[f * FAMILY_SIZE + i];
        for i in 0..FAMILY_SIZE {
            names[slot(i)] = format!("f{f:02}_p{i}");
        }
        let gpa = Person { id: slot(0), male: true };
        let gma = Person { id: slot(1), male: false };
        let children: Vec<Person> = (2..4).map(|i| Person { id: slot(i), male: rng.gen_bool(0.5) }).collect();
        let spouses: Vec<Person> = children
            .iter()
            .zip(4..6)
            .map(|(c, i)| Person { id: slot(i), male: !c.male })
            .collect();
        let grandkids: Vec<Vec<Person>> = (0..2)
            .map(|c| {
                (0..2)
                    .map(|j| Person { id: slot(6 + 2 * c + j), male: rng.gen_bool(0.5) })
                    .collect()
            })
            .collect();

        let parent = |p: Person, c: Person, base: &mut Vec<Triple>| {
            base.push(Triple::new(p.id, if p.male { FATHER } else { MOTHER }, c.id));
            base.push(Triple::new(c.id, CHILD, p.id));
        };
        let marry = |a: Person, b: Person, base: &mut Vec<Triple>| {
            base.push(Triple::new(a.id, SPOUSE, b.id));
            base.push(Triple::new(b.id, SPOUSE, a.id));
        };
        marry(gpa, gma, &mut base);
        for &c in &children {
            parent(gpa, c, &mut base);
            parent(gma, c, &mut base);
        }
        for c in 0..2 {
            marry(children[c], spouses[c], &mut base);
            for &g in &grandkids[c] {
                parent(children[c], g, &mut base);
                parent(spouses[c], g, &mut base);
                derived.push(Triple::new(gpa.id, GRANDFATHER, g.id));
                derived.push(Triple::new(gma.id, GRANDMOTHER, g.id));
                let other = 1 - c;
                for relative in [children[other], spouses[other]] {
                    let r = if relative.male { UNCLE } else { AUNT };
                    derived.push(Triple::new(relative.id, r, g.id));
                }
            }
            derived.push(Triple::new(grandkids[c][0].id, SIBLING, grandkids[c][1].id));
            derived.push(Triple::new(grandkids[c][1].id, SIBLING, grandkids[c][0].id));
        }
        derived.push(Triple::new(children[0].id, SIBLING, children[1].id));
        derived.push(Triple::new(children[1].id, SIBLING, children[0].id));
    }

    derived.shuffle(&mut rng);
    let n_valid = (derived.len() as f64 * config.valid_fraction).round() as usize;
    let n_test = (derived.len() as f64 * config.test_fraction).round() as usize;
    let valid: Vec<Triple> = derived[..n_valid].to_vec();
    let test: Vec<Triple> = derived[n_valid..n_valid + n_test].to_vec();
    let mut train = base;
    train.extend_from_slice(&derived[n_valid + n_test..]);

    let vocab = Vocab {
        entities: Interner::from_names(names),
        relations: Interner::from_names(KINSHIP_RELATIONS),
    };
    let graph = KnowledgeGraph::new(vocab, train.iter().copied())?;
    DatasetSplit::from_parts(graph, train, valid, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_two_hundred_entities() {
        let s = kinship(KinshipConfig::default()).unwrap();
        assert_eq!(s.train_graph.num_entities(), 200);
        assert_eq!(s.train_graph.base_relations(), KINSHIP_RELATIONS.len());
        assert!(!s.test.is_empty());
        assert!(!s.valid.is_empty());
        for t in &s.test {
            assert!(!s.train_graph.contains(t));
        }
    }

    #[test]
    fn same_seed_same_split() {
        let a = kinship(KinshipConfig::default()).unwrap();
        let b = kinship(KinshipConfig::default()).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn held_out_grandparents_follow_from_parents() {
        let s = kinship(KinshipConfig::default()).unwrap();
        let g = &s.train_graph;
        for t in s.test.iter().filter(|t| t.relation == GRANDFATHER) {
            let via = (0..g.num_entities()).any(|m| {
                g.contains(&Triple::new(t.head, FATHER, m))
                    && (g.contains(&Triple::new(m, FATHER, t.tail))
                        || g.contains(&Triple::new(m, MOTHER, t.tail)))
            });
            assert!(via, "{t:?} not derivable");
        }
    }
}
