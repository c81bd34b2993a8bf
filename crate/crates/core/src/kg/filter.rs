use std::collections::{HashMap, HashSet};

use super::{Query, Triple};

/// Index of every known `(h, r) → {t}` used for filtered ranking.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    answers: HashMap<(usize, usize), HashSet<usize>>,
}

impl FilterIndex {
    pub fn new<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut answers: HashMap<(usize, usize), HashSet<usize>> = HashMap::new();
        for t in triples {
            answers.entry((t.head, t.relation)).or_default().insert(t.tail);
        }
        Self { answers }
    }

    /// Known tails of `query`.
    pub fn known(&self, query: Query) -> Option<&HashSet<usize>> {
        self.answers.get(&(query.head, query.relation))
    }

    /// `true` for `answer` and for every entity that is not another known
    /// tail of `query`.
    pub fn filtered_candidates(&self, query: Query, answer: usize, num_entities: usize) -> Vec<bool> {
        let mut mask = vec![true; num_entities];
        if let Some(known) = self.known(query) {
            for &t in known {
                if t != answer && t < num_entities {
                    mask[t] = false;
                }
            }
        }
        mask
    }
}
