use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Vocab;
use crate::error::{Error, Result};

/// Suffix appended to a relation name to name its inverse.
pub const INVERSE_SUFFIX: &str = "__inv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

/// A tail-completion query `(head, relation, ?)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub head: usize,
    pub relation: usize,
}

impl Query {
    pub fn new(head: usize, relation: usize) -> Self {
        Self { head, relation }
    }
}

/// Directed multi-relational graph with deduplicated triples.
///
/// Edge `i` of the message-passing view is `triples[i]`, read as a message
/// from `head` to `tail` labelled by `relation`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    vocab: Vocab,
    triples: Vec<Triple>,
    base_relations: usize,
    inverse_added: bool,
    by_relation: Vec<Vec<usize>>,
    edge_index: HashMap<Triple, usize>,
    in_degree: Vec<usize>,
}

impl KnowledgeGraph {
    /// Builds a graph, dropping repeated triples (first occurrence wins).
    pub fn new(vocab: Vocab, triples: impl IntoIterator<Item = Triple>) -> Result<Self> {
        let base_relations = vocab.num_relations();
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for t in triples {
            if t.head >= vocab.num_entities()
                || t.tail >= vocab.num_entities()
                || t.relation >= vocab.num_relations()
            {
                return Err(Error::Data(format!(
                    "triple {t:?} outside vocabulary ({} entities, {} relations)",
                    vocab.num_entities(),
                    vocab.num_relations()
                )));
            }
            if seen.insert(t) {
                kept.push(t);
            }
        }
        Ok(Self::assemble(vocab, kept, base_relations, false))
    }

    fn assemble(vocab: Vocab, triples: Vec<Triple>, base_relations: usize, inverse_added: bool) -> Self {
        let mut by_relation = vec![Vec::new(); vocab.num_relations()];
        let mut in_degree = vec![0; vocab.num_entities()];
        let mut edge_index = HashMap::with_capacity(triples.len());
        for (i, t) in triples.iter().enumerate() {
            by_relation[t.relation].push(i);
            in_degree[t.tail] += 1;
            edge_index.insert(*t, i);
        }
        Self {
            vocab,
            triples,
            base_relations,
            inverse_added,
            by_relation,
            edge_index,
            in_degree,
        }
    }

    /// Graph where entity and relation names are their decimal ids.
    pub fn from_id_triples(
        num_entities: usize,
        num_relations: usize,
        triples: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Result<Self> {
        let vocab = Vocab {
            entities: super::Interner::from_names((0..num_entities).map(|i| format!("e{i}"))),
            relations: super::Interner::from_names((0..num_relations).map(|i| format!("r{i}"))),
        };
        Self::new(vocab, triples.into_iter().map(|(h, r, t)| Triple::new(h, r, t)))
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    /// Relation count including inverses when they have been added.
    pub fn num_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    /// Relation count before inverse augmentation.
    pub fn base_relations(&self) -> usize {
        self.base_relations
    }

    pub fn has_inverses(&self) -> bool {
        self.inverse_added
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    /// Edge ids carrying relation `r`.
    pub fn edges_of_relation(&self, r: usize) -> &[usize] {
        &self.by_relation[r]
    }

    pub fn edge_id(&self, t: &Triple) -> Option<usize> {
        self.edge_index.get(t).copied()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.edge_index.contains_key(t)
    }

    pub fn in_degree(&self) -> &[usize] {
        &self.in_degree
    }

    /// Id of the inverse of relation `r` in an augmented graph.
    pub fn inverse_of(&self, r: usize) -> usize {
        if r < self.base_relations {
            r + self.base_relations
        } else {
            r - self.base_relations
        }
    }

    /// Adds `(t, r + |R|, h)` for every `(h, r, t)`. Applying it twice is an
    /// error.
    pub fn add_inverse_relations(&self) -> Result<KnowledgeGraph> {
        if self.inverse_added {
            return Err(Error::Contract(
                "inverse relations were already added to this graph".into(),
            ));
        }
        let base = self.base_relations;
        let mut vocab = self.vocab.clone();
        for r in 0..base {
            let name = format!("{}{INVERSE_SUFFIX}", self.vocab.relations.name(r).unwrap_or("?"));
            let id = vocab.relations.intern(name);
            if id != r + base {
                return Err(Error::Data(format!(
                    "inverse relation name for {r} collides with an existing relation"
                )));
            }
        }
        let mut triples = self.triples.clone();
        triples.extend(
            self.triples
                .iter()
                .map(|t| Triple::new(t.tail, t.relation + base, t.head)),
        );
        Ok(Self::assemble(vocab, triples, base, true))
    }

    /// Undirected neighbour lists (without self-loops, no repeats).
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<HashSet<usize>> = vec![HashSet::new(); self.num_entities()];
        for t in &self.triples {
            if t.head != t.tail {
                sets[t.head].insert(t.tail);
                sets[t.tail].insert(t.head);
            }
        }
        sets.into_iter()
            .map(|s| {
                let mut v: Vec<usize> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    /// Entities with a self-triple `(v, r, v)`.
    pub fn self_triple_entities(&self) -> HashSet<usize> {
        self.triples
            .iter()
            .filter(|t| t.head == t.tail)
            .map(|t| t.head)
            .collect()
    }

    /// Induced subgraph on `keep` (ids renumbered in the given order).
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<KnowledgeGraph> {
        let mut remap = HashMap::with_capacity(keep.len());
        let mut entities = super::Interner::new();
        for &v in keep {
            let name = self
                .vocab
                .entities
                .name(v)
                .ok_or_else(|| Error::Contract(format!("entity {v} out of range")))?;
            remap.insert(v, entities.intern(name));
        }
        let vocab = Vocab {
            entities,
            relations: self.vocab.relations.clone(),
        };
        let triples: Vec<Triple> = self
            .triples
            .iter()
            .filter_map(|t| {
                Some(Triple::new(
                    *remap.get(&t.head)?,
                    t.relation,
                    *remap.get(&t.tail)?,
                ))
            })
            .collect();
        let mut seen = HashSet::new();
        let triples: Vec<Triple> = triples.into_iter().filter(|t| seen.insert(*t)).collect();
        Ok(Self::assemble(vocab, triples, self.base_relations, self.inverse_added))
    }

    /// Breadth-first ball around `start` truncated to `cap` entities.
    pub fn bfs_ball(&self, start: usize, cap: usize) -> Vec<usize> {
        let nbrs = self.undirected_neighbors();
        let mut seen = vec![false; self.num_entities()];
        let mut order = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < order.len() && order.len() < cap {
            let v = order[head];
            head += 1;
            for &u in &nbrs[v] {
                if !seen[u] && order.len() < cap {
                    seen[u] = true;
                    order.push(u);
                }
            }
        }
        order
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> KnowledgeGraph {
        let mut vocab = Vocab::default();
        let (a, b, c) = (
            vocab.entities.intern("a"),
            vocab.entities.intern("b"),
            vocab.entities.intern("c"),
        );
        let r = vocab.relations.intern("r");
        KnowledgeGraph::new(vocab, [Triple::new(a, r, b), Triple::new(b, r, c)]).unwrap()
    }

    #[test]
    fn inverse_augmentation_doubles() {
        let g = abc();
        let inv = g.add_inverse_relations().unwrap();
        assert_eq!(inv.num_triples(), 4);
        assert_eq!(inv.num_relations(), 2);
        for t in g.triples() {
            assert!(inv.contains(t));
            assert!(inv.contains(&Triple::new(t.tail, t.relation + 1, t.head)));
        }
        assert_eq!(inv.vocab().relations.name(1), Some("r__inv"));
        assert!(matches!(
            inv.add_inverse_relations(),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn duplicates_are_dropped() {
        let g = KnowledgeGraph::from_id_triples(2, 1, [(0, 0, 1), (0, 0, 1)]).unwrap();
        assert_eq!(g.num_triples(), 1);
    }

    #[test]
    fn out_of_range_triple_is_data_error() {
        assert!(matches!(
            KnowledgeGraph::from_id_triples(2, 1, [(0, 0, 5)]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn adjacency_lists_match_triples() {
        let g = KnowledgeGraph::from_id_triples(4, 2, [(0, 0, 1), (1, 1, 2), (2, 0, 3)])
            .unwrap()
            .add_inverse_relations()
            .unwrap();
        for r in 0..g.num_relations() {
            for &e in g.edges_of_relation(r) {
                assert_eq!(g.triples()[e].relation, r);
            }
        }
        let total: usize = (0..g.num_relations()).map(|r| g.edges_of_relation(r).len()).sum();
        assert_eq!(total, g.num_triples());
        assert_eq!(g.in_degree().iter().sum::<usize>(), g.num_triples());
        assert_eq!(g.inverse_of(0), 2);
        assert_eq!(g.inverse_of(3), 1);
    }

    #[test]
    fn bfs_ball_and_subgraph() {
        let g = KnowledgeGraph::from_id_triples(5, 1, [(0, 0, 1), (1, 0, 2), (3, 0, 4)]).unwrap();
        let ball = g.bfs_ball(0, 10);
        assert_eq!(ball, vec![0, 1, 2]);
        let sub = g.induced_subgraph(&ball).unwrap();
        assert_eq!(sub.num_entities(), 3);
        assert_eq!(sub.num_triples(), 2);
        assert_eq!(g.bfs_ball(0, 2).len(), 2);
    }
}
