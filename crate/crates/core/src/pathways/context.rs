use std::collections::BTreeSet;
use std::rc::Rc;

use crate::error::Result;
use crate::kg::{KnowledgeGraph, Triple};
use crate::numerics::SparseMatrix;

/// Precomputed message-passing view of a graph.
///
/// Edges are directed `src → dst` with relation `rel`; `inv_in_degree[e]` is
/// `1 / in_degree(dst[e])`, which makes the scatter a mean over incoming
/// messages. `averaging` is the row-normalised `(A + I)` over the undirected
/// neighbourhood used by the input encoder.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub num_entities: usize,
    pub num_relations: usize,
    pub src: Rc<[usize]>,
    pub rel: Rc<[usize]>,
    pub dst: Rc<[usize]>,
    pub inv_in_degree: Rc<[f64]>,
    pub averaging: Rc<SparseMatrix>,
}

impl GraphContext {
    pub fn new(kg: &KnowledgeGraph) -> Result<Self> {
        Self::from_edges(kg.num_entities(), kg.num_relations(), kg.triples().iter().copied())
    }

    /// Same as [`GraphContext::new`] but with the given triples removed.
    /// Training hides each query's own edge (and its inverse) this way.
    pub fn without(kg: &KnowledgeGraph, removed: &[Triple]) -> Result<Self> {
        if removed.is_empty() {
            return Self::new(kg);
        }
        Self::from_edges(
            kg.num_entities(),
            kg.num_relations(),
            kg.triples().iter().copied().filter(|t| !removed.contains(t)),
        )
    }

    pub fn from_edges(
        num_entities: usize,
        num_relations: usize,
        edges: impl IntoIterator<Item = Triple>,
    ) -> Result<Self> {
        let mut src = Vec::new();
        let mut rel = Vec::new();
        let mut dst = Vec::new();
        let mut indeg = vec![0usize; num_entities];
        let mut neighbours: BTreeSet<(usize, usize)> = BTreeSet::new();
        for t in edges {
            src.push(t.head);
            rel.push(t.relation);
            dst.push(t.tail);
            indeg[t.tail] += 1;
            if t.head != t.tail {
                neighbours.insert((t.head, t.tail));
                neighbours.insert((t.tail, t.head));
            }
        }
        let inv_in_degree: Vec<f64> = dst.iter().map(|&v| 1.0 / indeg[v] as f64).collect();

        let mut count = vec![1usize; num_entities];
        for &(v, _) in &neighbours {
            count[v] += 1;
        }
        let mut entries: Vec<(usize, usize, f64)> = (0..num_entities)
            .map(|v| (v, v, 1.0 / count[v] as f64))
            .collect();
        entries.extend(
            neighbours
                .iter()
                .map(|&(v, u)| (v, u, 1.0 / count[v] as f64)),
        );
        let averaging = SparseMatrix::new(num_entities, num_entities, entries)?;
        Ok(Self {
            num_entities,
            num_relations,
            src: src.into(),
            rel: rel.into(),
            dst: dst.into(),
            inv_in_degree: inv_in_degree.into(),
            averaging: Rc::new(averaging),
        })
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }
}
