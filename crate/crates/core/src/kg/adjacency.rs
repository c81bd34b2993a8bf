use super::KnowledgeGraph;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Largest entity count for which a dense adjacency is built.
pub const DENSE_ADJACENCY_CAP: usize = 5_000;

/// `D̂^{-1/2} Â D̂^{-1/2}` over the undirected, unweighted co-occurrence
/// graph, with `Â = A + I` when `add_self_loops` is set.
pub fn build_normalized_adjacency(kg: &KnowledgeGraph, add_self_loops: bool) -> Result<Tensor> {
    let n = kg.num_entities();
    if n > DENSE_ADJACENCY_CAP {
        return Err(Error::Size(format!(
            "dense adjacency requested for {n} entities (cap {DENSE_ADJACENCY_CAP})"
        )));
    }
    let mut a = Tensor::zeros(&[n, n]);
    for (v, nbrs) in kg.undirected_neighbors().iter().enumerate() {
        for &u in nbrs {
            a.set(v, u, 1.0);
        }
    }
    for v in kg.self_triple_entities() {
        a.set(v, v, 1.0);
    }
    if add_self_loops {
        for v in 0..n {
            let cur = a.get(v, v);
            a.set(v, v, cur + 1.0);
        }
    }
    let deg: Vec<f64> = (0..n).map(|v| a.row(v).iter().sum()).collect();
    if let Some(v) = deg.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroDegree(v));
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            let x = a.get(i, j);
            if x != 0.0 {
                a.set(i, j, x * inv_sqrt[i] * inv_sqrt[j]);
            }
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sigma_max;

    #[test]
    fn single_node_with_self_loop() {
        let g = KnowledgeGraph::from_id_triples(1, 1, []).unwrap();
        let a = build_normalized_adjacency(&g, true).unwrap();
        assert_eq!(a, Tensor::from_rows(&[&[1.0]]));
    }

    #[test]
    fn path_graph_entry() {
        let g = KnowledgeGraph::from_id_triples(3, 1, [(0, 0, 1), (1, 0, 2)]).unwrap();
        let a = build_normalized_adjacency(&g, true).unwrap();
        // Dense oracle: deg = (2, 3, 2); entry (0,1) = 1/sqrt(2*3).
        let expected = 1.0 / (2.0f64 * 3.0).sqrt();
        assert!((a.get(0, 1) - expected).abs() < 1e-15);
        assert!((a.get(0, 1) - 0.40825).abs() < 1e-5);
        assert!((a.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.get(0, 2), 0.0);
    }

    #[test]
    fn isolated_vertex_without_self_loops() {
        let g = KnowledgeGraph::from_id_triples(3, 1, [(0, 0, 1)]).unwrap();
        assert!(matches!(
            build_normalized_adjacency(&g, false),
            Err(Error::ZeroDegree(2))
        ));
        assert!(build_normalized_adjacency(&g, true).is_ok());
    }

    #[test]
    fn symmetric_with_unit_spectral_norm() {
        let g = KnowledgeGraph::from_id_triples(
            6,
            2,
            [(0, 0, 1), (1, 1, 2), (2, 0, 3), (3, 1, 4), (4, 0, 5), (5, 1, 0), (0, 0, 3)],
        )
        .unwrap();
        let a = build_normalized_adjacency(&g, true).unwrap();
        assert!(a.max_abs_diff(&a.transpose().unwrap()) < 1e-12);
        assert!((sigma_max(&a).unwrap() - 1.0).abs() < 1e-9);
    }
}
