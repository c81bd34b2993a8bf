use rand::Rng;

use super::GraphContext;
use crate::error::{Error, Result};
use crate::kg::Query;
use crate::numerics::{NodeId, ParamId, ParamStore, Tape, Tensor};

/// Query-conditioned input labelling plus optional neighbourhood averaging.
#[derive(Debug, Clone)]
pub struct Encoder {
    /// Relation table `W_r`, one row per (augmented) relation.
    pub relation: ParamId,
    pub layers: usize,
    pub hidden: usize,
}

/// Tape handles of the encoded input.
#[derive(Debug, Clone, Copy)]
pub struct EncoderState {
    pub x0: NodeId,
    pub relation: NodeId,
}

impl Encoder {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        num_relations: usize,
        hidden: usize,
        layers: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let relation = store.add(
            format!("{prefix}.relation"),
            Tensor::randn(&[num_relations, hidden], 1.0, rng),
        )?;
        Ok(Self {
            relation,
            layers,
            hidden,
        })
    }

    /// `X0[h] = W_r[r]`, every other row zero, then `layers` rounds of
    /// `X ← D⁻¹(A + I) X`.
    pub fn encode(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        ctx: &GraphContext,
        query: Query,
    ) -> Result<EncoderState> {
        if query.head >= ctx.num_entities {
            return Err(Error::Contract(format!(
                "query head {} outside {} entities",
                query.head, ctx.num_entities
            )));
        }
        if query.relation >= ctx.num_relations || query.relation >= store.value(self.relation).rows() {
            return Err(Error::Contract(format!(
                "query relation {} outside {} relations",
                query.relation, ctx.num_relations
            )));
        }
        let table = tape.param(store, self.relation);
        let row = tape.gather_rows(table, vec![query.relation])?;
        let mut x = tape.scatter_rows(row, vec![query.head], None, ctx.num_entities)?;
        for _ in 0..self.layers {
            x = tape.spmm(ctx.averaging.clone(), x)?;
        }
        Ok(EncoderState {
            x0: x,
            relation: table,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KnowledgeGraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(layers: usize) -> (ParamStore, Encoder, GraphContext) {
        let g = KnowledgeGraph::from_id_triples(2, 1, [(0, 0, 1)])
            .unwrap()
            .add_inverse_relations()
            .unwrap();
        let ctx = GraphContext::new(&g).unwrap();
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let enc = Encoder::new(&mut store, "enc", 2, 4, layers, &mut rng).unwrap();
        *store.value_mut(enc.relation) =
            Tensor::from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 2.0, 0.0, 0.0]]);
        (store, enc, ctx)
    }

    #[test]
    fn single_seed_row() {
        let (store, enc, ctx) = setup(0);
        let mut tape = Tape::new();
        let s = enc.encode(&mut tape, &store, &ctx, Query::new(1, 0)).unwrap();
        let x0 = tape.value(s.x0);
        assert_eq!(x0.row(0), &[0.0; 4]);
        assert_eq!(x0.row(1), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(x0.frobenius_norm(), 1.0);
    }

    #[test]
    fn one_averaging_round_matches_dense_oracle() {
        let (store, enc, ctx) = setup(1);
        let mut tape = Tape::new();
        let s = enc.encode(&mut tape, &store, &ctx, Query::new(0, 1)).unwrap();
        // Two connected nodes: D⁻¹(A+I) = [[1/2,1/2],[1/2,1/2]], X0 = [[0,2,0,0],[0,0,0,0]].
        let expected = Tensor::from_rows(&[&[0.0, 1.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
        assert!(tape.value(s.x0).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn invalid_ids_are_contract_errors() {
        let (store, enc, ctx) = setup(0);
        let mut tape = Tape::new();
        assert!(matches!(
            enc.encode(&mut tape, &store, &ctx, Query::new(5, 0)),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            enc.encode(&mut tape, &store, &ctx, Query::new(0, 7)),
            Err(Error::Contract(_))
        ));
    }
}
