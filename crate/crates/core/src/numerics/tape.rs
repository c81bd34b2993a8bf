//! Reverse-mode differentiation over matrix-valued nodes.
//!
//! A [`Tape`] records every primitive in execution order, so node ids are a
//! topological order by construction. [`Tape::backward`] walks the record in
//! reverse, accumulating adjoints additively when a node feeds several
//! consumers, and finally adds parameter adjoints into a [`ParamStore`].

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use super::tensor::{matmul, matmul_nt, matmul_tn, sigmoid, softmax_rows, softplus};
use super::{ParamId, ParamStore, SparseMatrix, Tensor};
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    MatMulNt(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Scale(NodeId, f64),
    ScaleBy(NodeId, NodeId),
    OneMinus(NodeId),
    Relu(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Softplus(NodeId),
    EluPlusOne(NodeId),
    SoftmaxRows(NodeId),
    Transpose(NodeId),
    Sum(NodeId),
    GatherRows(NodeId, Rc<[usize]>),
    ScatterRows {
        src: NodeId,
        index: Rc<[usize]>,
        weights: Option<Rc<[f64]>>,
    },
    SpMM(Rc<SparseMatrix>, NodeId),
    DivCol(NodeId, NodeId),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Single-writer record of a forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints of every node after a backward pass.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Adjoint of `node`; zeros when the loss does not depend on it.
    pub fn wrt(&self, node: NodeId) -> Tensor {
        match &self.grads[node.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[node.0]),
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn rg(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Constant, false)
    }

    /// A leaf whose adjoint is tracked without being tied to a parameter.
    pub fn variable(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Constant, true)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        self.push(store.value(id).clone(), Op::Param(id), true)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = matmul(self.value(a), self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::MatMul(a, b), rg))
    }

    /// `a · bᵀ`
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = matmul_nt(self.value(a), self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::MatMulNt(a, b), rg))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).add(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).sub(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Sub(a, b), rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).hadamard(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Mul(a, b), rg))
    }

    /// Adds a `1×c` row to every row of an `n×c` matrix.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (av, rv) = (self.value(a), self.value(row));
        if !av.is_matrix() || rv.shape() != [1, av.cols()] {
            return Err(shape_err(
                "add_row",
                format!("{:?} + {:?}", av.shape(), rv.shape()),
            ));
        }
        let mut v = av.clone();
        let c = av.cols();
        for r in 0..av.rows() {
            for (o, b) in v.row_mut(r).iter_mut().zip(rv.data()) {
                *o += b;
            }
        }
        debug_assert_eq!(v.cols(), c);
        let rg = self.rg(a) || self.rg(row);
        Ok(self.push(v, Op::AddRow(a, row), rg))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a).scale(c);
        let rg = self.rg(a);
        self.push(v, Op::Scale(a, c), rg)
    }

    /// Multiplies every entry of `a` by the single value held in `s`.
    pub fn scale_by(&mut self, a: NodeId, s: NodeId) -> Result<NodeId> {
        let c = self.value(s).item()?;
        let v = self.value(a).scale(c);
        let rg = self.rg(a) || self.rg(s);
        Ok(self.push(v, Op::ScaleBy(a, s), rg))
    }

    /// `1 - a`, elementwise.
    pub fn one_minus(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| 1.0 - x);
        let rg = self.rg(a);
        self.push(v, Op::OneMinus(a), rg)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| x.max(0.0));
        let rg = self.rg(a);
        self.push(v, Op::Relu(a), rg)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::tanh);
        let rg = self.rg(a);
        self.push(v, Op::Tanh(a), rg)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(sigmoid);
        let rg = self.rg(a);
        self.push(v, Op::Sigmoid(a), rg)
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(softplus);
        let rg = self.rg(a);
        self.push(v, Op::Softplus(a), rg)
    }

    /// `elu(x) + 1`: a strictly positive feature map for kernelised attention.
    pub fn elu_plus_one(&mut self, a: NodeId) -> NodeId {
        let v = self
            .value(a)
            .map(|x| if x > 0.0 { x + 1.0 } else { x.exp() });
        let rg = self.rg(a);
        self.push(v, Op::EluPlusOne(a), rg)
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let v = softmax_rows(self.value(a))?;
        let rg = self.rg(a);
        Ok(self.push(v, Op::SoftmaxRows(a), rg))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).transpose()?;
        let rg = self.rg(a);
        Ok(self.push(v, Op::Transpose(a), rg))
    }

    /// Sum of all entries as a 1×1 node.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Tensor::scalar(self.value(a).data().iter().sum());
        let rg = self.rg(a);
        self.push(v, Op::Sum(a), rg)
    }

    /// Selects rows of `a` (with repetition allowed).
    pub fn gather_rows(&mut self, a: NodeId, index: impl Into<Rc<[usize]>>) -> Result<NodeId> {
        let index: Rc<[usize]> = index.into();
        let av = self.value(a);
        if !av.is_matrix() {
            return Err(shape_err("gather_rows", "input is not a matrix"));
        }
        let (rows, c) = (av.rows(), av.cols());
        let mut data = Vec::with_capacity(index.len() * c);
        for &i in index.iter() {
            if i >= rows {
                return Err(shape_err(
                    "gather_rows",
                    format!("row {i} out of range {rows}"),
                ));
            }
            data.extend_from_slice(av.row(i));
        }
        let v = Tensor::new(vec![index.len(), c], data)?;
        let rg = self.rg(a);
        Ok(self.push(v, Op::GatherRows(a, index), rg))
    }

    /// `out[index[i]] += weight[i] · src[i]` into an `rows × c` zero matrix.
    pub fn scatter_rows(
        &mut self,
        src: NodeId,
        index: impl Into<Rc<[usize]>>,
        weights: Option<Rc<[f64]>>,
        rows: usize,
    ) -> Result<NodeId> {
        let index: Rc<[usize]> = index.into();
        let sv = self.value(src);
        if !sv.is_matrix() || sv.rows() != index.len() {
            return Err(shape_err(
                "scatter_rows",
                format!("{:?} rows vs {} indices", sv.shape(), index.len()),
            ));
        }
        if let Some(w) = &weights {
            if w.len() != index.len() {
                return Err(shape_err("scatter_rows", "weight count != index count"));
            }
        }
        let c = sv.cols();
        let mut out = Tensor::zeros(&[rows, c]);
        for (i, &dst) in index.iter().enumerate() {
            if dst >= rows {
                return Err(shape_err(
                    "scatter_rows",
                    format!("target row {dst} out of range {rows}"),
                ));
            }
            let w = weights.as_ref().map_or(1.0, |w| w[i]);
            let s = sv.row(i);
            for (o, x) in out.row_mut(dst).iter_mut().zip(s) {
                *o += w * x;
            }
        }
        let rg = self.rg(src);
        Ok(self.push(
            out,
            Op::ScatterRows {
                src,
                index,
                weights,
            },
            rg,
        ))
    }

    /// Fixed sparse operator applied on the left.
    pub fn spmm(&mut self, s: Rc<SparseMatrix>, a: NodeId) -> Result<NodeId> {
        let v = s.matmul(self.value(a))?;
        let rg = self.rg(a);
        Ok(self.push(v, Op::SpMM(s, a), rg))
    }

    /// Divides row `i` of `a` by `col[i]`.
    pub fn div_col(&mut self, a: NodeId, col: NodeId) -> Result<NodeId> {
        let (av, cv) = (self.value(a), self.value(col));
        if !av.is_matrix() || cv.shape() != [av.rows(), 1] {
            return Err(shape_err(
                "div_col",
                format!("{:?} / {:?}", av.shape(), cv.shape()),
            ));
        }
        let mut v = av.clone();
        for r in 0..av.rows() {
            let d = cv.data()[r];
            for x in v.row_mut(r) {
                *x /= d;
            }
        }
        let rg = self.rg(a) || self.rg(col);
        Ok(self.push(v, Op::DivCol(a, col), rg))
    }

    /// Hash of the sign pattern at every ReLU input. Two evaluations with
    /// equal signatures lie on the same linear piece of every ReLU.
    pub fn kink_signature(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for node in &self.nodes {
            if let Op::Relu(a) = node.op {
                for &x in self.nodes[a.0].value.data() {
                    (x > 0.0).hash(&mut h);
                }
            }
        }
        h.finish()
    }

    /// Back-propagates from a scalar `loss`, adding parameter adjoints into
    /// `store` and returning the adjoint of every node.
    pub fn backward(&self, loss: NodeId, store: &mut ParamStore) -> Result<Gradients> {
        let lv = &self.nodes[loss.0].value;
        if lv.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                grads[idx] = Some(g);
                continue;
            }
            self.propagate(idx, &g, &mut grads, store)?;
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn propagate(
        &self,
        idx: usize,
        g: &Tensor,
        grads: &mut [Option<Tensor>],
        store: &mut ParamStore,
    ) -> Result<()> {
        let node = &self.nodes[idx];
        let val = |id: NodeId| &self.nodes[id.0].value;
        let mut acc = |id: NodeId, t: Tensor| {
            if !self.nodes[id.0].requires_grad {
                return;
            }
            match &mut grads[id.0] {
                Some(existing) => existing.add_assign(&t),
                slot => *slot = Some(t),
            }
        };
        match &node.op {
            Op::Constant => {}
            Op::Param(pid) => store.accumulate_grad(*pid, g),
            Op::MatMul(a, b) => {
                acc(*a, matmul_nt(g, val(*b))?);
                acc(*b, matmul_tn(val(*a), g)?);
            }
            Op::MatMulNt(a, b) => {
                acc(*a, matmul(g, val(*b))?);
                acc(*b, matmul_tn(g, val(*a))?);
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.scale(-1.0));
            }
            Op::Mul(a, b) => {
                acc(*a, g.hadamard(val(*b))?);
                acc(*b, g.hadamard(val(*a))?);
            }
            Op::AddRow(a, row) => {
                acc(*a, g.clone());
                let c = g.cols();
                let mut colsum = vec![0.0; c];
                for r in 0..g.rows() {
                    for (s, x) in colsum.iter_mut().zip(g.row(r)) {
                        *s += x;
                    }
                }
                acc(*row, Tensor::new(vec![1, c], colsum)?);
            }
            Op::Scale(a, c) => acc(*a, g.scale(*c)),
            Op::ScaleBy(a, s) => {
                let c = val(*s).item()?;
                acc(*a, g.scale(c));
                let ds: f64 = g.data().iter().zip(val(*a).data()).map(|(x, y)| x * y).sum();
                acc(*s, Tensor::full(val(*s).shape(), ds));
            }
            Op::OneMinus(a) => acc(*a, g.scale(-1.0)),
            Op::Relu(a) => {
                acc(*a, g.zip_with(val(*a), "relu'", |g, x| if x > 0.0 { g } else { 0.0 })?);
            }
            Op::Tanh(a) => {
                acc(*a, g.zip_with(&node.value, "tanh'", |g, y| g * (1.0 - y * y))?);
            }
            Op::Sigmoid(a) => {
                acc(*a, g.zip_with(&node.value, "sigmoid'", |g, y| g * y * (1.0 - y))?);
            }
            Op::Softplus(a) => {
                acc(*a, g.zip_with(val(*a), "softplus'", |g, x| g * sigmoid(x))?);
            }
            Op::EluPlusOne(a) => {
                acc(
                    *a,
                    g.zip_with(val(*a), "elu'", |g, x| if x > 0.0 { g } else { g * x.exp() })?,
                );
            }
            Op::SoftmaxRows(a) => {
                let y = &node.value;
                let c = y.cols();
                let mut out = Tensor::zeros(y.shape());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    let orow = &mut out.data_mut()[r * c..(r + 1) * c];
                    for ((o, yv), gv) in orow.iter_mut().zip(yr).zip(gr) {
                        *o = yv * (gv - dot);
                    }
                }
                acc(*a, out);
            }
            Op::Transpose(a) => acc(*a, g.transpose()?),
            Op::Sum(a) => {
                let s = g.item()?;
                acc(*a, Tensor::full(val(*a).shape(), s));
            }
            Op::GatherRows(a, index) => {
                let av = val(*a);
                let mut out = Tensor::zeros(av.shape());
                for (i, &src) in index.iter().enumerate() {
                    for (o, x) in out.row_mut(src).iter_mut().zip(g.row(i)) {
                        *o += x;
                    }
                }
                acc(*a, out);
            }
            Op::ScatterRows {
                src,
                index,
                weights,
            } => {
                let sv = val(*src);
                let mut out = Tensor::zeros(sv.shape());
                for (i, &dst) in index.iter().enumerate() {
                    let w = weights.as_ref().map_or(1.0, |w| w[i]);
                    for (o, x) in out.row_mut(i).iter_mut().zip(g.row(dst)) {
                        *o += w * x;
                    }
                }
                acc(*src, out);
            }
            Op::SpMM(s, a) => acc(*a, s.matmul_transposed(g)?),
            Op::DivCol(a, col) => {
                let (av, cv) = (val(*a), val(*col));
                let mut ga = g.clone();
                let mut gc = vec![0.0; cv.len()];
                for r in 0..av.rows() {
                    let d = cv.data()[r];
                    let mut s = 0.0;
                    for (gv, x) in ga.row_mut(r).iter_mut().zip(av.row(r)) {
                        s += *gv * x;
                        *gv /= d;
                    }
                    gc[r] = -s / (d * d);
                }
                acc(*a, ga);
                acc(*col, Tensor::new(cv.shape().to_vec(), gc)?);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gradcheck::{central_difference, relative_error};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_at_three_has_gradient_six() {
        let mut store = ParamStore::new();
        let x = store.add("x", Tensor::scalar(3.0)).unwrap();
        let mut tape = Tape::new();
        let xn = tape.param(&store, x);
        let y = tape.mul(xn, xn).unwrap();
        tape.backward(y, &mut store).unwrap();
        assert_eq!(store.grad(x).item().unwrap(), 6.0);
    }

    #[test]
    fn constant_node_gradient_is_zero() {
        let mut store = ParamStore::new();
        let mut tape = Tape::new();
        let c = tape.constant(Tensor::from_rows(&[&[1.0, 2.0]]));
        let s = tape.sum(c);
        let grads = tape.backward(s, &mut store).unwrap();
        assert_eq!(grads.wrt(c), Tensor::zeros(&[1, 2]));
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut store = ParamStore::new();
        let mut tape = Tape::new();
        let c = tape.variable(Tensor::zeros(&[2, 2]));
        assert!(matches!(
            tape.backward(c, &mut store),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn reused_node_accumulates() {
        // f(x) = sum(x ⊙ x + x) → df/dx = 2x + 1
        let mut store = ParamStore::new();
        let x = store
            .add("x", Tensor::from_rows(&[&[1.0, -2.0, 0.5]]))
            .unwrap();
        let mut tape = Tape::new();
        let xn = tape.param(&store, x);
        let sq = tape.mul(xn, xn).unwrap();
        let s = tape.add(sq, xn).unwrap();
        let l = tape.sum(s);
        tape.backward(l, &mut store).unwrap();
        assert_eq!(store.grad(x).data(), &[3.0, -3.0, 2.0]);
    }

    /// Builds a loss that touches every primitive and compares with
    /// central differences on each input coordinate.
    fn every_op_loss(tape: &mut Tape, x: NodeId, w: NodeId, b: NodeId, s: NodeId) -> NodeId {
        let sm = Rc::new(
            SparseMatrix::new(4, 4, vec![(0, 1, 0.5), (1, 0, 0.25), (2, 2, 1.0), (3, 1, -0.7)])
                .unwrap(),
        );
        let h = tape.matmul(x, w).unwrap();
        let h = tape.add_row(h, b).unwrap();
        let t = tape.tanh(h);
        let sp = tape.spmm(sm, t).unwrap();
        let att = tape.matmul_nt(sp, t).unwrap();
        let p = tape.softmax_rows(att).unwrap();
        let z = tape.matmul(p, t).unwrap();
        let a = tape.sigmoid(s);
        let za = tape.scale_by(z, a).unwrap();
        let oma = tape.one_minus(a);
        let tz = tape.scale_by(t, oma).unwrap();
        let fused = tape.add(za, tz).unwrap();
        let g = tape.gather_rows(fused, vec![0, 2, 2, 3]).unwrap();
        let sc = tape
            .scatter_rows(g, vec![1, 1, 0, 3], Some(Rc::from(vec![0.5, 2.0, 1.0, -1.0])), 4)
            .unwrap();
        let e = tape.elu_plus_one(sc);
        let ones = tape.constant(Tensor::full(&[e_cols(tape, e), 1], 1.0));
        let den = tape.matmul(e, ones).unwrap();
        let q = tape.div_col(e, den).unwrap();
        let tr = tape.transpose(q).unwrap();
        let m = tape.matmul(tr, fused).unwrap();
        let d = tape.sub(m, m).unwrap();
        let m2 = tape.mul(m, m).unwrap();
        let m3 = tape.add(m2, d).unwrap();
        let sp2 = tape.softplus(m3);
        let sc2 = tape.scale(sp2, 0.3);
        tape.sum(sc2)
    }

    fn e_cols(tape: &Tape, e: NodeId) -> usize {
        tape.value(e).cols()
    }

    #[test]
    fn every_primitive_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut store = ParamStore::new();
        let x = store.add("x", Tensor::randn(&[4, 3], 1.0, &mut rng)).unwrap();
        let w = store.add("w", Tensor::randn(&[3, 3], 0.7, &mut rng)).unwrap();
        let b = store.add("b", Tensor::randn(&[1, 3], 0.5, &mut rng)).unwrap();
        let s = store.add("s", Tensor::scalar(0.3)).unwrap();

        let eval = |store: &ParamStore| {
            let mut tape = Tape::new();
            let (xn, wn, bn, sn) = (
                tape.param(store, x),
                tape.param(store, w),
                tape.param(store, b),
                tape.param(store, s),
            );
            let l = every_op_loss(&mut tape, xn, wn, bn, sn);
            tape.value(l).item().unwrap()
        };

        let mut tape = Tape::new();
        let (xn, wn, bn, sn) = (
            tape.param(&store, x),
            tape.param(&store, w),
            tape.param(&store, b),
            tape.param(&store, s),
        );
        let l = every_op_loss(&mut tape, xn, wn, bn, sn);
        tape.backward(l, &mut store).unwrap();

        for id in [x, w, b, s] {
            let analytic = store.grad(id).clone();
            for k in 0..analytic.len() {
                let fd = central_difference(&mut store, id, k, 1e-5, &eval);
                let err = relative_error(analytic.data()[k], fd);
                assert!(err < 1e-6, "param {id:?}[{k}]: {} vs {fd}", analytic.data()[k]);
            }
        }
    }

    #[test]
    fn relu_gradient_and_kink_signature() {
        let mut store = ParamStore::new();
        let x = store
            .add("x", Tensor::from_rows(&[&[-1.0, 2.0]]))
            .unwrap();
        let mut tape = Tape::new();
        let xn = tape.param(&store, x);
        let r = tape.relu(xn);
        let l = tape.sum(r);
        tape.backward(l, &mut store).unwrap();
        assert_eq!(store.grad(x).data(), &[0.0, 1.0]);

        let mut other = Tape::new();
        let c = other.constant(Tensor::from_rows(&[&[1.0, 2.0]]));
        other.relu(c);
        assert_ne!(tape.kink_signature(), other.kink_signature());
    }
}
