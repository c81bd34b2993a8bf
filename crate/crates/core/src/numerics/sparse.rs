use super::Tensor;
use crate::error::{shape_err, Result};

/// Coordinate-format sparse matrix used for fixed propagation operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= rows || *c >= cols) {
            return Err(shape_err(
                "SparseMatrix::new",
                format!("entry ({r},{c}) outside {rows}x{cols}"),
            ));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(&[self.rows, self.cols]);
        for &(r, c, v) in &self.entries {
            let cur = t.get(r, c);
            t.set(r, c, cur + v);
        }
        t
    }

    /// `self · x`
    pub fn matmul(&self, x: &Tensor) -> Result<Tensor> {
        if x.rows() != self.cols || !x.is_matrix() {
            return Err(shape_err(
                "spmm",
                format!("{}x{} · {:?}", self.rows, self.cols, x.shape()),
            ));
        }
        let d = x.cols();
        let mut out = Tensor::zeros(&[self.rows, d]);
        for &(r, c, v) in &self.entries {
            let src = x.row(c);
            let dst = &mut out.data_mut()[r * d..(r + 1) * d];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += v * s;
            }
        }
        Ok(out)
    }

    /// `selfᵀ · g`
    pub fn matmul_transposed(&self, g: &Tensor) -> Result<Tensor> {
        if g.rows() != self.rows || !g.is_matrix() {
            return Err(shape_err(
                "spmm_t",
                format!("({}x{})ᵀ · {:?}", self.rows, self.cols, g.shape()),
            ));
        }
        let d = g.cols();
        let mut out = Tensor::zeros(&[self.cols, d]);
        for &(r, c, v) in &self.entries {
            let src = g.row(r);
            let dst = &mut out.data_mut()[c * d..(c + 1) * d];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += v * s;
            }
        }
        Ok(out)
    }
}
