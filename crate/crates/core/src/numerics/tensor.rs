use alloc::vec;
use alloc::vec::Vec;

use super::real::{Precision, Real};
use super::NumericsError;

/// Dense row-major tensor.
///
/// Most of the crate only needs vectors and matrices; a 1-D tensor of
/// length `k` is treated as a `1 × k` matrix by the row accessors.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<R> {
    shape: Vec<usize>,
    data: Vec<R>,
}

impl<R: Real> Tensor<R> {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![R::zero(); len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<R>) -> Result<Self, NumericsError> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "tensor",
                expected: vec![len],
                found: vec![data.len()],
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Builds an `rows × cols` matrix. Panics if the data length disagrees.
    pub fn matrix(rows: usize, cols: usize, data: Vec<R>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Tensor {
            shape: vec![rows, cols],
            data,
        }
    }

    pub fn vector(data: Vec<R>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Tensor::matrix(rows.len(), cols, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<R> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn precision(&self) -> Precision {
        R::PRECISION
    }

    pub fn rows(&self) -> usize {
        match self.shape.len() {
            0 | 1 => 1,
            _ => self.shape[0],
        }
    }

    pub fn cols(&self) -> usize {
        match self.shape.len() {
            0 => 1,
            1 => self.shape[0],
            _ => self.shape[1..].iter().product(),
        }
    }

    pub fn row(&self, i: usize) -> &[R] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [R] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.cols() + j]
    }

    pub fn fill(&mut self, value: R) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Tensor<R>) {
        debug_assert_eq!(self.len(), other.len());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<S: Real>(&self) -> Tensor<S> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| S::of(x.as_f64())).collect(),
        }
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn concat_cols(parts: &[&Tensor<R>]) -> Result<Self, NumericsError> {
        let rows = parts.first().map_or(0, |t| t.rows());
        if let Some(bad) = parts.iter().find(|t| t.rows() != rows) {
            return Err(NumericsError::ShapeMismatch {
                op: "concat_cols",
                expected: vec![rows],
                found: vec![bad.rows()],
            });
        }
        let cols: usize = parts.iter().map(|t| t.cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for part in parts {
                data.extend_from_slice(part.row(i));
            }
        }
        Ok(Tensor::matrix(rows, cols, data))
    }

    /// Column slice `[start, start + width)` of a matrix.
    pub fn slice_cols(&self, start: usize, width: usize) -> Self {
        let rows = self.rows();
        let mut data = Vec::with_capacity(rows * width);
        for i in 0..rows {
            data.extend_from_slice(&self.row(i)[start..start + width]);
        }
        Tensor::matrix(rows, width, data)
    }

    /// Matrix whose rows are `rows` taken in order from `self`.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let cols = self.cols();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Tensor::matrix(rows.len(), cols, data)
    }

    pub fn reverse_rows(&self) -> Self {
        let n = self.rows();
        let order: Vec<usize> = (0..n).rev().collect();
        let mut out = self.select_rows(&order);
        out.shape = self.shape.clone();
        out
    }

    /// Vertical stack of matrices with equal column counts.
    pub fn stack_rows(parts: &[&Tensor<R>], cols: usize) -> Self {
        let mut data = Vec::new();
        let mut rows = 0;
        for part in parts {
            debug_assert_eq!(part.cols(), cols);
            data.extend_from_slice(part.data());
            rows += part.rows();
        }
        Tensor::matrix(rows, cols, data)
    }

    pub fn argmax_row(&self, i: usize) -> Option<usize> {
        argmax(self.row(i))
    }
}

/// Index of the first maximal element; `None` for an empty slice.
pub fn argmax<R: Real>(values: &[R]) -> Option<usize> {
    let mut best: Option<(usize, R)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
