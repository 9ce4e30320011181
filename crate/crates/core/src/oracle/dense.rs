use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::C64;

/// Dense operator on a `dim`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    entries: DMatrix<C64>,
}

impl DenseOperator {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::invalid("operator must be square"));
        }
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: DMatrix::zeros(dim, dim) }
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        let n = v.len();
        Self { entries: DMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj()) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { entries: &self.entries * C64::new(s, 0.0) }
    }

    pub fn add(&self, other: &DenseOperator) -> Self {
        Self { entries: &self.entries + &other.entries }
    }

    pub fn sub(&self, other: &DenseOperator) -> Self {
        Self { entries: &self.entries - &other.entries }
    }

    pub fn matmul(&self, other: &DenseOperator) -> Self {
        Self { entries: &self.entries * &other.entries }
    }

    pub fn kron(&self, other: &DenseOperator) -> Self {
        Self { entries: self.entries.kronecker(&other.entries) }
    }

    /// `Tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &DenseOperator) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.entries[(i, j)] * other.entries[(j, i)];
            }
        }
        acc
    }

    /// `⟨v| self |v⟩`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let w = &self.entries * nalgebra::DVector::from_column_slice(v);
        v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.entries.iter().zip(other.entries.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        let h = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Schatten-1 norm of a Hermitian operator.
    pub fn trace_norm_hermitian(&self) -> f64 {
        self.eigenvalues_hermitian().iter().map(|x| x.abs()).sum()
    }

    /// `U self U†`.
    pub fn conjugate_by(&self, u: &DMatrix<C64>) -> Self {
        Self { entries: u * &self.entries * u.adjoint() }
    }
}
