//! Permutations of tensor factors and their operators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::C64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return Err(Error::invalid(format!("{mapping:?} is not a bijection")));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self { mapping: (0..n).collect() }
    }

    /// Transposition of `i` and `j` on `n` points.
    pub fn transposition(n: usize, i: usize, j: usize) -> Result<Self> {
        let mut m: Vec<usize> = (0..n).collect();
        if i >= n || j >= n {
            return Err(Error::invalid("transposition index out of range"));
        }
        m.swap(i, j);
        Ok(Self { mapping: m })
    }

    pub fn n(&self) -> usize {
        self.mapping.len()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        debug_assert_eq!(self.n(), other.n());
        Permutation { mapping: other.mapping.iter().map(|&i| self.mapping[i]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.n()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { mapping: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    /// Minimal number of transpositions whose product is `self`.
    pub fn transposition_length(&self) -> usize {
        self.n() - cycle_count(self)
    }

    /// All permutations of `n` points in lexicographic order (identity first).
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..n).collect();
        heap_lex(&mut current, 0, &mut out);
        out.sort();
        out
    }
}

fn heap_lex(current: &mut Vec<usize>, k: usize, out: &mut Vec<Permutation>) {
    if k == current.len() {
        out.push(Permutation { mapping: current.clone() });
        return;
    }
    for i in k..current.len() {
        current.swap(k, i);
        heap_lex(current, k + 1, out);
        current.swap(k, i);
    }
}

/// Number of cycles in the cycle decomposition, fixed points included.
pub fn cycle_count(p: &Permutation) -> usize {
    let n = p.n();
    let mut seen = vec![false; n];
    let mut cycles = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = p.apply(i);
        }
    }
    cycles
}

pub const MAX_COPIES: usize = 4;

/// Gram matrix `M[σ, π] = Tr[P_σ† P_π] = d^{#cycles(σ π⁻¹)}` over `S_n`, rows
/// and columns in the order of [`Permutation::all`].
pub fn perm_gram(n: usize, d: usize) -> Result<DMatrix<f64>> {
    if n == 0 || n > MAX_COPIES {
        return Err(Error::unsupported(format!("permutation Gram matrix for n = {n} (1..={MAX_COPIES} supported)")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let perms = Permutation::all(n);
    let k = perms.len();
    Ok(DMatrix::from_fn(k, k, |s, p| {
        let c = cycle_count(&perms[s].compose(&perms[p].inverse()));
        (d as f64).powi(c as i32)
    }))
}

/// Digits of a composite index over `n` factors of dimension `d`, most
/// significant factor first.
pub(crate) fn digits(mut idx: usize, n: usize, d: usize, out: &mut [usize]) {
    for k in (0..n).rev() {
        out[k] = idx % d;
        idx /= d;
    }
}

pub(crate) fn from_digits(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |acc, &x| acc * d + x)
}

/// Image of basis index `idx` under `P_π`, which carries tensor factor `k` to
/// position `π(k)`.
pub(crate) fn permute_index(p: &Permutation, idx: usize, d: usize, scratch: &mut [usize], out: &mut [usize]) -> usize {
    let n = p.n();
    digits(idx, n, d, scratch);
    for k in 0..n {
        out[p.apply(k)] = scratch[k];
    }
    from_digits(&out[..n], d)
}

/// Dense `P_π` on `(C^d)^{⊗n}`.
pub fn permutation_operator(p: &Permutation, d: usize) -> DMatrix<C64> {
    let n = p.n();
    let dim = d.pow(n as u32);
    let mut m = DMatrix::zeros(dim, dim);
    let mut scratch = vec![0; n];
    let mut out = vec![0; n];
    for i in 0..dim {
        let j = permute_index(p, i, d, &mut scratch, &mut out);
        m[(j, i)] = C64::new(1.0, 0.0);
    }
    m
}
