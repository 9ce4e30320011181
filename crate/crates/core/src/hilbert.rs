//! Bipartite pure states, Haar-random unitaries and exact overlap/purity
//! computations.
//!
//! Composite indices are row-major in `A ⊗ B`: amplitude `(a, b)` lives at
//! `a * d + b`. Two-copy state vectors use the ordering `A1 B1 A2 B2`, two-copy
//! operators use `A1 A2 B1 B2`; [`state_to_operator_order`] converts between
//! the two.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tolerance::TOL;

pub type C64 = Complex64;

/// Class tag of a training or test state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    /// Label `+1`.
    Separable,
    /// Label `-1`.
    Entangled,
}

impl StateClass {
    pub fn label(self) -> i8 {
        match self {
            StateClass::Separable => 1,
            StateClass::Entangled => -1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.label())
    }

    pub fn from_label(y: i8) -> Option<Self> {
        match y {
            1 => Some(StateClass::Separable),
            -1 => Some(StateClass::Entangled),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Normalized pure state on `C^d ⊗ C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    local_dim: usize,
    label: Option<StateClass>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, local_dim: usize, label: Option<StateClass>) -> Result<Self> {
        if local_dim == 0 {
            return Err(Error::invalid("local dimension must be positive"));
        }
        if amplitudes.len() != local_dim * local_dim {
            return Err(Error::invalid(format!(
                "expected {} amplitudes for local dimension {}, got {}",
                local_dim * local_dim,
                local_dim,
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOL.normalization {
            return Err(Error::invalid(format!("state is not normalized: |ψ|² = {norm}")));
        }
        Ok(Self { amplitudes, local_dim, label })
    }

    /// Computational basis state `|a, b⟩`.
    pub fn basis(local_dim: usize, a: usize, b: usize) -> Result<Self> {
        if a >= local_dim || b >= local_dim {
            return Err(Error::invalid("basis index out of range"));
        }
        let mut amps = vec![C64::new(0.0, 0.0); local_dim * local_dim];
        amps[a * local_dim + b] = C64::new(1.0, 0.0);
        Self::new(amps, local_dim, None)
    }

    /// Reference maximally entangled state `d^{-1/2} Σ_i |i, i⟩`.
    pub fn phi_plus(local_dim: usize) -> Result<Self> {
        if local_dim == 0 {
            return Err(Error::invalid("local dimension must be positive"));
        }
        let mut amps = vec![C64::new(0.0, 0.0); local_dim * local_dim];
        let v = 1.0 / (local_dim as f64).sqrt();
        for i in 0..local_dim {
            amps[i * local_dim + i] = C64::new(v, 0.0);
        }
        Self::new(amps, local_dim, Some(StateClass::Entangled))
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn label(&self) -> Option<StateClass> {
        self.label
    }

    pub fn with_label(mut self, label: Option<StateClass>) -> Self {
        self.label = label;
        self
    }

    /// `|ψ⟩ ⊗ |ψ⟩` in the `A1 B1 A2 B2` ordering.
    pub fn tensor_square(&self) -> Vec<C64> {
        let n = self.amplitudes.len();
        let mut out = Vec::with_capacity(n * n);
        for &x in &self.amplitudes {
            out.extend(self.amplitudes.iter().map(|&y| x * y));
        }
        out
    }
}

/// `⟨a|b⟩`.
#[inline]
pub fn inner_product(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Fidelity `|⟨a|b⟩|²`.
pub fn overlap(a: &PureState, b: &PureState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    Ok(overlap_unchecked(a, b))
}

#[inline]
pub(crate) fn overlap_unchecked(a: &PureState, b: &PureState) -> f64 {
    inner_product(&a.amplitudes, &b.amplitudes).norm_sqr().min(1.0)
}

/// Reduced density matrix of one subsystem, via the partial trace of `|ψ⟩⟨ψ|`.
pub fn reduced_density(s: &PureState, subsystem: Subsystem) -> DMatrix<C64> {
    let d = s.local_dim;
    let amp = |a: usize, b: usize| s.amplitudes[a * d + b];
    match subsystem {
        // ρ_A[a, a'] = Σ_b ψ(a,b) ψ*(a',b)
        Subsystem::A => DMatrix::from_fn(d, d, |a, ap| (0..d).map(|b| amp(a, b) * amp(ap, b).conj()).sum()),
        // ρ_B[b, b'] = Σ_a ψ(a,b) ψ*(a,b')
        Subsystem::B => DMatrix::from_fn(d, d, |b, bp| (0..d).map(|a| amp(a, b) * amp(a, bp).conj()).sum()),
    }
}

/// `Tr[ρ_sub²]`, between `1/d` and `1`.
pub fn reduced_purity(s: &PureState, subsystem: Subsystem) -> f64 {
    let rho = reduced_density(s, subsystem);
    // Tr[ρ²] = Σ |ρ_ij|² for Hermitian ρ
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// Unitary matrix on `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: DMatrix<C64>,
}

impl UnitaryMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::invalid("unitary must be a non-empty square matrix"));
        }
        let u = Self { entries };
        let dev = u.unitarity_deviation();
        if dev > TOL.unitarity {
            return Err(Error::invalid(format!("matrix is not unitary (deviation {dev:.3e})")));
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// Max-abs entry of `U†U - 1`.
    pub fn unitarity_deviation(&self) -> f64 {
        let g = self.entries.adjoint() * &self.entries;
        let n = g.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `U v`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.entries[(i, j)] * v[j]).sum()).collect()
    }

    /// `U† v`.
    pub fn apply_adjoint(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.entries[(j, i)].conj() * v[j]).sum()).collect()
    }
}

pub(crate) fn complex_gaussian(rng: &mut RngStream) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary: Ginibre matrix, QR factorization, then the
/// phases of `diag(R)` are moved into `Q` so that `R` has a positive diagonal.
pub fn haar_unitary(dim: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::invalid("unitary dimension must be at least 1"));
    }
    let ginibre = DMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        let phase = if norm > 0.0 { rjj / norm } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(UnitaryMatrix { entries: q })
}

/// Random state of the requested class: `(U_A ⊗ U_B)` applied to `|0,0⟩`
/// (separable) or to `d^{-1/2} Σ_i |i,i⟩` (entangled), with independent Haar
/// `U_A`, `U_B`.
pub fn sample_state(class: StateClass, d: usize, rng: &mut RngStream) -> Result<PureState> {
    if d < 2 {
        return Err(Error::invalid("local dimension must be at least 2"));
    }
    let ua = haar_unitary(d, rng)?;
    let ub = haar_unitary(d, rng)?;
    let ua = ua.entries();
    let ub = ub.entries();
    let mut amps = vec![C64::new(0.0, 0.0); d * d];
    match class {
        StateClass::Separable => {
            for a in 0..d {
                for b in 0..d {
                    amps[a * d + b] = ua[(a, 0)] * ub[(b, 0)];
                }
            }
        }
        StateClass::Entangled => {
            let norm = 1.0 / (d as f64).sqrt();
            for a in 0..d {
                for b in 0..d {
                    let s: C64 = (0..d).map(|i| ua[(a, i)] * ub[(b, i)]).sum();
                    amps[a * d + b] = s * norm;
                }
            }
        }
    }
    // Renormalize away the ~1e-16 rounding left by QR.
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= norm);
    PureState::new(amps, d, Some(class))
}

/// Samples `count` states of one class.
pub fn sample_states(class: StateClass, d: usize, count: usize, rng: &mut RngStream) -> Result<Vec<PureState>> {
    (0..count).map(|_| sample_state(class, d, rng)).collect()
}

/// Maps a two-copy index from `A1 B1 A2 B2` to `A1 A2 B1 B2`.
#[inline]
pub fn state_index_to_operator_index(idx: usize, d: usize) -> usize {
    let b2 = idx % d;
    let a2 = (idx / d) % d;
    let b1 = (idx / (d * d)) % d;
    let a1 = idx / (d * d * d);
    ((a1 * d + a2) * d + b1) * d + b2
}

/// Reorders a two-copy vector from `A1 B1 A2 B2` to `A1 A2 B1 B2`.
pub fn state_to_operator_order(v: &[C64], d: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (i, &x) in v.iter().enumerate() {
        out[state_index_to_operator_index(i, d)] = x;
    }
    out
}

/// Inverse of [`state_to_operator_order`].
pub fn operator_to_state_order(v: &[C64], d: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = v[state_index_to_operator_index(i, d)];
    }
    out
}
