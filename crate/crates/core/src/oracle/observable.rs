//! Two-copy observables spanned by `1`, `S_A`, `S_B` and `S_AB = S_A S_B`,
//! where `S_A` swaps `A1 ↔ A2` and `S_B` swaps `B1 ↔ B2`.

use serde::{Deserialize, Serialize};

use super::dense::DenseOperator;
use super::states::{exact_delta, DENSE_TWO_COPY_MAX_D};
use crate::error::{Error, Result};
use crate::hilbert::{reduced_purity, PureState, StateClass, Subsystem, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapObservable {
    pub d: usize,
    pub identity: f64,
    pub swap_a: f64,
    pub swap_b: f64,
    pub swap_ab: f64,
}

impl SwapObservable {
    /// `Tr[O (ρ_A)⊗2 (ρ_B)⊗2 …]` evaluated on `|ψ⟩⊗|ψ⟩` by permuting the
    /// two-copy amplitude vector.
    pub fn expectation_two_copy(&self, s: &PureState) -> Result<f64> {
        if s.local_dim() != self.d {
            return Err(Error::invalid("state dimension does not match observable"));
        }
        let d = self.d;
        let v = s.tensor_square();
        let idx = |a1: usize, b1: usize, a2: usize, b2: usize| ((a1 * d + b1) * d + a2) * d + b2;
        let mut sa = C64::new(0.0, 0.0);
        let mut sb = C64::new(0.0, 0.0);
        let mut sab = C64::new(0.0, 0.0);
        let mut id = 0.0;
        for a1 in 0..d {
            for b1 in 0..d {
                for a2 in 0..d {
                    for b2 in 0..d {
                        let x = v[idx(a1, b1, a2, b2)].conj();
                        id += x.norm_sqr();
                        sa += x * v[idx(a2, b1, a1, b2)];
                        sb += x * v[idx(a1, b2, a2, b1)];
                        sab += x * v[idx(a2, b2, a1, b1)];
                    }
                }
            }
        }
        Ok(self.identity * id + self.swap_a * sa.re + self.swap_b * sb.re + self.swap_ab * sab.re)
    }

    /// Same expectation from the reduced purities of a pure state.
    pub fn expectation_from_purities(&self, purity_a: f64, purity_b: f64) -> f64 {
        self.identity + self.swap_a * purity_a + self.swap_b * purity_b + self.swap_ab
    }

    pub fn expectation_pure(&self, s: &PureState) -> f64 {
        self.expectation_from_purities(reduced_purity(s, Subsystem::A), reduced_purity(s, Subsystem::B))
    }

    /// Distinct eigenvalues: `S_A`, `S_B` commute with spectra `{±1}`.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .iter()
            .map(|&(a, b)| self.identity + self.swap_a * a + self.swap_b * b + self.swap_ab * a * b)
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        ev
    }

    /// Dense operator in the `A1 A2 B1 B2` ordering.
    pub fn materialize(&self) -> Result<DenseOperator> {
        if self.d > DENSE_TWO_COPY_MAX_D {
            return Err(Error::unsupported(format!("dense two-copy operators limited to d ≤ {DENSE_TWO_COPY_MAX_D}")));
        }
        let d = self.d;
        let id2 = DenseOperator::identity(d * d);
        let swap = swap_operator(d);
        let sa = swap.kron(&id2);
        let sb = id2.kron(&swap);
        let sab = swap.kron(&swap);
        Ok(DenseOperator::identity(d.pow(4))
            .scale(self.identity)
            .add(&sa.scale(self.swap_a))
            .add(&sb.scale(self.swap_b))
            .add(&sab.scale(self.swap_ab)))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            d: self.d,
            identity: self.identity * s,
            swap_a: self.swap_a * s,
            swap_b: self.swap_b * s,
            swap_ab: self.swap_ab * s,
        }
    }
}

/// SWAP on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> DenseOperator {
    let n = d * d;
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            m[(j * d + i, i * d + j)] = C64::new(1.0, 0.0);
        }
    }
    DenseOperator::new(m).unwrap()
}

/// Exact classifier `A* = d/(d-1) (S_A + S_B) - (d+1)/(d-1) 1`, normalized so
/// that `Tr[A* (ρ^y)⊗2] = y` for every pure state of class `y`.
pub fn optimal_observable(d: usize) -> Result<SwapObservable> {
    if d < 2 {
        return Err(Error::invalid("d must be at least 2"));
    }
    let df = d as f64;
    Ok(SwapObservable { d, identity: -(df + 1.0) / (df - 1.0), swap_a: df / (df - 1.0), swap_b: df / (df - 1.0), swap_ab: 0.0 })
}

/// Mean-state observable `B = 2(ρ̄+ − ρ̄−) − (Δ++ − Δ−−) 1` on two copies.
pub fn b2_observable(d: usize) -> Result<SwapObservable> {
    if d < 2 {
        return Err(Error::invalid("d must be at least 2"));
    }
    let df = d as f64;
    let sep = 1.0 / (df * df * (df + 1.0).powi(2));
    let ent_sym = 1.0 / (df * df * (df * df - 1.0));
    let ent_swap = 1.0 / (df.powi(3) * (df * df - 1.0));
    let ddiff = exact_delta(StateClass::Separable, StateClass::Separable, d)
        - exact_delta(StateClass::Entangled, StateClass::Entangled, d);
    Ok(SwapObservable {
        d,
        identity: 2.0 * (sep - ent_sym) - ddiff,
        swap_a: 2.0 * (sep + ent_swap),
        swap_b: 2.0 * (sep + ent_swap),
        swap_ab: 2.0 * (sep - ent_sym),
    })
}

/// `B / (Δ++ + Δ−− − 2Δ+−)`, the optimum of the average-state loss:
/// `d/(d-1) (S_A + S_B − 2d/(d²+1) S_AB − (1 − (d²−1)/(d(d²+1))) 1)`.
///
/// On pure states `S_AB` has expectation 1 and this reduces to [`optimal_observable`].
pub fn mean_state_observable(d: usize) -> Result<SwapObservable> {
    if d < 2 {
        return Err(Error::invalid("d must be at least 2"));
    }
    let df = d as f64;
    let pre = df / (df - 1.0);
    Ok(SwapObservable {
        d,
        identity: -pre * (1.0 - (df * df - 1.0) / (df * (df * df + 1.0))),
        swap_a: pre,
        swap_b: pre,
        swap_ab: -pre * 2.0 * df / (df * df + 1.0),
    })
}
