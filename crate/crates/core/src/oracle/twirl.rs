//! The twirling superoperator `T^n(A) = ∫ dU U^{⊗n} A U^{†⊗n}` in the
//! permutation basis.
//!
//! By Schur-Weyl duality `T^n(A) = Σ_π b_π P_π` with
//! `b = M⁺ a`, `a_σ = Tr[P_σ† A]` and `M` from [`perm_gram`].

use nalgebra::DMatrix;

use super::dense::DenseOperator;
use super::perm::{perm_gram, permutation_operator, permute_index, Permutation};
use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::tolerance::TOL;

/// Weighted sum of permutation operators on `(C^d)^{⊗n}`.
///
/// Coefficients are complex; for Hermitian inputs with `n ≤ 2` they are real.
#[derive(Debug, Clone, PartialEq)]
pub struct PermCombo {
    pub terms: Vec<(Permutation, C64)>,
    pub n: usize,
    pub d: usize,
}

impl PermCombo {
    pub fn coefficients(&self) -> Vec<C64> {
        self.terms.iter().map(|(_, c)| *c).collect()
    }

    pub fn coefficient_of(&self, p: &Permutation) -> Option<C64> {
        self.terms.iter().find(|(q, _)| q == p).map(|(_, c)| *c)
    }

    pub fn materialize(&self) -> DenseOperator {
        let dim = self.d.pow(self.n as u32);
        let mut m = DMatrix::zeros(dim, dim);
        let mut scratch = vec![0; self.n];
        let mut out = vec![0; self.n];
        for (p, c) in &self.terms {
            for i in 0..dim {
                let j = permute_index(p, i, self.d, &mut scratch, &mut out);
                m[(j, i)] += *c;
            }
        }
        DenseOperator::new(m).expect("square by construction")
    }
}

/// Moore-Penrose pseudo-inverse of a real symmetric matrix, discarding
/// eigenvalues below `TOL.pinv_cutoff · max|λ|`.
pub fn pseudo_inverse_symmetric(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cutoff = TOL.pinv_cutoff * max;
    let n = m.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= cutoff {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        inv += (v * v.transpose()) / lambda;
    }
    inv
}

/// `Tr[P_σ† A]` for `A` on `(C^d)^{⊗n}`.
fn perm_trace(p: &Permutation, a: &DMatrix<C64>, d: usize) -> C64 {
    let n = p.n();
    let mut scratch = vec![0; n];
    let mut out = vec![0; n];
    (0..a.nrows()).map(|i| a[(permute_index(p, i, d, &mut scratch, &mut out), i)]).sum()
}

/// `T^n(A)` for `A` acting on `(C^d)^{⊗n}`, `n ≤ 4`.
pub fn twirl(a: &DenseOperator, n: usize, d: usize) -> Result<PermCombo> {
    let m = perm_gram(n, d)?;
    let dim = d.pow(n as u32);
    if a.dim() != dim {
        return Err(Error::invalid(format!("operator of dimension {} does not act on ({d})^⊗{n} = {dim}", a.dim())));
    }
    let perms = Permutation::all(n);
    let minv = pseudo_inverse_symmetric(&m);
    let traces: Vec<C64> = perms.iter().map(|p| perm_trace(p, a.entries(), d)).collect();
    let terms = perms
        .iter()
        .enumerate()
        .map(|(pi, p)| {
            let b: C64 = (0..perms.len()).map(|s| traces[s] * minv[(pi, s)]).sum();
            (p.clone(), b)
        })
        .collect();
    Ok(PermCombo { terms, n, d })
}

/// `(T^n_A ⊗ T^n_B)(A)` with independent Haar unitaries on the `A` block and
/// the `B` block. `A` acts on `(C^d)^{⊗n} ⊗ (C^d)^{⊗n}` ordered
/// `A1..An B1..Bn`; the result is a combination of block permutations on `2n`
/// factors.
pub fn twirl_local(a: &DenseOperator, n: usize, d: usize) -> Result<PermCombo> {
    let m = perm_gram(n, d)?;
    let dim = d.pow(2 * n as u32);
    if a.dim() != dim {
        return Err(Error::invalid(format!("operator of dimension {} does not act on ({d})^⊗{} = {dim}", a.dim(), 2 * n)));
    }
    let perms = Permutation::all(n);
    let minv = pseudo_inverse_symmetric(&m);
    let block = |pa: &Permutation, pb: &Permutation| {
        let mut mapping: Vec<usize> = pa.mapping().to_vec();
        mapping.extend(pb.mapping().iter().map(|&x| x + n));
        Permutation::new(mapping).expect("block permutation")
    };
    let k = perms.len();
    let traces: Vec<Vec<C64>> =
        perms.iter().map(|sa| perms.iter().map(|sb| perm_trace(&block(sa, sb), a.entries(), d)).collect()).collect();
    let mut terms = Vec::with_capacity(k * k);
    for (ia, pa) in perms.iter().enumerate() {
        for (ib, pb) in perms.iter().enumerate() {
            let mut b = C64::new(0.0, 0.0);
            for sa in 0..k {
                for sb in 0..k {
                    b += traces[sa][sb] * (minv[(ia, sa)] * minv[(ib, sb)]);
                }
            }
            terms.push((block(pa, pb), b));
        }
    }
    Ok(PermCombo { terms, n: 2 * n, d })
}

/// Dense permutation operators for every element of `S_n`, in
/// [`Permutation::all`] order.
pub fn permutation_basis(n: usize, d: usize) -> Vec<DMatrix<C64>> {
    Permutation::all(n).iter().map(|p| permutation_operator(p, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::haar_unitary;
    use crate::rng::RngStream;
    use rand::Rng;

    fn random_hermitian(dim: usize, rng: &mut RngStream) -> DenseOperator {
        let g = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        DenseOperator::new(&g + g.adjoint()).unwrap()
    }

    #[test]
    fn single_copy_twirl_is_trace_over_d() {
        let a = DenseOperator::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ])))
        .unwrap();
        let t = twirl(&a, 1, 2).unwrap();
        assert!((t.terms[0].1 - C64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(t.materialize().max_abs_diff(&DenseOperator::identity(2).scale(0.5)) < 1e-14);
    }

    #[test]
    fn two_copy_twirl_of_product_basis_state() {
        // (1 + S)/6 = P+/3 for d = 2
        let mut v = vec![C64::new(0.0, 0.0); 4];
        v[0] = C64::new(1.0, 0.0);
        let t = twirl(&DenseOperator::projector(&v), 2, 2).unwrap();
        let c = t.coefficients();
        assert!((c[0].re - 1.0 / 6.0).abs() < 1e-14 && (c[1].re - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn twirl_fixes_swap() {
        for d in 2..5 {
            let swap = DenseOperator::new(permutation_operator(&Permutation::new(vec![1, 0]).unwrap(), d)).unwrap();
            let c = twirl(&swap, 2, d).unwrap().coefficients();
            assert!(c[0].norm() < 1e-12 && (c[1].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(twirl(&DenseOperator::identity(3), 2, 2).is_err());
        assert!(matches!(twirl(&DenseOperator::identity(2), 5, 2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn twirl_commutes_with_collective_unitaries() {
        let mut rng = RngStream::new(11, 0);
        for (n, d) in [(1usize, 3usize), (2, 2), (2, 3), (3, 2), (3, 3)] {
            let dim = d.pow(n as u32);
            let a = random_hermitian(dim, &mut rng);
            let t = twirl(&a, n, d).unwrap().materialize();
            let v = haar_unitary(d, &mut rng).unwrap();
            let mut vn = v.entries().clone();
            for _ in 1..n {
                vn = vn.kronecker(v.entries());
            }
            assert!(t.conjugate_by(&vn).max_abs_diff(&t) < 1e-8, "n={n} d={d}");
        }
    }

    #[test]
    fn twirl_is_idempotent() {
        let mut rng = RngStream::new(12, 0);
        for (n, d) in [(1usize, 2usize), (1, 3), (2, 2), (2, 3)] {
            let a = random_hermitian(d.pow(n as u32), &mut rng);
            let once = twirl(&a, n, d).unwrap().materialize();
            let twice = twirl(&once, n, d).unwrap().materialize();
            assert!(once.max_abs_diff(&twice) < 1e-10);
        }
    }

    #[test]
    fn singular_gram_uses_pseudo_inverse() {
        // S_3 on qubits: the antisymmetric subspace is empty, M has rank 5.
        let m = perm_gram(3, 2).unwrap();
        let pinv = pseudo_inverse_symmetric(&m);
        let back = &m * &pinv * &m;
        assert!((back - &m).abs().max() < 1e-9);
        let mut rng = RngStream::new(13, 0);
        let a = random_hermitian(8, &mut rng);
        let t = twirl(&a, 3, 2).unwrap().materialize();
        // Tr is preserved by the twirl.
        assert!((t.trace() - a.trace()).norm() < 1e-9);
    }

    #[test]
    fn offdiagonal_inverse_gram_decays_by_one_power_of_d() {
        for d in 2..20 {
            let minv = pseudo_inverse_symmetric(&perm_gram(2, d).unwrap());
            let ratio = (minv[(0, 1)] / minv[(0, 0)]).abs();
            assert!((ratio - 1.0 / d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_twirl_matches_exact() {
        let d = 2;
        let mut rng = RngStream::new(14, 0);
        let a = random_hermitian(4, &mut rng);
        let exact = twirl(&a, 2, d).unwrap().materialize();
        let draws = 10_000;
        let mut sum = DMatrix::<C64>::zeros(4, 4);
        let mut sumsq = DMatrix::<f64>::zeros(4, 4);
        for _ in 0..draws {
            let u = haar_unitary(d, &mut rng).unwrap();
            let u2 = u.entries().kronecker(u.entries());
            let x = a.conjugate_by(&u2).into_entries();
            sumsq += x.map(|z| z.re * z.re);
            sum += x;
        }
        for i in 0..4 {
            for j in 0..4 {
                let mean = sum[(i, j)].re / draws as f64;
                let var = sumsq[(i, j)] / draws as f64 - mean * mean;
                let se = (var / draws as f64).sqrt().max(1e-12);
                assert!((mean - exact.entries()[(i, j)].re).abs() < 5.0 * se + 1e-12, "({i},{j})");
            }
        }
    }
}
