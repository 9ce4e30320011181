//! Soft-margin SVM dual solved by sequential minimal optimization, and the
//! kernel-expansion classifier.
//!
//! We minimize `½ αᵀQα − Σα` with `Q_nm = y_n y_m K_nm`, `0 ≤ α ≤ C` and
//! `Σ α_n y_n = 0`. Each step updates the maximal KKT-violating pair. Noisy
//! Gram matrices may be indefinite; the pair update then uses a tiny positive
//! curvature, as LIBSVM does.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::KernelEstimate;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Box constraint.
    pub c: f64,
    /// Stop when the maximal KKT violation `m(α) − M(α)` drops below this.
    pub tol: f64,
    /// Cap on pair updates.
    pub max_iter: u64,
    /// Clip negative eigenvalues of the Gram matrix before solving.
    pub psd_project: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, tol: 1e-3, max_iter: 10_000_000, psd_project: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
    pub beta: f64,
    pub c: f64,
    pub support_indices: Vec<usize>,
    pub iterations: u64,
    /// Final `m(α) − M(α)`.
    pub kkt_gap: f64,
    /// `αᵀQα ≈ 0`: the expansion is identically zero on the training set.
    pub degenerate_margin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub label: i8,
    /// The decision value was exactly zero; `label` is then `+1`.
    pub tie: bool,
}

impl SvmModel {
    /// `Σ_n α_n y_n k_row[n] + β`.
    pub fn decision_value(&self, k_row: &[f64]) -> Result<f64> {
        if k_row.len() != self.alphas.len() {
            return Err(Error::invalid(format!(
                "kernel row has {} entries, model has {} training states",
                k_row.len(),
                self.alphas.len()
            )));
        }
        Ok(self.support_indices.iter().map(|&n| self.alphas[n] * f64::from(self.labels[n]) * k_row[n]).sum::<f64>() + self.beta)
    }

    pub fn classify(&self, k_row: &[f64]) -> Result<Classification> {
        Ok(classify_value(self.decision_value(k_row)?))
    }
}

pub fn classify_value(v: f64) -> Classification {
    if v == 0.0 {
        Classification { label: 1, tie: true }
    } else {
        Classification { label: if v > 0.0 { 1 } else { -1 }, tie: false }
    }
}

pub fn solve_dual(gram: &KernelEstimate, labels: &[i8], params: &SvmParams) -> Result<SvmModel> {
    solve_dual_matrix(&gram.gram, labels, params)
}

fn validate(gram: &DMatrix<f64>, labels: &[i8], params: &SvmParams) -> Result<()> {
    if !gram.is_square() {
        return Err(Error::invalid(format!("Gram matrix is {}×{}", gram.nrows(), gram.ncols())));
    }
    let n = gram.nrows();
    if labels.len() != n {
        return Err(Error::invalid(format!("{} labels for {n} training points", labels.len())));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::invalid("labels must be ±1"));
    }
    if params.c.is_nan() || params.c <= 0.0 || params.tol.is_nan() || params.tol <= 0.0 {
        return Err(Error::invalid("C and tol must be positive"));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-12 * (1.0 + gram[(i, j)].abs()) {
                return Err(Error::invalid("Gram matrix is not symmetric"));
            }
        }
    }
    Ok(())
}

/// Nearest PSD matrix in Frobenius norm.
pub fn psd_projection(gram: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = gram.clone().symmetric_eigen();
    let clipped = eig.eigenvalues.map(|x| x.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

pub fn solve_dual_matrix(gram: &DMatrix<f64>, labels: &[i8], params: &SvmParams) -> Result<SvmModel> {
    validate(gram, labels, params)?;
    if params.psd_project {
        let projected = psd_projection(gram);
        return smo(&projected, labels, params);
    }
    smo(gram, labels, params)
}

struct Selection {
    i: usize,
    j: usize,
    gap: f64,
}

fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> Option<Selection> {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    let mut i = usize::MAX;
    let mut j = usize::MAX;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
        let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
        if up && v > gmax {
            gmax = v;
            i = t;
        }
        if low && v < gmin {
            gmin = v;
            j = t;
        }
    }
    if i == usize::MAX || j == usize::MAX {
        return None;
    }
    Some(Selection { i, j, gap: gmax - gmin })
}

fn smo(k: &DMatrix<f64>, labels: &[i8], params: &SvmParams) -> Result<SvmModel> {
    let n = k.nrows();
    let c = params.c;
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0u64;
    let mut gap = 0.0;

    while let Some(sel) = select_pair(&alpha, &grad, &y, c) {
        gap = sel.gap;
        if sel.gap <= params.tol {
            break;
        }
        if iterations >= params.max_iter {
            let best = finish(k, &y, labels, alpha, &grad, c, iterations, gap);
            return Err(Error::NonConvergence { iterations, gap, best: Box::new(best) });
        }
        iterations += 1;

        let (i, j) = (sel.i, sel.j);
        let ki = k.column(i);
        let kj = k.column(j);
        let qij = y[i] * y[j] * ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);

        if y[i] != y[j] {
            let mut quad = ki[i] + kj[j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = ki[i] + kj[j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let di = (ai - old_i) * y[i];
        let dj = (aj - old_j) * y[j];
        let (ki, kj) = (ki.as_slice(), kj.as_slice());
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
    }

    Ok(finish(k, &y, labels, alpha, &grad, c, iterations, gap))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    k: &DMatrix<f64>,
    y: &[f64],
    labels: &[i8],
    alpha: Vec<f64>,
    grad: &[f64],
    c: f64,
    iterations: u64,
    gap: f64,
) -> SvmModel {
    // β from free support vectors, else the midpoint of the feasible interval.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    };
    let support_indices: Vec<usize> = (0..alpha.len()).filter(|&t| alpha[t] > 0.0).collect();
    let mut quad = 0.0;
    for &a in &support_indices {
        for &b in &support_indices {
            quad += alpha[a] * alpha[b] * y[a] * y[b] * k[(a, b)];
        }
    }
    let scale: f64 = support_indices.iter().map(|&t| alpha[t]).sum::<f64>().max(1e-300);
    SvmModel {
        alphas: alpha,
        labels: labels.to_vec(),
        beta: -rho,
        c,
        support_indices,
        iterations,
        kkt_gap: gap,
        degenerate_margin: quad.abs() <= 1e-12 * scale * scale,
    }
}

/// `Σα − ½ Σ α_n α_m y_n y_m K_nm`.
pub fn dual_objective(alphas: &[f64], labels: &[i8], gram: &DMatrix<f64>) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for a in 0..n {
        if alphas[a] == 0.0 {
            continue;
        }
        for b in 0..n {
            quad += alphas[a] * alphas[b] * f64::from(labels[a]) * f64::from(labels[b]) * gram[(a, b)];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Maximal KKT violation `m(α) − M(α)` of a candidate solution.
pub fn kkt_violation(model: &SvmModel, gram: &DMatrix<f64>) -> f64 {
    let n = model.alphas.len();
    let y: Vec<f64> = model.labels.iter().map(|&l| f64::from(l)).collect();
    let grad: Vec<f64> = (0..n)
        .map(|t| y[t] * model.support_indices.iter().map(|&m| model.alphas[m] * y[m] * gram[(t, m)]).sum::<f64>() - 1.0)
        .collect();
    select_pair(&model.alphas, &grad, &y, model.c).map_or(0.0, |s| s.gap.max(0.0))
}
