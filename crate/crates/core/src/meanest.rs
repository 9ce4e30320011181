//! Mean-state classifier `B = 2(ρ̄+ − ρ̄−) − (Δ++ − Δ−−)𝟙` and its
//! unbiased finite-sample, finite-shot estimators.
//!
//! Every per-pair estimate is an unbiased estimate of the squared overlap
//! `F² = Tr[ρρ′]²`: the mean of `±1` outcomes for two-copy swap tests, or the
//! shot-pair U-statistic for single-copy swap tests.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{PureState, StateClass};
use crate::measurement::{draw_counts, fidelity_matrix, CostReport, Shots, SwapMode};
use crate::oracle::{average_state_overlap, b2_class_mean, exact_delta};
use crate::rng::RngStream;
use crate::svm::{classify_value, Classification};

pub const PHASE_TRAIN_MEAN: &str = "train_mean";
pub const PHASE_TEST_MEAN: &str = "test_mean";

/// Variance-model constants, fitted by [`calibrate_kappa`] at `d = 2`.
pub const KAPPA_SINGLE: f64 = 19.8;
pub const KAPPA_TWO: f64 = 8.67;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedMeanClassifier {
    pub delta_pp_hat: f64,
    pub delta_mm_hat: f64,
    pub mode: SwapMode,
    pub train_sep: Vec<PureState>,
    pub train_ent: Vec<PureState>,
    pub shots_train: Shots,
    pub cost: CostReport,
}

/// Output of one test-stage evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanScore {
    /// `B_obs`.
    pub value: f64,
    /// `Δ̂+^y`, the mean estimate against separable training states.
    pub delta_plus: f64,
    /// `Δ̂−^y`.
    pub delta_minus: f64,
    pub swap_tests: u64,
    pub state_copies: u64,
}

impl MeanScore {
    pub fn classify(&self) -> Classification {
        classify_value(self.value)
    }
}

fn check_shots(shots: Shots, mode: SwapMode) -> Result<()> {
    match (shots, mode) {
        (Shots::Finite(0), _) => Err(Error::invalid("at least one shot is required")),
        (Shots::Finite(1), SwapMode::SingleCopy) => Err(Error::invalid("single-copy U-statistic needs S ≥ 2 shots")),
        _ => Ok(()),
    }
}

#[inline]
fn pair_estimate(f: f64, shots: Shots, mode: SwapMode, rng: &mut RngStream) -> f64 {
    match shots {
        Shots::Exact => f * f,
        Shots::Finite(s) => {
            let c = draw_counts(f, s, mode, rng);
            match mode {
                SwapMode::TwoCopy => c.estimate_overlap(),
                SwapMode::SingleCopy => {
                    let s = s as f64;
                    let x = c.signed_sum();
                    (x * x - s) / (s * (s - 1.0))
                }
            }
        }
    }
}

/// `(2/(N(N−1))) Σ_{i<j} est(F_ij)` over the principal block starting at
/// `offset`. Column `i` of the block draws from `rng.derive(i)`; `fid` is
/// symmetric, so reading down columns is the cache-friendly direction.
fn u_statistic(fid: &DMatrix<f64>, offset: usize, n: usize, shots: Shots, mode: SwapMode, rng: &RngStream) -> f64 {
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.derive(i as u64);
            ((i + 1)..n).map(|j| pair_estimate(fid[(offset + j, offset + i)], shots, mode, &mut r)).sum()
        })
        .collect();
    let pairs = (n * (n - 1) / 2) as f64;
    rows.iter().sum::<f64>() / pairs
}

pub fn train(
    train_sep: &[PureState],
    train_ent: &[PureState],
    shots: Shots,
    mode: SwapMode,
    rng: &RngStream,
) -> Result<TrainedMeanClassifier> {
    let all: Vec<PureState> = train_sep.iter().chain(train_ent).cloned().collect();
    let fid = fidelity_matrix(&all)?;
    train_with_fidelities(train_sep.to_vec(), train_ent.to_vec(), &fid, shots, mode, rng)
}

/// As [`train`] with precomputed fidelities of the concatenation
/// `train_sep ++ train_ent`.
pub fn train_with_fidelities(
    train_sep: Vec<PureState>,
    train_ent: Vec<PureState>,
    fid: &DMatrix<f64>,
    shots: Shots,
    mode: SwapMode,
    rng: &RngStream,
) -> Result<TrainedMeanClassifier> {
    let n = train_sep.len();
    if n < 2 || train_ent.len() != n {
        return Err(Error::invalid(format!("need N ≥ 2 states per class, got {} and {}", n, train_ent.len())));
    }
    if fid.nrows() != 2 * n || fid.ncols() != 2 * n {
        return Err(Error::invalid("fidelity matrix does not match the training set"));
    }
    check_shots(shots, mode)?;
    let delta_pp_hat = u_statistic(fid, 0, n, shots, mode, &rng.derive(0));
    let delta_mm_hat = u_statistic(fid, n, n, shots, mode, &rng.derive(1));
    let tests = 2 * shots.tests() * (n * (n - 1) / 2) as u64;
    let mut cost = CostReport::default();
    cost.record(PHASE_TRAIN_MEAN, tests, tests * mode.copies_per_shot());
    Ok(TrainedMeanClassifier { delta_pp_hat, delta_mm_hat, mode, train_sep, train_ent, shots_train: shots, cost })
}

impl TrainedMeanClassifier {
    pub fn n(&self) -> usize {
        self.train_sep.len()
    }

    pub fn score(&self, test: &PureState, shots: Shots, rng: &mut RngStream) -> Result<MeanScore> {
        let fs = self.train_sep.iter().map(|t| crate::hilbert::overlap(test, t)).collect::<Result<Vec<_>>>()?;
        let fe = self.train_ent.iter().map(|t| crate::hilbert::overlap(test, t)).collect::<Result<Vec<_>>>()?;
        self.score_with_fidelities(&fs, &fe, shots, rng)
    }

    /// Test stage from the fidelities of the test state with each separable
    /// and each entangled training state.
    pub fn score_with_fidelities(
        &self,
        fid_sep: &[f64],
        fid_ent: &[f64],
        shots: Shots,
        rng: &mut RngStream,
    ) -> Result<MeanScore> {
        let n = self.n();
        if fid_sep.len() != n || fid_ent.len() != n {
            return Err(Error::invalid("test fidelities do not match the training set"));
        }
        check_shots(shots, self.mode)?;
        let mean =
            |fs: &[f64], rng: &mut RngStream| fs.iter().map(|&f| pair_estimate(f, shots, self.mode, rng)).sum::<f64>() / n as f64;
        let delta_plus = mean(fid_sep, rng);
        let delta_minus = mean(fid_ent, rng);
        let swap_tests = 2 * shots.tests() * n as u64;
        Ok(MeanScore {
            value: 2.0 * (delta_plus - delta_minus) - (self.delta_pp_hat - self.delta_mm_hat),
            delta_plus,
            delta_minus,
            swap_tests,
            state_copies: swap_tests * self.mode.copies_per_shot(),
        })
    }
}

/// `Tr[(|ψ⟩⟨ψ|)^{⊗2} B]` with the exact average states: the `N, S → ∞` limit.
pub fn exact_score(test: &PureState) -> f64 {
    let d = test.local_dim();
    2.0 * (average_state_overlap(StateClass::Separable, test) - average_state_overlap(StateClass::Entangled, test))
        - (exact_delta(StateClass::Separable, StateClass::Separable, d)
            - exact_delta(StateClass::Entangled, StateClass::Entangled, d))
}

/// Test-stage variance model `σ²(N, S, d)` before the `κ` factor.
pub fn variance_model(n: usize, shots: Shots, d: usize, mode: SwapMode) -> f64 {
    let inv_s = shots.finite().map_or(0.0, |s| 1.0 / s as f64);
    let df = d as f64;
    let inv_n = 1.0 / n as f64;
    match mode {
        SwapMode::SingleCopy => inv_n * (inv_s + df.powi(-4)).powi(2),
        SwapMode::TwoCopy => inv_n * (inv_s + df.powi(-8)),
    }
}

/// Cantelli bound `σ²/(σ² + μ²)` with the frozen `κ` of the mode.
pub fn misclassification_bound(n: usize, shots: Shots, d: usize, mode: SwapMode) -> f64 {
    let kappa = match mode {
        SwapMode::SingleCopy => KAPPA_SINGLE,
        SwapMode::TwoCopy => KAPPA_TWO,
    };
    misclassification_bound_with(n, shots, d, mode, kappa)
}

pub fn misclassification_bound_with(n: usize, shots: Shots, d: usize, mode: SwapMode, kappa: f64) -> f64 {
    let var = kappa * variance_model(n, shots, d, mode);
    let mu = b2_class_mean(StateClass::Separable, d);
    var / (var + mu * mu)
}

/// Least-squares `κ` through the origin, `Σ v̂ m / Σ m²`, fitted to the
/// empirical variance of `B_obs` for separable test states at `d = 2`.
pub fn calibrate_kappa(mode: SwapMode, cells: &[(usize, u64)], trials: usize, seed: u64) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &(n, s)) in cells.iter().enumerate() {
        let values = sample_scores(2, n, Shots::Finite(s), mode, StateClass::Separable, trials, &RngStream::new(seed, k as u64))?;
        let var = sample_variance(&values);
        let m = variance_model(n, Shots::Finite(s), 2, mode);
        num += var * m;
        den += m * m;
    }
    Ok(num / den)
}

/// `B_obs` for `trials` independent (training set, test state) draws.
pub fn sample_scores(
    d: usize,
    n: usize,
    shots: Shots,
    mode: SwapMode,
    test_class: StateClass,
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<f64>> {
    (0..trials)
        .map(|t| {
            let mut r = rng.derive(t as u64);
            let sep = crate::hilbert::sample_states(StateClass::Separable, d, n, &mut r)?;
            let ent = crate::hilbert::sample_states(StateClass::Entangled, d, n, &mut r)?;
            let test = crate::hilbert::sample_state(test_class, d, &mut r)?;
            let model = train(&sep, &ent, shots, mode, &r.derive(1))?;
            Ok(model.score(&test, shots, &mut r.derive(2))?.value)
        })
        .collect()
}

pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}
