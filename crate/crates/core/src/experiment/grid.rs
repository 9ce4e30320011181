use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::hilbert::{overlap_unchecked, sample_states, PureState, StateClass};
use crate::meanest::train_with_fidelities;
use crate::measurement::{
    fidelity_matrix, kernel_matrix_from_fidelities, kernel_row_from_fidelities, CostReport, KernelEstimate, Shots, SwapMode,
    PHASE_TEST_KERNEL,
};
use crate::rng::{hash_words, RngStream};
use crate::shadows::{build_shadow, collision_rates, split_copies, ShadowProtocol, ShadowSet};
use crate::svm::{solve_dual, SvmModel, SvmParams};

const DATA_STREAM: u64 = 0x4441_5441;
pub const PHASE_SHADOWS: &str = "shadows";

/// Cells with `2N` above this run one at a time to bound memory.
const PARALLEL_MAX_TRAIN: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "S")]
    pub s: Shots,
    pub method: Method,
    pub trial_seed: u64,
    pub success_rate: f64,
    pub stderr: f64,
    pub tie_count: u64,
    pub swap_tests: u64,
    pub state_copies: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub d: usize,
    pub n: usize,
    pub s: Shots,
    pub method: Method,
    pub trial: usize,
    pub reason: String,
}

/// One executed cell with its per-phase ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub row: GridRow,
    pub trial: usize,
    pub cost: CostReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub costs: Vec<CostReport>,
    pub skipped: Vec<SkippedCell>,
}

/// Parameters shared by every cell of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSettings {
    pub base_seed: u64,
    pub test_count: usize,
    pub kernel_power: u32,
    pub svm: SvmParams,
}

impl From<&ExperimentConfig> for CellSettings {
    fn from(c: &ExperimentConfig) -> Self {
        Self { base_seed: c.base_seed, test_count: c.test_count, kernel_power: c.kernel_power, svm: c.svm }
    }
}

/// `hash(base_seed, d, N, S, method, trial)`: the seed of all shot and
/// shadow randomness of a cell.
pub fn cell_seed(base_seed: u64, d: usize, n: usize, s: Shots, method: Method, trial: usize) -> u64 {
    hash_words(&[base_seed, d as u64, n as u64, s.key(), method.id(), trial as u64])
}

/// Training and test states of one `(d, N, trial)`, shared by every `S`
/// and method so that comparisons between them are paired.
pub struct TrialData {
    pub d: usize,
    pub n: usize,
    /// `N` separable then `N` entangled states.
    pub train: Vec<PureState>,
    pub tests: Vec<PureState>,
    pub test_labels: Vec<StateClass>,
    /// `2N × 2N` exact fidelities.
    pub fid_train: DMatrix<f64>,
    /// `M × 2N` exact fidelities.
    pub fid_test: DMatrix<f64>,
    exact_svm: OnceLock<std::result::Result<Outcome, String>>,
}

impl TrialData {
    pub fn sample(base_seed: u64, d: usize, n: usize, trial: usize, test_count: usize) -> Result<Self> {
        let mut rng = RngStream::new(hash_words(&[base_seed, d as u64, n as u64, trial as u64]), DATA_STREAM);
        let mut train = sample_states(StateClass::Separable, d, n, &mut rng)?;
        train.extend(sample_states(StateClass::Entangled, d, n, &mut rng)?);
        let n_sep = test_count.div_ceil(2);
        let mut tests = sample_states(StateClass::Separable, d, n_sep, &mut rng)?;
        tests.extend(sample_states(StateClass::Entangled, d, test_count - n_sep, &mut rng)?);
        let test_labels =
            (0..test_count).map(|m| if m < n_sep { StateClass::Separable } else { StateClass::Entangled }).collect();
        let fid_train = fidelity_matrix(&train)?;
        let rows: Vec<Vec<f64>> = tests.par_iter().map(|t| train.iter().map(|s| overlap_unchecked(t, s)).collect()).collect();
        let fid_test = DMatrix::from_fn(test_count, 2 * n, |m, j| rows[m][j]);
        Ok(Self { d, n, train, tests, test_labels, fid_train, fid_test, exact_svm: OnceLock::new() })
    }

    pub fn train_labels(&self) -> Vec<i8> {
        (0..2 * self.n).map(|i| if i < self.n { 1 } else { -1 }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Outcome {
    correct: u64,
    ties: u64,
    cost: CostReport,
}

fn svm_outcome(data: &TrialData, gram: KernelEstimate, rows: impl Fn(usize) -> Vec<f64> + Sync, params: &SvmParams) -> Outcome {
    let labels = data.train_labels();
    let model: SvmModel = match solve_dual(&gram, &labels, params) {
        Ok(m) => m,
        Err(Error::NonConvergence { best, .. }) => *best,
        Err(e) => unreachable!("validated SVM input rejected: {e}"),
    };
    let (correct, ties) = (0..data.tests.len())
        .into_par_iter()
        .map(|m| {
            let c = model.classify(&rows(m)).expect("row length matches training set");
            (u64::from(c.label == data.test_labels[m].label()), u64::from(c.tie))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Outcome { correct, ties, cost: gram.cost }
}

fn test_row(data: &TrialData, m: usize) -> Vec<f64> {
    data.fid_test.row(m).iter().copied().collect()
}

fn run_svm_exact(data: &TrialData, settings: &CellSettings) -> Outcome {
    let c = settings.kernel_power as i32;
    let gram = KernelEstimate::exact(data.fid_train.map(|f| f.powi(c)), settings.kernel_power);
    svm_outcome(data, gram, |m| test_row(data, m).iter().map(|f| f.powi(c)).collect(), &settings.svm)
}

fn run_svm_swap(data: &TrialData, s: Shots, rng: &RngStream, settings: &CellSettings) -> Outcome {
    let c = settings.kernel_power;
    let gram = kernel_matrix_from_fidelities(&data.fid_train, c, s, &rng.derive(0));
    let test_rng = rng.derive(1);
    let per_test: u64 = 2 * data.n as u64 * s.tests();
    let mut out = svm_outcome(
        data,
        gram,
        |m| {
            let mut cost = CostReport::default();
            kernel_row_from_fidelities(&test_row(data, m), c, s, &mut test_rng.derive(m as u64), &mut cost)
        },
        &settings.svm,
    );
    let tests = per_test * data.tests.len() as u64;
    out.cost.record(PHASE_TEST_KERNEL, tests, tests * SwapMode::SingleCopy.copies_per_shot());
    out
}

fn run_meanest(data: &TrialData, s: Shots, mode: SwapMode, rng: &RngStream) -> Result<Outcome> {
    let n = data.n;
    let model =
        train_with_fidelities(data.train[..n].to_vec(), data.train[n..].to_vec(), &data.fid_train, s, mode, &rng.derive(0))?;
    let test_rng = rng.derive(1);
    let scores = (0..data.tests.len())
        .into_par_iter()
        .map(|m| {
            let row = test_row(data, m);
            model.score_with_fidelities(&row[..n], &row[n..], s, &mut test_rng.derive(m as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cost = model.cost.clone();
    let (mut correct, mut ties, mut tests, mut copies) = (0, 0, 0, 0);
    for (m, sc) in scores.iter().enumerate() {
        let c = sc.classify();
        // A tie counts as a misclassification.
        correct += u64::from(!c.tie && c.label == data.test_labels[m].label());
        ties += u64::from(c.tie);
        tests += sc.swap_tests;
        copies += sc.state_copies;
    }
    cost.record(crate::meanest::PHASE_TEST_MEAN, tests, copies);
    Ok(Outcome { correct, ties, cost })
}

struct ShadowEstimates {
    /// `2N × 2N` overlap estimates between training shadows.
    train: DMatrix<f64>,
    /// `M × 2N`.
    test: DMatrix<f64>,
    cost: CostReport,
}

fn shadow_estimates(data: &TrialData, total: u64, rng: &RngStream) -> Result<ShadowEstimates> {
    let (n_u, n_m) = split_copies(total);
    let dim = data.d * data.d;
    let protocol = ShadowProtocol::sample(dim, n_u as usize, &mut rng.derive(0))?;
    let shadow_rng = rng.derive(1);
    let all: Vec<&PureState> = data.train.iter().chain(&data.tests).collect();
    let shadows: Vec<ShadowSet> = all
        .par_iter()
        .enumerate()
        .map(|(i, s)| build_shadow(s, &protocol, n_m as u32, &shadow_rng.derive(i as u64)))
        .collect::<Result<_>>()?;
    let estimate = |a: &ShadowSet, b: &ShadowSet| -> f64 {
        let q = collision_rates(a, b).expect("shared protocol");
        (dim as f64 + 1.0) * q.iter().sum::<f64>() / q.len() as f64 - 1.0
    };
    let t = data.train.len();
    let rows: Vec<Vec<f64>> =
        (0..t).into_par_iter().map(|i| ((i + 1)..t).map(|j| estimate(&shadows[i], &shadows[j])).collect()).collect();
    let mut train = DMatrix::from_element(t, t, 1.0);
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            train[(i, i + 1 + k)] = v;
            train[(i + 1 + k, i)] = v;
        }
    }
    let test_rows: Vec<Vec<f64>> =
        (0..data.tests.len()).into_par_iter().map(|m| (0..t).map(|j| estimate(&shadows[t + m], &shadows[j])).collect()).collect();
    let test = DMatrix::from_fn(data.tests.len(), t, |m, j| test_rows[m][j]);
    let mut cost = CostReport::default();
    cost.record(PHASE_SHADOWS, 0, all.len() as u64 * n_u * n_m);
    Ok(ShadowEstimates { train, test, cost })
}

fn run_svm_shadow(data: &TrialData, total: u64, rng: &RngStream, settings: &CellSettings) -> Result<Outcome> {
    let est = shadow_estimates(data, total, rng)?;
    let c = settings.kernel_power as i32;
    let mut gram = KernelEstimate::exact(est.train.map(|f| f.powi(c)), settings.kernel_power);
    gram.shots_per_entry = Shots::Finite(total);
    gram.cost = est.cost;
    Ok(svm_outcome(data, gram, |m| est.test.row(m).iter().map(|f| f.powi(c)).collect(), &settings.svm))
}

fn run_meanest_shadow(data: &TrialData, total: u64, rng: &RngStream) -> Result<Outcome> {
    let est = shadow_estimates(data, total, rng)?;
    let n = data.n;
    let pairs = (n * (n - 1) / 2) as f64;
    let block = |off: usize| {
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += est.train[(off + i, off + j)].powi(2);
            }
        }
        sum / pairs
    };
    let (dpp, dmm) = (block(0), block(n));
    let (mut correct, mut ties) = (0, 0);
    for m in 0..data.tests.len() {
        let row = est.test.row(m);
        let plus = (0..n).map(|i| row[i].powi(2)).sum::<f64>() / n as f64;
        let minus = (n..2 * n).map(|i| row[i].powi(2)).sum::<f64>() / n as f64;
        let c = crate::svm::classify_value(2.0 * (plus - minus) - (dpp - dmm));
        correct += u64::from(!c.tie && c.label == data.test_labels[m].label());
        ties += u64::from(c.tie);
    }
    Ok(Outcome { correct, ties, cost: est.cost })
}

/// `Ok(Err(reason))` marks a method/shot combination that does not
/// apply.
fn run_on_data(
    data: &TrialData,
    s: Shots,
    method: Method,
    trial: usize,
    settings: &CellSettings,
) -> Result<std::result::Result<CellResult, String>> {
    let seed = cell_seed(settings.base_seed, data.d, data.n, s, method, trial);
    let rng = RngStream::new(seed, method.id());
    let outcome = match method {
        Method::SvmExact => data.exact_svm.get_or_init(|| Ok(run_svm_exact(data, settings))).clone(),
        Method::SvmSwap => Ok(run_svm_swap(data, s, &rng, settings)),
        Method::MeanestSingle | Method::MeanestTwo => {
            let mode = method.swap_mode().expect("meanest method");
            if data.n < 2 {
                Err("mean-state estimator needs N ≥ 2".to_string())
            } else if mode == SwapMode::SingleCopy && s == Shots::Finite(1) {
                Err("single-copy U-statistic undefined for S = 1".to_string())
            } else {
                Ok(run_meanest(data, s, mode, &rng)?)
            }
        }
        Method::SvmShadow | Method::MeanestShadow => match s {
            Shots::Exact => Err("shadow methods need a finite copy budget".to_string()),
            Shots::Finite(_) if method == Method::MeanestShadow && data.n < 2 => {
                Err("mean-state estimator needs N ≥ 2".to_string())
            }
            Shots::Finite(total) => Ok(if method == Method::SvmShadow {
                run_svm_shadow(data, total, &rng, settings)?
            } else {
                run_meanest_shadow(data, total, &rng)?
            }),
        },
    };
    Ok(outcome.map(|o| {
        let m = data.tests.len() as f64;
        let p = o.correct as f64 / m;
        CellResult {
            row: GridRow {
                d: data.d,
                n: data.n,
                s,
                method,
                trial_seed: seed,
                success_rate: p,
                stderr: (p * (1.0 - p) / m).sqrt(),
                tie_count: o.ties,
                swap_tests: o.cost.swap_tests,
                state_copies: o.cost.state_copies,
            },
            trial,
            cost: o.cost,
        }
    }))
}

/// One grid cell: samples `2N` training and `M` test states, trains
/// `method`, classifies the test states. `Ok(Err(reason))` for an
/// inapplicable combination.
pub fn run_cell(
    d: usize,
    n: usize,
    s: Shots,
    method: Method,
    trial: usize,
    settings: &CellSettings,
) -> Result<std::result::Result<CellResult, String>> {
    if settings.test_count == 0 {
        return Err(Error::Config("test_count must be at least 1".into()));
    }
    let data = TrialData::sample(settings.base_seed, d, n, trial, settings.test_count)?;
    run_on_data(&data, s, method, trial, settings)
}

type CellKey = (usize, usize, Shots, Method, usize);

fn key_of(r: &CellResult) -> CellKey {
    (r.row.d, r.row.n, r.row.s, r.row.method, r.trial)
}

fn run_trial_data(
    cfg: &ExperimentConfig,
    settings: &CellSettings,
    d: usize,
    n: usize,
    trial: usize,
    parallel: bool,
) -> Result<Vec<std::result::Result<CellResult, SkippedCell>>> {
    let data = TrialData::sample(cfg.base_seed, d, n, trial, cfg.test_count)?;
    let cells: Vec<(Shots, Method)> = cfg.ss.iter().flat_map(|&s| cfg.methods.iter().map(move |&m| (s, m))).collect();
    let run = |&(s, method): &(Shots, Method)| -> Result<std::result::Result<CellResult, SkippedCell>> {
        Ok(run_on_data(&data, s, method, trial, settings)?.map_err(|reason| SkippedCell { d, n, s, method, trial, reason }))
    };
    if parallel {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    }
}

/// Cartesian product of the configured cells, `trials` repetitions each.
/// Rows are sorted by `(d, N, S, method, trial)`.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridResult> {
    run_grid_with_progress(cfg, |_, _| {})
}

/// As [`run_grid`], calling `progress(done, total)` after each `(d, N, trial)`.
pub fn run_grid_with_progress(cfg: &ExperimentConfig, progress: impl Fn(usize, usize) + Sync) -> Result<GridResult> {
    cfg.validate()?;
    let settings = CellSettings::from(cfg);
    let mut groups: Vec<(usize, usize, usize)> = Vec::new();
    for &d in &cfg.dims {
        for &n in &cfg.ns {
            for trial in 0..cfg.trials {
                groups.push((d, n, trial));
            }
        }
    }
    groups.sort_unstable();
    groups.dedup();
    let total = groups.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let step = |&(d, n, trial): &(usize, usize, usize), parallel: bool| {
        let out = run_trial_data(cfg, &settings, d, n, trial, parallel);
        progress(done.fetch_add(1, std::sync::atomic::Ordering::SeqCst) + 1, total);
        out
    };
    let (small, large): (Vec<_>, Vec<_>) = groups.iter().partition(|g| 2 * g.1 <= PARALLEL_MAX_TRAIN);
    let mut outcomes: Vec<std::result::Result<CellResult, SkippedCell>> = Vec::new();
    for batch in small.par_iter().map(|g| step(g, true)).collect::<Result<Vec<_>>>()? {
        outcomes.extend(batch);
    }
    for g in &large {
        outcomes.extend(step(g, false)?);
    }
    let mut results: BTreeMap<CellKey, CellResult> = BTreeMap::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => {
                results.insert(key_of(&r), r);
            }
            Err(s) => skipped.push(s),
        }
    }
    skipped.sort_by_key(|s| (s.d, s.n, s.s, s.method, s.trial));
    let (rows, costs) = results.into_values().map(|r| (r.row, r.cost)).unzip();
    Ok(GridResult { rows, costs, skipped })
}

/// Analytic swap-test count of a cell.
pub fn analytic_swap_tests(method: Method, n: usize, s: Shots, test_count: usize) -> u64 {
    let s = s.tests();
    let (n, m) = (n as u64, test_count as u64);
    match method {
        Method::SvmSwap => s * (2 * n) * (2 * n - 1) / 2 + m * 2 * n * s,
        Method::MeanestSingle | Method::MeanestTwo => 2 * s * n * (n - 1) / 2 + m * 2 * s * n,
        Method::SvmExact | Method::SvmShadow | Method::MeanestShadow => 0,
    }
}
