//! Swap tests as exact Bernoulli processes, shot-budgeted kernel estimation
//! and copy/shot accounting.
//!
//! A swap test on states with overlap `F` returns `0` with probability
//! `(1 + F)/2`. Only the outcome law is simulated, not the circuit. The
//! pipelines work with [`SwapCounts`], the number of zeros among `S` shots,
//! which is a sufficient statistic for every estimator used here and is drawn
//! as a single binomial variate.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hilbert::{overlap, overlap_unchecked, PureState};
use crate::rng::RngStream;
use crate::tolerance::TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapMode {
    /// One copy of each state per shot; outcome law `(1 + F)/2`.
    SingleCopy,
    /// Two copies of each state per shot; outcome law `(1 + F²)/2`.
    TwoCopy,
}

impl SwapMode {
    pub fn copies_per_shot(self) -> u64 {
        match self {
            SwapMode::SingleCopy => 2,
            SwapMode::TwoCopy => 4,
        }
    }

    fn effective_overlap(self, f: f64) -> f64 {
        match self {
            SwapMode::SingleCopy => f,
            SwapMode::TwoCopy => f * f,
        }
    }
}

/// Shot budget per estimate. `Exact` uses noiseless expectation values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shots {
    Finite(u64),
    Exact,
}

impl Shots {
    pub fn finite(self) -> Option<u64> {
        match self {
            Shots::Finite(s) => Some(s),
            Shots::Exact => None,
        }
    }

    /// Numeric key used for seeds and sorting (`Exact` maps to `u64::MAX`).
    pub fn key(self) -> u64 {
        self.finite().unwrap_or(u64::MAX)
    }

    /// Swap tests actually performed per estimate.
    pub fn tests(self) -> u64 {
        self.finite().unwrap_or(0)
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Finite(s) => write!(f, "{s}"),
            Shots::Exact => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Shots {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "exact" | "Infinity" => Ok(Shots::Exact),
            other => other.parse::<u64>().map_err(|_| Error::invalid(format!("bad shot count {other:?}"))).and_then(|n| {
                if n == 0 {
                    Err(Error::invalid("shot count must be at least 1"))
                } else {
                    Ok(Shots::Finite(n))
                }
            }),
        }
    }
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Finite(n) => ser.serialize_u64(*n),
            Shots::Exact => ser.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            // Text formats may type `inf` as a float.
            F(f64),
            S(String),
        }
        match Raw::deserialize(de)? {
            Raw::N(0) => Err(serde::de::Error::custom("shot count must be at least 1")),
            Raw::N(n) => Ok(Shots::Finite(n)),
            Raw::F(x) if x == f64::INFINITY => Ok(Shots::Exact),
            Raw::F(x) if x >= 1.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok(Shots::Finite(x as u64)),
            Raw::F(x) => Err(serde::de::Error::custom(format!("bad shot count {x}"))),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Raw outcomes of `S` swap tests.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub outcomes: Vec<u8>,
    /// Overlap the record was generated from (diagnostics only).
    pub fidelity_true: f64,
    pub mode: SwapMode,
    pub copies_consumed: u64,
}

impl ShotRecord {
    pub fn from_outcomes(outcomes: Vec<u8>, mode: SwapMode) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::invalid("a shot record needs at least one outcome"));
        }
        if outcomes.iter().any(|&o| o > 1) {
            return Err(Error::invalid("outcomes must be 0 or 1"));
        }
        let copies_consumed = outcomes.len() as u64 * mode.copies_per_shot();
        Ok(Self { outcomes, fidelity_true: f64::NAN, mode, copies_consumed })
    }

    pub fn shots(&self) -> u64 {
        self.outcomes.len() as u64
    }

    pub fn counts(&self) -> SwapCounts {
        SwapCounts { shots: self.shots(), zeros: self.outcomes.iter().filter(|&&o| o == 0).count() as u64, mode: self.mode }
    }
}

/// Number of `0` outcomes among `shots` swap tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapCounts {
    pub shots: u64,
    pub zeros: u64,
    pub mode: SwapMode,
}

impl SwapCounts {
    /// `Σ_s (−1)^{o_s}`.
    pub fn signed_sum(&self) -> f64 {
        2.0 * self.zeros as f64 - self.shots as f64
    }

    /// `(1/S) Σ_s (−1)^{o_s}`.
    pub fn estimate_overlap(&self) -> f64 {
        self.signed_sum() / self.shots as f64
    }

    /// `(1/(S(S−1))) Σ_{s≠t} (−1)^{o_s + o_t}`, an unbiased estimate of the
    /// squared single-copy overlap.
    pub fn unbiased_square(&self) -> Result<f64> {
        if self.shots < 2 {
            return Err(Error::invalid("unbiased square needs at least 2 shots"));
        }
        let s = self.shots as f64;
        let x = self.signed_sum();
        Ok((x * x - s) / (s * (s - 1.0)))
    }
}

fn check_fidelity(f: f64) -> Result<f64> {
    if !f.is_finite() || !(-TOL.fidelity_range..=1.0 + TOL.fidelity_range).contains(&f) {
        return Err(Error::invalid(format!("fidelity {f} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

fn zero_probability(f: f64, mode: SwapMode) -> f64 {
    (0.5 * (1.0 + mode.effective_overlap(f))).clamp(0.0, 1.0)
}

/// Simulates `shots` swap tests outcome by outcome.
pub fn swap_test(f: f64, shots: u64, mode: SwapMode, rng: &mut RngStream) -> Result<ShotRecord> {
    let f = check_fidelity(f)?;
    if shots == 0 {
        return Err(Error::invalid("at least one shot is required"));
    }
    let p0 = zero_probability(f, mode);
    let outcomes = (0..shots).map(|_| u8::from(!rng.random_bool(p0))).collect();
    Ok(ShotRecord { outcomes, fidelity_true: f, mode, copies_consumed: shots * mode.copies_per_shot() })
}

/// Draws the zero count of `shots` swap tests directly.
pub fn swap_counts(f: f64, shots: u64, mode: SwapMode, rng: &mut RngStream) -> Result<SwapCounts> {
    let f = check_fidelity(f)?;
    if shots == 0 {
        return Err(Error::invalid("at least one shot is required"));
    }
    Ok(draw_counts(f, shots, mode, rng))
}

#[inline]
pub(crate) fn draw_counts(f: f64, shots: u64, mode: SwapMode, rng: &mut RngStream) -> SwapCounts {
    let p0 = zero_probability(f, mode);
    let zeros = Binomial::new(shots, p0).expect("probability in [0, 1]").sample(rng);
    SwapCounts { shots, zeros, mode }
}

pub fn estimate_overlap(r: &ShotRecord) -> f64 {
    let sum: i64 = r.outcomes.iter().map(|&o| if o == 0 { 1 } else { -1 }).sum();
    sum as f64 / r.outcomes.len() as f64
}

/// U-statistic over distinct shot pairs of a single-copy record.
pub fn unbiased_square(r: &ShotRecord) -> Result<f64> {
    if r.mode != SwapMode::SingleCopy {
        return Err(Error::invalid("unbiased square is defined for single-copy records"));
    }
    if r.outcomes.len() < 2 {
        return Err(Error::invalid("unbiased square needs at least 2 shots"));
    }
    let s = r.outcomes.len() as f64;
    let x: f64 = r.outcomes.iter().map(|&o| if o == 0 { 1.0 } else { -1.0 }).sum();
    Ok((x * x - s) / (s * (s - 1.0)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCost {
    pub swap_tests: u64,
    pub state_copies: u64,
}

/// Resource ledger. Totals always equal the sum over phases.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub swap_tests: u64,
    pub state_copies: u64,
    pub per_phase: BTreeMap<String, PhaseCost>,
}

impl CostReport {
    pub fn record(&mut self, phase: &str, swap_tests: u64, state_copies: u64) {
        let entry = self.per_phase.entry(phase.to_string()).or_default();
        entry.swap_tests += swap_tests;
        entry.state_copies += state_copies;
        self.swap_tests += swap_tests;
        self.state_copies += state_copies;
    }

    pub fn merge(&mut self, other: &CostReport) {
        for (phase, c) in &other.per_phase {
            self.record(phase, c.swap_tests, c.state_copies);
        }
    }

    pub fn is_consistent(&self) -> bool {
        let (t, c) = self.per_phase.values().fold((0, 0), |(t, c), p| (t + p.swap_tests, c + p.state_copies));
        t == self.swap_tests && c == self.state_copies
    }
}

pub const PHASE_TRAIN_KERNEL: &str = "train_kernel";
pub const PHASE_TEST_KERNEL: &str = "test_kernel";

/// Gram matrix of (noisy) kernel entries.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    pub gram: DMatrix<f64>,
    pub c: u32,
    pub shots_per_entry: Shots,
    pub cost: CostReport,
}

impl KernelEstimate {
    pub fn exact(gram: DMatrix<f64>, c: u32) -> Self {
        Self { gram, c, shots_per_entry: Shots::Exact, cost: CostReport::default() }
    }

    pub fn n(&self) -> usize {
        self.gram.nrows()
    }
}

#[inline]
fn noisy_power(f: f64, c: u32, shots: Shots, rng: &mut RngStream) -> f64 {
    match shots {
        Shots::Exact => f.powi(c as i32),
        Shots::Finite(s) => draw_counts(f, s, SwapMode::SingleCopy, rng).estimate_overlap().powi(c as i32),
    }
}

/// `(estimate_overlap)^c` from one single-copy swap record of `shots` shots.
/// Biased upward for `c ≥ 2` by the shot variance.
pub fn kernel_entry(a: &PureState, b: &PureState, c: u32, shots: Shots, rng: &mut RngStream) -> Result<f64> {
    let f = overlap(a, b)?;
    if shots == Shots::Finite(0) {
        return Err(Error::invalid("at least one shot is required"));
    }
    Ok(noisy_power(f, c, shots, rng))
}

/// Exact pairwise fidelities `|⟨ψ_i|ψ_j⟩|²`.
pub fn fidelity_matrix(states: &[PureState]) -> Result<DMatrix<f64>> {
    let n = states.len();
    if let Some(first) = states.first() {
        if states.iter().any(|s| s.dim() != first.dim()) {
            return Err(Error::invalid("states have different dimensions"));
        }
    }
    let mut m = DMatrix::from_element(n, n, 1.0);
    // Column-major: fill the strict lower triangle column by column.
    for j in 0..n {
        let col = m.column_mut(j);
        for (i, v) in col.into_iter().enumerate().skip(j + 1) {
            *v = overlap_unchecked(&states[i], &states[j]);
        }
    }
    m.fill_upper_triangle_with_lower_triangle();
    Ok(m)
}

/// Noisy Gram matrix from precomputed symmetric fidelities. Entry `(i, j)`
/// with `i > j` is drawn from `rng.derive(j)`, so the result does not depend
/// on scheduling. Diagonal entries are 1 and cost nothing.
pub fn kernel_matrix_from_fidelities(fid: &DMatrix<f64>, c: u32, shots: Shots, rng: &RngStream) -> KernelEstimate {
    use rayon::prelude::*;
    let n = fid.nrows();
    let mut gram = DMatrix::from_element(n, n, 1.0);
    gram.par_column_iter_mut().enumerate().for_each(|(j, mut col)| {
        let mut col_rng = rng.derive(j as u64);
        let src = fid.column(j);
        for i in (j + 1)..n {
            col[i] = noisy_power(src[i], c, shots, &mut col_rng);
        }
    });
    gram.fill_upper_triangle_with_lower_triangle();
    let mut cost = CostReport::default();
    let pairs = (n * n.saturating_sub(1) / 2) as u64;
    let tests = pairs * shots.tests();
    cost.record(PHASE_TRAIN_KERNEL, tests, tests * SwapMode::SingleCopy.copies_per_shot());
    KernelEstimate { gram, c, shots_per_entry: shots, cost }
}

pub fn kernel_matrix(states: &[PureState], c: u32, shots: Shots, rng: &RngStream) -> Result<KernelEstimate> {
    if shots == Shots::Finite(0) {
        return Err(Error::invalid("at least one shot is required"));
    }
    let fid = fidelity_matrix(states)?;
    Ok(kernel_matrix_from_fidelities(&fid, c, shots, rng))
}

/// Noisy kernel values of one test state against every training state.
pub fn kernel_row(
    test: &PureState,
    train: &[PureState],
    c: u32,
    shots: Shots,
    rng: &mut RngStream,
    cost: &mut CostReport,
) -> Result<Vec<f64>> {
    let row = train.iter().map(|t| kernel_entry(test, t, c, shots, rng)).collect::<Result<Vec<_>>>()?;
    let tests = train.len() as u64 * shots.tests();
    cost.record(PHASE_TEST_KERNEL, tests, tests * SwapMode::SingleCopy.copies_per_shot());
    Ok(row)
}

/// As [`kernel_row`] but from precomputed fidelities.
pub fn kernel_row_from_fidelities(fids: &[f64], c: u32, shots: Shots, rng: &mut RngStream, cost: &mut CostReport) -> Vec<f64> {
    let row = fids.iter().map(|&f| noisy_power(f, c, shots, rng)).collect();
    let tests = fids.len() as u64 * shots.tests();
    cost.record(PHASE_TEST_KERNEL, tests, tests * SwapMode::SingleCopy.copies_per_shot());
    row
}
