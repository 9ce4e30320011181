use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{sample_state, sample_states, StateClass};
use crate::meanest::train;
use crate::measurement::{Shots, SwapMode};
use crate::rng::{hash_words, RngStream};

const VARIANCE_STREAM: u64 = 0x5641_5249;

fn default_trials() -> usize {
    2000
}

fn default_modes() -> Vec<SwapMode> {
    vec![SwapMode::SingleCopy, SwapMode::TwoCopy]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceConfig {
    pub dims: Vec<usize>,
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    #[serde(rename = "Ss")]
    pub ss: Vec<Shots>,
    #[serde(default = "default_modes")]
    pub modes: Vec<SwapMode>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl VarianceConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: VarianceConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.ns.is_empty() || self.ss.is_empty() || self.modes.is_empty() {
            return Err(Error::Config("dims, Ns, Ss and modes must be non-empty".into()));
        }
        if self.trials < 2 {
            return Err(Error::Config("trials must be at least 2".into()));
        }
        if self.dims.iter().any(|&d| d < 2) || self.ns.iter().any(|&n| n < 2) {
            return Err(Error::Config("need d ≥ 2 and N ≥ 2".into()));
        }
        if self.modes.contains(&SwapMode::SingleCopy) && self.ss.contains(&Shots::Finite(1)) {
            return Err(Error::Config("single-copy mode needs S ≥ 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Training estimate `Δ̂++`.
    Train,
    /// Test-stage estimate `Δ̂+^y` of a separable test state.
    Test,
    /// `B_obs` of a separable test state.
    Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
}

impl Moments {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { mean, var }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub d: usize,
    pub n: usize,
    pub s: Shots,
    pub mode: SwapMode,
    pub trials: usize,
    pub train: Moments,
    pub test: Moments,
    pub score: Moments,
}

impl VarianceRow {
    pub fn get(&self, q: Quantity) -> Moments {
        match q {
            Quantity::Train => self.train,
            Quantity::Test => self.test,
            Quantity::Score => self.score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeAxis {
    S,
    N,
}

/// Least-squares slope of `log Var` against `log S` or `log N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub d: usize,
    pub mode: SwapMode,
    pub quantity: Quantity,
    pub axis: SlopeAxis,
    /// Value of the other variable, held fixed.
    pub fixed: u64,
    pub points: usize,
    pub slope: f64,
    /// Half-width of the 95% interval.
    pub ci: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub rows: Vec<VarianceRow>,
    pub fits: Vec<SlopeFit>,
}

impl VarianceReport {
    pub fn fit(&self, d: usize, mode: SwapMode, quantity: Quantity, axis: SlopeAxis, fixed: u64) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.d == d && f.mode == mode && f.quantity == quantity && f.axis == axis && f.fixed == fixed)
    }

    pub fn row(&self, d: usize, n: usize, s: Shots, mode: SwapMode) -> Option<&VarianceRow> {
        self.rows.iter().find(|r| r.d == d && r.n == n && r.s == s && r.mode == mode)
    }
}

/// Simulates one `(d, N, S, mode)` point. Trial `t` draws its states from a
/// stream shared across `S` and modes, and its shots from its own stream.
pub fn variance_point(d: usize, n: usize, s: Shots, mode: SwapMode, trials: usize, base_seed: u64) -> Result<VarianceRow> {
    let states_seed = hash_words(&[base_seed, d as u64, n as u64]);
    let shots_seed = hash_words(&[base_seed, d as u64, n as u64, s.key(), mode as u64]);
    let samples = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = RngStream::new(states_seed, VARIANCE_STREAM).derive(t as u64);
            let sep = sample_states(StateClass::Separable, d, n, &mut r)?;
            let ent = sample_states(StateClass::Entangled, d, n, &mut r)?;
            let test = sample_state(StateClass::Separable, d, &mut r)?;
            let shots_rng = RngStream::new(shots_seed, VARIANCE_STREAM).derive(t as u64);
            let model = train(&sep, &ent, s, mode, &shots_rng.derive(0))?;
            let sc = model.score(&test, s, &mut shots_rng.derive(1))?;
            Ok((model.delta_pp_hat, sc.delta_plus, sc.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |k: usize| -> Vec<f64> {
        samples
            .iter()
            .map(|t| match k {
                0 => t.0,
                1 => t.1,
                _ => t.2,
            })
            .collect()
    };
    Ok(VarianceRow {
        d,
        n,
        s,
        mode,
        trials,
        train: Moments::of(&col(0)),
        test: Moments::of(&col(1)),
        score: Moments::of(&col(2)),
    })
}

/// Slope and 95% half-width of `y` on `x`. The standard error is the larger
/// of the residual estimate and the one implied by the sampling error of
/// each log-variance, `√(2/(T−1))`.
pub fn log_log_slope(x: &[f64], var: &[f64], trials: usize) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = var.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se_resid = if k > 2.0 { (resid / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    let se_param = (2.0 / (trials as f64 - 1.0)).sqrt() / sxx.sqrt();
    (slope, 1.96 * se_resid.max(se_param))
}

pub fn variance_sweep(cfg: &VarianceConfig) -> Result<VarianceReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &d in &cfg.dims {
        for &mode in &cfg.modes {
            for &n in &cfg.ns {
                for &s in &cfg.ss {
                    rows.push(variance_point(d, n, s, mode, cfg.trials, cfg.base_seed)?);
                }
            }
        }
    }
    let mut fits = Vec::new();
    for &d in &cfg.dims {
        for &mode in &cfg.modes {
            for q in [Quantity::Train, Quantity::Test, Quantity::Score] {
                let sel = |f: &dyn Fn(&VarianceRow) -> bool| -> Vec<&VarianceRow> {
                    rows.iter().filter(|r| r.d == d && r.mode == mode && f(r)).collect()
                };
                for &n in &cfg.ns {
                    let pts = sel(&|r: &VarianceRow| r.n == n && r.s != Shots::Exact);
                    if pts.len() >= 2 {
                        let x: Vec<f64> = pts.iter().map(|r| r.s.key() as f64).collect();
                        let v: Vec<f64> = pts.iter().map(|r| r.get(q).var).collect();
                        let (slope, ci) = log_log_slope(&x, &v, cfg.trials);
                        fits.push(SlopeFit {
                            d,
                            mode,
                            quantity: q,
                            axis: SlopeAxis::S,
                            fixed: n as u64,
                            points: pts.len(),
                            slope,
                            ci,
                        });
                    }
                }
                for &s in &cfg.ss {
                    let pts = sel(&|r: &VarianceRow| r.s == s);
                    if pts.len() >= 2 {
                        let x: Vec<f64> = pts.iter().map(|r| r.n as f64).collect();
                        let v: Vec<f64> = pts.iter().map(|r| r.get(q).var).collect();
                        let (slope, ci) = log_log_slope(&x, &v, cfg.trials);
                        fits.push(SlopeFit {
                            d,
                            mode,
                            quantity: q,
                            axis: SlopeAxis::N,
                            fixed: s.key(),
                            points: pts.len(),
                            slope,
                            ci,
                        });
                    }
                }
            }
        }
    }
    Ok(VarianceReport { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_has_exact_slope() {
        let x = [4.0, 8.0, 16.0, 32.0];
        let v: Vec<f64> = x.iter().map(|s: &f64| 3.0 / s).collect();
        let (slope, ci) = log_log_slope(&x, &v, 1_000_000);
        assert!((slope + 1.0).abs() < 1e-12);
        assert!(ci < 0.01);
    }

    #[test]
    fn config_validation() {
        assert!(VarianceConfig::from_json(r#"{"dims":[2],"Ns":[4],"Ss":[4]}"#).is_ok());
        assert!(VarianceConfig::from_json(r#"{"dims":[2],"Ns":[4],"Ss":[1]}"#).is_err());
        assert!(VarianceConfig::from_json(r#"{"dims":[2],"Ns":[1],"Ss":[4]}"#).is_err());
        assert!(VarianceConfig::from_json(r#"{"dims":[2],"Ns":[4],"Ss":[4],"modes":["two_copy"],"trials":1}"#).is_err());
    }

    #[test]
    fn small_sweep_is_deterministic() {
        let cfg = VarianceConfig::from_json(r#"{"dims":[2],"Ns":[4,8],"Ss":[4,8],"modes":["two_copy"],"trials":50}"#).unwrap();
        let a = variance_sweep(&cfg).unwrap();
        let b = variance_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 4);
        assert!(a.fit(2, SwapMode::TwoCopy, Quantity::Train, SlopeAxis::S, 4).is_some());
    }
}
