use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{Shots, SwapMode};
use crate::svm::SvmParams;

/// Largest `d` run without `long_running`.
pub const DESK_MAX_D: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SvmSwap,
    SvmExact,
    MeanestSingle,
    MeanestTwo,
    SvmShadow,
    MeanestShadow,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::SvmSwap, Method::SvmExact, Method::MeanestSingle, Method::MeanestTwo, Method::SvmShadow, Method::MeanestShadow];

    pub fn name(self) -> &'static str {
        match self {
            Method::SvmSwap => "svm_swap",
            Method::SvmExact => "svm_exact",
            Method::MeanestSingle => "meanest_single",
            Method::MeanestTwo => "meanest_two",
            Method::SvmShadow => "svm_shadow",
            Method::MeanestShadow => "meanest_shadow",
        }
    }

    /// Stable numeric id for seed derivation.
    pub fn id(self) -> u64 {
        self as u64
    }

    pub fn is_svm(self) -> bool {
        matches!(self, Method::SvmSwap | Method::SvmExact | Method::SvmShadow)
    }

    pub fn swap_mode(self) -> Option<SwapMode> {
        match self {
            Method::MeanestSingle => Some(SwapMode::SingleCopy),
            Method::MeanestTwo => Some(SwapMode::TwoCopy),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub svg_dir: Option<PathBuf>,
}

fn default_threshold() -> f64 {
    0.99
}
fn default_test_count() -> usize {
    200
}
fn default_trials() -> usize {
    3
}
fn default_power() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    #[serde(rename = "Ss")]
    pub ss: Vec<Shots>,
    pub methods: Vec<Method>,
    #[serde(default = "default_test_count")]
    pub test_count: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    /// Kernel `K_c = F^c`.
    #[serde(default = "default_power")]
    pub kernel_power: u32,
    #[serde(default)]
    pub svm: SvmParams,
    /// Permits `d > 8`.
    #[serde(default)]
    pub long_running: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 4, 8],
            ns: (4..=9).map(|k| 1usize << k).collect(),
            ss: (4..=14).step_by(2).map(|k| Shots::Finite(1 << k)).collect(),
            methods: vec![Method::SvmSwap, Method::SvmExact, Method::MeanestSingle],
            test_count: default_test_count(),
            trials: default_trials(),
            base_seed: 0,
            success_threshold: default_threshold(),
            kernel_power: default_power(),
            svm: SvmParams::default(),
            long_running: false,
            output: OutputPaths::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.dims.is_empty() || self.ns.is_empty() || self.ss.is_empty() || self.methods.is_empty() {
            return bad("dims, Ns, Ss and methods must be non-empty");
        }
        if self.test_count == 0 {
            return bad("test_count must be at least 1");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(self.success_threshold > 0.5 && self.success_threshold <= 1.0) {
            return bad("success_threshold must lie in (0.5, 1]");
        }
        if self.kernel_power == 0 {
            return bad("kernel_power must be at least 1");
        }
        if self.dims.iter().any(|&d| d < 2) {
            return bad("every d must be at least 2");
        }
        if !self.long_running && self.dims.iter().any(|&d| d > DESK_MAX_D) {
            return bad("d > 8 is long-running; set \"long_running\": true");
        }
        if self.ns.contains(&0) {
            return bad("every N must be at least 1");
        }
        if !(self.svm.c > 0.0 && self.svm.tol > 0.0) {
            return bad("svm.c and svm.tol must be positive");
        }
        Ok(())
    }
}
