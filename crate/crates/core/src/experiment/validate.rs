use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hilbert::{sample_state, PureState, StateClass, C64};
use crate::meanest::train;
use crate::measurement::{Shots, SwapMode};
use crate::oracle::{
    average_state, average_state_via_twirl, avg_trace_distance, avg_trace_distance_dense, b2_class_mean, b2_observable,
    exact_delta, generalization_bound, generalization_bound_dense, mean_state_observable, optimal_observable,
    swap_success_probability, sym_projector, twirl, DenseOperator,
};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    /// `tolerance − |value − target|`; negative on failure.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub d: usize,
    pub delta_pp: f64,
    pub delta_mm: f64,
    pub delta_pm: f64,
    pub b_mean: f64,
    pub p_succ: f64,
    pub trace_distance: f64,
    pub generalization_bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub oracle_table: Vec<OracleRow>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: impl Into<String>, value: f64, target: f64, tolerance: f64) {
        let margin = tolerance - (value - target).abs();
        self.checks.push(CheckResult { name: name.into(), value, target, tolerance, margin, passed: margin >= 0.0 });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>3} {:>12} {:>12} {:>12} {:>10} {:>8} {:>8} {:>9}",
            "d", "Δ++", "Δ−−", "Δ+−", "μ", "p_succ", "‖·‖₁", "bound"
        )?;
        for r in &self.oracle_table {
            writeln!(
                f,
                "{:>3} {:>12.6e} {:>12.6e} {:>12.6e} {:>10.4e} {:>8.5} {:>8.5} {:>9.4}",
                r.d, r.delta_pp, r.delta_mm, r.delta_pm, r.b_mean, r.p_succ, r.trace_distance, r.generalization_bound
            )?;
        }
        writeln!(f)?;
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<44} value {:>14.8e} target {:>14.8e} margin {:>10.3e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.target,
                c.margin
            )?;
        }
        Ok(())
    }
}

/// Offsets applied to oracle values before comparison, for exercising
/// failure paths.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Perturbation {
    pub delta_pp: f64,
}

pub fn validate() -> Result<ValidationReport> {
    validate_with(&Perturbation::default())
}

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

pub fn validate_with(p: &Perturbation) -> Result<ValidationReport> {
    use StateClass::{Entangled as Ent, Separable as Sep};
    let mut rep = ValidationReport::default();
    let delta = |y, y2, d| exact_delta(y, y2, d) + if (y, y2) == (Sep, Sep) { p.delta_pp } else { 0.0 };

    for d in [2, 4, 8] {
        rep.oracle_table.push(OracleRow {
            d,
            delta_pp: delta(Sep, Sep, d),
            delta_mm: delta(Ent, Ent, d),
            delta_pm: delta(Sep, Ent, d),
            b_mean: b2_class_mean(Sep, d),
            p_succ: swap_success_probability(d),
            trace_distance: avg_trace_distance(d),
            generalization_bound: generalization_bound(2, d)?,
        });
    }

    for d in [2, 3, 4] {
        let sep = average_state(Sep, 2, d)?;
        let ent = average_state(Ent, 2, d)?;
        for (name, a, b, y, y2) in [("++", &sep, &sep, Sep, Sep), ("−−", &ent, &ent, Ent, Ent), ("+−", &sep, &ent, Sep, Ent)]
        {
            rep.check(format!("Δ{name} dense trace, d={d}"), a.trace_product(b).re, delta(y, y2, d), 1e-10);
        }
        let b = b2_observable(d)?.materialize()?;
        rep.check(format!("Tr[ρ̄+ B] = μ, d={d}"), sep.trace_product(&b).re, b2_class_mean(Sep, d), 1e-10);
        rep.check(format!("Tr[ρ̄− B] = −μ, d={d}"), ent.trace_product(&b).re, b2_class_mean(Ent, d), 1e-10);
        rep.check(format!("bound (Tr√ρ̄)², d={d}"), generalization_bound_dense(d)?, generalization_bound(2, d)?, 1e-8);
        rep.check(format!("‖ρ̄+ − ρ̄−‖₁, d={d}"), avg_trace_distance_dense(d)?, avg_trace_distance(d), 1e-9);
        let p_plus = sym_projector(d, 1.0).kron(&DenseOperator::identity(d * d));
        let p_minus = sym_projector(d, -1.0).kron(&DenseOperator::identity(d * d));
        let succ = 0.5 * (p_plus.trace_product(&sep).re + p_minus.trace_product(&ent).re);
        rep.check(format!("SWAP success on A, d={d}"), succ, swap_success_probability(d), 1e-10);
        let mso = mean_state_observable(d)?.materialize()?;
        let mu = b2_class_mean(Sep, d);
        rep.check(format!("B/μ closed form, d={d}"), mso.max_abs_diff(&b.scale(1.0 / mu)), 0.0, 1e-9);
    }
    rep.check("bound at d=2 (4 decimals)", (generalization_bound(2, 2)? * 1e4).round() / 1e4, 9.9843, 1e-9);

    for d in [2, 3] {
        for class in [Sep, Ent] {
            let diff = average_state(class, 2, d)?.max_abs_diff(&average_state_via_twirl(class, d)?);
            rep.check(format!("twirl route = average state ({class:?}), d={d}"), diff, 0.0, 1e-10);
        }
    }

    let mut rng = RngStream::new(0x7661_6c69, 0);
    for d in [2, 4, 8] {
        let a = optimal_observable(d)?;
        let mut worst = 0.0f64;
        for class in [Sep, Ent] {
            for _ in 0..200 {
                let s = sample_state(class, d, &mut rng)?;
                worst = worst.max((a.expectation_two_copy(&s)? - class.sign()).abs());
            }
        }
        rep.check(format!("Tr[A* ψ⊗ψ] = y, d={d}"), worst, 0.0, 1e-9);
    }

    // Collision probability of a Haar-rotated basis measurement via T².
    let dim = 4;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let a = sample_state(Sep, 2, &mut rng)?;
        let b = sample_state(Ent, 2, &mut rng)?;
        let f = crate::hilbert::overlap(&a, &b)?;
        let t = twirl(&DenseOperator::projector(&kron_vec(a.amplitudes(), b.amplitudes())), 2, dim)?.materialize();
        let collision: C64 = (0..dim).map(|x| t.entries()[(x * dim + x, x * dim + x)]).sum();
        worst = worst.max((collision.re - (1.0 + f) / (dim as f64 + 1.0)).abs());
    }
    rep.check("shadow collision E[q̂] = (1+F)/(D+1), D=4", worst, 0.0, 1e-10);

    // Unbiasedness of the two-copy training estimate.
    let trials = 2000;
    let mut vals = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut r = rng.derive(t as u64);
        let sep: Vec<PureState> = (0..8).map(|_| sample_state(Sep, 2, &mut r)).collect::<Result<_>>()?;
        let ent: Vec<PureState> = (0..8).map(|_| sample_state(Ent, 2, &mut r)).collect::<Result<_>>()?;
        vals.push(train(&sep, &ent, Shots::Finite(8), SwapMode::TwoCopy, &r)?.delta_pp_hat);
    }
    let mean = vals.iter().sum::<f64>() / trials as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
    rep.check("E[Δ̂++] two-copy (4 s.e.), d=2", mean, delta(Sep, Sep, 2), 4.0 * (var / trials as f64).sqrt());

    Ok(rep)
}
