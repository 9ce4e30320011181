//! Average two-copy states of both classes and the closed-form quantities
//! derived from them.

use serde::{Deserialize, Serialize};

use super::dense::DenseOperator;
use super::observable::swap_operator;
use super::twirl::twirl_local;
use crate::error::{Error, Result};
use crate::hilbert::{reduced_purity, state_to_operator_order, PureState, StateClass, Subsystem};

/// Largest local dimension for which two-copy operators (size `d⁴`) are
/// materialized densely; larger `d` use closed forms only.
pub const DENSE_TWO_COPY_MAX_D: usize = 6;

fn dplus(d: f64) -> f64 {
    d * (d + 1.0) / 2.0
}

fn dminus(d: f64) -> f64 {
    d * (d - 1.0) / 2.0
}

/// `P± = (1 ± S)/2` on `C^d ⊗ C^d`.
pub fn sym_projector(d: usize, sign: f64) -> DenseOperator {
    DenseOperator::identity(d * d).add(&swap_operator(d).scale(sign)).scale(0.5)
}

/// `E[(ρ^y)^{⊗c}]` as a dense operator (`A1 A2 B1 B2` ordering for `c = 2`).
pub fn average_state(class: StateClass, c: usize, d: usize) -> Result<DenseOperator> {
    if d < 2 {
        return Err(Error::invalid("d must be at least 2"));
    }
    match c {
        1 => Ok(DenseOperator::identity(d * d).scale(1.0 / (d * d) as f64)),
        2 => {
            if d > DENSE_TWO_COPY_MAX_D {
                return Err(Error::unsupported(format!(
                    "dense two-copy average state for d = {d} (limit {DENSE_TWO_COPY_MAX_D}); use closed forms"
                )));
            }
            let df = d as f64;
            let pp = sym_projector(d, 1.0);
            let pm = sym_projector(d, -1.0);
            let pppp = pp.kron(&pp);
            Ok(match class {
                StateClass::Separable => pppp.scale(1.0 / dplus(df).powi(2)),
                StateClass::Entangled => {
                    pppp.scale(1.0 / dplus(df)).add(&pm.kron(&pm).scale(1.0 / dminus(df))).scale(1.0 / (df * df))
                }
            })
        }
        _ => Err(Error::unsupported(format!("average state for c = {c} copies"))),
    }
}

/// Average two-copy state obtained by twirling the reference state with
/// independent local unitaries, an independent route to [`average_state`].
pub fn average_state_via_twirl(class: StateClass, d: usize) -> Result<DenseOperator> {
    if d > 4 {
        return Err(Error::unsupported("twirl route limited to d ≤ 4"));
    }
    let reference = match class {
        StateClass::Separable => PureState::basis(d, 0, 0)?,
        StateClass::Entangled => PureState::phi_plus(d)?,
    };
    let v = state_to_operator_order(&reference.tensor_square(), d);
    let t = twirl_local(&DenseOperator::projector(&v), 2, d)?;
    Ok(t.materialize())
}

/// `Δ_{yy'} = Tr[ρ̄^y_(2) ρ̄^{y'}_(2)]`.
pub fn exact_delta(y: StateClass, y2: StateClass, d: usize) -> f64 {
    let d = d as f64;
    match (y, y2) {
        (StateClass::Separable, StateClass::Separable) => 4.0 / (d * d * (d + 1.0).powi(2)),
        (StateClass::Entangled, StateClass::Entangled) => 2.0 / d.powi(4),
        _ => 2.0 / (d.powi(3) * (d + 1.0)),
    }
}

/// `Tr[ρ̄^y_(2) B_(2)] = ±(Δ++ + Δ−− − 2Δ+−)`.
pub fn b2_class_mean(class: StateClass, d: usize) -> f64 {
    let mu = exact_delta(StateClass::Separable, StateClass::Separable, d)
        + exact_delta(StateClass::Entangled, StateClass::Entangled, d)
        - 2.0 * exact_delta(StateClass::Separable, StateClass::Entangled, d);
    class.sign() * mu
}

/// `Tr[(|ψ⟩⟨ψ|)^{⊗2} ρ̄^class_(2)]` for a pure state, from its reduced purity.
pub fn average_state_overlap(class: StateClass, s: &PureState) -> f64 {
    let d = s.local_dim() as f64;
    let pa = reduced_purity(s, Subsystem::A);
    let pb = reduced_purity(s, Subsystem::B);
    match class {
        StateClass::Separable => (2.0 + pa + pb) / (d * d * (d + 1.0).powi(2)),
        StateClass::Entangled => 2.0 / (d * d * (d * d - 1.0)) - (pa + pb) / (d.powi(3) * (d * d - 1.0)),
    }
}

/// `(Tr √ρ̄_c)²` with `ρ̄_c` the class-balanced average of `c`-copy states.
pub fn generalization_bound(c: usize, d: usize) -> Result<f64> {
    let df = d as f64;
    match c {
        1 => Ok(df * df),
        2 => {
            let dm = dminus(df);
            let dp = dplus(df);
            let tr_sqrt =
                dm * dm / (df.powi(3) * (df - 1.0)).sqrt() + (3.0 * df + 1.0).sqrt() / (df + 1.0) * dp * dp / df.powi(3).sqrt();
            Ok(tr_sqrt * tr_sqrt)
        }
        _ => Err(Error::unsupported(format!("generalization bound for c = {c}"))),
    }
}

/// Dense eigenvalue evaluation of [`generalization_bound`] for `c = 2`.
pub fn generalization_bound_dense(d: usize) -> Result<f64> {
    let avg = average_state(StateClass::Separable, 2, d)?.add(&average_state(StateClass::Entangled, 2, d)?).scale(0.5);
    let ev = avg.eigenvalues_hermitian();
    // Round-off on the null space would otherwise contribute ~1e-8 each.
    let cutoff = 1e-12 * ev.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let tr: f64 = ev.iter().filter(|&&x| x > cutoff).map(|&x| x.sqrt()).sum();
    Ok(tr * tr)
}

/// Success probability of the SWAP measurement on the `A` copies,
/// `3/4 − 1/(4d)`; equals the Helstrom optimum for the average states.
pub fn swap_success_probability(d: usize) -> f64 {
    0.75 - 0.25 / d as f64
}

/// `‖ρ̄+_(2) − ρ̄−_(2)‖₁ = 1 − 1/d`.
pub fn avg_trace_distance(d: usize) -> f64 {
    1.0 - 1.0 / d as f64
}

pub fn avg_trace_distance_dense(d: usize) -> Result<f64> {
    let diff = average_state(StateClass::Separable, 2, d)?.sub(&average_state(StateClass::Entangled, 2, d)?);
    Ok(diff.trace_norm_hermitian())
}

/// Coefficients for which `α+ ρ̄+ − α− ρ̄−` plus an identity shift reproduces
/// the exact classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresenterParams {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta: f64,
}

pub fn representer_params(d: usize) -> RepresenterParams {
    let d = d as f64;
    RepresenterParams { alpha_plus: d + 1.0, alpha_minus: d - 1.0, beta: (d + 1.0) / d }
}

/// `d⁴/(d−1) · (α+ ρ̄+ − α− ρ̄− − β d⁻³ 1)`, which equals `A*` exactly.
///
/// `α+ ρ̄+ − α− ρ̄− = (S_A + S_B)/d³`: the `1` and `S_AB` parts cancel.
pub fn representer_observable(d: usize) -> Result<DenseOperator> {
    let p = representer_params(d);
    let df = d as f64;
    let sep = average_state(StateClass::Separable, 2, d)?;
    let ent = average_state(StateClass::Entangled, 2, d)?;
    let dim = sep.dim();
    Ok(sep
        .scale(p.alpha_plus)
        .sub(&ent.scale(p.alpha_minus))
        .sub(&DenseOperator::identity(dim).scale(p.beta / df.powi(3)))
        .scale(df.powi(4) / (df - 1.0)))
}
