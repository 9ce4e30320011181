//! C ABI over `shotlearn`.
//!
//! Every fallible function returns a status code and writes results through
//! out-pointers. Objects cross the boundary as opaque handles that the caller
//! releases with the matching `*_free`. After a non-zero status,
//! `sl_last_error_message` describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use shotlearn::experiment::{run_grid, to_csv_string, ExperimentConfig};
use shotlearn::meanest::{train, TrainedMeanClassifier};
use shotlearn::measurement::{Shots, SwapMode};
use shotlearn::oracle::{b2_class_mean, exact_delta, generalization_bound, swap_success_probability};
use shotlearn::svm::{solve_dual_matrix, SvmModel, SvmParams};
use shotlearn::{Error, PureState, RngStream, StateClass, Subsystem, C64};

pub const SL_OK: i32 = 0;
pub const SL_INVALID_ARGUMENT: i32 = 1;
pub const SL_UNSUPPORTED: i32 = 2;
/// The solver hit its iteration cap; the best iterate is still returned.
pub const SL_NON_CONVERGENCE: i32 = 3;
pub const SL_NULL_POINTER: i32 = 4;
pub const SL_CONFIG: i32 = 5;
/// A Rust panic was caught at the boundary.
pub const SL_INTERNAL: i32 = 6;

/// Mode argument of the mean-state functions.
pub const SL_MODE_SINGLE_COPY: i32 = 0;
pub const SL_MODE_TWO_COPY: i32 = 1;

/// A bipartite pure state.
pub struct SlState(PureState);

/// A trained SVM.
pub struct SlSvmModel(SvmModel);

/// A trained mean-state classifier.
pub struct SlMeanModel(TrainedMeanClassifier);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code_of(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => SL_INVALID_ARGUMENT,
        Error::Unsupported(_) => SL_UNSUPPORTED,
        Error::NonConvergence { .. } => SL_NON_CONVERGENCE,
        Error::Config(_) | Error::Json(_) => SL_CONFIG,
        Error::Io(_) => SL_INTERNAL,
    }
}

struct Fail(i32, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(code_of(&e), e.to_string())
    }
}

fn null() -> Fail {
    Fail(SL_NULL_POINTER, "null pointer argument".into())
}

fn invalid(msg: &str) -> Fail {
    Fail(SL_INVALID_ARGUMENT, msg.into())
}

fn guard(f: impl FnOnce() -> Result<i32, Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(code)) => {
            if code == SL_OK {
                set_error("");
            }
            code
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            SL_INTERNAL
        }
    }
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

fn class_of(label: i32) -> Result<StateClass, Fail> {
    StateClass::from_label(label as i8)
        .filter(|_| label == 1 || label == -1)
        .ok_or_else(|| invalid("class label must be +1 (separable) or -1 (entangled)"))
}

fn shots_of(s: u64) -> Shots {
    if s == 0 {
        Shots::Exact
    } else {
        Shots::Finite(s)
    }
}

fn mode_of(m: i32) -> Result<SwapMode, Fail> {
    match m {
        SL_MODE_SINGLE_COPY => Ok(SwapMode::SingleCopy),
        SL_MODE_TWO_COPY => Ok(SwapMode::TwoCopy),
        _ => Err(invalid("unknown swap-test mode")),
    }
}

/// Message of the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Samples a state of class `label` (+1 separable, -1 entangled) with local
/// dimension `d` from the stream `(seed, stream)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_state_sample(label: i32, d: usize, seed: u64, stream: u64, out_state: *mut *mut SlState) -> i32 {
    guard(|| {
        let o = out(out_state)?;
        let s = shotlearn::sample_state(class_of(label)?, d, &mut RngStream::new(seed, stream))?;
        *o = Box::into_raw(Box::new(SlState(s)));
        Ok(SL_OK)
    })
}

/// Builds a state from `d*d` amplitudes in `A ⊗ B` row-major order.
///
/// # Safety
/// `re` and `im` must point to `d*d` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_state_from_amplitudes(re: *const f64, im: *const f64, d: usize, out_state: *mut *mut SlState) -> i32 {
    guard(|| {
        let o = out(out_state)?;
        if re.is_null() || im.is_null() {
            return Err(null());
        }
        let n = d.checked_mul(d).ok_or_else(|| invalid("dimension overflow"))?;
        let re = std::slice::from_raw_parts(re, n);
        let im = std::slice::from_raw_parts(im, n);
        let amps = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        *o = Box::into_raw(Box::new(SlState(PureState::new(amps, d, None)?)));
        Ok(SL_OK)
    })
}

/// # Safety
/// `state` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sl_state_free(state: *mut SlState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// `|⟨a|b⟩|²`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_state_overlap(a: *const SlState, b: *const SlState, out_value: *mut f64) -> i32 {
    guard(|| {
        *out(out_value)? = shotlearn::overlap(&get(a)?.0, &get(b)?.0)?;
        Ok(SL_OK)
    })
}

/// Purity of the reduced state on subsystem 0 (A) or 1 (B).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_state_reduced_purity(state: *const SlState, subsystem: i32, out_value: *mut f64) -> i32 {
    guard(|| {
        let sub = match subsystem {
            0 => Subsystem::A,
            1 => Subsystem::B,
            _ => return Err(invalid("subsystem must be 0 (A) or 1 (B)")),
        };
        *out(out_value)? = shotlearn::reduced_purity(&get(state)?.0, sub);
        Ok(SL_OK)
    })
}

/// Overlap of the two-copy average states of classes `y` and `y2`.
///
/// # Safety
/// `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_exact_delta(y: i32, y2: i32, d: usize, out_value: *mut f64) -> i32 {
    guard(|| {
        if d < 2 {
            return Err(invalid("d must be at least 2"));
        }
        *out(out_value)? = exact_delta(class_of(y)?, class_of(y2)?, d);
        Ok(SL_OK)
    })
}

/// Class mean of the mean-state observable.
///
/// # Safety
/// `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_b2_class_mean(y: i32, d: usize, out_value: *mut f64) -> i32 {
    guard(|| {
        if d < 2 {
            return Err(invalid("d must be at least 2"));
        }
        *out(out_value)? = b2_class_mean(class_of(y)?, d);
        Ok(SL_OK)
    })
}

/// `(Tr √ρ̄_c)²` for `c ∈ {1, 2}` copies.
///
/// # Safety
/// `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_generalization_bound(c: usize, d: usize, out_value: *mut f64) -> i32 {
    guard(|| {
        if d < 2 {
            return Err(invalid("d must be at least 2"));
        }
        *out(out_value)? = generalization_bound(c, d)?;
        Ok(SL_OK)
    })
}

/// Success probability of the SWAP measurement on subsystem A.
///
/// # Safety
/// `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_swap_success_probability(d: usize, out_value: *mut f64) -> i32 {
    guard(|| {
        if d < 2 {
            return Err(invalid("d must be at least 2"));
        }
        *out(out_value)? = swap_success_probability(d);
        Ok(SL_OK)
    })
}

/// Solves the SVM dual for a row-major `n × n` Gram matrix and ±1 labels.
/// On `SL_NON_CONVERGENCE` the best iterate is still written to `out`.
///
/// # Safety
/// `gram` must point to `n*n` doubles, `labels` to `n` bytes, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_svm_solve(
    gram: *const f64,
    labels: *const i8,
    n: usize,
    c: f64,
    tol: f64,
    out_model: *mut *mut SlSvmModel,
) -> i32 {
    guard(|| {
        let o = out(out_model)?;
        if gram.is_null() || labels.is_null() {
            return Err(null());
        }
        let len = n.checked_mul(n).ok_or_else(|| invalid("size overflow"))?;
        let k = DMatrix::from_row_slice(n, n, std::slice::from_raw_parts(gram, len));
        let y = std::slice::from_raw_parts(labels, n);
        let params = SvmParams { c, tol, ..Default::default() };
        match solve_dual_matrix(&k, y, &params) {
            Ok(m) => {
                *o = Box::into_raw(Box::new(SlSvmModel(m)));
                Ok(SL_OK)
            }
            Err(Error::NonConvergence { best, iterations, gap }) => {
                *o = Box::into_raw(Box::new(SlSvmModel(*best)));
                set_error(&format!("no convergence after {iterations} updates (gap {gap:.3e})"));
                Ok(SL_NON_CONVERGENCE)
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// `Σ α_n y_n k_row[n] + β`.
///
/// # Safety
/// `k_row` must point to `n` doubles; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn sl_svm_decision_value(
    model: *const SlSvmModel,
    k_row: *const f64,
    n: usize,
    out_value: *mut f64,
) -> i32 {
    guard(|| {
        let m = get(model)?;
        if k_row.is_null() {
            return Err(null());
        }
        *out(out_value)? = m.0.decision_value(std::slice::from_raw_parts(k_row, n))?;
        Ok(SL_OK)
    })
}

/// Copies the `n` dual coefficients and β of a model.
///
/// # Safety
/// `alphas` must have room for `n` doubles; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn sl_svm_coefficients(model: *const SlSvmModel, alphas: *mut f64, n: usize, beta: *mut f64) -> i32 {
    guard(|| {
        let m = get(model)?;
        if alphas.is_null() {
            return Err(null());
        }
        if n != m.0.alphas.len() {
            return Err(invalid("buffer length does not match the model"));
        }
        std::slice::from_raw_parts_mut(alphas, n).copy_from_slice(&m.0.alphas);
        *out(beta)? = m.0.beta;
        Ok(SL_OK)
    })
}

/// # Safety
/// `model` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sl_svm_free(model: *mut SlSvmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn states(p: *const *const SlState, n: usize) -> Result<Vec<PureState>, Fail> {
    if p.is_null() {
        return Err(null());
    }
    std::slice::from_raw_parts(p, n).iter().map(|&s| get(s).map(|s| s.0.clone())).collect()
}

/// Trains the mean-state classifier on `n` states per class. `shots = 0`
/// means exact expectation values.
///
/// # Safety
/// `sep` and `ent` must each point to `n` valid state handles.
#[no_mangle]
pub unsafe extern "C" fn sl_meanest_train(
    sep: *const *const SlState,
    ent: *const *const SlState,
    n: usize,
    shots: u64,
    mode: i32,
    seed: u64,
    out_model: *mut *mut SlMeanModel,
) -> i32 {
    guard(|| {
        let o = out(out_model)?;
        let m = train(&states(sep, n)?, &states(ent, n)?, shots_of(shots), mode_of(mode)?, &RngStream::new(seed, 0))?;
        *o = Box::into_raw(Box::new(SlMeanModel(m)));
        Ok(SL_OK)
    })
}

/// `B_obs` of one test state; its sign is the predicted class.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_meanest_score(
    model: *const SlMeanModel,
    test: *const SlState,
    shots: u64,
    seed: u64,
    out_value: *mut f64,
) -> i32 {
    guard(|| {
        let m = get(model)?;
        let s = m.0.score(&get(test)?.0, shots_of(shots), &mut RngStream::new(seed, 1))?;
        *out(out_value)? = s.value;
        Ok(SL_OK)
    })
}

/// Training estimates `Δ̂++` and `Δ̂−−`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_meanest_deltas(model: *const SlMeanModel, delta_pp: *mut f64, delta_mm: *mut f64) -> i32 {
    guard(|| {
        let m = get(model)?;
        *out(delta_pp)? = m.0.delta_pp_hat;
        *out(delta_mm)? = m.0.delta_mm_hat;
        Ok(SL_OK)
    })
}

/// # Safety
/// `model` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sl_meanest_free(model: *mut SlMeanModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs a grid described by a JSON config and returns its CSV. Release the
/// string with `sl_string_free`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_csv` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_run_grid_json(config_json: *const c_char, out_csv: *mut *mut c_char) -> i32 {
    guard(|| {
        let o = out(out_csv)?;
        *o = ptr::null_mut();
        if config_json.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(config_json).to_str().map_err(|_| Fail(SL_CONFIG, "config is not UTF-8".into()))?;
        let cfg = ExperimentConfig::from_json(text)?;
        let csv = to_csv_string(&run_grid(&cfg)?.rows)?;
        *o = CString::new(csv).map_err(|_| Fail(SL_INTERNAL, "NUL in CSV".into()))?.into_raw();
        Ok(SL_OK)
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
