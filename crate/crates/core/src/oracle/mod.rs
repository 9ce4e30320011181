//! Exact closed-form quantities: twirling, average states, `Δ` overlaps,
//! optimal observables, bounds and optimal-measurement baselines.

mod dense;
pub mod observable;
pub mod perm;
pub mod states;
pub mod twirl;

pub use dense::DenseOperator;
pub use observable::{b2_observable, mean_state_observable, optimal_observable, swap_operator, SwapObservable};
pub use perm::{cycle_count, perm_gram, permutation_operator, Permutation};
pub use states::{
    average_state, average_state_overlap, average_state_via_twirl, avg_trace_distance, avg_trace_distance_dense, b2_class_mean,
    exact_delta, generalization_bound, generalization_bound_dense, representer_observable, representer_params,
    swap_success_probability, sym_projector, RepresenterParams, DENSE_TWO_COPY_MAX_D,
};
pub use twirl::{pseudo_inverse_symmetric, twirl, twirl_local, PermCombo};
