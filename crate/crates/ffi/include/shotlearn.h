#ifndef SHOTLEARN_H
#define SHOTLEARN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define SL_OK 0

#define SL_INVALID_ARGUMENT 1

#define SL_UNSUPPORTED 2

/*
 The solver hit its iteration cap; the best iterate is still returned.
 */
#define SL_NON_CONVERGENCE 3

#define SL_NULL_POINTER 4

#define SL_CONFIG 5

/*
 A Rust panic was caught at the boundary.
 */
#define SL_INTERNAL 6

/*
 Mode argument of the mean-state functions.
 */
#define SL_MODE_SINGLE_COPY 0

#define SL_MODE_TWO_COPY 1

/*
 A trained mean-state classifier.
 */
typedef struct SlMeanModel SlMeanModel;

/*
 A bipartite pure state.
 */
typedef struct SlState SlState;

/*
 A trained SVM.
 */
typedef struct SlSvmModel SlSvmModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread; empty after a success.
 The pointer stays valid until the next call on this thread.
 */
const char *sl_last_error_message(void);

/*
 Samples a state of class `label` (+1 separable, -1 entangled) with local
 dimension `d` from the stream `(seed, stream)`.

 # Safety
 `out` must be a valid pointer.
 */
int32_t sl_state_sample(int32_t label,
                        uintptr_t d,
                        uint64_t seed,
                        uint64_t stream,
                        SlState **out_state);

/*
 Builds a state from `d*d` amplitudes in `A ⊗ B` row-major order.

 # Safety
 `re` and `im` must point to `d*d` doubles; `out` must be valid.
 */
int32_t sl_state_from_amplitudes(const double *re,
                                 const double *im,
                                 uintptr_t d,
                                 SlState **out_state);

/*
 # Safety
 `state` must come from this library or be null.
 */
void sl_state_free(SlState *state);

/*
 `|⟨a|b⟩|²`.

 # Safety
 All pointers must be valid.
 */
int32_t sl_state_overlap(const SlState *a, const SlState *b, double *out_value);

/*
 Purity of the reduced state on subsystem 0 (A) or 1 (B).

 # Safety
 All pointers must be valid.
 */
int32_t sl_state_reduced_purity(const SlState *state, int32_t subsystem, double *out_value);

/*
 Overlap of the two-copy average states of classes `y` and `y2`.

 # Safety
 `out_value` must be valid.
 */
int32_t sl_exact_delta(int32_t y, int32_t y2, uintptr_t d, double *out_value);

/*
 Class mean of the mean-state observable.

 # Safety
 `out_value` must be valid.
 */
int32_t sl_b2_class_mean(int32_t y, uintptr_t d, double *out_value);

/*
 `(Tr √ρ̄_c)²` for `c ∈ {1, 2}` copies.

 # Safety
 `out_value` must be valid.
 */
int32_t sl_generalization_bound(uintptr_t c, uintptr_t d, double *out_value);

/*
 Success probability of the SWAP measurement on subsystem A.

 # Safety
 `out_value` must be valid.
 */
int32_t sl_swap_success_probability(uintptr_t d, double *out_value);

/*
 Solves the SVM dual for a row-major `n × n` Gram matrix and ±1 labels.
 On `SL_NON_CONVERGENCE` the best iterate is still written to `out`.

 # Safety
 `gram` must point to `n*n` doubles, `labels` to `n` bytes, `out` valid.
 */
int32_t sl_svm_solve(const double *gram,
                     const int8_t *labels,
                     uintptr_t n,
                     double c,
                     double tol,
                     SlSvmModel **out_model);

/*
 `Σ α_n y_n k_row[n] + β`.

 # Safety
 `k_row` must point to `n` doubles; other pointers valid.
 */
int32_t sl_svm_decision_value(const SlSvmModel *model,
                              const double *k_row,
                              uintptr_t n,
                              double *out_value);

/*
 Copies the `n` dual coefficients and β of a model.

 # Safety
 `alphas` must have room for `n` doubles; other pointers valid.
 */
int32_t sl_svm_coefficients(const SlSvmModel *model, double *alphas, uintptr_t n, double *beta);

/*
 # Safety
 `model` must come from this library or be null.
 */
void sl_svm_free(SlSvmModel *model);

/*
 Trains the mean-state classifier on `n` states per class. `shots = 0`
 means exact expectation values.

 # Safety
 `sep` and `ent` must each point to `n` valid state handles.
 */
int32_t sl_meanest_train(const SlState *const *sep,
                         const SlState *const *ent,
                         uintptr_t n,
                         uint64_t shots,
                         int32_t mode,
                         uint64_t seed,
                         SlMeanModel **out_model);

/*
 `B_obs` of one test state; its sign is the predicted class.

 # Safety
 All pointers must be valid.
 */
int32_t sl_meanest_score(const SlMeanModel *model,
                         const SlState *test,
                         uint64_t shots,
                         uint64_t seed,
                         double *out_value);

/*
 Training estimates `Δ̂++` and `Δ̂−−`.

 # Safety
 All pointers must be valid.
 */
int32_t sl_meanest_deltas(const SlMeanModel *model, double *delta_pp, double *delta_mm);

/*
 # Safety
 `model` must come from this library or be null.
 */
void sl_meanest_free(SlMeanModel *model);

/*
 Runs a grid described by a JSON config and returns its CSV. Release the
 string with `sl_string_free`.

 # Safety
 `config_json` must be a NUL-terminated string; `out_csv` valid.
 */
int32_t sl_run_grid_json(const char *config_json, char **out_csv);

/*
 # Safety
 `s` must come from this library or be null.
 */
void sl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHOTLEARN_H */
