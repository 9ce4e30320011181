//! Simulation of shot- and sample-limited learning of separable versus
//! maximally entangled bipartite pure states.
//!
//! Stochastic pipelines (swap-test kernels, SVMs, mean-state estimators,
//! classical shadows) sit next to exact oracles built from the twirling
//! superoperator, so every estimator can be audited against a closed form.

pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod meanest;
pub mod measurement;
pub mod oracle;
pub mod rng;
pub mod shadows;
pub mod svm;
pub mod tolerance;

pub use error::{Error, Result};
pub use hilbert::{haar_unitary, overlap, reduced_purity, sample_state, PureState, StateClass, Subsystem, UnitaryMatrix, C64};
pub use rng::RngStream;
