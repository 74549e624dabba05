//! Differentially private inference on discrete distributions: uniformity,
//! identity and closeness testing with sigmoid bit releases, private
//! entropy / support-coverage / support-size estimators, k-ary distribution
//! estimation, executable couplings with Hamming-distance verifiers,
//! hypothesis selection under adversarial comparators and local privacy,
//! and private Frank-Wolfe for Ising parameter learning.
//!
//! All randomness flows through explicit [`seed::Stream`] generators derived
//! from a single seed, so every routine is reproducible.

pub mod constants;
pub mod coupling;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod mech;
pub mod optim;
pub mod properties;
pub mod seed;
pub mod select;
pub mod stats;
pub mod testing;

pub use constants::CalibratedConstants;
pub use dist::{
    divergence, hamming, poissonized_sample, project_to_simplex, sample, DiscreteDistribution,
    Divergence, Histogram, Profile, SampleSet,
};
pub use error::{Error, Result};
pub use mech::{
    dp_ratio_audit, laplace_mechanism, randomized_response, rr_debias, sensitivity_exhaustive,
    sigmoid_release, AuditVerdict, PrivacyBudget, SensitivityBound,
};
pub use seed::Stream;
