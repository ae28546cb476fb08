//! Boundary covariance pairs of quasi-free Hadamard states: the gauge
//! (mixed) family, the pure family with its Bogoliubov conjugations, the
//! distinguished Moretti state, and the verification suite (CCR, positivity,
//! frequency-sector decay, purity).

mod pair;
mod verify;

pub use pair::{
    bogoliubov, build_gauge_covariances, build_gauge_covariances_unchecked,
    build_pure_covariances, moretti_pair, one_particle_equivalence, one_particle_norm,
    CovariancePair, GaugeGenerators, GeneratorRecord, PurityGenerator, StateError,
};
pub use verify::{
    purity_check, verify_ccr, verify_musc, verify_positivity, MuscReport, PositivityReport,
    PurityReport,
};
