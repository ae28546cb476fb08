//! Klein–Gordon dynamics in the cone interior: Cauchy solver (leapfrog with
//! a spectral oracle on the flat chart), causal propagator, restriction to
//! the cone, symplectic-form checks, two-point pairings, the characteristic
//! trace operator with its regularized inverse, and conformal rescalings.

mod goursat;
mod grid;
pub mod oracles;
mod solver;
mod trace;

pub use goursat::{
    assemble_trace_operator, goursat_solve, BasisConfig, GoursatSolution, SplineBasis,
    TraceOperator,
};
pub use grid::{BulkField, BulkGrid, BulkSource, CauchyData, StorePolicy};
pub use solver::{
    bulk_symplectic_form, causal_propagator, closed_form_on_cone, pair_with_source, pde_residual,
    solve_cauchy, spectral_solve, SolveOptions, SolveStats,
};
pub use trace::{
    bulk_two_point, conformal_transform, restrict_to_cone, verify_monomorphism,
    MonomorphismReport, TwoPointReport,
};

#[derive(Debug, thiserror::Error)]
pub enum BulkError {
    #[error("Courant ratio {0:.3} exceeds 0.5")]
    CourantViolation(f64),
    #[error("discrete energy grew by factor {0:.3e}; evolution unstable")]
    UnstableGrowth(f64),
    #[error("data support (radius {radius:.3}) breaks the domain-of-dependence margin ({margin:.3} < 2Δx)")]
    SupportLeak { radius: f64, margin: f64 },
    #[error("requested point outside the stored space-time region")]
    InterpolationOutOfBounds,
    #[error("no stored slice near t = {0:.4}")]
    MissingSlice(f64),
    #[error("{0} of {1} singular values below cutoff; trace operator rank-deficient")]
    RankDeficient(usize, usize),
    #[error("grids of the two fields differ")]
    GridMismatch,
    #[error("conformal factor not positive on the grid (min {0:.3e})")]
    NonPositiveOmega(f64),
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error(transparent)]
    Boundary(#[from] crate::boundary::BoundaryOpError),
}
