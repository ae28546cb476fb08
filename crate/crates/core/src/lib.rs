//! Numerical construction of Hadamard states for Klein–Gordon fields from
//! lightcone boundary data.
//!
//! The toolkit is organized around the bulk-to-boundary correspondence for the
//! future lightcone `C` of a base point `p` in a globally hyperbolic chart:
//!
//! * [`geometry`] — spacetime charts, cone defining functions, null
//!   coordinates `(s, θ)` on `C` obtained by integrating the gradient flow of
//!   the defining function, the induced metric `h` and density factor `β`;
//! * [`boundary`] — the discretized boundary symplectic space on
//!   `ℝ × S^{d-1}`: spectral transforms, the symplectic form `σ_C`, the
//!   multipliers `D_s`, `|D_s|^{1/2}`, `π_± = 1_{ℝ±}(D_s)`, Sobolev and
//!   weighted cone norms, and the null-coordinate shift map `U`;
//! * [`symcalc`] — finite-dimensional operator calculus on the spectral
//!   basis: ± Toeplitz blocks, smoothing (frequency-decay) indicators, and
//!   hermitian functional calculus;
//! * [`states`] — covariance pairs `(λ⁺, λ⁻)`: the gauge-invariant family,
//!   the pure family, the Moretti state, Bogoliubov transforms, and the
//!   verification suite (CCR, positivity, frequency decay, purity);
//! * [`bulk`] — Klein–Gordon dynamics in the cone interior: Cauchy solver,
//!   causal propagator, restriction to the cone, symplectic monomorphism,
//!   bulk two-point pairings, the Goursat (characteristic Cauchy) trace
//!   operator with its regularized inverse, and conformal transformations;
//! * [`scenario`] / [`report`] — batch driver configuration and
//!   machine-readable verification reports used by the `lightcone` binary.
//!
//! All randomness flows through explicitly seeded generators and reports are
//! byte-deterministic for a fixed scenario + seed.

pub mod boundary;
pub mod bulk;
pub mod geometry;
pub mod report;
pub mod scenario;
pub mod states;
pub mod symcalc;
pub mod util;

pub use num_complex::Complex64;
