//! The discretized boundary symplectic space on `C̃ = ℝ × S^{d-1}`.
//!
//! Functions live on a periodic `s`-grid tensored with a spherical-design
//! angular grid (Gauss–Legendre × uniform azimuth for `d = 3`, uniform circle
//! for `d = 2`). The spectral basis is `e^{iσ_k (s - s_min)}/√T ⊗ Y_{ℓm}(θ)`
//! with real orthonormal harmonics, so the spectral ℓ²-norm equals the
//! quadrature `L²`-norm for band-limited data.
//!
//! The discrete Fourier zero mode (`σ = 0`) is excluded from the admissible
//! space used by state constructions: the one-particle norm `‖|D_s|^{1/2}g‖`
//! vanishes on mean modes, so a finite grid must project them out explicitly.

mod function;
mod grid;
mod ops;

pub use function::{BoundaryFunction, Representation};
pub use grid::{AngularMode, BoundaryGrid, GridError};
pub use function::BoundaryFunctionFile;
pub use ops::{
    ds_pairing, hardy_check, sobolev_norm, symplectic_form, weighted_cone_norm, BoundaryOpError,
    HardyProbe, HardyReport, ShiftMap, WeightedNormError,
};
