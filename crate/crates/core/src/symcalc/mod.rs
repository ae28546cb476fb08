//! Finite-dimensional operator calculus on the admissible spectral basis,
//! standing in for the product-type pseudodifferential classes of the
//! continuum theory: ± Toeplitz block structure, smoothing (frequency decay)
//! indicators, and hermitian functional calculus.

mod calculus;
mod operator;

pub use calculus::{
    conjugate_by_shift, hermitian_matrix_function, operator_function, smoothing_indicator,
    SmoothingConfig, SmoothingReport,
};
pub use operator::{
    random_windowed_block, random_windowed_operator, BlockDecomposition, BoundaryOperator, Sign,
    SymcalcError,
};
