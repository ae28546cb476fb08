//! Verification suite for covariance pairs: CCR defect, positivity,
//! frequency-sector decay (the microlocal proxy), and purity.

use super::pair::{pure_cplus, CovariancePair, PurityGenerator, StateError};
use crate::symcalc::{
    hermitian_matrix_function, smoothing_indicator, BoundaryOperator, SmoothingConfig,
    SmoothingReport,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative CCR defect `‖λ⁺ − λ⁻ − 2D_s‖ / ‖2D_s‖`.
pub fn verify_ccr(pair: &CovariancePair) -> f64 {
    let two_ds =
        BoundaryOperator::from_s_multiplier(pair.grid.clone(), |s| 2.0 * s).matrix;
    let defect = &pair.lambda_plus.matrix - &pair.lambda_minus.matrix - &two_ds;
    defect.norm() / two_ds.norm()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityReport {
    pub min_eig_plus: f64,
    pub min_eig_minus: f64,
    pub norm_plus: f64,
    pub norm_minus: f64,
    pub pass: bool,
}

/// Smallest eigenvalues of `λ±`; PASS iff both are ≥ −10⁻¹⁰‖λ±‖.
pub fn verify_positivity(pair: &CovariancePair) -> PositivityReport {
    let min_eig = |op: &BoundaryOperator| -> f64 {
        op.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x))
    };
    let (ep, em) = (min_eig(&pair.lambda_plus), min_eig(&pair.lambda_minus));
    let (np, nm) = (
        pair.lambda_plus.operator_norm(),
        pair.lambda_minus.operator_norm(),
    );
    PositivityReport {
        min_eig_plus: ep,
        min_eig_minus: em,
        norm_plus: np,
        norm_minus: nm,
        pass: ep >= -1e-10 * np && em >= -1e-10 * nm,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuscReport {
    /// Decay of `π⁻ c⁺` and `π⁺ c⁻` (wrong-sector parts of the covariances).
    pub cross_plus: SmoothingReport,
    pub cross_minus: SmoothingReport,
    /// Decay of `c⁺ − π⁺` and `c⁻ − π⁻` (deviation from the multiplier part).
    pub remainder_plus: SmoothingReport,
    pub remainder_minus: SmoothingReport,
    pub pass: bool,
}

/// Frequency-sector decay checks on the block forms `c±`: the wrong-sector
/// blocks `π∓ c±` and the remainders `c± − π±` must all pass the smoothing
/// indicator. The microlocal-spectrum proxy on the resolved band.
pub fn verify_musc(pair: &CovariancePair, cfg: &SmoothingConfig) -> MuscReport {
    let grid = &pair.grid;
    let cp = pair.c_plus();
    let cm = pair.c_minus();
    let dim = grid.admissible_dim();
    let np = grid.n_plus;
    let minus_rows = |m: &DMatrix<Complex64>| {
        let mut out = DMatrix::zeros(dim, dim);
        out.view_range_mut(np..dim, 0..dim)
            .copy_from(&m.view_range(np..dim, 0..dim));
        out
    };
    let plus_rows = |m: &DMatrix<Complex64>| {
        let mut out = DMatrix::zeros(dim, dim);
        out.view_range_mut(0..np, 0..dim)
            .copy_from(&m.view_range(0..np, 0..dim));
        out
    };
    let mut cp_rem = cp.clone();
    for i in 0..np {
        cp_rem[(i, i)] -= Complex64::ONE;
    }
    let mut cm_rem = cm.clone();
    for i in np..dim {
        cm_rem[(i, i)] -= Complex64::ONE;
    }
    // Recovering c± from λ± leaves ~1e-16 relative roundoff in every entry;
    // the ⟨σ⟩^{2N} weights would amplify that noise into a fake growth
    // profile, so entries at numerical zero are clipped before the indicator.
    let scale = cp.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let report = |mut m: DMatrix<Complex64>| {
        let tol = 1e-13 * scale;
        for e in m.iter_mut() {
            if e.norm() < tol {
                *e = Complex64::ZERO;
            }
        }
        smoothing_indicator(
            &BoundaryOperator::from_matrix(grid.clone(), m, false),
            cfg,
        )
    };
    let cross_plus = report(minus_rows(&cp));
    let cross_minus = report(plus_rows(&cm));
    let remainder_plus = report(cp_rem);
    let remainder_minus = report(cm_rem);
    let pass =
        cross_plus.pass && cross_minus.pass && remainder_plus.pass && remainder_minus.pass;
    MuscReport {
        cross_plus,
        cross_minus,
        remainder_plus,
        remainder_minus,
        pass,
    }
}

#[derive(Debug, Clone)]
pub struct PurityReport {
    /// Reconstructed generator `â = (1 + c_--)^{-1/2} c_-+`.
    pub a_hat: DMatrix<Complex64>,
    /// `‖c − c(â)‖ / ‖c‖`.
    pub reconstruction_residual: f64,
    /// `‖P² − 1‖` with `P = sgn(D_s)(2c − sgn(D_s))`.
    pub involution_residual: f64,
    pub pass: bool,
}

/// Purity test: reconstruct the generator from the blocks of `c⁺`, rebuild
/// the pure-family covariance, and compare; also evaluates the involution
/// residual `‖P² − 1‖`, which vanishes exactly on pure pairs.
pub fn purity_check(pair: &CovariancePair) -> Result<PurityReport, StateError> {
    let grid = &pair.grid;
    let c = pair.c_plus();
    let dim = grid.admissible_dim();
    let np = grid.n_plus;
    let c_mm = c.view_range(np..dim, np..dim).into_owned();
    let c_mp = c.view_range(np..dim, 0..np).into_owned();
    let one_plus = DMatrix::identity(dim - np, dim - np) + &c_mm;
    let min_eig = one_plus
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &x| m.min(x));
    if min_eig < -1e-10 {
        return Err(StateError::NegativeBlock(min_eig));
    }
    let inv_sqrt = hermitian_matrix_function(&one_plus, |t| t.max(1e-300).powf(-0.5))?;
    let a_hat = &inv_sqrt * &c_mp;
    let rebuilt = pure_cplus(&PurityGenerator {
        grid: grid.clone(),
        a: a_hat.clone(),
    })?;
    let reconstruction_residual = (&c - &rebuilt).norm() / c.norm();

    // Involution P = sgn(D_s)(2c − sgn(D_s)); P² = 1 characterizes purity.
    let sgn: Vec<f64> = (0..dim)
        .map(|i| grid.admissible_sigma_lambda(i).0.signum())
        .collect();
    let mut p = c.clone() * Complex64::new(2.0, 0.0);
    for i in 0..dim {
        p[(i, i)] -= Complex64::new(sgn[i], 0.0);
    }
    for i in 0..dim {
        let s = Complex64::new(sgn[i], 0.0);
        for j in 0..dim {
            p[(i, j)] *= s;
        }
    }
    let p2 = &p * &p;
    let involution_residual = (&p2 - DMatrix::identity(dim, dim)).norm() / (dim as f64).sqrt();
    Ok(PurityReport {
        a_hat,
        reconstruction_residual,
        involution_residual,
        pass: reconstruction_residual <= 1e-8,
    })
}
