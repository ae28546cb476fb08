//! Covariance-pair construction: gauge family, pure family, Moretti state,
//! Bogoliubov maps, and the one-particle norm.

use crate::boundary::{BoundaryFunction, BoundaryGrid, ShiftMap};
use crate::symcalc::{
    conjugate_by_shift, hermitian_matrix_function, random_windowed_block, smoothing_indicator,
    BlockDecomposition, BoundaryOperator, Sign, SmoothingConfig, SymcalcError,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error("coupling block norm {0:.6} exceeds 1")]
    NormViolation(f64),
    #[error("1 + c_-- has eigenvalue {0:.3e} below -1e-10")]
    NegativeBlock(f64),
    #[error("generator fails the smoothing indicator")]
    NotSmoothing,
    #[error(transparent)]
    Symcalc(#[from] SymcalcError),
}

/// How a pair was produced (kept for reports; no bearing on the numerics).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorRecord {
    Moretti,
    Gauge,
    Pure,
    Custom,
}

/// Generators of the mixed covariance family: `a₊` acts on the `+` sector,
/// `a₋` on the `-` sector, and the coupling `d` maps `-` into `+` with
/// `‖d‖ ≤ 1`.
#[derive(Debug, Clone)]
pub struct GaugeGenerators {
    pub grid: Arc<BoundaryGrid>,
    pub a_plus: DMatrix<Complex64>,
    pub a_minus: DMatrix<Complex64>,
    pub d: DMatrix<Complex64>,
}

/// Generator of the pure covariance family: `a` maps the `+` sector into
/// the `-` sector.
#[derive(Debug, Clone)]
pub struct PurityGenerator {
    pub grid: Arc<BoundaryGrid>,
    pub a: DMatrix<Complex64>,
}

/// A boundary covariance pair `(λ⁺, λ⁻)` with `λ⁺ − λ⁻ = 2D_s`.
#[derive(Debug, Clone)]
pub struct CovariancePair {
    pub grid: Arc<BoundaryGrid>,
    pub lambda_plus: BoundaryOperator,
    pub lambda_minus: BoundaryOperator,
    pub generator: GeneratorRecord,
}

fn sector_dims(grid: &BoundaryGrid) -> (usize, usize) {
    (grid.n_plus, grid.admissible_dim() - grid.n_plus)
}

/// Scale a matrix on both sides by the diagonal weight `(2|σ|)^{1/2}`.
fn sandwich_sqrt_2abs_ds(grid: &BoundaryGrid, c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = grid.admissible_dim();
    let w: Vec<f64> = (0..dim)
        .map(|i| (2.0 * grid.admissible_sigma_lambda(i).0.abs()).sqrt())
        .collect();
    DMatrix::from_fn(dim, dim, |i, j| c[(i, j)] * w[i] * w[j])
}

/// Undo [`sandwich_sqrt_2abs_ds`]: recover `c = (2|D_s|)^{-1/2} λ (2|D_s|)^{-1/2}`
/// (well-defined on the admissible space, where `σ ≠ 0`).
pub(crate) fn unsandwich_sqrt_2abs_ds(
    grid: &BoundaryGrid,
    lambda: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let dim = grid.admissible_dim();
    let w: Vec<f64> = (0..dim)
        .map(|i| (2.0 * grid.admissible_sigma_lambda(i).0.abs()).sqrt())
        .collect();
    DMatrix::from_fn(dim, dim, |i, j| lambda[(i, j)] / (w[i] * w[j]))
}

fn two_ds(grid: &Arc<BoundaryGrid>) -> DMatrix<Complex64> {
    BoundaryOperator::from_s_multiplier(grid.clone(), |s| 2.0 * s).matrix
}

impl CovariancePair {
    /// Assemble a pair from the two-point block form `c` of `λ⁺`:
    /// `λ⁺ = (2|D_s|)^{1/2} c (2|D_s|)^{1/2}`, `λ⁻ = λ⁺ − 2D_s`.
    pub fn from_cplus(
        grid: Arc<BoundaryGrid>,
        c: DMatrix<Complex64>,
        generator: GeneratorRecord,
    ) -> Self {
        let lp = sandwich_sqrt_2abs_ds(&grid, &c);
        let lm = &lp - two_ds(&grid);
        Self {
            grid: grid.clone(),
            lambda_plus: BoundaryOperator::from_matrix(grid.clone(), lp, true),
            lambda_minus: BoundaryOperator::from_matrix(grid, lm, true),
            generator,
        }
    }

    /// The block form `c⁺` of `λ⁺` (inverse of the weight sandwich).
    pub fn c_plus(&self) -> DMatrix<Complex64> {
        unsandwich_sqrt_2abs_ds(&self.grid, &self.lambda_plus.matrix)
    }

    /// The block form `c⁻ = c⁺ − sgn(D_s)` of `λ⁻`.
    pub fn c_minus(&self) -> DMatrix<Complex64> {
        let mut c = self.c_plus();
        for i in 0..self.grid.admissible_dim() {
            let s = self.grid.admissible_sigma_lambda(i).0.signum();
            c[(i, i)] -= Complex64::new(s, 0.0);
        }
        c
    }

    /// Conjugate the pair by a shift map. `U` commutes with the `(2|D_s|)^{1/2}`
    /// weight and with `2D_s`, so the result is again a covariance pair with
    /// the same CCR defect.
    pub fn conjugated_by_shift(&self, shift: &ShiftMap) -> Result<Self, StateError> {
        Ok(Self {
            grid: self.grid.clone(),
            lambda_plus: conjugate_by_shift(&self.lambda_plus, shift)?,
            lambda_minus: conjugate_by_shift(&self.lambda_minus, shift)?,
            generator: GeneratorRecord::Custom,
        })
    }
}

impl GaugeGenerators {
    /// Random Gaussian-windowed rank-`k` generators with `‖d‖ = d_norm` and
    /// `a±` scaled by `a_scale`.
    pub fn random(
        grid: &Arc<BoundaryGrid>,
        rank: usize,
        d_norm: f64,
        a_scale: f64,
        rng: &mut impl rand::Rng,
    ) -> Self {
        let s = Complex64::new(a_scale, 0.0);
        let a_plus = random_windowed_block(grid, Sign::Plus, Sign::Plus, rank, rng) * s;
        let a_minus = random_windowed_block(grid, Sign::Minus, Sign::Minus, rank, rng) * s;
        let mut d = random_windowed_block(grid, Sign::Plus, Sign::Minus, rank, rng);
        let nrm = crate::symcalc::BoundaryOperator::from_matrix(
            grid.clone(),
            embed(grid, Sign::Plus, Sign::Minus, &d),
            false,
        )
        .operator_norm();
        if nrm > 0.0 {
            d *= Complex64::new(d_norm / nrm, 0.0);
        }
        Self {
            grid: grid.clone(),
            a_plus,
            a_minus,
            d,
        }
    }

    /// Operator norm of the coupling block.
    pub fn d_norm(&self) -> f64 {
        let e = embed(&self.grid, Sign::Plus, Sign::Minus, &self.d);
        BoundaryOperator::from_matrix(self.grid.clone(), e, false).operator_norm()
    }

    /// Enforce `‖d‖ ≤ 1` and the smoothing indicator on all three blocks.
    pub fn validate(&self, cfg: &SmoothingConfig) -> Result<(), StateError> {
        let nrm = self.d_norm();
        if nrm > 1.0 + 1e-12 {
            return Err(StateError::NormViolation(nrm));
        }
        for (rows, cols, m) in [
            (Sign::Plus, Sign::Plus, &self.a_plus),
            (Sign::Minus, Sign::Minus, &self.a_minus),
            (Sign::Plus, Sign::Minus, &self.d),
        ] {
            let op = BoundaryOperator::from_matrix(
                self.grid.clone(),
                embed(&self.grid, rows, cols, m),
                false,
            );
            if !smoothing_indicator(&op, cfg).pass {
                return Err(StateError::NotSmoothing);
            }
        }
        Ok(())
    }
}

impl PurityGenerator {
    pub fn random(grid: &Arc<BoundaryGrid>, rank: usize, rng: &mut impl rand::Rng) -> Self {
        Self {
            grid: grid.clone(),
            a: random_windowed_block(grid, Sign::Minus, Sign::Plus, rank, rng),
        }
    }

    pub fn zero(grid: &Arc<BoundaryGrid>) -> Self {
        let (np, nm) = sector_dims(grid);
        Self {
            grid: grid.clone(),
            a: DMatrix::zeros(nm, np),
        }
    }
}

/// Place a sector block into a full admissible-space matrix (zeros elsewhere).
pub(crate) fn embed(
    grid: &BoundaryGrid,
    rows: Sign,
    cols: Sign,
    m: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let (np, nm) = sector_dims(grid);
    let n = np + nm;
    let (r0, rn) = match rows {
        Sign::Plus => (0, np),
        Sign::Minus => (np, nm),
    };
    let (c0, cn) = match cols {
        Sign::Plus => (0, np),
        Sign::Minus => (np, nm),
    };
    assert_eq!(m.nrows(), rn);
    assert_eq!(m.ncols(), cn);
    let mut full = DMatrix::zeros(n, n);
    full.view_range_mut(r0..r0 + rn, c0..c0 + cn).copy_from(m);
    full
}

/// The distinguished multiplier pair `λ± = ±2·1_{ℝ±}(σ)·σ`.
pub fn moretti_pair(grid: &Arc<BoundaryGrid>) -> CovariancePair {
    let lp = BoundaryOperator::from_s_multiplier(grid.clone(), |s| if s > 0.0 { 2.0 * s } else { 0.0 });
    let lm = BoundaryOperator::from_s_multiplier(grid.clone(), |s| if s < 0.0 { -2.0 * s } else { 0.0 });
    CovariancePair {
        grid: grid.clone(),
        lambda_plus: lp,
        lambda_minus: lm,
        generator: GeneratorRecord::Moretti,
    }
}

/// Mixed-family construction: `c_{++} = 1 + a₊*a₊`, `c_{--} = a₋*a₋`,
/// `c_{+-} = a₊* d a₋`, `c_{-+} = c_{+-}*`; positivity of both `λ±` follows
/// from `‖d‖ ≤ 1`.
pub fn build_gauge_covariances(gen: &GaugeGenerators) -> Result<CovariancePair, StateError> {
    let nrm = gen.d_norm();
    if nrm > 1.0 + 1e-12 {
        return Err(StateError::NormViolation(nrm));
    }
    Ok(build_gauge_covariances_unchecked(gen))
}

/// Same assembly without the `‖d‖ ≤ 1` gate (used by falsification probes).
pub fn build_gauge_covariances_unchecked(gen: &GaugeGenerators) -> CovariancePair {
    let (np, _) = sector_dims(&gen.grid);
    let pp = DMatrix::identity(np, np) + gen.a_plus.adjoint() * &gen.a_plus;
    let mm = gen.a_minus.adjoint() * &gen.a_minus;
    let pm = gen.a_plus.adjoint() * &gen.d * &gen.a_minus;
    let mp = pm.adjoint();
    let c = assemble_blocks(&gen.grid, &BlockDecomposition { pp, pm, mp, mm });
    CovariancePair::from_cplus(gen.grid.clone(), c, GeneratorRecord::Gauge)
}

/// Pure-family construction:
/// `c = [[1 + a*a, a*γ], [γa, aa*]]` with `γ = (1 + aa*)^{1/2}`.
pub fn build_pure_covariances(gen: &PurityGenerator) -> Result<CovariancePair, StateError> {
    let c = pure_cplus(gen)?;
    Ok(CovariancePair::from_cplus(
        gen.grid.clone(),
        c,
        GeneratorRecord::Pure,
    ))
}

pub(crate) fn pure_cplus(gen: &PurityGenerator) -> Result<DMatrix<Complex64>, StateError> {
    let (np, _) = sector_dims(&gen.grid);
    let a = &gen.a;
    let aad = a * a.adjoint();
    let gamma = hermitian_matrix_function(&aad, |t| (1.0 + t.max(0.0)).sqrt())?;
    let pp = DMatrix::identity(np, np) + a.adjoint() * a;
    let pm = a.adjoint() * &gamma;
    let mp = pm.adjoint();
    let mm = aad;
    Ok(assemble_blocks(
        &gen.grid,
        &BlockDecomposition { pp, pm, mp, mm },
    ))
}

fn assemble_blocks(grid: &Arc<BoundaryGrid>, blocks: &BlockDecomposition) -> DMatrix<Complex64> {
    BoundaryOperator::from_blocks(grid.clone(), blocks).matrix
}

/// Bogoliubov map `u(a)`: in `(+, −)` block order
/// `u = [[(1+a*a)^{1/2}, a*], [a, (1+aa*)^{1/2}]]` — hermitian, symplectic,
/// with `u(a)⁻¹ = u(−a)` and `u(a)* c⁺(0) u(a) = c⁺(a)`.
pub fn bogoliubov(gen: &PurityGenerator) -> Result<BoundaryOperator, StateError> {
    let a = &gen.a;
    let alpha = hermitian_matrix_function(&(a.adjoint() * a), |t| (1.0 + t.max(0.0)).sqrt())?;
    let gamma = hermitian_matrix_function(&(a * a.adjoint()), |t| (1.0 + t.max(0.0)).sqrt())?;
    let blocks = BlockDecomposition {
        pp: alpha,
        pm: a.adjoint(),
        mp: a.clone(),
        mm: gamma,
    };
    let mut op = BoundaryOperator::from_blocks(gen.grid.clone(), &blocks);
    op.hermitian = true;
    Ok(op)
}

/// One-particle norm `⟨g, (λ⁺ + λ⁻) g⟩^{1/2}` of an admissible function.
pub fn one_particle_norm(pair: &CovariancePair, g: &BoundaryFunction) -> f64 {
    let v = g.project_admissible().admissible_vector();
    let sum = &pair.lambda_plus.matrix + &pair.lambda_minus.matrix;
    let quad = (v.adjoint() * (sum * &v))[(0, 0)].re;
    quad.max(0.0).sqrt()
}

/// Equivalence constants of the one-particle norm against the reference
/// `‖(2|D_s|)^{1/2} g‖` over a random probe family: returns the smallest and
/// largest observed ratio.
pub fn one_particle_equivalence(
    pair: &CovariancePair,
    n_probes: usize,
    rng: &mut impl rand::Rng,
) -> (f64, f64) {
    let dim = pair.grid.admissible_dim();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for _ in 0..n_probes {
        let v = nalgebra::DVector::from_fn(dim, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let g = BoundaryFunction::from_admissible_vector(pair.grid.clone(), &v);
        let num = one_particle_norm(pair, &g);
        let den = g.abs_ds_sqrt().l2_norm() * 2.0f64.sqrt();
        if den > 0.0 {
            let r = num / den;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}
