//! Dense operators on the admissible boundary modes with ± block structure.

use crate::boundary::{BoundaryFunction, BoundaryGrid};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::io::{Read, Write};
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum SymcalcError {
    #[error("operator is not hermitian (relative asymmetry {0:.3e})")]
    NonHermitian(f64),
    #[error("eigendecomposition residual {0:.3e} exceeds tolerance")]
    EigenResidual(f64),
    #[error("operands live on incompatible grids")]
    GridMismatch,
    #[error("shift profile under-resolved (aliasing warning raised)")]
    Aliasing,
    #[error("container I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("container format error: {0}")]
    Format(String),
}

/// Frequency-sign sector of the admissible space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Dense complex operator in the admissible spectral basis.
///
/// Row/column index order follows `BoundaryGrid::admissible`: all `σ > 0`
/// entries first, then all `σ < 0`, so the `π_±` sectors are contiguous.
#[derive(Debug, Clone)]
pub struct BoundaryOperator {
    pub grid: Arc<BoundaryGrid>,
    pub matrix: DMatrix<Complex64>,
    /// Set when the operator is hermitian by construction; verified on use.
    pub hermitian: bool,
}

/// The four `π_α · π_β` blocks of an operator
/// (`pp` = `c_{++}`, `pm` = `c_{+-}`, `mp` = `c_{-+}`, `mm` = `c_{--}`).
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub pp: DMatrix<Complex64>,
    pub pm: DMatrix<Complex64>,
    pub mp: DMatrix<Complex64>,
    pub mm: DMatrix<Complex64>,
}

impl BoundaryOperator {
    pub fn from_matrix(
        grid: Arc<BoundaryGrid>,
        matrix: DMatrix<Complex64>,
        hermitian: bool,
    ) -> Self {
        assert_eq!(matrix.nrows(), grid.admissible_dim());
        assert_eq!(matrix.ncols(), grid.admissible_dim());
        Self {
            grid,
            matrix,
            hermitian,
        }
    }

    pub fn identity(grid: Arc<BoundaryGrid>) -> Self {
        let n = grid.admissible_dim();
        Self::from_matrix(grid, DMatrix::identity(n, n), true)
    }

    pub fn zero(grid: Arc<BoundaryGrid>) -> Self {
        let n = grid.admissible_dim();
        Self::from_matrix(grid, DMatrix::zeros(n, n), true)
    }

    /// Diagonal operator from a real `s`-frequency symbol `μ(σ)`.
    pub fn from_s_multiplier(grid: Arc<BoundaryGrid>, mu: impl Fn(f64) -> f64) -> Self {
        let n = grid.admissible_dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let (sigma, _) = grid.admissible_sigma_lambda(i);
            m[(i, i)] = Complex64::new(mu(sigma), 0.0);
        }
        Self::from_matrix(grid, m, true)
    }

    /// Diagonal operator from a joint symbol `μ(σ, λ)`.
    pub fn from_multiplier(grid: Arc<BoundaryGrid>, mu: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.admissible_dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let (sigma, lam) = grid.admissible_sigma_lambda(i);
            m[(i, i)] = Complex64::new(mu(sigma, lam), 0.0);
        }
        Self::from_matrix(grid, m, true)
    }

    pub fn d_s(grid: Arc<BoundaryGrid>) -> Self {
        Self::from_s_multiplier(grid, |s| s)
    }

    pub fn sign_ds(grid: Arc<BoundaryGrid>) -> Self {
        Self::from_s_multiplier(grid, |s| s.signum())
    }

    pub fn abs_ds(grid: Arc<BoundaryGrid>) -> Self {
        Self::from_s_multiplier(grid, |s| s.abs())
    }

    pub fn sqrt_2abs_ds(grid: Arc<BoundaryGrid>) -> Self {
        Self::from_s_multiplier(grid, |s| (2.0 * s.abs()).sqrt())
    }

    pub fn pi_plus(grid: Arc<BoundaryGrid>) -> Self {
        Self::from_s_multiplier(grid, |s| if s > 0.0 { 1.0 } else { 0.0 })
    }

    pub fn pi_minus(grid: Arc<BoundaryGrid>) -> Self {
        Self::from_s_multiplier(grid, |s| if s < 0.0 { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Apply to a boundary function (projects to the admissible space).
    pub fn apply(&self, g: &BoundaryFunction) -> BoundaryFunction {
        assert!(g.grid.compatible(&self.grid));
        let v = g.admissible_vector();
        BoundaryFunction::from_admissible_vector(self.grid.clone(), &(&self.matrix * v))
    }

    pub fn apply_vec(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.matrix * v
    }

    pub fn compose(&self, other: &Self) -> Result<Self, SymcalcError> {
        if !self.grid.compatible(&other.grid) {
            return Err(SymcalcError::GridMismatch);
        }
        Ok(Self::from_matrix(
            self.grid.clone(),
            &self.matrix * &other.matrix,
            false,
        ))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix(self.grid.clone(), self.matrix.adjoint(), self.hermitian)
    }

    pub fn add_scaled(&self, other: &Self, w: Complex64) -> Result<Self, SymcalcError> {
        if !self.grid.compatible(&other.grid) {
            return Err(SymcalcError::GridMismatch);
        }
        Ok(Self::from_matrix(
            self.grid.clone(),
            &self.matrix + &other.matrix * w,
            self.hermitian && other.hermitian && w.im == 0.0,
        ))
    }

    pub fn scale(&self, w: Complex64) -> Self {
        Self::from_matrix(
            self.grid.clone(),
            &self.matrix * w,
            self.hermitian && w.im == 0.0,
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator 2-norm by deterministic power iteration on `A*A`.
    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }

    /// Relative hermitian asymmetry `‖A − A*‖_F / ‖A‖_F`.
    pub fn hermitian_residual(&self) -> f64 {
        let nrm = self.frobenius_norm();
        if nrm == 0.0 {
            return 0.0;
        }
        let diff = &self.matrix - self.matrix.adjoint();
        diff.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() / nrm
    }

    /// Check the hermitian flag against the data.
    pub fn check_hermitian(&self) -> Result<(), SymcalcError> {
        let r = self.hermitian_residual();
        if r > 1e-12 {
            return Err(SymcalcError::NonHermitian(r));
        }
        Ok(())
    }

    /// One-sided essential-support proxy: `‖π_∓ A‖ ≤ 10⁻⁸ ‖A‖` means the
    /// operator is supported in the ± frequency sector.
    pub fn supported_in(&self, sector: Sign) -> bool {
        let n = self.dim();
        let np = self.grid.n_plus;
        let (lo, hi) = match sector {
            // π_- A for sector Plus: rows in the minus block must vanish.
            Sign::Plus => (np, n),
            Sign::Minus => (0, np),
        };
        let off = self.matrix.view_range(lo..hi, 0..n);
        let off_norm = operator_norm(&off.into_owned());
        off_norm <= 1e-8 * self.operator_norm().max(1e-300)
    }

    /// Row/column index range of a frequency-sign sector.
    pub fn sector_range(&self, sector: Sign) -> std::ops::Range<usize> {
        match sector {
            Sign::Plus => 0..self.grid.n_plus,
            Sign::Minus => self.grid.n_plus..self.dim(),
        }
    }

    /// Extract the four ± Toeplitz blocks `c_{αβ} = i_α* c i_β`.
    pub fn toeplitz_blocks(&self) -> BlockDecomposition {
        let np = self.grid.n_plus;
        let n = self.dim();
        BlockDecomposition {
            pp: self.matrix.view_range(0..np, 0..np).into_owned(),
            pm: self.matrix.view_range(0..np, np..n).into_owned(),
            mp: self.matrix.view_range(np..n, 0..np).into_owned(),
            mm: self.matrix.view_range(np..n, np..n).into_owned(),
        }
    }

    /// Reassemble an operator from its blocks: `c = Σ i_α c_{αβ} i_β*`.
    pub fn from_blocks(grid: Arc<BoundaryGrid>, blocks: &BlockDecomposition) -> Self {
        let np = grid.n_plus;
        let nm = grid.admissible_dim() - np;
        assert_eq!(blocks.pp.nrows(), np);
        assert_eq!(blocks.pm.ncols(), nm);
        assert_eq!(blocks.mp.nrows(), nm);
        assert_eq!(blocks.mm.ncols(), nm);
        let n = grid.admissible_dim();
        let mut m = DMatrix::zeros(n, n);
        m.view_range_mut(0..np, 0..np).copy_from(&blocks.pp);
        m.view_range_mut(0..np, np..n).copy_from(&blocks.pm);
        m.view_range_mut(np..n, 0..np).copy_from(&blocks.mp);
        m.view_range_mut(np..n, np..n).copy_from(&blocks.mm);
        Self::from_matrix(grid, m, false)
    }

    /// Save in a self-describing binary container.
    pub fn save(&self, w: &mut impl Write) -> Result<(), SymcalcError> {
        let header = serde_json::json!({
            "d": self.grid.d,
            "n_s": self.grid.n_s,
            "s_min": self.grid.s_min,
            "s_max": self.grid.s_max,
            "l_max": self.grid.l_max,
            "dim": self.dim(),
            "hermitian": self.hermitian,
        })
        .to_string();
        w.write_all(b"LCOP")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(header.as_bytes())?;
        for c in self.matrix.iter() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(r: &mut impl Read) -> Result<Self, SymcalcError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"LCOP" {
            return Err(SymcalcError::Format("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != 1 {
            return Err(SymcalcError::Format("unsupported version".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let hlen = u64::from_le_bytes(b8) as usize;
        let mut hbuf = vec![0u8; hlen];
        r.read_exact(&mut hbuf)?;
        let header: serde_json::Value = serde_json::from_slice(&hbuf)
            .map_err(|e| SymcalcError::Format(e.to_string()))?;
        let get = |k: &str| -> Result<u64, SymcalcError> {
            header[k]
                .as_u64()
                .ok_or_else(|| SymcalcError::Format(format!("missing field {k}")))
        };
        let grid = BoundaryGrid::new(
            get("d")? as usize,
            get("n_s")? as usize,
            header["s_min"].as_f64().unwrap_or(f64::NAN),
            header["s_max"].as_f64().unwrap_or(f64::NAN),
            get("l_max")? as usize,
        )
        .map_err(|e| SymcalcError::Format(e.to_string()))?;
        let dim = get("dim")? as usize;
        if dim != grid.admissible_dim() {
            return Err(SymcalcError::Format("dimension mismatch".into()));
        }
        let hermitian = header["hermitian"].as_bool().unwrap_or(false);
        let mut data = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            let mut re = [0u8; 8];
            let mut im = [0u8; 8];
            r.read_exact(&mut re)?;
            r.read_exact(&mut im)?;
            data.push(Complex64::new(f64::from_le_bytes(re), f64::from_le_bytes(im)));
        }
        Ok(Self::from_matrix(
            grid,
            DMatrix::from_vec(dim, dim, data),
            hermitian,
        ))
    }
}

/// Gaussian envelope weight on an admissible entry: `e^{-(σ/σ₀)²}e^{-(ℓ/ℓ₀)²}`
/// with `σ₀ = σ_max/4`, `ℓ₀ = L/2`.
fn envelope(grid: &BoundaryGrid, idx: usize) -> f64 {
    let (k, a) = grid.admissible[idx];
    let sigma = grid.sigma[k];
    let l = grid.modes[a].l as f64;
    let sigma0 = grid.sigma_max() / 4.0;
    let l0 = (grid.l_max as f64 / 2.0).max(0.5);
    (-(sigma / sigma0).powi(2)).exp() * (-(l / l0).powi(2)).exp()
}

fn standard_normal(rng: &mut impl rand::Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-16);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn windowed_vector(
    grid: &BoundaryGrid,
    range: std::ops::Range<usize>,
    rng: &mut impl rand::Rng,
) -> DVector<Complex64> {
    let mut v = DVector::from_iterator(
        range.len(),
        range
            .clone()
            .map(|i| {
                Complex64::new(standard_normal(rng), standard_normal(rng)) * envelope(grid, i)
            }),
    );
    let n = v.norm();
    if n > 0.0 {
        v /= Complex64::new(n, 0.0);
    }
    v
}

/// Random Gaussian-windowed rank-`k` block mapping the `cols` sector into the
/// `rows` sector, drawn in the spectral basis with the σ/ℓ envelope that
/// keeps the smoothing indicator satisfied.
pub fn random_windowed_block(
    grid: &Arc<BoundaryGrid>,
    rows: Sign,
    cols: Sign,
    rank: usize,
    rng: &mut impl rand::Rng,
) -> DMatrix<Complex64> {
    assert!(rank >= 1 && rank <= 8, "rank-limited sampling (1 ≤ k ≤ 8)");
    let np = grid.n_plus;
    let n = grid.admissible_dim();
    let row_range = match rows {
        Sign::Plus => 0..np,
        Sign::Minus => np..n,
    };
    let col_range = match cols {
        Sign::Plus => 0..np,
        Sign::Minus => np..n,
    };
    let mut m = DMatrix::zeros(row_range.len(), col_range.len());
    for _ in 0..rank {
        let u = windowed_vector(grid, row_range.clone(), rng);
        let v = windowed_vector(grid, col_range.clone(), rng);
        m += u * v.adjoint() / Complex64::new(rank as f64, 0.0);
    }
    m
}

/// Random Gaussian-windowed rank-`k` operator on the full admissible space.
pub fn random_windowed_operator(
    grid: &Arc<BoundaryGrid>,
    rank: usize,
    rng: &mut impl rand::Rng,
) -> BoundaryOperator {
    assert!(rank >= 1 && rank <= 8, "rank-limited sampling (1 ≤ k ≤ 8)");
    let n = grid.admissible_dim();
    let mut m = DMatrix::zeros(n, n);
    for _ in 0..rank {
        let u = windowed_vector(grid, 0..n, rng);
        let v = windowed_vector(grid, 0..n, rng);
        m += u * v.adjoint() / Complex64::new(rank as f64, 0.0);
    }
    BoundaryOperator::from_matrix(grid.clone(), m, false)
}

/// Operator 2-norm of a dense matrix via deterministic power iteration on
/// the normal matrix (start vector fixed, so reports are reproducible).
pub(crate) fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.iter().all(|c| c.norm_sqr() == 0.0) {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |i, _| {
        Complex64::new(1.0 + 0.3 * ((i as f64) * 0.7).sin(), 0.2 * ((i as f64) * 1.3).cos())
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut prev = 0.0;
    for _ in 0..300 {
        let w = m * &v;
        let u = m.adjoint() * w;
        let nn = u.norm();
        if nn == 0.0 {
            return 0.0;
        }
        v = u / Complex64::new(nn, 0.0);
        let est = nn.sqrt();
        if (est - prev).abs() <= 1e-12 * est {
            return est;
        }
        prev = est;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn grid() -> Arc<BoundaryGrid> {
        BoundaryGrid::new(3, 16, -6.0, 2.0, 2).unwrap()
    }

    fn random_op(g: &Arc<BoundaryGrid>, rng: &mut ChaCha20Rng) -> BoundaryOperator {
        let n = g.admissible_dim();
        let m = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        BoundaryOperator::from_matrix(g.clone(), m, false)
    }

    fn is_identity(m: &DMatrix<Complex64>) -> bool {
        let id = DMatrix::<Complex64>::identity(m.nrows(), m.ncols());
        (m - id).norm() == 0.0
    }

    #[test]
    fn identity_and_sign_blocks() {
        let g = grid();
        let blocks = BoundaryOperator::identity(g.clone()).toeplitz_blocks();
        assert!(is_identity(&blocks.pp));
        assert!(is_identity(&blocks.mm));
        assert_eq!(blocks.pm.iter().map(|c| c.norm()).fold(0.0, f64::max), 0.0);
        assert_eq!(blocks.mp.iter().map(|c| c.norm()).fold(0.0, f64::max), 0.0);
        let sgn = BoundaryOperator::sign_ds(g).toeplitz_blocks();
        assert!(is_identity(&sgn.pp));
        assert!(is_identity(&(-&sgn.mm)));
    }

    #[test]
    fn reassembly_is_exact() {
        let g = grid();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = random_op(&g, &mut rng);
        let back = BoundaryOperator::from_blocks(g, &a.toeplitz_blocks());
        let diff = &a.matrix - &back.matrix;
        assert_eq!(diff.iter().map(|c| c.norm()).fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn block_composition_rule() {
        let g = grid();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a = random_op(&g, &mut rng);
        let b = random_op(&g, &mut rng);
        let ab = a.compose(&b).unwrap().toeplitz_blocks();
        let (ba, bb) = (a.toeplitz_blocks(), b.toeplitz_blocks());
        let pp = &ba.pp * &bb.pp + &ba.pm * &bb.mp;
        let pm = &ba.pp * &bb.pm + &ba.pm * &bb.mm;
        let scale = a.frobenius_norm() * b.frobenius_norm();
        assert!((&ab.pp - &pp).norm() <= 1e-12 * scale);
        assert!((&ab.pm - &pm).norm() <= 1e-12 * scale);
    }

    #[test]
    fn operator_norm_matches_known_values() {
        let g = grid();
        let id = BoundaryOperator::identity(g.clone());
        assert!((id.operator_norm() - 1.0).abs() < 1e-10);
        let ds = BoundaryOperator::d_s(g.clone());
        assert!((ds.operator_norm() - g.sigma_max() * (1.0 - 2.0 / g.n_s as f64)).abs() < 1e-8);
        assert_eq!(BoundaryOperator::zero(g).operator_norm(), 0.0);
    }

    #[test]
    fn apply_matches_function_multiplier() {
        let g = grid();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let v = DVector::from_fn(g.admissible_dim(), |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let f = BoundaryFunction::from_admissible_vector(g.clone(), &v);
        let via_op = BoundaryOperator::d_s(g).apply(&f);
        let via_mult = f.d_s();
        let d = via_op.add_scaled(&via_mult, -Complex64::ONE);
        assert!(d.l2_norm() < 1e-12 * via_mult.l2_norm());
    }

    #[test]
    fn support_proxy_detects_sector() {
        let g = grid();
        let pp = BoundaryOperator::pi_plus(g.clone());
        assert!(pp.supported_in(Sign::Plus));
        assert!(!pp.supported_in(Sign::Minus));
        assert!(BoundaryOperator::zero(g).supported_in(Sign::Plus));
    }

    #[test]
    fn container_round_trip() {
        let g = grid();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let a = random_op(&g, &mut rng);
        let mut buf = Vec::new();
        a.save(&mut buf).unwrap();
        let b = BoundaryOperator::load(&mut buf.as_slice()).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.hermitian, b.hermitian);
    }
}
