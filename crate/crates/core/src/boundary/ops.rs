//! Boundary operations: spectral multipliers, the symplectic form, Sobolev
//! and weighted cone norms, the Hardy-quotient probe, and the
//! null-coordinate shift map.

use super::function::BoundaryFunction;
use super::grid::BoundaryGrid;
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum BoundaryOpError {
    #[error("boundary functions live on incompatible grids")]
    GridMismatch,
}

#[derive(Debug, thiserror::Error)]
pub enum WeightedNormError {
    #[error("support violation: relative mass {0:.3e} beyond the cone cap")]
    SupportViolation(f64),
}

impl BoundaryFunction {
    /// Apply a pure `s`-frequency multiplier `μ(σ)`.
    ///
    /// Acts in the mixed representation (spectral in `s`, nodal in angle),
    /// so no angular band-limit projection is involved: these multipliers
    /// commute exactly with angular phase maps such as the shift map.
    /// Excluded modes (zero mode, unpaired Nyquist) see `σ = 0`.
    pub fn apply_s_multiplier(&self, mu: impl Fn(f64) -> Complex64) -> Self {
        let g = self.grid.clone();
        match self.rep {
            super::Representation::Spectral => {
                let mut out = self.clone();
                let n_modes = g.n_modes();
                for k in 0..g.n_s {
                    let f = mu(g.sigma_eff(k));
                    for a in 0..n_modes {
                        out.data[k * n_modes + a] *= f;
                    }
                }
                out
            }
            super::Representation::Nodes => {
                let mut mixed = self.to_mixed();
                let n_ang = g.n_angular_nodes();
                for k in 0..g.n_s {
                    let f = mu(g.sigma_eff(k));
                    for j in 0..n_ang {
                        mixed[k * n_ang + j] *= f;
                    }
                }
                Self::from_mixed(g, &mixed)
            }
        }
    }

    /// Apply a joint multiplier `μ(σ, λ)` coefficient-wise in the full
    /// spectral basis (band-limits the angular content).
    pub fn apply_multiplier(&self, mu: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut sp = self.spectral();
        let g = sp.grid.clone();
        let n_modes = g.n_modes();
        for k in 0..g.n_s {
            let sigma = g.sigma_eff(k);
            for (a, md) in g.modes.iter().enumerate() {
                sp.data[k * n_modes + a] *= mu(sigma, md.lambda);
            }
        }
        sp
    }

    /// `D_s = -i ∂_s` (frequency multiplier `σ`).
    pub fn d_s(&self) -> Self {
        self.apply_s_multiplier(|s| Complex64::new(s, 0.0))
    }

    /// `∂_s` (multiplier `iσ`).
    pub fn ds_derivative(&self) -> Self {
        self.apply_s_multiplier(|s| Complex64::new(0.0, s))
    }

    /// `|D_s|^{1/2}`, zero on the excluded modes.
    pub fn abs_ds_sqrt(&self) -> Self {
        self.apply_s_multiplier(|s| Complex64::new(s.abs().sqrt(), 0.0))
    }

    /// Frequency-sign projection `π_+ = 1_{ℝ+}(D_s)` (½ on excluded modes).
    pub fn pi_plus(&self) -> Self {
        self.apply_s_multiplier(|s| {
            Complex64::new(
                match s.partial_cmp(&0.0).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                },
                0.0,
            )
        })
    }

    /// Frequency-sign projection `π_- = 1_{ℝ-}(D_s)` (½ on excluded modes).
    pub fn pi_minus(&self) -> Self {
        self.apply_s_multiplier(|s| {
            Complex64::new(
                match s.partial_cmp(&0.0).unwrap() {
                    std::cmp::Ordering::Less => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Greater => 0.0,
                },
                0.0,
            )
        })
    }
}

/// Boundary symplectic form
/// `σ_C(g₁, g₂) = ∫ (∂_s ḡ₁ g₂ − ḡ₁ ∂_s g₂) |m|^{1/2} ds dθ`,
/// evaluated by node quadrature with spectral `s`-differentiation.
pub fn symplectic_form(
    g1: &BoundaryFunction,
    g2: &BoundaryFunction,
) -> Result<Complex64, BoundaryOpError> {
    if !g1.grid.compatible(&g2.grid) {
        return Err(BoundaryOpError::GridMismatch);
    }
    let grid = &g1.grid;
    let d1 = g1.ds_derivative().nodes();
    let d2 = g2.ds_derivative().nodes();
    let n1 = g1.nodes();
    let n2 = g2.nodes();
    let n_ang = grid.n_angular_nodes();
    let ds = grid.ds();
    let mut acc = Complex64::ZERO;
    for i in 0..grid.n_s {
        for (j, w) in grid.node_weights.iter().enumerate() {
            let idx = i * n_ang + j;
            acc += (d1.data[idx].conj() * n2.data[idx] - n1.data[idx].conj() * d2.data[idx])
                * (w * ds);
        }
    }
    Ok(acc)
}

/// Charge pairing `⟨g₁, D_s g₂⟩` in the spectral representation; the charge
/// identity states `i σ_C(g₁, g₂) = 2 ⟨g₁, D_s g₂⟩`.
pub fn ds_pairing(g1: &BoundaryFunction, g2: &BoundaryFunction) -> Complex64 {
    g1.inner(&g2.d_s())
}

/// Sobolev bi-norm `‖⟨D_s⟩^k ⟨D_θ⟩^{k'} g‖` with
/// `⟨D_θ⟩ = (1 - Δ_{S^{d-1}})^{1/2}`.
pub fn sobolev_norm(g: &BoundaryFunction, k: f64, kp: f64) -> f64 {
    g.apply_multiplier(|s, lam| {
        Complex64::new((1.0 + s * s).powf(k / 2.0) * (1.0 + lam).powf(kp / 2.0), 0.0)
    })
    .l2_norm()
}

/// Weighted norm `‖ψ‖₁` of the cone cap space:
/// `∫ r^{-1}(|∂_s ψ|² + |∂_θ ψ|² + |ψ|²) ds dθ` with `r = e^s`,
/// for ψ supported in `{s < s₀}`.
///
/// Returns `SupportViolation` if more than `10⁻¹⁰` of the relative `L²` mass
/// sits above the cap.
pub fn weighted_cone_norm(psi: &BoundaryFunction, s_cap: f64) -> Result<f64, WeightedNormError> {
    let grid = &psi.grid;
    let nd = psi.nodes();
    let n_ang = grid.n_angular_nodes();
    // Support check.
    let mut inside = 0.0;
    let mut outside = 0.0;
    for i in 0..grid.n_s {
        let s = grid.s_at(i);
        for (j, w) in grid.node_weights.iter().enumerate() {
            let m = nd.data[i * n_ang + j].norm_sqr() * w;
            if s <= s_cap {
                inside += m;
            } else {
                outside += m;
            }
        }
    }
    let total = inside + outside;
    if total > 0.0 && outside / total > 1e-10 {
        return Err(WeightedNormError::SupportViolation(outside / total));
    }
    Ok(weighted_quadratic_form(psi, |s| (-s).exp()).sqrt())
}

/// Quadrature of `∫ w(s) (|∂_s ψ|² + |∂_θ ψ|² + |ψ|²) ds dθ` for a positive
/// `s`-weight: the angular Dirichlet term is evaluated spectrally per slice.
pub(crate) fn weighted_quadratic_form(psi: &BoundaryFunction, weight: impl Fn(f64) -> f64) -> f64 {
    let grid = &psi.grid;
    let n_ang = grid.n_angular_nodes();
    let n_modes = grid.n_modes();
    let ds = grid.ds();
    let nd = psi.nodes();
    let dsd = psi.ds_derivative().nodes();
    let mut acc = 0.0;
    let mut slice_coeffs = vec![Complex64::ZERO; n_modes];
    for i in 0..grid.n_s {
        let w_s = weight(grid.s_at(i)) * ds;
        // Pointwise terms.
        for (j, w) in grid.node_weights.iter().enumerate() {
            let idx = i * n_ang + j;
            acc += w_s * w * (dsd.data[idx].norm_sqr() + nd.data[idx].norm_sqr());
        }
        // Angular Dirichlet energy via per-slice analysis:
        // ∫ |∂_θψ|² dθ = Σ_a λ_a |c_a|².
        for (a, c) in slice_coeffs.iter_mut().enumerate() {
            let mut s = Complex64::ZERO;
            for (j, w) in grid.node_weights.iter().enumerate() {
                s += nd.data[i * n_ang + j] * (w * grid.synth[j][a]);
            }
            *c = s;
        }
        for (a, md) in grid.modes.iter().enumerate() {
            acc += w_s * md.lambda * slice_coeffs[a].norm_sqr();
        }
    }
    acc
}

/// Radial probe for the Hardy quotient: an analytic profile `g(r)` with its
/// derivative, carried on a single angular mode of degree `l`.
pub struct HardyProbe<'a> {
    pub profile: &'a dyn Fn(f64) -> f64,
    pub dprofile: &'a dyn Fn(f64) -> f64,
    /// Angular mode degree (Laplace eigenvalue `l(l+1)` for d=3, `l²` d=2).
    pub l: usize,
    /// Support radius: probe vanishes at `r_max` (cap boundary).
    pub r_max: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HardyReport {
    /// `[∫(r^{d−1}|∂_r g|² + r^{d−3}|∂_θ g|²)] / [∫ r^{d−3}|g|²]`.
    pub ratio: f64,
    /// False for `d < 3`: the Hardy inequality has no positive constant.
    pub dimension_ok: bool,
}

/// Hardy quotient of a radial probe, by high-order Gauss–Legendre quadrature
/// in `r` on `(0, r_max)`.
pub fn hardy_check(probe: &HardyProbe, d: usize) -> HardyReport {
    let n = 256;
    let (xg, wg) = crate::util::quadrature::gauss_legendre(n);
    let lam = match d {
        3 => (probe.l * (probe.l + 1)) as f64,
        _ => (probe.l * probe.l) as f64,
    };
    let half = probe.r_max / 2.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, w) in xg.iter().zip(&wg) {
        let r = half * (x + 1.0);
        let w = w * half;
        let g = (probe.profile)(r);
        let dg = (probe.dprofile)(r);
        let rp1 = r.powi(d as i32 - 1);
        let rp3 = r.powi(d as i32 - 3);
        num += w * (rp1 * dg * dg + rp3 * lam * g * g);
        den += w * rp3 * g * g;
    }
    HardyReport {
        ratio: num / den,
        dimension_ok: d >= 3,
    }
}

/// The null-coordinate shift map `U g(s, θ) = g(s + b(θ), θ)`, realized as
/// the spectral phase `e^{iσ_k b(θ_j)}` in the mixed representation (exactly
/// unitary on the grid).
pub struct ShiftMap {
    pub grid: Arc<BoundaryGrid>,
    /// `b` sampled at the angular nodes.
    pub b_nodes: Vec<f64>,
    /// Heuristic aliasing flag: raised when the phase bandwidth
    /// (`σ_max · max|b| · bandwidth(b)`) exceeds the angular Nyquist degree.
    pub aliasing_warning: bool,
}

impl ShiftMap {
    pub fn new(grid: Arc<BoundaryGrid>, b: impl Fn(f64, f64) -> f64) -> Self {
        let b_nodes: Vec<f64> = grid.nodes.iter().map(|&(x, phi)| b(x, phi)).collect();
        // Angular bandwidth of b from its spectrum.
        let coeffs: Vec<f64> = (0..grid.n_modes())
            .map(|a| {
                grid.node_weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * grid.synth[j][a] * b_nodes[j])
                    .sum::<f64>()
            })
            .collect();
        let cmax = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let l_b = grid
            .modes
            .iter()
            .zip(&coeffs)
            .filter(|(_, c)| c.abs() > 1e-12 * cmax.max(1e-300))
            .map(|(md, _)| md.l)
            .max()
            .unwrap_or(0);
        let bmax = b_nodes.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let aliasing_warning =
            l_b > 0 && grid.sigma_max() * bmax * l_b as f64 > grid.l_max as f64;
        Self {
            grid,
            b_nodes,
            aliasing_warning,
        }
    }

    fn apply_phase(&self, g: &BoundaryFunction, sign: f64) -> BoundaryFunction {
        assert!(g.grid.compatible(&self.grid));
        let mut mixed = g.to_mixed();
        let n_ang = self.grid.n_angular_nodes();
        for k in 0..self.grid.n_s {
            let sigma = self.grid.sigma_eff(k);
            for (j, b) in self.b_nodes.iter().enumerate() {
                mixed[k * n_ang + j] *= Complex64::new(0.0, sign * sigma * b).exp();
            }
        }
        BoundaryFunction::from_mixed(g.grid.clone(), &mixed)
    }

    /// `U g`.
    pub fn apply(&self, g: &BoundaryFunction) -> BoundaryFunction {
        self.apply_phase(g, 1.0)
    }

    /// `U⁻¹ g = U(-b) g`.
    pub fn apply_inverse(&self, g: &BoundaryFunction) -> BoundaryFunction {
        self.apply_phase(g, -1.0)
    }

    /// Quadrature matrix of multiplication by `b` on the angular mode basis
    /// (hermitian; used to exponentiate `U` per s-frequency for operator
    /// conjugation).
    pub fn angular_multiplication_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.grid.n_modes();
        nalgebra::DMatrix::from_fn(n, n, |a, b| {
            self.grid
                .node_weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * self.grid.synth[j][a] * self.b_nodes[j] * self.grid.synth[j][b])
                .sum()
        })
    }
}
