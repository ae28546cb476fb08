//! Boundary grid: `s`-line discretization, angular quadrature, spectral mode
//! bookkeeping, and the admissible (zero-mean-excluded) index set.

use crate::util::harmonics::real_sph_harm;
use crate::util::quadrature::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("N_s must be a power of two ≥ 8, got {0}")]
    BadSampleCount(usize),
    #[error("s_max must exceed s_min")]
    BadInterval,
    #[error("unsupported spatial dimension d = {0} (supported: 2, 3)")]
    BadDimension(usize),
    #[error("angular quadrature failed exactness check: residual {0:.3e}")]
    QuadratureInexact(f64),
}

/// One angular basis element.
///
/// For `d = 3` this is a real spherical harmonic `(ℓ, m)`; for `d = 2` a real
/// circle mode (`ℓ` holds `|m|`, `m` distinguishes the cosine/sine branch).
/// `lambda` is the Laplace–Beltrami eigenvalue of `-Δ_{S^{d-1}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularMode {
    pub l: usize,
    pub m: i64,
    pub lambda: f64,
}

/// Immutable boundary grid shared by functions and operators.
#[derive(Debug)]
pub struct BoundaryGrid {
    /// Spatial dimension `d` of the bulk (boundary sphere is `S^{d-1}`).
    pub d: usize,
    /// Number of `s`-samples (power of two).
    pub n_s: usize,
    pub s_min: f64,
    pub s_max: f64,
    /// Maximum harmonic degree (d=3) or Fourier mode (d=2).
    pub l_max: usize,
    /// Angular modes, `(ℓ, m)` lexicographic.
    pub modes: Vec<AngularMode>,
    /// Angular node coordinates: `(cos θ, φ)` for d=3, `(0, φ)` for d=2.
    pub nodes: Vec<(f64, f64)>,
    /// Quadrature weights per angular node (integrating `|m|^{1/2} dθ`).
    pub node_weights: Vec<f64>,
    /// Synthesis table: `synth[j][a] = Y_a(θ_j)`.
    pub synth: Vec<Vec<f64>>,
    /// Fourier frequency per FFT index (`σ_k`, Nyquist counted negative).
    pub sigma: Vec<f64>,
    /// Admissible flat index list `(fft index k, angular mode a)`:
    /// all `σ_k > 0` entries first, then all `σ_k < 0`.
    pub admissible: Vec<(usize, usize)>,
    /// Number of admissible entries with `σ > 0`.
    pub n_plus: usize,
}

impl BoundaryGrid {
    pub fn new(
        d: usize,
        n_s: usize,
        s_min: f64,
        s_max: f64,
        l_max: usize,
    ) -> Result<Arc<Self>, GridError> {
        if n_s < 8 || !n_s.is_power_of_two() {
            return Err(GridError::BadSampleCount(n_s));
        }
        if s_max <= s_min {
            return Err(GridError::BadInterval);
        }
        let (modes, nodes, node_weights) = match d {
            3 => Self::sphere_basis(l_max),
            2 => Self::circle_basis(l_max),
            _ => return Err(GridError::BadDimension(d)),
        };
        let synth: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&(x, phi)| {
                modes
                    .iter()
                    .map(|md| match d {
                        3 => real_sph_harm(md.l, md.m, x, phi),
                        _ => circle_mode(md, phi),
                    })
                    .collect()
            })
            .collect();
        let period = s_max - s_min;
        let sigma: Vec<f64> = (0..n_s)
            .map(|k| {
                let kt = if k < n_s / 2 {
                    k as i64
                } else {
                    k as i64 - n_s as i64
                };
                2.0 * std::f64::consts::PI * kt as f64 / period
            })
            .collect();
        // Admissible modes: σ ≠ 0 and not the unpaired Nyquist frequency.
        // The Nyquist mode has no conjugate partner on the grid, so keeping
        // it would break the antisymmetry of D_s and the realness of ∂_s on
        // real data; it is treated like the zero mode (projected out).
        let n_modes = modes.len();
        let nyquist = n_s / 2;
        let mut admissible = Vec::with_capacity((n_s - 2) * n_modes);
        for k in 0..n_s {
            if sigma[k] > 0.0 && k != nyquist {
                for a in 0..n_modes {
                    admissible.push((k, a));
                }
            }
        }
        let n_plus = admissible.len();
        for k in 0..n_s {
            if sigma[k] < 0.0 && k != nyquist {
                for a in 0..n_modes {
                    admissible.push((k, a));
                }
            }
        }
        let grid = Self {
            d,
            n_s,
            s_min,
            s_max,
            l_max,
            modes,
            nodes,
            node_weights,
            synth,
            sigma,
            admissible,
            n_plus,
        };
        let residual = grid.quadrature_residual();
        if residual > 1e-12 {
            return Err(GridError::QuadratureInexact(residual));
        }
        Ok(Arc::new(grid))
    }

    fn sphere_basis(l_max: usize) -> (Vec<AngularMode>, Vec<(f64, f64)>, Vec<f64>) {
        let modes: Vec<AngularMode> = (0..=l_max)
            .flat_map(|l| {
                (-(l as i64)..=l as i64).map(move |m| AngularMode {
                    l,
                    m,
                    lambda: (l * (l + 1)) as f64,
                })
            })
            .collect();
        let n_pol = l_max + 1;
        let n_az = 2 * l_max + 2;
        let (xg, wg) = gauss_legendre(n_pol);
        let dphi = 2.0 * std::f64::consts::PI / n_az as f64;
        let mut nodes = Vec::with_capacity(n_pol * n_az);
        let mut weights = Vec::with_capacity(n_pol * n_az);
        for (x, w) in xg.iter().zip(&wg) {
            for j in 0..n_az {
                nodes.push((*x, j as f64 * dphi));
                weights.push(w * dphi);
            }
        }
        (modes, nodes, weights)
    }

    fn circle_basis(l_max: usize) -> (Vec<AngularMode>, Vec<(f64, f64)>, Vec<f64>) {
        let mut modes = vec![AngularMode {
            l: 0,
            m: 0,
            lambda: 0.0,
        }];
        for l in 1..=l_max {
            // m > 0: cosine branch; m < 0: sine branch (mirrors d=3 ordering).
            modes.push(AngularMode {
                l,
                m: -(l as i64),
                lambda: (l * l) as f64,
            });
            modes.push(AngularMode {
                l,
                m: l as i64,
                lambda: (l * l) as f64,
            });
        }
        let n = 2 * l_max + 2;
        let dphi = 2.0 * std::f64::consts::PI / n as f64;
        let nodes: Vec<(f64, f64)> = (0..n).map(|j| (0.0, j as f64 * dphi)).collect();
        let weights = vec![dphi; n];
        (modes, nodes, weights)
    }

    /// Max deviation of the discrete angular Gram matrix from the identity —
    /// the quadrature must integrate basis products (degree ≤ 2L) exactly.
    pub fn quadrature_residual(&self) -> f64 {
        let n = self.modes.len();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a..n {
                let mut acc = 0.0;
                for (j, w) in self.node_weights.iter().enumerate() {
                    acc += w * self.synth[j][a] * self.synth[j][b];
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((acc - expect).abs());
            }
        }
        worst
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_angular_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Total spectral mode count (including the excluded zero mode).
    pub fn mode_count(&self) -> usize {
        self.n_s * self.modes.len()
    }

    /// Dimension of the admissible space (zero `s`-mode excluded).
    pub fn admissible_dim(&self) -> usize {
        self.admissible.len()
    }

    pub fn ds(&self) -> f64 {
        (self.s_max - self.s_min) / self.n_s as f64
    }

    pub fn period(&self) -> f64 {
        self.s_max - self.s_min
    }

    pub fn s_at(&self, i: usize) -> f64 {
        self.s_min + i as f64 * self.ds()
    }

    /// Effective frequency seen by `s`-multipliers: 0 on the excluded modes
    /// (zero mode and unpaired Nyquist), `σ_k` otherwise.
    pub fn sigma_eff(&self, k: usize) -> f64 {
        if k == 0 || k == self.n_s / 2 {
            0.0
        } else {
            self.sigma[k]
        }
    }

    /// σ and angular eigenvalue for an admissible entry.
    pub fn admissible_sigma_lambda(&self, idx: usize) -> (f64, f64) {
        let (k, a) = self.admissible[idx];
        (self.sigma[k], self.modes[a].lambda)
    }

    /// Largest resolved |σ|.
    pub fn sigma_max(&self) -> f64 {
        std::f64::consts::PI * self.n_s as f64 / self.period()
    }

    /// Parameter fingerprint for cheap compatibility checks.
    pub fn fingerprint(&self) -> (usize, usize, u64, u64, usize) {
        (
            self.d,
            self.n_s,
            self.s_min.to_bits(),
            self.s_max.to_bits(),
            self.l_max,
        )
    }

    pub fn compatible(&self, other: &Self) -> bool {
        self.fingerprint() == other.fingerprint()
    }
}

fn circle_mode(md: &AngularMode, phi: f64) -> f64 {
    use std::f64::consts::PI;
    if md.l == 0 {
        (2.0 * PI).powf(-0.5)
    } else if md.m > 0 {
        (md.l as f64 * phi).cos() / PI.sqrt()
    } else {
        (md.l as f64 * phi).sin() / PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_grid_counts_and_exactness() {
        let g = BoundaryGrid::new(3, 128, -12.0, 4.0, 7).unwrap();
        assert_eq!(g.n_modes(), 64); // (L+1)^2
        assert_eq!(g.mode_count(), 128 * 64);
        // Zero mode and unpaired Nyquist excluded; ± blocks symmetric.
        assert_eq!(g.admissible_dim(), 126 * 64);
        assert!(g.quadrature_residual() <= 1e-12);
        assert_eq!(g.n_plus, 63 * 64);
    }

    #[test]
    fn circle_grid_counts_and_exactness() {
        let g = BoundaryGrid::new(2, 64, -12.0, 4.0, 7).unwrap();
        assert_eq!(g.n_modes(), 15); // 2L+1
        assert!(g.quadrature_residual() <= 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BoundaryGrid::new(3, 100, -12.0, 4.0, 7).is_err());
        assert!(BoundaryGrid::new(3, 128, 4.0, -12.0, 7).is_err());
        assert!(BoundaryGrid::new(5, 128, -12.0, 4.0, 7).is_err());
    }

    #[test]
    fn sigma_layout_and_admissible_partition() {
        let g = BoundaryGrid::new(3, 32, -8.0, 8.0, 1).unwrap();
        assert_eq!(g.sigma[0], 0.0);
        assert!(g.sigma[1] > 0.0);
        assert!(g.sigma[16] < 0.0); // Nyquist counted negative
        for idx in 0..g.n_plus {
            assert!(g.admissible_sigma_lambda(idx).0 > 0.0);
        }
        for idx in g.n_plus..g.admissible_dim() {
            assert!(g.admissible_sigma_lambda(idx).0 < 0.0);
        }
    }
}
