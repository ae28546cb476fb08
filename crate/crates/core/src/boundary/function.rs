//! Complex fields on the discretized boundary with dual node/spectral
//! representations.

use super::grid::BoundaryGrid;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    /// Values at `(s_i, θ_j)` nodes, layout `i * n_angular + j`.
    Nodes,
    /// Coefficients in the basis `e^{iσ_k (s-s_min)}/√T ⊗ Y_a`,
    /// layout `k * n_modes + a`.
    Spectral,
}

/// A complex field on the boundary grid.
#[derive(Debug, Clone)]
pub struct BoundaryFunction {
    pub grid: Arc<BoundaryGrid>,
    pub rep: Representation,
    pub data: Vec<Complex64>,
}

fn fft_in_place(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    fft.process(data);
}

impl BoundaryFunction {
    pub fn from_nodes(grid: Arc<BoundaryGrid>, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), grid.n_s * grid.n_angular_nodes());
        Self {
            grid,
            rep: Representation::Nodes,
            data,
        }
    }

    pub fn from_spectral(grid: Arc<BoundaryGrid>, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), grid.n_s * grid.n_modes());
        Self {
            grid,
            rep: Representation::Spectral,
            data,
        }
    }

    pub fn zero(grid: Arc<BoundaryGrid>) -> Self {
        let n = grid.n_s * grid.n_modes();
        Self {
            grid,
            rep: Representation::Spectral,
            data: vec![Complex64::ZERO; n],
        }
    }

    /// Sample an analytic function `f(s, cosθ, φ)` at the grid nodes.
    pub fn sample(grid: Arc<BoundaryGrid>, f: impl Fn(f64, f64, f64) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.n_s * grid.n_angular_nodes());
        for i in 0..grid.n_s {
            let s = grid.s_at(i);
            for &(x, phi) in &grid.nodes {
                data.push(f(s, x, phi));
            }
        }
        Self::from_nodes(grid, data)
    }

    /// Mixed representation: FFT over `s` only, values per angular node.
    /// Layout `k * n_angular + j`; coefficients are in the `e_k(s)` basis
    /// (already `√T/N`-normalized).
    pub fn to_mixed(&self) -> Vec<Complex64> {
        let g = &self.grid;
        let (n_s, n_ang, n_modes) = (g.n_s, g.n_angular_nodes(), g.n_modes());
        match self.rep {
            Representation::Nodes => {
                let scale = g.period().sqrt() / n_s as f64;
                let mut mixed = vec![Complex64::ZERO; n_s * n_ang];
                let mut col = vec![Complex64::ZERO; n_s];
                for j in 0..n_ang {
                    for i in 0..n_s {
                        col[i] = self.data[i * n_ang + j];
                    }
                    fft_in_place(&mut col, false);
                    for k in 0..n_s {
                        mixed[k * n_ang + j] = col[k] * scale;
                    }
                }
                mixed
            }
            Representation::Spectral => {
                let mut mixed = vec![Complex64::ZERO; n_s * n_ang];
                for k in 0..n_s {
                    for j in 0..n_ang {
                        let mut acc = Complex64::ZERO;
                        for a in 0..n_modes {
                            acc += self.data[k * n_modes + a] * g.synth[j][a];
                        }
                        mixed[k * n_ang + j] = acc;
                    }
                }
                mixed
            }
        }
    }

    /// Build from the mixed representation produced by [`Self::to_mixed`].
    pub fn from_mixed(grid: Arc<BoundaryGrid>, mixed: &[Complex64]) -> Self {
        let (n_s, n_ang) = (grid.n_s, grid.n_angular_nodes());
        assert_eq!(mixed.len(), n_s * n_ang);
        let scale = 1.0 / grid.period().sqrt();
        let mut data = vec![Complex64::ZERO; n_s * n_ang];
        let mut col = vec![Complex64::ZERO; n_s];
        for j in 0..n_ang {
            for k in 0..n_s {
                col[k] = mixed[k * n_ang + j];
            }
            fft_in_place(&mut col, true);
            for i in 0..n_s {
                data[i * n_ang + j] = col[i] * scale;
            }
        }
        Self::from_nodes(grid, data)
    }

    /// Return a spectral-representation copy (no-op if already spectral).
    pub fn spectral(&self) -> Self {
        if self.rep == Representation::Spectral {
            return self.clone();
        }
        let g = &self.grid;
        let (n_s, n_ang, n_modes) = (g.n_s, g.n_angular_nodes(), g.n_modes());
        let mixed = self.to_mixed();
        let mut coeffs = vec![Complex64::ZERO; n_s * n_modes];
        for k in 0..n_s {
            for a in 0..n_modes {
                let mut acc = Complex64::ZERO;
                for j in 0..n_ang {
                    acc += mixed[k * n_ang + j] * g.node_weights[j] * g.synth[j][a];
                }
                coeffs[k * n_modes + a] = acc;
            }
        }
        Self::from_spectral(self.grid.clone(), coeffs)
    }

    /// Return a node-representation copy (no-op if already nodes).
    pub fn nodes(&self) -> Self {
        if self.rep == Representation::Nodes {
            return self.clone();
        }
        let mixed = self.to_mixed();
        Self::from_mixed(self.grid.clone(), &mixed)
    }

    /// Coefficient vector on the admissible (σ ≠ 0) modes.
    pub fn admissible_vector(&self) -> nalgebra::DVector<Complex64> {
        let sp = self.spectral();
        let g = &self.grid;
        let n_modes = g.n_modes();
        nalgebra::DVector::from_iterator(
            g.admissible_dim(),
            g.admissible.iter().map(|&(k, a)| sp.data[k * n_modes + a]),
        )
    }

    /// Rebuild a spectral function from an admissible coefficient vector
    /// (zero mode set to zero).
    pub fn from_admissible_vector(
        grid: Arc<BoundaryGrid>,
        v: &nalgebra::DVector<Complex64>,
    ) -> Self {
        assert_eq!(v.len(), grid.admissible_dim());
        let n_modes = grid.n_modes();
        let mut coeffs = vec![Complex64::ZERO; grid.n_s * n_modes];
        for (idx, &(k, a)) in grid.admissible.iter().enumerate() {
            coeffs[k * n_modes + a] = v[idx];
        }
        Self::from_spectral(grid, coeffs)
    }

    /// Project out the excluded s-modes (σ = 0 and unpaired Nyquist).
    pub fn project_admissible(&self) -> Self {
        let mut sp = self.spectral();
        let n_modes = self.grid.n_modes();
        for k in 0..self.grid.n_s {
            if self.grid.sigma_eff(k) == 0.0 {
                for a in 0..n_modes {
                    sp.data[k * n_modes + a] = Complex64::ZERO;
                }
            }
        }
        sp
    }

    /// `L²` norm: quadrature in node rep, Parseval ℓ² in spectral rep.
    pub fn l2_norm(&self) -> f64 {
        match self.rep {
            Representation::Spectral => self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
            Representation::Nodes => {
                let g = &self.grid;
                let n_ang = g.n_angular_nodes();
                let ds = g.ds();
                let mut acc = 0.0;
                for i in 0..g.n_s {
                    for (j, w) in g.node_weights.iter().enumerate() {
                        acc += self.data[i * n_ang + j].norm_sqr() * w * ds;
                    }
                }
                acc.sqrt()
            }
        }
    }

    /// Pointwise linear combination `self + w * other` (same representation
    /// required of both inputs after conversion to spectral).
    pub fn add_scaled(&self, other: &Self, w: Complex64) -> Self {
        let a = self.spectral();
        let b = other.spectral();
        assert!(a.grid.compatible(&b.grid));
        let data = a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| x + w * y)
            .collect();
        Self::from_spectral(a.grid, data)
    }

    /// Inner product `⟨self, other⟩` (antilinear in the first slot).
    pub fn inner(&self, other: &Self) -> Complex64 {
        let a = self.spectral();
        let b = other.spectral();
        assert!(a.grid.compatible(&b.grid));
        a.data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    /// Apply the boundary-policy taper: cosine roll-off over the outer
    /// `frac` portion of the s-interval at each end (node representation).
    pub fn tapered(&self, frac: f64) -> Self {
        let g = self.grid.clone();
        let nd = self.nodes();
        let n_ang = g.n_angular_nodes();
        let width = frac * g.period();
        let mut data = nd.data;
        for i in 0..g.n_s {
            let s = g.s_at(i);
            let edge = (s - g.s_min).min(g.s_max - s);
            if edge < width {
                let w = 0.5 * (1.0 - (std::f64::consts::PI * (1.0 - edge / width)).cos());
                for j in 0..n_ang {
                    data[i * n_ang + j] *= w;
                }
            }
        }
        Self::from_nodes(g, data)
    }

    /// Per-slice sup over angular nodes of |value|, used by decay fits.
    pub fn sup_profile(&self) -> Vec<f64> {
        let nd = self.nodes();
        let n_ang = self.grid.n_angular_nodes();
        (0..self.grid.n_s)
            .map(|i| {
                (0..n_ang)
                    .map(|j| nd.data[i * n_ang + j].norm())
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Serializable node-value container for import/export.
#[derive(Debug, Serialize, Deserialize)]
pub struct BoundaryFunctionFile {
    pub d: usize,
    pub n_s: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub l_max: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl BoundaryFunction {
    pub fn export(&self) -> BoundaryFunctionFile {
        let nd = self.nodes();
        BoundaryFunctionFile {
            d: self.grid.d,
            n_s: self.grid.n_s,
            s_min: self.grid.s_min,
            s_max: self.grid.s_max,
            l_max: self.grid.l_max,
            re: nd.data.iter().map(|c| c.re).collect(),
            im: nd.data.iter().map(|c| c.im).collect(),
        }
    }

    pub fn import(file: &BoundaryFunctionFile) -> Result<Self, super::grid::GridError> {
        let grid = BoundaryGrid::new(file.d, file.n_s, file.s_min, file.s_max, file.l_max)?;
        let data = file
            .re
            .iter()
            .zip(&file.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Ok(Self::from_nodes(grid, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_grid() -> Arc<BoundaryGrid> {
        BoundaryGrid::new(3, 32, -6.0, 2.0, 3).unwrap()
    }

    #[test]
    fn round_trip_band_limited() {
        let g = test_grid();
        // Band-limited: one s-mode times one harmonic.
        let sigma = g.sigma[3];
        let f = BoundaryFunction::sample(g.clone(), |s, x, _| {
            Complex64::new(0.0, sigma * (s + 6.0)).exp() * Complex64::new(x, 0.0)
        });
        let back = f.spectral().nodes();
        let err: f64 = f
            .data
            .iter()
            .zip(&back.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10 * f.l2_norm(), "round-trip error {err}");
    }

    #[test]
    fn parseval_node_vs_spectral() {
        let g = test_grid();
        let f = BoundaryFunction::sample(g, |s, x, phi| {
            Complex64::new((-(s + 2.0) * (s + 2.0)).exp() * (1.0 + 0.3 * x), 0.2 * phi.sin())
        });
        let n1 = f.l2_norm();
        let n2 = f.spectral().l2_norm();
        assert!((n1 - n2).abs() < 1e-10 * n1.max(1.0));
    }

    #[test]
    fn single_mode_lands_on_single_coefficient() {
        let g = test_grid();
        let sigma = g.sigma[2];
        let f = BoundaryFunction::sample(g.clone(), |s, x, phi| {
            Complex64::new(0.0, sigma * (s - g.s_min)).exp()
                * crate::util::harmonics::real_sph_harm(1, 0, x, phi)
        })
        .spectral();
        let n_modes = g.n_modes();
        // Expected coefficient magnitude: √T (basis is e^{iσ(s-s_min)}/√T).
        let a10 = g.modes.iter().position(|m| m.l == 1 && m.m == 0).unwrap();
        let c = f.data[2 * n_modes + a10];
        assert!((c.norm() - g.period().sqrt()).abs() < 1e-10);
        let total: f64 = f.data.iter().map(|c| c.norm_sqr()).sum();
        assert!((total - c.norm_sqr()).abs() < 1e-18 * total);
    }

    #[test]
    fn admissible_round_trip_and_projection() {
        let g = test_grid();
        let f = BoundaryFunction::sample(g.clone(), |s, x, _| {
            Complex64::new((-(s * s) / 4.0).exp() * x, 0.1)
        });
        let proj = f.project_admissible();
        let v = proj.admissible_vector();
        let back = BoundaryFunction::from_admissible_vector(g, &v);
        let diff: f64 = proj
            .data
            .iter()
            .zip(&back.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!(diff.sqrt() < 1e-14);
        assert!((v.norm() - proj.l2_norm()).abs() < 1e-10);
    }

    #[test]
    fn export_import_round_trip() {
        let g = test_grid();
        let f = BoundaryFunction::sample(g, |s, x, _| Complex64::new(s.cos() * x, s.sin()));
        let file = f.export();
        let back = BoundaryFunction::import(&file).unwrap();
        let err: f64 = f
            .nodes()
            .data
            .iter()
            .zip(&back.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-14);
    }
}
