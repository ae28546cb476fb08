//! Analytic spacetime chart families around the base point (the cone tip at
//! the chart origin), mostly-plus signature.

use super::GeometryError;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// An analytic metric chart in coordinates `(y⁰, ȳ) ∈ ℝ^{1+d}` centered at
/// the base point.
///
/// `ConformalGaussian` is the conformally perturbed flat chart
/// `g = Ω(ȳ)² η` with a static, spatial conformal factor
/// `Ω = 1 + A e^{-|ȳ|²/w²}`; it shares the null cone of `η` through the
/// origin, which keeps the defining function exact while the metric, its
/// curvature, and the Klein–Gordon potential are genuinely non-flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SpacetimeChart {
    Minkowski { d: usize },
    ConformalGaussian { d: usize, amplitude: f64, width: f64 },
}

impl SpacetimeChart {
    pub fn minkowski(d: usize) -> Self {
        Self::Minkowski { d }
    }

    pub fn conformal_gaussian(d: usize, amplitude: f64, width: f64) -> Self {
        assert!(amplitude > -1.0, "conformal factor must stay positive");
        assert!(width > 0.0);
        Self::ConformalGaussian {
            d,
            amplitude,
            width,
        }
    }

    /// Spatial dimension `d`.
    pub fn d(&self) -> usize {
        match self {
            Self::Minkowski { d } | Self::ConformalGaussian { d, .. } => *d,
        }
    }

    /// Chart dimension `n = d + 1`.
    pub fn n(&self) -> usize {
        self.d() + 1
    }

    /// Conformal factor `Ω(ȳ)` (1 for Minkowski).
    pub fn omega(&self, x: &[f64]) -> f64 {
        match self {
            Self::Minkowski { .. } => 1.0,
            Self::ConformalGaussian {
                amplitude, width, ..
            } => {
                let rho2: f64 = x[1..].iter().map(|v| v * v).sum();
                1.0 + amplitude * (-rho2 / (width * width)).exp()
            }
        }
    }

    /// Spatial gradient `∂_i Ω` (index `i = 1..n`; the time slot is 0).
    pub fn grad_omega(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        match self {
            Self::Minkowski { .. } => vec![0.0; n],
            Self::ConformalGaussian { width, .. } => {
                let om1 = self.omega(x) - 1.0;
                let mut g = vec![0.0; n];
                for i in 1..n {
                    g[i] = om1 * (-2.0 * x[i] / (width * width));
                }
                g
            }
        }
    }

    pub fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let s = self.omega(x).powi(2);
        DMatrix::from_fn(n, n, |a, b| {
            if a != b {
                0.0
            } else if a == 0 {
                -s
            } else {
                s
            }
        })
    }

    pub fn inverse_metric(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let s = self.omega(x).powi(-2);
        DMatrix::from_fn(n, n, |a, b| {
            if a != b {
                0.0
            } else if a == 0 {
                -s
            } else {
                s
            }
        })
    }

    /// Klein–Gordon potential: 0 for Minkowski; the conformal-coupling term
    /// `(n-2)/(4(n-1))·R` for the curved chart, with the scalar curvature of
    /// `Ω²η` evaluated in closed form from `ln Ω`.
    pub fn potential(&self, x: &[f64]) -> f64 {
        match self {
            Self::Minkowski { .. } => 0.0,
            Self::ConformalGaussian { d, width, .. } => {
                let n = (*d + 1) as f64;
                let w2 = width * width;
                let om = self.omega(x);
                let om1 = om - 1.0;
                let rho2: f64 = x[1..].iter().map(|v| v * v).sum();
                // Ω is static: □_η ln Ω = Δ ln Ω (mostly-plus signature).
                let grad_om_sq = om1 * om1 * 4.0 * rho2 / (w2 * w2);
                let lap_om = om1 * (4.0 * rho2 / (w2 * w2) - 2.0 * *d as f64 / w2);
                let grad_ln_sq = grad_om_sq / (om * om);
                let lap_ln = lap_om / om - grad_ln_sq;
                let ricci_scalar =
                    -om.powi(-2) * (2.0 * (n - 1.0) * lap_ln + (n - 1.0) * (n - 2.0) * grad_ln_sq);
                (n - 2.0) / (4.0 * (n - 1.0)) * ricci_scalar
            }
        }
    }

    /// Flat retarded null coordinate `v = y⁰ + |ȳ|` (both chart families
    /// share the flat null cone through the origin).
    pub fn flat_v(&self, x: &[f64]) -> f64 {
        let r: f64 = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        x[0] + r
    }

    /// Gradient of `flat_v` (singular at `ȳ = 0`; callers stay off the tip).
    pub fn grad_flat_v(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let r: f64 = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut g = vec![0.0; n];
        g[0] = 1.0;
        if r > 0.0 {
            for i in 1..n {
                g[i] = x[i] / r;
            }
        }
        g
    }

    /// Check the chart invariants (symmetry, signature, inverse residual)
    /// at a set of sample points.
    pub fn check_invariants(&self, samples: &[Vec<f64>]) -> Result<(), GeometryError> {
        let n = self.n();
        for x in samples {
            let g = self.metric(x);
            let det = g.determinant();
            if det.abs() <= 1e-12 {
                return Err(GeometryError::BadMetric(format!(
                    "degenerate metric (|det| = {det:.3e})"
                )));
            }
            let eigs = g.clone().symmetric_eigen().eigenvalues;
            let negatives = eigs.iter().filter(|&&e| e < 0.0).count();
            if negatives != 1 {
                return Err(GeometryError::BadMetric(format!(
                    "wrong signature ({negatives} negative eigenvalues)"
                )));
            }
            let resid = (self.inverse_metric(x) * &g - DMatrix::<f64>::identity(n, n)).norm();
            if resid > 1e-10 {
                return Err(GeometryError::BadMetric(format!(
                    "inverse residual {resid:.3e}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for i in 0..20 {
            let t = i as f64;
            out.push((0..n).map(|a| 0.3 * ((t + a as f64) * 0.77).sin()).collect());
        }
        out
    }

    #[test]
    fn chart_invariants_hold() {
        for chart in [
            SpacetimeChart::minkowski(3),
            SpacetimeChart::minkowski(2),
            SpacetimeChart::conformal_gaussian(3, 0.1, 1.0),
        ] {
            chart.check_invariants(&samples(chart.n())).unwrap();
        }
    }

    #[test]
    fn potential_matches_finite_difference_curvature() {
        // Cross-check the closed-form conformal potential against a finite
        // difference of the conformal Laplacian identity:
        // R = -Ω⁻²(2(n-1)Δ lnΩ + (n-1)(n-2)|∇lnΩ|²) for static Ω.
        let chart = SpacetimeChart::conformal_gaussian(3, 0.2, 0.9);
        let x = vec![0.0, 0.31, -0.12, 0.44];
        let h = 1e-5;
        let ln_om = |y: &[f64]| chart.omega(y).ln();
        let mut lap = 0.0;
        let mut grad_sq = 0.0;
        for i in 1..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            lap += (ln_om(&xp) - 2.0 * ln_om(&x) + ln_om(&xm)) / (h * h);
            grad_sq += ((ln_om(&xp) - ln_om(&xm)) / (2.0 * h)).powi(2);
        }
        let n = 4.0;
        let r_fd = -chart.omega(&x).powi(-2) * (2.0 * (n - 1.0) * lap + (n - 1.0) * (n - 2.0) * grad_sq);
        let pot_fd = (n - 2.0) / (4.0 * (n - 1.0)) * r_fd;
        assert!((chart.potential(&x) - pot_fd).abs() < 1e-6);
        assert_eq!(SpacetimeChart::minkowski(3).potential(&x), 0.0);
    }

    #[test]
    fn config_round_trip() {
        let chart = SpacetimeChart::conformal_gaussian(3, 0.1, 1.25);
        let text = serde_json::to_string(&chart).unwrap();
        assert!(text.contains("conformal-gaussian"));
        let back: SpacetimeChart = serde_json::from_str(&text).unwrap();
        assert_eq!(chart, back);
    }
}
