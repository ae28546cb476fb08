//! Cone-defining functions and validation of the normalization hypothesis
//! (`f = 0` on the cone, `∇f(p) = 0`, `Hess f(p) = −2g(p)`).

use super::chart::SpacetimeChart;
use super::GeometryError;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A scalar defining function of the cone, with the tip at the chart origin.
///
/// `Standard { scale }` is `f = scale·((y⁰)² − |ȳ|²)`; with
/// `scale = Ω(0)²` this satisfies the normalization hypothesis exactly for
/// both supported chart families (which share the flat null cone).
/// `DiagonalQuadratic` (`f = Σ c_a (y^a)²`) exists to exercise the
/// validation failure paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConeDefiningFunction {
    Standard { scale: f64 },
    DiagonalQuadratic { coeffs: Vec<f64> },
}

impl ConeDefiningFunction {
    /// The defining function matched to a chart (`scale = Ω(0)²`).
    pub fn standard(chart: &SpacetimeChart) -> Self {
        let origin = vec![0.0; chart.n()];
        Self::Standard {
            scale: chart.omega(&origin).powi(2),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Standard { scale } => {
                let rho2: f64 = x[1..].iter().map(|v| v * v).sum();
                scale * (x[0] * x[0] - rho2)
            }
            Self::DiagonalQuadratic { coeffs } => {
                coeffs.iter().zip(x).map(|(c, v)| c * v * v).sum()
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Standard { scale } => {
                let mut g = vec![0.0; x.len()];
                g[0] = 2.0 * scale * x[0];
                for i in 1..x.len() {
                    g[i] = -2.0 * scale * x[i];
                }
                g
            }
            Self::DiagonalQuadratic { coeffs } => {
                coeffs.iter().zip(x).map(|(c, v)| 2.0 * c * v).collect()
            }
        }
    }

    /// Generator field `−∇^a f = −g^{ab} ∂_b f`.
    pub fn generator(&self, chart: &SpacetimeChart, x: &[f64]) -> Vec<f64> {
        let grad = self.gradient(x);
        let ginv = chart.inverse_metric(x);
        (0..x.len())
            .map(|a| -(0..x.len()).map(|b| ginv[(a, b)] * grad[b]).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Max |f| over projected cone samples.
    pub on_cone_residual: f64,
    /// |∇f| at the tip.
    pub tip_gradient: f64,
    /// Max entry of `FD-Hess f(p) + 2g(p)`.
    pub hessian_residual: f64,
    /// Smallest |∇f| over cone samples away from the tip.
    pub min_cone_gradient: f64,
}

/// Validate the normalization hypothesis: `f` vanishes on sampled cone
/// points, its gradient vanishes at the tip and nowhere else on the cone,
/// and the finite-difference Hessian at the tip equals `−2g(p)`.
pub fn validate_hypothesis(
    chart: &SpacetimeChart,
    f: &ConeDefiningFunction,
) -> Result<ValidationReport, GeometryError> {
    let n = chart.n();
    let origin = vec![0.0; n];
    let tip_grad_vec = f.gradient(&origin);
    let tip_gradient = tip_grad_vec.iter().map(|v| v * v).sum::<f64>().sqrt();

    // Finite-difference Hessian at the tip.
    let h = 1e-4;
    let mut hess = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut xpp = origin.clone();
            let mut xpm = origin.clone();
            let mut xmp = origin.clone();
            let mut xmm = origin.clone();
            xpp[a] += h;
            xpp[b] += h;
            xpm[a] += h;
            xpm[b] -= h;
            xmp[a] -= h;
            xmp[b] += h;
            xmm[a] -= h;
            xmm[b] -= h;
            hess[(a, b)] =
                (f.value(&xpp) - f.value(&xpm) - f.value(&xmp) + f.value(&xmm)) / (4.0 * h * h);
        }
    }
    let target = chart.metric(&origin) * -2.0;
    let hessian_residual = (&hess - &target).amax();
    if hessian_residual > 1e-4 {
        return Err(GeometryError::HessianMismatch(hessian_residual));
    }

    // Cone samples: root-find the crossing time above a fan of directions
    // and radii, then check f ≈ 0 and ∇f ≠ 0 there.
    let mut on_cone_residual = 0.0f64;
    let mut min_cone_gradient = f64::INFINITY;
    let dirs = sample_directions(chart.d());
    for radius in [0.05, 0.2, 0.5, 1.0] {
        for dir in &dirs {
            let mut x = vec![0.0; n];
            for i in 1..n {
                x[i] = radius * dir[i - 1];
            }
            let t = bracketed_root(|t| f.value(&with_time(&x, t)), 0.0, 4.0 * radius)
                .ok_or(GeometryError::NoRoot(radius))?;
            let xc = with_time(&x, t);
            on_cone_residual = on_cone_residual.max(f.value(&xc).abs());
            let g = f.gradient(&xc);
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            min_cone_gradient = min_cone_gradient.min(gn);
        }
    }
    if min_cone_gradient <= 1e-10 {
        return Err(GeometryError::NonVanishingGradientOnCone);
    }
    Ok(ValidationReport {
        on_cone_residual,
        tip_gradient,
        hessian_residual,
        min_cone_gradient,
    })
}

fn with_time(x: &[f64], t: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[0] = t;
    y
}

fn sample_directions(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    match d {
        2 => {
            for k in 0..8 {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
                dirs.push(vec![phi.cos(), phi.sin()]);
            }
        }
        _ => {
            for i in 0..4 {
                for k in 0..6 {
                    let mu = -0.9 + 0.6 * i as f64;
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / 6.0;
                    let st = (1.0 - mu * mu).sqrt();
                    dirs.push(vec![st * phi.cos(), st * phi.sin(), mu]);
                }
            }
        }
    }
    dirs
}

/// Bisection on `[lo, hi]` after scanning for a sign change; `None` if the
/// function never crosses zero on the bracket.
pub(crate) fn bracketed_root(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    let n_scan = 64;
    let step = (hi - lo) / n_scan as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=n_scan {
        let b = lo + i as f64 * step;
        let fb = f(b);
        if fa == 0.0 {
            return Some(a);
        }
        if fa * fb < 0.0 {
            let (mut a, mut b, mut fa) = (a, b, fa);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 {
                    return Some(m);
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            return Some(0.5 * (a + b));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        Some(a)
    } else {
        None
    }
}
