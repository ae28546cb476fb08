//! Shared numerical utilities: adaptive ODE integration, Gauss–Legendre
//! quadrature, real spherical harmonics, and least-squares line fits.

pub mod harmonics;
pub mod ode;
pub mod quadrature;

/// Least-squares fit of `y ≈ slope * x + intercept`.
///
/// Returns `(slope, intercept, rms_residual)`. Panics if fewer than two
/// points are supplied.
pub fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "line fit needs at least two points");
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.25).collect();
        let (a, b, r) = line_fit(&x, &y);
        assert!((a - 2.5).abs() < 1e-12);
        assert!((b + 1.25).abs() < 1e-12);
        assert!(r < 1e-12);
    }
}
