//! Real spherical harmonics on S², orthonormal with respect to the round
//! measure `sin θ dθ dφ`.

/// Fully normalized associated Legendre value `P̄_{ℓm}(x)` (without the
/// Condon–Shortley phase), so that `P̄_{ℓ0}` is the `m = 0` real harmonic and
/// `√2 P̄_{ℓm} cos(mφ)`, `√2 P̄_{ℓm} sin(mφ)` complete the basis.
pub fn normalized_assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    assert!(m <= l);
    let sx = (1.0 - x * x).max(0.0).sqrt();
    // Seed: P̄_mm by the closed-form product.
    let mut pmm = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * sx;
    }
    if l == m {
        return pmm;
    }
    // P̄_{m+1,m}
    let mut p_prev = pmm;
    let mut p_curr = x * (2.0 * m as f64 + 3.0).sqrt() * pmm;
    if l == m + 1 {
        return p_curr;
    }
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
            .sqrt();
        let p_next = a * (x * p_curr - b * p_prev);
        p_prev = p_curr;
        p_curr = p_next;
    }
    p_curr
}

/// Real spherical harmonic `Y_{ℓm}(θ, φ)` with `m ∈ [-ℓ, ℓ]`:
/// cosine branch for `m > 0`, sine branch for `m < 0`.
pub fn real_sph_harm(l: usize, m: i64, cos_theta: f64, phi: f64) -> f64 {
    let mabs = m.unsigned_abs() as usize;
    let p = normalized_assoc_legendre(l, mabs, cos_theta);
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => p,
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * p * (mabs as f64 * phi).cos(),
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * p * (mabs as f64 * phi).sin(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::quadrature::gauss_legendre;

    /// Orthonormality under Gauss–Legendre × uniform-azimuth quadrature,
    /// which is exact for products of harmonics up to the tested degree.
    #[test]
    fn orthonormal_under_product_quadrature() {
        let lmax = 5usize;
        let (xg, wg) = gauss_legendre(lmax + 1);
        let naz = 2 * lmax + 2;
        let dphi = 2.0 * std::f64::consts::PI / naz as f64;
        let modes: Vec<(usize, i64)> = (0..=lmax)
            .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
            .collect();
        for (i, &(l1, m1)) in modes.iter().enumerate() {
            for &(l2, m2) in &modes[i..] {
                let mut acc = 0.0;
                for (x, w) in xg.iter().zip(&wg) {
                    for k in 0..naz {
                        let phi = k as f64 * dphi;
                        acc += w * dphi
                            * real_sph_harm(l1, m1, *x, phi)
                            * real_sph_harm(l2, m2, *x, phi);
                    }
                }
                let expect = if (l1, m1) == (l2, m2) { 1.0 } else { 0.0 };
                assert!(
                    (acc - expect).abs() < 1e-12,
                    "({l1},{m1})·({l2},{m2}) = {acc}"
                );
            }
        }
    }

    #[test]
    fn matches_low_order_closed_forms() {
        let inv_sqrt_4pi = (4.0 * std::f64::consts::PI).powf(-0.5);
        assert!((real_sph_harm(0, 0, 0.3, 1.0) - inv_sqrt_4pi).abs() < 1e-14);
        // Y_{1,0} = sqrt(3/4π) cos θ
        let y10 = real_sph_harm(1, 0, 0.3, 0.0);
        assert!((y10 - 3.0f64.sqrt() * inv_sqrt_4pi * 0.3).abs() < 1e-14);
    }
}
