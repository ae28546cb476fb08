//! Restriction of interior solutions to the cone, the symplectic
//! compatibility check of the restriction map, two-point pairings pulled
//! back from boundary covariances, and conformal rescalings.

use super::grid::{BulkField, BulkGrid, BulkSource, StorePolicy};
use super::solver::{causal_propagator, cone_fingerprint, pair_with_source, SolveOptions};
use super::BulkError;
use crate::boundary::{symplectic_form, BoundaryFunction};
use crate::geometry::{ConeChart, SpacetimeChart};
use crate::states::CovariancePair;
use num_complex::Complex64;

/// Boundary-policy taper fraction applied to every restricted trace.
pub(crate) const TAPER_FRAC: f64 = 0.05;

/// Restriction map: `(ρφ)(s, θ) = β⁻¹(s, θ) · φ(X(s, θ))`, multilinear in
/// space and linear in time, tapered per the boundary policy. (Admissible
/// coefficient extraction downstream drops the excluded modes; the node
/// values here stay faithful to the definition.)
///
/// Cone nodes above the last covered time level carry a zero trace: with
/// data supported strictly inside the Σ₀ ball the exact trace vanishes
/// above the Σ₀ level (the forward light cone of the support never meets
/// the cone again).
pub fn restrict_to_cone(field: &BulkField, cone: &ConeChart) -> Result<BoundaryFunction, BulkError> {
    let n = cone.grid.n_s * cone.grid.n_angular_nodes();
    let raw: Vec<f64> = match &field.cone_samples {
        Some((fp, samples)) if *fp == cone_fingerprint(cone) => samples.clone(),
        _ => {
            let dim = cone.chart.n();
            let t_hi = field.times.last().copied().unwrap_or(0.0);
            let mut out = vec![0.0; n];
            for (idx, slot) in out.iter_mut().enumerate() {
                let pos = &cone.positions[idx * dim..(idx + 1) * dim];
                let t = pos[0];
                if t > t_hi + 0.5 * field.grid.dt {
                    continue;
                }
                match field.value_at(t, &pos[1..]) {
                    Ok(v) => *slot = v,
                    Err(BulkError::InterpolationOutOfBounds) => {
                        // Spatially outside the box is only reachable above
                        // the Σ₀ level, where the trace vanishes.
                        if t <= field.grid.t1 + 0.5 * field.grid.dt {
                            return Err(BulkError::InterpolationOutOfBounds);
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
            out
        }
    };
    let data: Vec<Complex64> = raw
        .iter()
        .zip(&cone.beta)
        .map(|(v, b)| Complex64::new(v / b, 0.0))
        .collect();
    Ok(BoundaryFunction::from_nodes(cone.grid.clone(), data).tapered(TAPER_FRAC))
}

#[derive(Debug, Clone)]
pub struct MonomorphismReport {
    /// Boundary symplectic form of the two restricted traces.
    pub sigma_cone: f64,
    /// Slice symplectic form at the Σ₀ level.
    pub sigma_slice: f64,
    pub residual: f64,
}

/// Check that restriction preserves the symplectic form: the cone flux of
/// two solutions equals their Σ₀-slice symplectic form (same orientation,
/// no extra factor — both are fluxes of the same conserved current).
pub fn verify_monomorphism(
    f1: &BulkField,
    f2: &BulkField,
    cone: &ConeChart,
) -> Result<MonomorphismReport, BulkError> {
    let u1 = restrict_to_cone(f1, cone)?;
    let u2 = restrict_to_cone(f2, cone)?;
    let sigma_cone = symplectic_form(&u1, &u2)?.re;
    let sigma_slice = super::solver::bulk_symplectic_form(f1, f2, f1.grid.t1)?;
    let denom = sigma_slice.abs().max(1e-300);
    Ok(MonomorphismReport {
        sigma_cone,
        sigma_slice,
        residual: (sigma_cone - sigma_slice).abs() / denom,
    })
}

#[derive(Debug, Clone)]
pub struct TwoPointReport {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Bulk pairing `⟨u₁, E u₂⟩`.
    pub e_pairing: f64,
    /// `|Λ⁺ − Λ⁻ − i⟨u₁, Eu₂⟩| / |⟨u₁, Eu₂⟩|`.
    pub ccr_residual: f64,
}

/// Two-point pairings of a boundary state pulled back through the cone:
/// `Λ±(u₁, u₂) = ⟨ρEu₁, λ± ρEu₂⟩`, with the bulk CCR cross-check
/// `Λ⁺ − Λ⁻ = i⟨u₁, Eu₂⟩`.
pub fn bulk_two_point(
    pair: &CovariancePair,
    u1: &BulkSource,
    u2: &BulkSource,
    grid: &std::sync::Arc<BulkGrid>,
    chart: &SpacetimeChart,
    cone: &ConeChart,
) -> Result<TwoPointReport, BulkError> {
    assert!(
        pair.grid.compatible(&cone.grid),
        "state and cone live on different boundary grids"
    );
    let e1 = causal_propagator(
        u1,
        grid,
        chart,
        &SolveOptions {
            store: StorePolicy::None,
            cone: Some(cone),
        },
    )?;
    let e2 = causal_propagator(
        u2,
        grid,
        chart,
        &SolveOptions {
            store: StorePolicy::Window {
                t_lo: u1.t_lo - grid.dt,
                t_hi: u1.t_hi + grid.dt,
            },
            cone: Some(cone),
        },
    )?;
    let w1 = restrict_to_cone(&e1, cone)?.admissible_vector();
    let w2 = restrict_to_cone(&e2, cone)?;
    let w2p = pair.lambda_plus.apply_vec(&w2.admissible_vector());
    let w2m = pair.lambda_minus.apply_vec(&w2.admissible_vector());
    let lambda_plus: Complex64 = w1.iter().zip(w2p.iter()).map(|(a, b)| a.conj() * b).sum();
    let lambda_minus: Complex64 = w1.iter().zip(w2m.iter()).map(|(a, b)| a.conj() * b).sum();
    let e_pairing = pair_with_source(&e2, u1)?;
    let target = Complex64::new(0.0, e_pairing);
    let ccr_residual = (lambda_plus - lambda_minus - target).norm() / e_pairing.abs().max(1e-300);
    Ok(TwoPointReport {
        lambda_plus,
        lambda_minus,
        e_pairing,
        ccr_residual,
    })
}

/// Conformal rescaling between charts sharing the flat cone:
/// `φ′ = ω^{−(d−1)/2} φ` with `ω = Ω_new / Ω_old` (static, spatial), which
/// maps solutions of one chart's conformally coupled operator to the
/// other's and preserves the slice symplectic form.
pub fn conformal_transform(
    field: &BulkField,
    new_chart: &SpacetimeChart,
) -> Result<BulkField, BulkError> {
    if new_chart.d() != field.chart.d() {
        return Err(BulkError::ChartMismatch(
            "spatial dimensions differ".into(),
        ));
    }
    let grid = &field.grid;
    let d = grid.d;
    let mut omega = Vec::with_capacity(grid.n_nodes());
    let mut min_omega = f64::INFINITY;
    for flat in 0..grid.n_nodes() {
        let x = grid.point(flat);
        let mut e = vec![0.0; d + 1];
        e[1..].copy_from_slice(&x);
        let w = new_chart.omega(&e) / field.chart.omega(&e);
        min_omega = min_omega.min(w);
        omega.push(w);
    }
    if min_omega <= 0.0 {
        return Err(BulkError::NonPositiveOmega(min_omega));
    }
    let power = -0.5 * (d as f64 - 1.0);
    let scale: Vec<f64> = omega.iter().map(|w| w.powf(power)).collect();
    let mut out = field.clone();
    out.chart = new_chart.clone();
    for slice in out.phi.iter_mut().chain(out.phi_t.iter_mut()) {
        for (v, s) in slice.iter_mut().zip(&scale) {
            *v *= s;
        }
    }
    // Cone samples no longer belong to the original field's trace scaling.
    out.cone_samples = None;
    Ok(out)
}
