//! The cone as a graph over a spatial slice, and trace-decay fitting.

use super::cone::{bracketed_root, ConeDefiningFunction};
use super::chart::SpacetimeChart;
use super::GeometryError;
use crate::boundary::BoundaryFunction;
use crate::util::line_fit;
use serde::{Deserialize, Serialize};

/// The cone crossing time `F(x̄)` tabulated on a uniform spatial grid inside
/// the ball where the cone stays below the slice `{t = t₁}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeGraph {
    pub t1: f64,
    /// Grid spacing.
    pub dx: f64,
    /// Points per axis.
    pub n_per_axis: usize,
    /// Spatial points (flattened d-tuples) where a crossing was found.
    pub points: Vec<f64>,
    /// Crossing times, same order.
    pub times: Vec<f64>,
    /// Largest |F(x₁) − F(x₂)|/|x₁ − x₂| over neighbor pairs.
    pub lipschitz: f64,
}

/// Tabulate the unique cone crossing `t = F(x̄) ∈ [0, 2t₁]` per spatial node
/// by bracketed root-finding on `f(t, x̄)`, with a Lipschitz estimate from
/// grid-neighbor differences.
pub fn cone_graph(
    chart: &SpacetimeChart,
    f: &ConeDefiningFunction,
    t1: f64,
    n_per_axis: usize,
) -> Result<ConeGraph, GeometryError> {
    assert!(t1 > 0.0);
    assert!(n_per_axis >= 4);
    let d = chart.d();
    let half = 1.1 * t1;
    let dx = 2.0 * half / (n_per_axis - 1) as f64;
    let coord = |k: usize| -> f64 { -half + k as f64 * dx };
    let total = n_per_axis.pow(d as u32);
    let mut points = Vec::new();
    let mut times = vec![f64::NAN; total];
    let mut kept = Vec::new();
    for flat in 0..total {
        let mut rem = flat;
        let mut x = vec![0.0; d];
        for x_i in x.iter_mut() {
            *x_i = coord(rem % n_per_axis);
            rem /= n_per_axis;
        }
        let r: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut event = vec![0.0; d + 1];
        event[1..].copy_from_slice(&x);
        let t = if r < 1e-9 {
            // The tip itself: F(0) = 0 by definition.
            Some(0.0)
        } else {
            bracketed_root(
                |t| {
                    event[0] = t;
                    f.value(&event)
                },
                1e-12,
                2.0 * t1 + r,
            )
        };
        if let Some(t) = t {
            times[flat] = t;
            if t <= t1 {
                kept.push(flat);
                points.extend_from_slice(&x);
            }
        }
    }
    if kept.is_empty() {
        return Err(GeometryError::NoRoot(half));
    }
    // Lipschitz estimate over axis-aligned neighbor pairs with finite times.
    let mut lipschitz = 0.0f64;
    let stride: Vec<usize> = (0..d).map(|a| n_per_axis.pow(a as u32)).collect();
    for flat in 0..total {
        if !times[flat].is_finite() {
            continue;
        }
        for a in 0..d {
            let k = (flat / stride[a]) % n_per_axis;
            if k + 1 < n_per_axis {
                let nb = flat + stride[a];
                if times[nb].is_finite() {
                    lipschitz = lipschitz.max((times[nb] - times[flat]).abs() / dx);
                }
            }
        }
    }
    let times_kept: Vec<f64> = kept.iter().map(|&k| times[k]).collect();
    Ok(ConeGraph {
        t1,
        dx,
        n_per_axis,
        points,
        times: times_kept,
        lipschitz,
    })
}

/// Fit the decay exponent `γ` of a boundary trace:
/// `sup_θ |trace(s, ·)| ≈ C e^{−γ s}` by least squares on `ln sup` over the
/// window `[s_lo, s_hi]`. Requires at least 8 usable slices; slices below
/// `10⁻¹³` of the peak are excluded as numerically zero.
pub fn trace_decay_exponent(
    trace: &BoundaryFunction,
    s_lo: f64,
    s_hi: f64,
) -> Result<f64, GeometryError> {
    let profile = trace.sup_profile();
    let peak = profile.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(GeometryError::EmptyTrace);
    }
    let grid = &trace.grid;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &sup) in profile.iter().enumerate() {
        let s = grid.s_at(i);
        if s >= s_lo && s <= s_hi && sup > 1e-13 * peak {
            xs.push(s);
            ys.push(sup.ln());
        }
    }
    if xs.len() < 8 {
        return Err(GeometryError::WindowTooShort(xs.len()));
    }
    let (slope, _, _) = line_fit(&xs, &ys);
    Ok(-slope)
}
