//! Null-coordinate construction on the cone: generator integration
//! reparametrized by the boundary coordinate, induced angular metric, and
//! density factor.

use super::chart::SpacetimeChart;
use super::cone::ConeDefiningFunction;
use super::GeometryError;
use crate::boundary::BoundaryGrid;
use crate::util::line_fit;
use crate::util::ode::{integrate_dp45, OdeError};
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::sync::Arc;

/// Tabulated null coordinates on the cone over a boundary grid.
///
/// The ODE parameter `s_ode` solves `∇^a f ∇_a s_ode = −1` with
/// `s_ode = 0` on the seed sphere `{v = ε₀}`; the grid coordinate is the
/// normalized `s = ln(v/ε₀)`, so that `s_ode ≈ α·s + k` with the fitted
/// slope `α` reported per generator. Angular tangent frames are orthonormal
/// on the unit sphere (`|m| = 1` in this frame), so `β = |h|^{−1/4}`.
#[derive(Debug, Clone)]
pub struct ConeChart {
    pub grid: Arc<BoundaryGrid>,
    pub chart: SpacetimeChart,
    pub f: ConeDefiningFunction,
    pub epsilon0: f64,
    /// Chart coordinates of `X(s_i, θ_j)`, flattened `(i·n_ang + j)·n + a`.
    pub positions: Vec<f64>,
    /// Generator tangent `∂X/∂s` (normalized `s`), same layout.
    pub tangents: Vec<f64>,
    /// ODE parameter `s_ode` per node, layout `i·n_ang + j`.
    pub s_ode: Vec<f64>,
    /// Flat null coordinate `v` per node.
    pub v: Vec<f64>,
    /// Induced angular metric per node, `(d−1)²` row-major entries each.
    pub h: Vec<f64>,
    /// Density factor per node.
    pub beta: Vec<f64>,
    /// Fitted slope of `s_ode` against `s` per generator.
    pub alpha: Vec<f64>,
    /// Fitted intercept per generator.
    pub k_offset: Vec<f64>,
    /// Mean fitted slope.
    pub alpha_hat: f64,
    /// Max `|g(∂_s X, ∂_θ X)|` over nodes (normal-form cross term).
    pub cross_residual: f64,
    /// Max `|g(∂_s X, ∂_s X)|` over nodes (generators must stay null).
    pub null_residual: f64,
}

/// Angular frame at a node: unit direction and `d−1` orthonormal tangent
/// directions on the unit sphere.
fn angular_frame(d: usize, node: (f64, f64)) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (mu, phi) = node;
    match d {
        2 => (
            vec![phi.cos(), phi.sin()],
            vec![vec![-phi.sin(), phi.cos()]],
        ),
        3 => {
            let st = (1.0 - mu * mu).max(0.0).sqrt();
            let n = vec![st * phi.cos(), st * phi.sin(), mu];
            let e_theta = vec![mu * phi.cos(), mu * phi.sin(), -st];
            let e_phi = vec![-phi.sin(), phi.cos(), 0.0];
            (n, vec![e_theta, e_phi])
        }
        _ => unreachable!("grid construction rejects other dimensions"),
    }
}

/// Split the grid `s`-values into integration legs from the seed at `s = 0`:
/// a descending leg through the values ≤ 0 and an ascending one through the
/// values > 0. Returns `(times, s-index)` pairs per leg.
fn integration_legs(grid: &BoundaryGrid) -> (Vec<(f64, usize)>, Vec<(f64, usize)>) {
    let mut down: Vec<(f64, usize)> = Vec::new();
    let mut up: Vec<(f64, usize)> = Vec::new();
    for i in 0..grid.n_s {
        let s = grid.s_at(i);
        if s <= 0.0 {
            down.push((s, i));
        } else {
            up.push((s, i));
        }
    }
    down.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    up.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (down, up)
}

struct GeneratorRun {
    /// State `(x, s_ode)` per `s`-index.
    states: Vec<Vec<f64>>,
}

/// Integrate one generator (or a perturbed companion) through every grid
/// `s`-value, reparametrized by `s = ln(v/ε₀)`.
fn run_generator(
    chart: &SpacetimeChart,
    f: &ConeDefiningFunction,
    seed: &[f64],
    grid: &BoundaryGrid,
    rtol: f64,
) -> Result<GeneratorRun, GeometryError> {
    let n = chart.n();
    let degenerate: Cell<Option<f64>> = Cell::new(None);
    let escape_radius = 100.0;
    let rhs = |_u: f64, y: &[f64]| {
        let x = &y[..n];
        let gen = f.generator(chart, x);
        let dv: f64 = chart
            .grad_flat_v(x)
            .iter()
            .zip(&gen)
            .map(|(a, b)| a * b)
            .sum();
        let v = chart.flat_v(x);
        let factor = if dv.abs() < 1e-300 { 0.0 } else { v / dv };
        let mut dy: Vec<f64> = gen.iter().map(|g| g * factor).collect();
        dy.push(factor);
        dy
    };
    let guard = |_u: f64, y: &[f64]| {
        let x = &y[..n];
        if x.iter().any(|c| c.abs() > escape_radius) {
            return false;
        }
        let gen = f.generator(chart, x);
        let dv: f64 = chart
            .grad_flat_v(x)
            .iter()
            .zip(&gen)
            .map(|(a, b)| a * b)
            .sum();
        if dv.abs() < 1e-14 {
            degenerate.set(Some(dv.abs()));
            return false;
        }
        true
    };
    let mut y0 = seed.to_vec();
    y0.push(0.0);
    let map_err = |e: OdeError, s_at: f64| match e {
        OdeError::GuardAbort { .. } => {
            if let Some(dv) = degenerate.get() {
                GeometryError::DegenerateGenerator(dv)
            } else {
                GeometryError::GeneratorEscapedChart(s_at)
            }
        }
        other => GeometryError::Ode(other),
    };
    let (down, up) = integration_legs(grid);
    let mut states: Vec<Vec<f64>> = vec![Vec::new(); grid.n_s];
    for leg in [down, up] {
        let mut u = 0.0;
        let mut y = y0.clone();
        for (s, idx) in leg {
            let sol = integrate_dp45(rhs, u, s, &y, rtol, 1e-12, guard)
                .map_err(|e| map_err(e, s))?;
            y = sol.y.last().unwrap().clone();
            u = s;
            states[idx] = y.clone();
        }
    }
    Ok(GeneratorRun { states })
}

/// Build the tabulated null coordinates on the cone of `f` over a boundary
/// grid, integrating generators (and finite-difference companions for the
/// induced metric) with adaptive Runge–Kutta at relative tolerance `rtol`.
pub fn build_null_coordinates(
    chart: &SpacetimeChart,
    f: &ConeDefiningFunction,
    epsilon0: f64,
    grid: &Arc<BoundaryGrid>,
    rtol: f64,
) -> Result<ConeChart, GeometryError> {
    assert!(epsilon0 > 0.0);
    assert_eq!(chart.d(), grid.d, "chart and grid dimensions differ");
    let n = chart.n();
    let d = chart.d();
    let n_ang = grid.n_angular_nodes();
    let n_nodes = grid.n_s * n_ang;
    let delta: f64 = 1e-4;

    let mut positions = vec![0.0; n_nodes * n];
    let mut tangents = vec![0.0; n_nodes * n];
    let mut s_ode = vec![0.0; n_nodes];
    let mut v_tab = vec![0.0; n_nodes];
    let mut h_tab = vec![0.0; n_nodes * (d - 1) * (d - 1)];
    let mut beta = vec![0.0; n_nodes];
    let mut alpha = Vec::with_capacity(n_ang);
    let mut k_offset = Vec::with_capacity(n_ang);
    let mut cross_residual = 0.0f64;
    let mut null_residual = 0.0f64;

    let seed_from_dir = |dir: &[f64]| -> Vec<f64> {
        let mut x = vec![epsilon0 / 2.0; 1];
        x.extend(dir.iter().map(|c| c * epsilon0 / 2.0));
        x
    };

    for j in 0..n_ang {
        let (dir, frame) = angular_frame(d, grid.nodes[j]);
        let main = run_generator(chart, f, &seed_from_dir(&dir), grid, rtol)?;
        // Great-circle perturbed companions for angular tangents.
        let mut companions = Vec::with_capacity(2 * (d - 1));
        for e in &frame {
            for sign in [1.0, -1.0] {
                let pert: Vec<f64> = dir
                    .iter()
                    .zip(e)
                    .map(|(nc, ec)| delta.cos() * nc + sign * delta.sin() * ec)
                    .collect();
                companions.push(run_generator(chart, f, &seed_from_dir(&pert), grid, rtol)?);
            }
        }

        let mut fit_s = Vec::new();
        let mut fit_tau = Vec::new();
        for i in 0..grid.n_s {
            let idx = i * n_ang + j;
            let state = &main.states[i];
            let x = &state[..n];
            positions[idx * n..(idx + 1) * n].copy_from_slice(x);
            s_ode[idx] = state[n];
            v_tab[idx] = chart.flat_v(x);
            let s = grid.s_at(i);
            if s <= 0.0 {
                fit_s.push(s);
                fit_tau.push(state[n]);
            }
            // Tangent ∂X/∂s from the reparametrized generator field.
            let gen = f.generator(chart, x);
            let dv: f64 = chart
                .grad_flat_v(x)
                .iter()
                .zip(&gen)
                .map(|(a, b)| a * b)
                .sum();
            let factor = v_tab[idx] / dv;
            let tangent: Vec<f64> = gen.iter().map(|g| g * factor).collect();
            tangents[idx * n..(idx + 1) * n].copy_from_slice(&tangent);

            let g = chart.metric(x);
            let pair = |a: &[f64], b: &[f64]| -> f64 {
                let mut acc = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        acc += g[(p, q)] * a[p] * b[q];
                    }
                }
                acc
            };
            null_residual = null_residual.max(pair(&tangent, &tangent).abs());
            // Angular tangents by central difference across companions.
            let mut ang_tangents = Vec::with_capacity(d - 1);
            for a in 0..d - 1 {
                let xp = &companions[2 * a].states[i][..n];
                let xm = &companions[2 * a + 1].states[i][..n];
                let ta: Vec<f64> = xp
                    .iter()
                    .zip(xm)
                    .map(|(p, m)| (p - m) / (2.0 * delta))
                    .collect();
                cross_residual = cross_residual.max(pair(&tangent, &ta).abs());
                ang_tangents.push(ta);
            }
            let hk = d - 1;
            for a in 0..hk {
                for b in 0..hk {
                    h_tab[(idx * hk + a) * hk + b] = pair(&ang_tangents[a], &ang_tangents[b]);
                }
            }
            let det = match hk {
                1 => h_tab[idx],
                _ => {
                    let base = idx * hk * hk;
                    h_tab[base] * h_tab[base + 3] - h_tab[base + 1] * h_tab[base + 2]
                }
            };
            if det <= 0.0 {
                return Err(GeometryError::SingularInducedMetric(det));
            }
            beta[idx] = det.powf(-0.25);
        }
        let (slope, intercept, _) = line_fit(&fit_s, &fit_tau);
        alpha.push(slope);
        k_offset.push(intercept);
    }
    let alpha_hat = alpha.iter().sum::<f64>() / alpha.len() as f64;
    Ok(ConeChart {
        grid: grid.clone(),
        chart: chart.clone(),
        f: f.clone(),
        epsilon0,
        positions,
        tangents,
        s_ode,
        v: v_tab,
        h: h_tab,
        beta,
        alpha,
        k_offset,
        alpha_hat,
        cross_residual,
        null_residual,
    })
}

impl ConeChart {
    pub fn n_nodes(&self) -> usize {
        self.grid.n_s * self.grid.n_angular_nodes()
    }

    /// Chart coordinates of the node `(s_i, θ_j)`.
    pub fn position(&self, i_s: usize, j_ang: usize) -> &[f64] {
        let n = self.chart.n();
        let idx = i_s * self.grid.n_angular_nodes() + j_ang;
        &self.positions[idx * n..(idx + 1) * n]
    }

    pub fn beta_at(&self, i_s: usize, j_ang: usize) -> f64 {
        self.beta[i_s * self.grid.n_angular_nodes() + j_ang]
    }

    /// Spread of the fitted slope across generators.
    pub fn alpha_spread(&self) -> f64 {
        let lo = self.alpha.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn export(&self) -> ConeChartFile {
        ConeChartFile {
            d: self.grid.d,
            n_s: self.grid.n_s,
            s_min: self.grid.s_min,
            s_max: self.grid.s_max,
            l_max: self.grid.l_max,
            chart: self.chart.clone(),
            f: self.f.clone(),
            epsilon0: self.epsilon0,
            positions: self.positions.clone(),
            tangents: self.tangents.clone(),
            s_ode: self.s_ode.clone(),
            v: self.v.clone(),
            h: self.h.clone(),
            beta: self.beta.clone(),
            alpha: self.alpha.clone(),
            k_offset: self.k_offset.clone(),
            alpha_hat: self.alpha_hat,
            cross_residual: self.cross_residual,
            null_residual: self.null_residual,
        }
    }

    pub fn import(file: ConeChartFile) -> Result<Self, crate::boundary::GridError> {
        let grid = BoundaryGrid::new(file.d, file.n_s, file.s_min, file.s_max, file.l_max)?;
        Ok(Self {
            grid,
            chart: file.chart,
            f: file.f,
            epsilon0: file.epsilon0,
            positions: file.positions,
            tangents: file.tangents,
            s_ode: file.s_ode,
            v: file.v,
            h: file.h,
            beta: file.beta,
            alpha: file.alpha,
            k_offset: file.k_offset,
            alpha_hat: file.alpha_hat,
            cross_residual: file.cross_residual,
            null_residual: file.null_residual,
        })
    }
}

/// Serializable table form of a [`ConeChart`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeChartFile {
    pub d: usize,
    pub n_s: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub l_max: usize,
    pub chart: SpacetimeChart,
    pub f: ConeDefiningFunction,
    pub epsilon0: f64,
    pub positions: Vec<f64>,
    pub tangents: Vec<f64>,
    pub s_ode: Vec<f64>,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub k_offset: Vec<f64>,
    pub alpha_hat: f64,
    pub cross_residual: f64,
    pub null_residual: f64,
}

/// The `(h, β)` tables with the positivity checks re-run: returns
/// `SingularInducedMetric` if any node's induced metric fails to be positive
/// definite.
pub fn induced_metric_and_beta(
    cone: &ConeChart,
) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let hk = cone.grid.d - 1;
    for idx in 0..cone.n_nodes() {
        let det = match hk {
            1 => cone.h[idx],
            _ => {
                let b = idx * hk * hk;
                cone.h[b] * cone.h[b + 3] - cone.h[b + 1] * cone.h[b + 2]
            }
        };
        let trace = match hk {
            1 => cone.h[idx],
            _ => cone.h[idx * hk * hk] + cone.h[idx * hk * hk + 3],
        };
        if det <= 0.0 || trace <= 0.0 {
            return Err(GeometryError::SingularInducedMetric(det));
        }
        if cone.beta[idx] <= 0.0 {
            return Err(GeometryError::SingularInducedMetric(det));
        }
    }
    Ok((cone.h.clone(), cone.beta.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(d: usize) -> Arc<BoundaryGrid> {
        BoundaryGrid::new(d, 16, -6.0, 2.0, 2).unwrap()
    }

    #[test]
    fn minkowski_cone_matches_closed_form() {
        let chart = SpacetimeChart::minkowski(3);
        let f = ConeDefiningFunction::standard(&chart);
        let grid = small_grid(3);
        let eps = 0.1;
        let cone = build_null_coordinates(&chart, &f, eps, &grid, 1e-10).unwrap();
        let n_ang = grid.n_angular_nodes();
        for i in 0..grid.n_s {
            let s = grid.s_at(i);
            let v = eps * s.exp();
            for j in 0..n_ang {
                let idx = i * n_ang + j;
                // X(s, θ) = (v/2)(1, n̂): position matches to ODE tolerance.
                let x = cone.position(i, j);
                assert!((x[0] - v / 2.0).abs() <= 1e-8 * (1.0 + v));
                let r: f64 = x[1..].iter().map(|c| c * c).sum::<f64>().sqrt();
                assert!((r - v / 2.0).abs() <= 1e-8 * (1.0 + v));
                // v-coordinate and s_ode = s/2.
                assert!((cone.v[idx] - v).abs() <= 1e-8 * (1.0 + v));
                assert!((cone.s_ode[idx] - s / 2.0).abs() <= 1e-8);
                // β = 1/r for the round cone, and β⁴|h| = 1 by construction.
                assert!((cone.beta_at(i, j) - 1.0 / r).abs() <= 1e-5 / r);
                let b = idx * 4;
                let det = cone.h[b] * cone.h[b + 3] - cone.h[b + 1] * cone.h[b + 2];
                assert!((cone.beta[idx].powi(4) * det - 1.0).abs() <= 1e-10);
                // Angular invariance: the spatial direction equals the seed.
                let (dir, _) = angular_frame(3, grid.nodes[j]);
                for (a, &dc) in dir.iter().enumerate() {
                    assert!((x[1 + a] / r - dc).abs() <= 1e-9);
                }
            }
        }
        // Fitted slope: s_ode = 0.5·s exactly, identically across generators.
        assert!((cone.alpha_hat - 0.5).abs() <= 1e-10);
        assert!(cone.alpha_spread() <= 1e-8);
        for k in &cone.k_offset {
            assert!(k.abs() <= 1e-10);
        }
        assert!(cone.cross_residual <= 1e-8, "cross {:.3e}", cone.cross_residual);
        assert!(cone.null_residual <= 1e-8, "null {:.3e}", cone.null_residual);
        induced_metric_and_beta(&cone).unwrap();
    }

    #[test]
    fn two_dimensional_cone_builds() {
        let chart = SpacetimeChart::minkowski(2);
        let f = ConeDefiningFunction::standard(&chart);
        let grid = small_grid(2);
        let cone = build_null_coordinates(&chart, &f, 0.1, &grid, 1e-10).unwrap();
        assert!(cone.cross_residual <= 1e-8);
        assert!((cone.alpha_hat - 0.5).abs() <= 1e-10);
        // d = 2: β = h^{-1/4} = r^{-1/2}.
        let r = 0.1 * grid.s_at(4).exp() / 2.0;
        assert!((cone.beta_at(4, 0) - r.powf(-0.5)).abs() <= 1e-5);
    }

    #[test]
    fn conformal_cone_residuals_and_alpha_stability() {
        let chart = SpacetimeChart::conformal_gaussian(3, 0.1, 1.0);
        let f = ConeDefiningFunction::standard(&chart);
        let grid = small_grid(3);
        let cone = build_null_coordinates(&chart, &f, 0.1, &grid, 1e-10).unwrap();
        assert!(cone.cross_residual <= 1e-5, "cross {:.3e}", cone.cross_residual);
        assert!(cone.null_residual <= 1e-5, "null {:.3e}", cone.null_residual);
        // Spherically symmetric conformal factor: identical generators.
        assert!(cone.alpha_spread() <= 1e-8, "spread {:.3e}", cone.alpha_spread());
        assert!((cone.alpha_hat - 0.5).abs() <= 1e-2);
        induced_metric_and_beta(&cone).unwrap();
        // log|h| − 2(d−1) log v stays bounded toward the tip.
        let n_ang = grid.n_angular_nodes();
        for i in 0..grid.n_s {
            let idx = i * n_ang;
            let b = idx * 4;
            let det = cone.h[b] * cone.h[b + 3] - cone.h[b + 1] * cone.h[b + 2];
            let bounded = det.ln() - 4.0 * cone.v[idx].ln();
            assert!(bounded.abs() < 10.0);
        }
    }

    #[test]
    fn tolerance_halving_is_consistent() {
        let chart = SpacetimeChart::conformal_gaussian(3, 0.1, 1.0);
        let f = ConeDefiningFunction::standard(&chart);
        let grid = small_grid(3);
        let a = build_null_coordinates(&chart, &f, 0.1, &grid, 1e-8).unwrap();
        let b = build_null_coordinates(&chart, &f, 0.1, &grid, 5e-9).unwrap();
        let max_diff = a
            .positions
            .iter()
            .zip(&b.positions)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(max_diff <= 1e-7, "positions moved by {max_diff:.3e}");
    }

    #[test]
    fn export_import_round_trip() {
        let chart = SpacetimeChart::minkowski(2);
        let f = ConeDefiningFunction::standard(&chart);
        let grid = small_grid(2);
        let cone = build_null_coordinates(&chart, &f, 0.1, &grid, 1e-10).unwrap();
        let text = serde_json::to_string(&cone.export()).unwrap();
        let back = ConeChart::import(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(cone.positions, back.positions);
        assert_eq!(cone.beta, back.beta);
        assert_eq!(cone.alpha_hat, back.alpha_hat);
    }
}
