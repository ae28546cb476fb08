//! Space-time grids, Cauchy data, stored fields, and test sources for the
//! interior Klein–Gordon dynamics.

use super::BulkError;
use crate::geometry::SpacetimeChart;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Uniform Cartesian box `[−half, half]^d` with homogeneous Dirichlet walls
/// and a leapfrog time ladder `t_k = k·Δt` on `[0, t_max]`.
///
/// The time step divides the Σ₀-level `t₁` exactly so that the data slice
/// and the tip slice are both ladder levels. The walls never influence the
/// cone region provided the data obeys the domain-of-dependence margin
/// `2·half − r_supp − t₁ ≥ 2Δx`, which the solver checks per run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BulkGrid {
    pub d: usize,
    pub half: f64,
    pub n_per_axis: usize,
    pub dx: f64,
    pub dt: f64,
    /// Σ₀ slice level (an exact multiple of `dt`).
    pub t1: f64,
    pub t_max: f64,
    pub n_steps: usize,
}

impl BulkGrid {
    pub fn new(
        d: usize,
        half: f64,
        n_per_axis: usize,
        t1: f64,
        t_max: f64,
        courant: f64,
    ) -> Result<Arc<Self>, BulkError> {
        assert!((2..=3).contains(&d));
        assert!(n_per_axis >= 8 && half > 0.0 && t1 > 0.0 && t_max >= t1);
        if courant > 0.5 + 1e-12 {
            return Err(BulkError::CourantViolation(courant));
        }
        let dx = 2.0 * half / (n_per_axis - 1) as f64;
        let m = (t1 / (courant * dx)).ceil() as usize;
        let dt = t1 / m as f64;
        let n_steps = (t_max / dt).ceil() as usize;
        Ok(Arc::new(Self {
            d,
            half,
            n_per_axis,
            dx,
            dt,
            t1,
            t_max: n_steps as f64 * dt,
            n_steps,
        }))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_per_axis.pow(self.d as u32)
    }

    /// Level index of the Σ₀ slice.
    pub fn k1(&self) -> usize {
        (self.t1 / self.dt).round() as usize
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half + i as f64 * self.dx
    }

    /// Spatial point of a flat node index.
    pub fn point(&self, mut flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        for x_a in x.iter_mut() {
            *x_a = self.coord(flat % self.n_per_axis);
            flat /= self.n_per_axis;
        }
        x
    }

    /// Tabulate a spatial function on the grid.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| f(&self.point(i))).collect()
    }

    /// Parallel variant of [`Self::sample`] for expensive integrands on fine
    /// grids.
    pub fn sample_par(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
        use rayon::prelude::*;
        (0..self.n_nodes())
            .into_par_iter()
            .map(|i| f(&self.point(i)))
            .collect()
    }

    /// Multilinear interpolation of a tabulated slice; `None` outside the box.
    pub fn interpolate(&self, slice: &[f64], x: &[f64]) -> Option<f64> {
        let n = self.n_per_axis;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..self.d {
            let u = (x[a] + self.half) / self.dx;
            if u < 0.0 || u > (n - 1) as f64 {
                return None;
            }
            let i = (u.floor() as usize).min(n - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << self.d) {
            let mut idx = 0;
            let mut w = 1.0;
            for a in (0..self.d).rev() {
                let bit = (corner >> a) & 1;
                idx = idx * n + base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            acc += w * slice[idx];
        }
        Some(acc)
    }

    /// Cubic (Catmull–Rom) interpolation of a tabulated slice, with zero
    /// ghosts outside the box; `None` outside the box. Fourth-order accurate
    /// away from the walls, where fields vanish in this solver's H¹₀
    /// setting.
    pub fn interpolate_cubic(&self, slice: &[f64], x: &[f64]) -> Option<f64> {
        let n = self.n_per_axis as isize;
        let mut base = [0isize; 3];
        let mut wts = [[0.0f64; 4]; 3];
        for a in 0..self.d {
            let u = (x[a] + self.half) / self.dx;
            if u < 0.0 || u > (n - 1) as f64 {
                return None;
            }
            let i = (u.floor() as isize).min(n - 2);
            let f = u - i as f64;
            base[a] = i - 1;
            let f2 = f * f;
            let f3 = f2 * f;
            wts[a] = [
                -0.5 * f3 + f2 - 0.5 * f,
                1.5 * f3 - 2.5 * f2 + 1.0,
                -1.5 * f3 + 2.0 * f2 + 0.5 * f,
                0.5 * f3 - 0.5 * f2,
            ];
        }
        let mut acc = 0.0;
        for c in 0..4usize.pow(self.d as u32) {
            let mut cc = c;
            let mut w = 1.0;
            let mut idx = 0isize;
            let mut stride = 1isize;
            let mut inside = true;
            for a in 0..self.d {
                let o = cc % 4;
                cc /= 4;
                let j = base[a] + o as isize;
                w *= wts[a][o];
                if j < 0 || j >= n {
                    inside = false;
                    break;
                }
                idx += j * stride;
                stride *= n;
            }
            if inside {
                acc += w * slice[idx as usize];
            }
        }
        Some(acc)
    }

    /// Spatial quadrature weight (uniform trapezoid interior; supports are
    /// kept away from the walls, so plain `Δx^d` is exact enough).
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.d as i32)
    }
}

/// Cubic Hermite blend between `(t0, f0, ∂f0)` and `(t1, f1, ∂f1)`.
pub(crate) fn hermite(t0: f64, f0: f64, d0: f64, t1: f64, f1: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    if h.abs() < 1e-300 {
        return f0;
    }
    let w = (t - t0) / h;
    let w2 = w * w;
    let w3 = w2 * w;
    (2.0 * w3 - 3.0 * w2 + 1.0) * f0
        + (w3 - 2.0 * w2 + w) * h * d0
        + (3.0 * w2 - 2.0 * w3) * f1
        + (w3 - w2) * h * d1
}

/// Cauchy data `(φ⁰, φ¹) = (φ, ∂_t φ)` on the Σ₀ slice.
#[derive(Debug, Clone)]
pub struct CauchyData {
    pub grid: Arc<BulkGrid>,
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
    /// Data must vanish near the walls (H¹₀ setting).
    pub h10: bool,
}

impl CauchyData {
    pub fn new(
        grid: Arc<BulkGrid>,
        phi0: Vec<f64>,
        phi1: Vec<f64>,
        h10: bool,
    ) -> Result<Self, BulkError> {
        assert_eq!(phi0.len(), grid.n_nodes());
        assert_eq!(phi1.len(), grid.n_nodes());
        let data = Self {
            grid,
            phi0,
            phi1,
            h10,
        };
        if h10 {
            let peak = data.amax().max(1e-300);
            let g = &data.grid;
            for flat in 0..g.n_nodes() {
                let x = g.point(flat);
                if x.iter().any(|c| c.abs() >= g.half - 0.5 * g.dx)
                    && (data.phi0[flat].abs() > 1e-10 * peak
                        || data.phi1[flat].abs() > 1e-10 * peak)
                {
                    return Err(BulkError::SupportLeak {
                        radius: g.half,
                        margin: 0.0,
                    });
                }
            }
        }
        Ok(data)
    }

    pub fn from_fn(
        grid: Arc<BulkGrid>,
        f0: impl Fn(&[f64]) -> f64,
        f1: impl Fn(&[f64]) -> f64,
    ) -> Result<Self, BulkError> {
        let phi0 = grid.sample(&f0);
        let phi1 = grid.sample(&f1);
        Self::new(grid, phi0, phi1, true)
    }

    pub fn zero(grid: Arc<BulkGrid>) -> Self {
        let n = grid.n_nodes();
        Self {
            grid,
            phi0: vec![0.0; n],
            phi1: vec![0.0; n],
            h10: true,
        }
    }

    fn amax(&self) -> f64 {
        self.phi0
            .iter()
            .chain(&self.phi1)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Euclidean support radius (largest |x| with data above 10⁻¹² of peak).
    pub fn support_radius(&self) -> f64 {
        let peak = self.amax();
        if peak == 0.0 {
            return 0.0;
        }
        let g = &self.grid;
        let mut r = 0.0f64;
        for flat in 0..g.n_nodes() {
            if self.phi0[flat].abs() > 1e-12 * peak || self.phi1[flat].abs() > 1e-12 * peak {
                let x = g.point(flat);
                r = r.max(x.iter().map(|c| c * c).sum::<f64>().sqrt());
            }
        }
        r
    }

    /// Energy distance `(‖δφ⁰‖²_{H¹} + ‖δφ¹‖²_{L²})^{1/2}` by grid quadrature.
    pub fn energy_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.grid.n_nodes(), other.grid.n_nodes());
        let g = &self.grid;
        let n = g.n_per_axis;
        let stride: Vec<usize> = (0..g.d).map(|a| n.pow(a as u32)).collect();
        let mut acc = 0.0;
        for flat in 0..g.n_nodes() {
            let d0 = self.phi0[flat] - other.phi0[flat];
            let d1 = self.phi1[flat] - other.phi1[flat];
            acc += d0 * d0 + d1 * d1;
            for a in 0..g.d {
                let i = (flat / stride[a]) % n;
                if i + 1 < n {
                    let up = flat + stride[a];
                    let grad = ((self.phi0[up] - other.phi0[up]) - d0) / g.dx;
                    acc += grad * grad;
                }
            }
        }
        (acc * g.cell_volume()).sqrt()
    }

    pub fn energy_norm(&self) -> f64 {
        self.energy_distance(&Self::zero(self.grid.clone()))
    }
}

/// Which time levels a solve keeps: `All` stores every level (memory
/// `O(n_steps · n_nodes)`), `Stride(k)` every k-th, `Window` every level in a
/// t-interval, `None` only the diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum StorePolicy {
    All,
    Stride(usize),
    Window { t_lo: f64, t_hi: f64 },
    None,
}

impl StorePolicy {
    pub(crate) fn keeps(&self, t: f64, k: usize) -> bool {
        match self {
            Self::All => true,
            Self::Stride(s) => k % s.max(&1) == 0,
            Self::Window { t_lo, t_hi } => t >= *t_lo - 1e-12 && t <= *t_hi + 1e-12,
            Self::None => false,
        }
    }
}

/// A solved (or externally tabulated) field: snapshots `(φ, ∂_tφ)` at stored
/// ladder levels, plus cone-node samples accumulated during stepping when a
/// cone was attached to the solve.
#[derive(Debug, Clone)]
pub struct BulkField {
    pub grid: Arc<BulkGrid>,
    pub chart: SpacetimeChart,
    /// Stored level times, ascending.
    pub times: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub phi_t: Vec<Vec<f64>>,
    /// Raw φ-values at cone nodes (layout of the attached `ConeChart`),
    /// with the cone fingerprint they belong to.
    pub cone_samples: Option<(u64, Vec<f64>)>,
}

impl BulkField {
    /// Tabulate a closed-form field at every ladder level (test helper and
    /// oracle carrier): `f(t, x)` and its exact time derivative.
    pub fn from_closed_form(
        grid: Arc<BulkGrid>,
        chart: SpacetimeChart,
        f: impl Fn(f64, &[f64]) -> f64,
        ft: impl Fn(f64, &[f64]) -> f64,
    ) -> Self {
        let mut times = Vec::new();
        let mut phi = Vec::new();
        let mut phi_t = Vec::new();
        for k in 0..=grid.n_steps {
            let t = k as f64 * grid.dt;
            times.push(t);
            phi.push(grid.sample(|x| f(t, x)));
            phi_t.push(grid.sample(|x| ft(t, x)));
        }
        Self {
            grid,
            chart,
            times,
            phi,
            phi_t,
            cone_samples: None,
        }
    }

    pub fn slice_index(&self, t: f64) -> Result<usize, BulkError> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 0.5 * self.grid.dt)
            .ok_or(BulkError::MissingSlice(t))
    }

    /// Space-time value by multilinear interpolation of the stored slices.
    pub fn value_at(&self, t: f64, x: &[f64]) -> Result<f64, BulkError> {
        if self.times.is_empty() {
            return Err(BulkError::MissingSlice(t));
        }
        let pos = self.times.partition_point(|&s| s <= t);
        let (i0, i1, w) = if pos == 0 {
            if t < self.times[0] - 1e-9 {
                return Err(BulkError::MissingSlice(t));
            }
            (0, 0, 0.0)
        } else if pos >= self.times.len() {
            let last = self.times.len() - 1;
            if t > self.times[last] + 1e-9 {
                return Err(BulkError::MissingSlice(t));
            }
            (last, last, 0.0)
        } else {
            let lo = pos - 1;
            let span = self.times[pos] - self.times[lo];
            (lo, pos, (t - self.times[lo]) / span)
        };
        let a = self
            .grid
            .interpolate_cubic(&self.phi[i0], x)
            .ok_or(BulkError::InterpolationOutOfBounds)?;
        if i0 == i1 || w == 0.0 {
            return Ok(a);
        }
        let b = self
            .grid
            .interpolate_cubic(&self.phi[i1], x)
            .ok_or(BulkError::InterpolationOutOfBounds)?;
        let da = self
            .grid
            .interpolate_cubic(&self.phi_t[i0], x)
            .ok_or(BulkError::InterpolationOutOfBounds)?;
        let db = self
            .grid
            .interpolate_cubic(&self.phi_t[i1], x)
            .ok_or(BulkError::InterpolationOutOfBounds)?;
        Ok(hermite(
            self.times[i0],
            a,
            da,
            self.times[i1],
            b,
            db,
            t,
        ))
    }

    /// Pointwise difference (shared grid and stored levels required).
    pub fn sub(&self, other: &Self) -> Result<Self, BulkError> {
        if self.grid.n_nodes() != other.grid.n_nodes() || self.times.len() != other.times.len() {
            return Err(BulkError::GridMismatch);
        }
        let mut out = self.clone();
        for (mine, theirs) in out.phi.iter_mut().zip(&other.phi) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a -= b;
            }
        }
        for (mine, theirs) in out.phi_t.iter_mut().zip(&other.phi_t) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a -= b;
            }
        }
        out.cone_samples = match (&self.cone_samples, &other.cone_samples) {
            (Some((fa, va)), Some((fb, vb))) if fa == fb => Some((
                *fa,
                va.iter().zip(vb).map(|(x, y)| x - y).collect(),
            )),
            _ => None,
        };
        Ok(out)
    }

    /// Max |φ| over stored slices.
    pub fn amax(&self) -> f64 {
        self.phi
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// L² norm over the stored space-time block (flat measure).
    pub fn l2_spacetime(&self) -> f64 {
        let mut acc = 0.0;
        for s in &self.phi {
            acc += s.iter().map(|v| v * v).sum::<f64>();
        }
        (acc * self.grid.cell_volume() * self.grid.dt).sqrt()
    }
}

/// A smooth compactly supported space-time test function, given in closed
/// form with an explicit support box.
pub struct BulkSource {
    pub f: Box<dyn Fn(f64, &[f64]) -> f64 + Sync>,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Euclidean support radius in space.
    pub radius: f64,
}

impl BulkSource {
    /// Isotropic cosine-bump packet centered at `(t_c, x_c)` with half-widths
    /// `(w_t, w_x)`: `cos²`-profile in the space-time ellipse, C¹-smooth.
    pub fn bump(t_c: f64, x_c: Vec<f64>, w_t: f64, w_x: f64, amplitude: f64) -> Self {
        let center_r = x_c.iter().map(|c| c * c).sum::<f64>().sqrt();
        Self {
            t_lo: t_c - w_t,
            t_hi: t_c + w_t,
            radius: center_r + w_x,
            f: Box::new(move |t, x| {
                let mut q = ((t - t_c) / w_t).powi(2);
                for (a, c) in x.iter().zip(&x_c) {
                    q += ((a - c) / w_x).powi(2);
                }
                if q >= 1.0 {
                    0.0
                } else {
                    let c = (std::f64::consts::FRAC_PI_2 * q.sqrt()).cos();
                    amplitude * c * c
                }
            }),
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        (self.f)(t, x)
    }
}
