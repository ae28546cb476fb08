//! Leapfrog evolution of the Klein–Gordon operator on the supported charts,
//! a periodic spectral oracle on the flat chart, the causal propagator, and
//! slice quadratures.
//!
//! The conformally flat chart `g = Ω²η` (static spatial `Ω`) evolves by
//! `∂_t²φ = Ω^{1−d} ∂_i(Ω^{d−1} ∂_iφ) − Ω² r φ`, which is the homogeneous
//! Klein–Gordon equation multiplied through by `Ω²`; with a source `Pφ = u`
//! the right-hand side gains `+ Ω² u`.

use super::grid::{BulkField, BulkGrid, BulkSource, CauchyData, StorePolicy};
use super::BulkError;
use crate::geometry::{ConeChart, SpacetimeChart};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::Arc;

/// What a solve keeps besides diagnostics, and which cone to sample on the
/// fly while stepping (memory `O(cone nodes)` instead of full space-time).
pub struct SolveOptions<'a> {
    pub store: StorePolicy,
    pub cone: Option<&'a ConeChart>,
}

impl Default for SolveOptions<'_> {
    fn default() -> Self {
        Self {
            store: StorePolicy::All,
            cone: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveStats {
    pub initial_energy: f64,
    /// Max relative deviation of the leapfrog-conserved energy per unit time.
    pub energy_drift_per_unit_time: f64,
}

/// Precomputed stencil tables for one chart on one grid.
pub(crate) struct Stepper {
    grid: Arc<BulkGrid>,
    /// `Ω^{1−d}` per node (`None` for the flat chart).
    inv_w: Option<Vec<f64>>,
    /// `Ω^{d−1}` at the `+axis` face of each node, one table per axis.
    c_face: Option<Vec<Vec<f64>>>,
    /// `Ω² r` per node (empty when identically zero).
    pot: Vec<f64>,
    /// `Ω^{d−1}` per node for the kinetic-energy weight.
    w_kin: Option<Vec<f64>>,
    /// `Ω^{d+1} r` per node for the potential-energy weight.
    pot_energy: Vec<f64>,
}

impl Stepper {
    pub(crate) fn new(grid: Arc<BulkGrid>, chart: &SpacetimeChart) -> Self {
        assert_eq!(chart.d(), grid.d, "chart and grid dimensions differ");
        match chart {
            SpacetimeChart::Minkowski { .. } => Self {
                grid,
                inv_w: None,
                c_face: None,
                pot: Vec::new(),
                w_kin: None,
                pot_energy: Vec::new(),
            },
            SpacetimeChart::ConformalGaussian { .. } => {
                let d = grid.d;
                let n = grid.n_nodes();
                let event = |x: &[f64]| {
                    let mut e = vec![0.0; d + 1];
                    e[1..].copy_from_slice(x);
                    e
                };
                let omega_at = |x: &[f64]| chart.omega(&event(x));
                let p = d as i32 - 1;
                let mut inv_w = vec![0.0; n];
                let mut w_kin = vec![0.0; n];
                let mut pot = vec![0.0; n];
                let mut pot_energy = vec![0.0; n];
                for flat in 0..n {
                    let x = grid.point(flat);
                    let om = omega_at(&x);
                    inv_w[flat] = om.powi(-p);
                    w_kin[flat] = om.powi(p);
                    let r = chart.potential(&event(&x));
                    pot[flat] = om * om * r;
                    pot_energy[flat] = om.powi(p + 2) * r;
                }
                let mut c_face = Vec::with_capacity(d);
                for a in 0..d {
                    let mut table = vec![0.0; n];
                    for flat in 0..n {
                        let mut x = grid.point(flat);
                        x[a] += 0.5 * grid.dx;
                        table[flat] = omega_at(&x).powi(p);
                    }
                    c_face.push(table);
                }
                Self {
                    grid,
                    inv_w: Some(inv_w),
                    c_face: Some(c_face),
                    pot,
                    w_kin: Some(w_kin),
                    pot_energy,
                }
            }
        }
    }

    /// `out = Ω^{1−d} div(Ω^{d−1} grad φ) − Ω² r φ` with Dirichlet-zero walls.
    pub(crate) fn apply_l(&self, phi: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let n = g.n_per_axis;
        let inv_dx2 = 1.0 / (g.dx * g.dx);
        let stride: Vec<usize> = (0..g.d).map(|a| n.pow(a as u32)).collect();
        let at = |phi: &[f64], flat: usize, a: usize, delta: i64| -> f64 {
            let i = (flat / stride[a]) % n;
            let j = i as i64 + delta;
            if j < 0 || j >= n as i64 {
                0.0
            } else {
                phi[(flat as i64 + delta * stride[a] as i64) as usize]
            }
        };
        match (&self.c_face, &self.inv_w) {
            (None, None) => {
                // Flat chart: plain (2d+1)-point Laplacian.
                if g.d == 3 {
                    let sy = stride[1];
                    let sz = stride[2];
                    for iz in 0..n {
                        for iy in 0..n {
                            let row = iz * sz + iy * sy;
                            for ix in 0..n {
                                let flat = row + ix;
                                let c = phi[flat];
                                let mut acc = -(2.0 * g.d as f64) * c;
                                if ix > 0 {
                                    acc += phi[flat - 1];
                                }
                                if ix + 1 < n {
                                    acc += phi[flat + 1];
                                }
                                if iy > 0 {
                                    acc += phi[flat - sy];
                                }
                                if iy + 1 < n {
                                    acc += phi[flat + sy];
                                }
                                if iz > 0 {
                                    acc += phi[flat - sz];
                                }
                                if iz + 1 < n {
                                    acc += phi[flat + sz];
                                }
                                out[flat] = acc * inv_dx2;
                            }
                        }
                    }
                } else {
                    let sy = stride[1];
                    for iy in 0..n {
                        for ix in 0..n {
                            let flat = iy * sy + ix;
                            let c = phi[flat];
                            let mut acc = -4.0 * c;
                            if ix > 0 {
                                acc += phi[flat - 1];
                            }
                            if ix + 1 < n {
                                acc += phi[flat + 1];
                            }
                            if iy > 0 {
                                acc += phi[flat - sy];
                            }
                            if iy + 1 < n {
                                acc += phi[flat + sy];
                            }
                            out[flat] = acc * inv_dx2;
                        }
                    }
                }
            }
            (Some(c_face), Some(inv_w)) => {
                for flat in 0..g.n_nodes() {
                    let c = phi[flat];
                    let mut acc = 0.0;
                    for a in 0..g.d {
                        let i = (flat / stride[a]) % n;
                        let cp = c_face[a][flat];
                        let up = at(phi, flat, a, 1);
                        acc += cp * (up - c);
                        if i > 0 {
                            let cm = c_face[a][flat - stride[a]];
                            let dn = phi[flat - stride[a]];
                            acc -= cm * (c - dn);
                        } else {
                            // Wall: Dirichlet-zero ghost with the local face
                            // weight (supports vanish here anyway).
                            acc -= cp * c;
                        }
                    }
                    out[flat] = inv_w[flat] * acc * inv_dx2
                        - if self.pot.is_empty() {
                            0.0
                        } else {
                            self.pot[flat] * c
                        };
                }
            }
            _ => unreachable!(),
        }
    }

    /// Leapfrog-conserved energy of the half step `(u, v) = (φ^{k+1}, φ^k)`:
    /// `½[Σ Ω^{d−1}((u−v)/Δt)² + a(u, v)]·Δx^d` with
    /// `a(u,v) = Σ_faces Ω^{d−1} Δu·Δv/Δx² + Σ Ω^{d+1} r u v`.
    pub(crate) fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let g = &self.grid;
        let n = g.n_per_axis;
        let inv_dt = 1.0 / g.dt;
        let inv_dx2 = 1.0 / (g.dx * g.dx);
        let stride: Vec<usize> = (0..g.d).map(|a| n.pow(a as u32)).collect();
        let mut kin = 0.0;
        let mut pot = 0.0;
        for flat in 0..g.n_nodes() {
            let w = self.w_kin.as_ref().map_or(1.0, |t| t[flat]);
            let dv = (u[flat] - v[flat]) * inv_dt;
            kin += w * dv * dv;
            if !self.pot_energy.is_empty() {
                pot += self.pot_energy[flat] * u[flat] * v[flat];
            }
            for a in 0..g.d {
                let i = (flat / stride[a]) % n;
                if i + 1 < n {
                    let c = self.c_face.as_ref().map_or(1.0, |t| t[a][flat]);
                    let du = u[flat + stride[a]] - u[flat];
                    let dvx = v[flat + stride[a]] - v[flat];
                    pot += c * du * dvx * inv_dx2;
                }
            }
        }
        0.5 * (kin + pot) * g.cell_volume()
    }
}

/// On-the-fly cone sampler: fills each cone node when the time ladder crosses
/// its time coordinate, by multilinear space interpolation and linear time
/// blending between the two bracketing levels.
struct ConeSampler<'a> {
    cone: &'a ConeChart,
    samples: Vec<f64>,
    filled: Vec<bool>,
}

impl<'a> ConeSampler<'a> {
    fn new(cone: &'a ConeChart) -> Self {
        let n = cone.n_nodes();
        Self {
            cone,
            samples: vec![0.0; n],
            filled: vec![false; n],
        }
    }

    /// Fill cone nodes whose time falls in the interval between the two
    /// levels, cubic in space and Hermite in time — identical to the stored
    /// `BulkField::value_at` path. The interval is half-open at the later
    /// end unless `include_b` closes it (final interval of a march).
    #[allow(clippy::too_many_arguments)]
    fn observe(
        &mut self,
        grid: &BulkGrid,
        t_a: f64,
        phi_a: &[f64],
        pt_a: &[f64],
        t_b: f64,
        phi_b: &[f64],
        pt_b: &[f64],
        include_b: bool,
    ) {
        let (t_lo, t_hi) = if t_a <= t_b { (t_a, t_b) } else { (t_b, t_a) };
        let n = self.cone.grid.n_s * self.cone.grid.n_angular_nodes();
        let dim = self.cone.chart.n();
        for idx in 0..n {
            if self.filled[idx] {
                continue;
            }
            let pos = &self.cone.positions[idx * dim..(idx + 1) * dim];
            let t = pos[0];
            let in_range = t >= t_lo - 1e-12
                && (t < t_hi - 1e-12 || (include_b && (t - t_b).abs() <= 1e-12));
            if !in_range {
                continue;
            }
            let x = &pos[1..];
            let vals = (
                grid.interpolate_cubic(phi_a, x),
                grid.interpolate_cubic(phi_b, x),
                grid.interpolate_cubic(pt_a, x),
                grid.interpolate_cubic(pt_b, x),
            );
            let (va, vb, da, db) = match vals {
                (Some(a), Some(b), Some(da), Some(db)) => (a, b, da, db),
                // Outside the box: only reachable above the Σ₀ level where
                // the trace vanishes; leave the zero.
                _ => {
                    self.filled[idx] = true;
                    continue;
                }
            };
            self.samples[idx] = if (t - t_a).abs() <= 1e-12 {
                va
            } else {
                super::grid::hermite(t_a, va, da, t_b, vb, db, t)
            };
            self.filled[idx] = true;
        }
    }
}

struct RunOutput {
    /// `(level, φ, ∂_tφ)` at recorded levels, in visit order.
    records: Vec<(usize, Vec<f64>, Vec<f64>)>,
    energy0: f64,
    max_energy_dev: f64,
}

/// March the leapfrog from `level_start` (state `cur`, with `prev` one level
/// behind in the marching direction) to `level_end` inclusive.
#[allow(clippy::too_many_arguments)]
fn run(
    stepper: &Stepper,
    grid: &Arc<BulkGrid>,
    level_start: usize,
    level_end: usize,
    mut prev: Vec<f64>,
    mut cur: Vec<f64>,
    source: Option<&BulkSource>,
    store: &StorePolicy,
    sampler: Option<&mut ConeSampler>,
    fail_on_growth: bool,
) -> Result<RunOutput, BulkError> {
    let dir: i64 = if level_end >= level_start { 1 } else { -1 };
    let n_moves = level_end.abs_diff(level_start);
    let dt = grid.dt;
    let dt2 = dt * dt;
    let n = grid.n_nodes();
    let mut lap = vec![0.0; n];
    let mut records = Vec::new();
    let mut energy0 = 0.0;
    let mut max_dev = 0.0f64;
    let mut sampler = sampler;
    // Previous level held back for the sampler: `(t, φ, ∂_tφ)`.
    let mut held: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    // Loop one virtual step past the endpoint so even the final recorded
    // level gets a second-order central ∂_tφ.
    for m in 0..=n_moves {
        let level = (level_start as i64 + dir * m as i64) as usize;
        let t = level as f64 * dt;
        stepper.apply_l(&cur, &mut lap);
        let mut next = vec![0.0; n];
        if let Some(src) = source {
            for flat in 0..n {
                let x = grid.point(flat);
                let uv = src.eval(t, &x);
                let s = if uv != 0.0 {
                    // Ω² from the kinetic weight table Ω^{d−1}.
                    let om2 = match &stepper.w_kin {
                        None => 1.0,
                        Some(w) => w[flat].powf(2.0 / (grid.d as f64 - 1.0)),
                    };
                    om2 * uv
                } else {
                    0.0
                };
                next[flat] = 2.0 * cur[flat] - prev[flat] + dt2 * (lap[flat] + s);
            }
        } else {
            for flat in 0..n {
                next[flat] = 2.0 * cur[flat] - prev[flat] + dt2 * lap[flat];
            }
        }
        // The central ∂_tφ for this level is now available.
        let keep = store.keeps(t, level);
        let phi_t: Option<Vec<f64>> = (keep || sampler.is_some()).then(|| {
            next.iter()
                .zip(&prev)
                .map(|(a, b)| (a - b) / (2.0 * dt * dir as f64))
                .collect()
        });
        if keep {
            records.push((level, cur.clone(), phi_t.clone().unwrap()));
        }
        if let Some(s) = sampler.as_deref_mut() {
            let pt = phi_t.unwrap();
            if let Some((ht, hphi, hpt)) = held.take() {
                s.observe(grid, ht, &hphi, &hpt, t, &cur, &pt, m == n_moves);
            }
            held = Some((t, cur.clone(), pt));
        }
        // The virtual step past the endpoint only feeds ∂_tφ; skip the
        // conservation check there.
        if source.is_none() && m < n_moves {
            let e = stepper.energy(&next, &cur);
            if m == 0 {
                energy0 = e;
            } else if energy0 > 0.0 {
                max_dev = max_dev.max((e - energy0).abs() / energy0);
                if fail_on_growth && e > 4.0 * energy0 {
                    return Err(BulkError::UnstableGrowth(e / energy0));
                }
            }
        }
        prev = cur;
        cur = next;
    }
    Ok(RunOutput {
        records,
        energy0,
        max_energy_dev: max_dev,
    })
}

fn assemble(
    grid: &Arc<BulkGrid>,
    chart: &SpacetimeChart,
    mut records: Vec<(usize, Vec<f64>, Vec<f64>)>,
    sampler: Option<ConeSampler>,
) -> BulkField {
    records.sort_by_key(|r| r.0);
    records.dedup_by_key(|r| r.0);
    let dt = grid.dt;
    let mut times = Vec::with_capacity(records.len());
    let mut phi = Vec::with_capacity(records.len());
    let mut phi_t = Vec::with_capacity(records.len());
    for (level, p, pt) in records {
        times.push(level as f64 * dt);
        phi.push(p);
        phi_t.push(pt);
    }
    BulkField {
        grid: grid.clone(),
        chart: chart.clone(),
        times,
        phi,
        phi_t,
        cone_samples: sampler.map(|s| (cone_fingerprint(s.cone), s.samples)),
    }
}

/// Fingerprint tying cone samples to the cone they were taken on.
pub(crate) fn cone_fingerprint(cone: &ConeChart) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    cone.grid.fingerprint().hash(&mut h);
    cone.epsilon0.to_bits().hash(&mut h);
    h.finish()
}

/// Evolve Cauchy data from the Σ₀ level both backward to the tip slice and
/// forward to `t_max`.
pub fn solve_cauchy(
    data: &CauchyData,
    chart: &SpacetimeChart,
    opts: &SolveOptions,
) -> Result<(BulkField, SolveStats), BulkError> {
    let grid = data.grid.clone();
    let radius = data.support_radius();
    let margin = 2.0 * grid.half - radius - grid.t1;
    if margin < 2.0 * grid.dx {
        return Err(BulkError::SupportLeak { radius, margin });
    }
    let stepper = Stepper::new(grid.clone(), chart);
    let k1 = grid.k1();
    let n = grid.n_nodes();
    let mut lap0 = vec![0.0; n];
    stepper.apply_l(&data.phi0, &mut lap0);
    let dt = grid.dt;
    // Second-order initializers one level behind each marching direction.
    let behind = |sign: f64| -> Vec<f64> {
        (0..n)
            .map(|i| data.phi0[i] - sign * dt * data.phi1[i] + 0.5 * dt * dt * lap0[i])
            .collect()
    };
    let mut sampler = opts.cone.map(ConeSampler::new);
    let back = run(
        &stepper,
        &grid,
        k1,
        0,
        behind(-1.0),
        data.phi0.clone(),
        None,
        &opts.store,
        sampler.as_mut(),
        true,
    )?;
    let fwd = run(
        &stepper,
        &grid,
        k1,
        grid.n_steps,
        behind(1.0),
        data.phi0.clone(),
        None,
        &opts.store,
        sampler.as_mut(),
        true,
    )?;
    let mut records = back.records;
    records.extend(fwd.records);
    let window = grid.t_max.max(grid.t1);
    let stats = SolveStats {
        initial_energy: fwd.energy0,
        energy_drift_per_unit_time: back.max_energy_dev.max(fwd.max_energy_dev) / window,
    };
    Ok((assemble(&grid, chart, records, sampler), stats))
}

/// Tabulate a closed-form field level by level while streaming its cone-node
/// samples through the same cubic/Hermite interpolation path as the solver,
/// keeping only the Σ₀ slice in memory: a memory-light analogue of
/// [`BulkField::from_closed_form`] for fine grids, where storing every level
/// would cost `O(n_steps · n_nodes)`.
pub fn closed_form_on_cone(
    grid: &Arc<BulkGrid>,
    chart: &SpacetimeChart,
    cone: &ConeChart,
    f: impl Fn(f64, &[f64]) -> f64 + Sync,
    ft: impl Fn(f64, &[f64]) -> f64 + Sync,
) -> BulkField {
    let dt = grid.dt;
    let k1 = grid.k1();
    let mut sampler = ConeSampler::new(cone);
    let mut held: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut sigma_slice = None;
    for k in 0..=grid.n_steps {
        let t = k as f64 * dt;
        let phi = grid.sample_par(|x| f(t, x));
        let pt = grid.sample_par(|x| ft(t, x));
        if let Some((ht, hphi, hpt)) = held.take() {
            sampler.observe(grid, ht, &hphi, &hpt, t, &phi, &pt, k == grid.n_steps);
        }
        if k == k1 {
            sigma_slice = Some((t, phi.clone(), pt.clone()));
        }
        held = Some((t, phi, pt));
    }
    let (t1, phi1, pt1) = sigma_slice.expect("Σ₀ level inside the march");
    debug_assert!((t1 - grid.t1).abs() <= 0.5 * dt);
    BulkField {
        grid: grid.clone(),
        chart: chart.clone(),
        times: vec![t1],
        phi: vec![phi1],
        phi_t: vec![pt1],
        cone_samples: Some((cone_fingerprint(cone), sampler.samples)),
    }
}

/// Causal propagator `E u = (retarded − advanced)(u)`: the retarded part
/// marches forward from a zero state below the source support, the advanced
/// part backward from a zero state above it.
pub fn causal_propagator(
    u: &BulkSource,
    grid: &Arc<BulkGrid>,
    chart: &SpacetimeChart,
    opts: &SolveOptions,
) -> Result<BulkField, BulkError> {
    if u.radius > grid.half - 2.0 * grid.dx {
        return Err(BulkError::SupportLeak {
            radius: u.radius,
            margin: grid.half - u.radius,
        });
    }
    let stepper = Stepper::new(grid.clone(), chart);
    let n = grid.n_nodes();
    let k_lo = ((u.t_lo / grid.dt).floor() as i64 - 1).max(0) as usize;
    let k_hi = (((u.t_hi / grid.dt).ceil() as usize) + 1).min(grid.n_steps);
    let mut ret_sampler = opts.cone.map(ConeSampler::new);
    let ret = run(
        &stepper,
        grid,
        k_lo,
        grid.n_steps,
        vec![0.0; n],
        vec![0.0; n],
        Some(u),
        &opts.store,
        ret_sampler.as_mut(),
        false,
    )?;
    let mut adv_sampler = opts.cone.map(ConeSampler::new);
    let adv = run(
        &stepper,
        grid,
        k_hi,
        0,
        vec![0.0; n],
        vec![0.0; n],
        Some(u),
        &opts.store,
        adv_sampler.as_mut(),
        false,
    )?;
    // Merge over the full ladder, zero where a branch never went.
    let zeros = || vec![0.0; n];
    let pick = |records: &[(usize, Vec<f64>, Vec<f64>)], level: usize| {
        records
            .iter()
            .find(|r| r.0 == level)
            .map(|r| (r.1.clone(), r.2.clone()))
    };
    let mut records = Vec::new();
    for level in 0..=grid.n_steps {
        let t = level as f64 * grid.dt;
        if !opts.store.keeps(t, level) {
            continue;
        }
        let (rp, rpt) = pick(&ret.records, level).unwrap_or_else(|| (zeros(), zeros()));
        let (ap, apt) = pick(&adv.records, level).unwrap_or_else(|| (zeros(), zeros()));
        let phi: Vec<f64> = rp.iter().zip(&ap).map(|(a, b)| a - b).collect();
        let phi_t: Vec<f64> = rpt.iter().zip(&apt).map(|(a, b)| a - b).collect();
        records.push((level, phi, phi_t));
    }
    let sampler = match (ret_sampler, adv_sampler) {
        (Some(r), Some(a)) => {
            let mut merged = r;
            for (s, t) in merged.samples.iter_mut().zip(&a.samples) {
                *s -= t;
            }
            Some(merged)
        }
        _ => None,
    };
    Ok(assemble(grid, chart, records, sampler))
}

/// Exact evolution of the trigonometric interpolant on the periodized box
/// (flat chart only): the oracle for the leapfrog scheme. Valid while the
/// support stays clear of the periodic wrap.
pub fn spectral_solve(
    data: &CauchyData,
    chart: &SpacetimeChart,
    store: &StorePolicy,
) -> Result<BulkField, BulkError> {
    match chart {
        SpacetimeChart::Minkowski { .. } => {}
        _ => {
            return Err(BulkError::ChartMismatch(
                "spectral stepping requires the flat chart".into(),
            ))
        }
    }
    let grid = data.grid.clone();
    let n = grid.n_per_axis;
    let total = grid.n_nodes();
    let mut f0: Vec<Complex64> = data.phi0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut f1: Vec<Complex64> = data.phi1.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fftn(&mut f0, n, grid.d, false);
    fftn(&mut f1, n, grid.d, false);
    let length = n as f64 * grid.dx;
    let omega: Vec<f64> = (0..total)
        .map(|mut flat| {
            let mut w2 = 0.0;
            for _ in 0..grid.d {
                let m = flat % n;
                flat /= n;
                let signed = if m <= n / 2 {
                    m as f64
                } else {
                    m as f64 - n as f64
                };
                let k = 2.0 * std::f64::consts::PI * signed / length;
                w2 += k * k;
            }
            w2.sqrt()
        })
        .collect();
    let mut times = Vec::new();
    let mut phi = Vec::new();
    let mut phi_t = Vec::new();
    for level in 0..=grid.n_steps {
        let t = level as f64 * grid.dt;
        if !store.keeps(t, level) {
            continue;
        }
        let tau = t - grid.t1;
        let mut slice = vec![Complex64::ZERO; total];
        let mut slice_t = vec![Complex64::ZERO; total];
        for i in 0..total {
            let w = omega[i];
            let (s, c) = if w == 0.0 {
                (tau, 1.0)
            } else {
                ((w * tau).sin() / w, (w * tau).cos())
            };
            slice[i] = c * f0[i] + s * f1[i];
            slice_t[i] = -w * w * s * f0[i] + c * f1[i];
        }
        fftn(&mut slice, n, grid.d, true);
        fftn(&mut slice_t, n, grid.d, true);
        times.push(t);
        phi.push(slice.iter().map(|c| c.re).collect());
        phi_t.push(slice_t.iter().map(|c| c.re).collect());
    }
    Ok(BulkField {
        grid,
        chart: chart.clone(),
        times,
        phi,
        phi_t,
        cone_samples: None,
    })
}

/// In-place d-dimensional FFT on an `n^d` cube (normalized inverse).
fn fftn(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = data.len();
    let mut line = vec![Complex64::ZERO; n];
    for axis in 0..d {
        let stride = n.pow(axis as u32);
        let block = stride * n;
        for start in 0..total / block {
            for offset in 0..stride {
                let base = start * block + offset;
                for i in 0..n {
                    line[i] = data[base + i * stride];
                }
                fft.process(&mut line);
                for i in 0..n {
                    data[base + i * stride] = line[i];
                }
            }
        }
    }
    if inverse {
        let scale = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Symplectic-form quadrature on a stored slice:
/// `σ(φ₁, φ₂)|_t = ∫ Ω^{d−1}(∂_tφ₁ φ₂ − φ₁ ∂_tφ₂) dx^d`.
pub fn bulk_symplectic_form(f1: &BulkField, f2: &BulkField, t: f64) -> Result<f64, BulkError> {
    if f1.grid.n_nodes() != f2.grid.n_nodes() {
        return Err(BulkError::GridMismatch);
    }
    let i = f1.slice_index(t)?;
    let j = f2.slice_index(t)?;
    let weight = slice_weight(&f1.grid, &f1.chart);
    let mut acc = 0.0;
    for flat in 0..f1.grid.n_nodes() {
        let w = weight.as_ref().map_or(1.0, |t| t[flat]);
        acc += w * (f1.phi_t[i][flat] * f2.phi[j][flat] - f1.phi[i][flat] * f2.phi_t[j][flat]);
    }
    Ok(acc * f1.grid.cell_volume())
}

fn slice_weight(grid: &BulkGrid, chart: &SpacetimeChart) -> Option<Vec<f64>> {
    match chart {
        SpacetimeChart::Minkowski { .. } => None,
        SpacetimeChart::ConformalGaussian { .. } => {
            let p = grid.d as i32 - 1;
            Some(
                (0..grid.n_nodes())
                    .map(|flat| {
                        let x = grid.point(flat);
                        let mut e = vec![0.0; grid.d + 1];
                        e[1..].copy_from_slice(&x);
                        chart.omega(&e).powi(p)
                    })
                    .collect(),
            )
        }
    }
}

/// Space-time pairing `⟨u, φ⟩ = ∫ u φ √|g| dt dx^d` over the source window;
/// requires consecutive stored levels covering `[t_lo, t_hi]`.
pub fn pair_with_source(field: &BulkField, u: &BulkSource) -> Result<f64, BulkError> {
    let grid = &field.grid;
    let vol_w = match &field.chart {
        SpacetimeChart::Minkowski { .. } => None,
        SpacetimeChart::ConformalGaussian { .. } => {
            let p = grid.d as i32 + 1;
            Some(
                (0..grid.n_nodes())
                    .map(|flat| {
                        let x = grid.point(flat);
                        let mut e = vec![0.0; grid.d + 1];
                        e[1..].copy_from_slice(&x);
                        field.chart.omega(&e).powi(p)
                    })
                    .collect::<Vec<f64>>(),
            )
        }
    };
    let mut acc = 0.0;
    let mut covered_lo = f64::INFINITY;
    let mut covered_hi = f64::NEG_INFINITY;
    for (i, &t) in field.times.iter().enumerate() {
        if t < u.t_lo - grid.dt || t > u.t_hi + grid.dt {
            continue;
        }
        if i > 0
            && field.times[i - 1] >= u.t_lo - grid.dt
            && field.times[i] - field.times[i - 1] > 1.5 * grid.dt
        {
            return Err(BulkError::MissingSlice(field.times[i - 1] + grid.dt));
        }
        covered_lo = covered_lo.min(t);
        covered_hi = covered_hi.max(t);
        let mut slice_acc = 0.0;
        for flat in 0..grid.n_nodes() {
            let uv = u.eval(t, &grid.point(flat));
            if uv != 0.0 {
                let w = vol_w.as_ref().map_or(1.0, |tb| tb[flat]);
                slice_acc += w * uv * field.phi[i][flat];
            }
        }
        acc += slice_acc;
    }
    if covered_lo > u.t_lo + grid.dt || covered_hi < u.t_hi - grid.dt {
        return Err(BulkError::MissingSlice(u.t_lo));
    }
    Ok(acc * grid.cell_volume() * grid.dt)
}

/// Discrete Klein–Gordon residual at an interior stored level `t` (needs the
/// two neighboring levels stored at spacing `Δt`); relative to the field's
/// sup over the three slices.
pub fn pde_residual(field: &BulkField, chart: &SpacetimeChart, t: f64) -> Result<f64, BulkError> {
    let k = field.slice_index(t)?;
    if k == 0 || k + 1 >= field.times.len() {
        return Err(BulkError::MissingSlice(t));
    }
    let dt = field.grid.dt;
    if (field.times[k + 1] - field.times[k] - dt).abs() > 1e-9
        || (field.times[k] - field.times[k - 1] - dt).abs() > 1e-9
    {
        return Err(BulkError::MissingSlice(t));
    }
    let stepper = Stepper::new(field.grid.clone(), chart);
    let n = field.grid.n_nodes();
    let np = field.grid.n_per_axis;
    let mut lap = vec![0.0; n];
    stepper.apply_l(&field.phi[k], &mut lap);
    let mut worst = 0.0f64;
    let mut amax = 1e-300f64;
    for flat in 0..n {
        // Wall nodes carry the artificial Dirichlet closure, not the PDE.
        let mut on_wall = false;
        let mut rest = flat;
        for _ in 0..field.grid.d {
            let i = rest % np;
            rest /= np;
            if i == 0 || i + 1 == np {
                on_wall = true;
            }
        }
        if on_wall {
            continue;
        }
        let tt = (field.phi[k + 1][flat] - 2.0 * field.phi[k][flat] + field.phi[k - 1][flat])
            / (dt * dt);
        worst = worst.max((tt - lap[flat]).abs());
        amax = amax
            .max(field.phi[k][flat].abs())
            .max(field.phi[k + 1][flat].abs())
            .max(field.phi[k - 1][flat].abs());
    }
    Ok(worst / amax)
}
