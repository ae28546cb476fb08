//! The characteristic (Goursat) trace operator: forward-solve a finite
//! H¹₀-conforming basis of Cauchy data, collect the cone traces in weighted
//! boundary coordinates, and invert by energy-normalized truncated SVD.

use super::grid::{BulkGrid, CauchyData, StorePolicy};
use super::solver::{solve_cauchy, SolveOptions};
use super::trace::restrict_to_cone;
use super::BulkError;
use crate::boundary::{BoundaryFunction, BoundaryGrid};
use crate::geometry::{ConeChart, SpacetimeChart};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::Arc;

/// Basis of tensor quadratic B-spline bumps on the cube inscribed in the
/// Σ₀ ball (half-width `t₁/√d`), vanishing on the cube boundary.
#[derive(Debug, Clone)]
pub struct BasisConfig {
    /// Bumps per axis.
    pub m_per_axis: usize,
    /// Also include velocity-type data `(0, B_j)`, doubling the basis.
    pub include_velocity: bool,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            m_per_axis: 4,
            include_velocity: true,
        }
    }
}

/// Cardinal quadratic B-spline, support `(−1.5, 1.5)`.
fn bspline(x: f64) -> f64 {
    let a = x.abs();
    if a >= 1.5 {
        0.0
    } else if a <= 0.5 {
        0.75 - x * x
    } else {
        0.5 * (1.5 - a) * (1.5 - a)
    }
}

fn bspline_deriv(x: f64) -> f64 {
    let a = x.abs();
    if a >= 1.5 {
        0.0
    } else if a <= 0.5 {
        -2.0 * x
    } else {
        (a - 1.5) * x.signum()
    }
}

#[derive(Debug, Clone)]
pub struct SplineBasis {
    pub d: usize,
    /// Cube half-width.
    pub a: f64,
    pub m: usize,
    /// Scaled-translate spacing.
    pub h: f64,
    pub include_velocity: bool,
}

impl SplineBasis {
    fn new(d: usize, t1: f64, cfg: &BasisConfig) -> Self {
        let a = t1 / (d as f64).sqrt();
        let m = cfg.m_per_axis;
        assert!(m >= 2);
        let h = 2.0 * a / (m + 3) as f64;
        Self {
            d,
            a,
            m,
            h,
            include_velocity: cfg.include_velocity,
        }
    }

    fn center(&self, j: usize) -> f64 {
        -self.a + (1.5 + j as f64) * self.h
    }

    pub fn size(&self) -> usize {
        let per_kind = self.m.pow(self.d as u32);
        if self.include_velocity {
            2 * per_kind
        } else {
            per_kind
        }
    }

    /// Spatial bump of the flat multi-index (ignoring the kind bit).
    fn eval(&self, mut multi: usize, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for x_a in x.iter().take(self.d) {
            let j = multi % self.m;
            multi /= self.m;
            v *= bspline((x_a - self.center(j)) / self.h);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }

    /// Cauchy datum of basis element `index` tabulated on a bulk grid.
    pub fn datum(&self, index: usize, grid: &Arc<BulkGrid>) -> CauchyData {
        let per_kind = self.m.pow(self.d as u32);
        let velocity = self.include_velocity && index >= per_kind;
        let multi = index % per_kind;
        let values = grid.sample(|x| self.eval(multi, x));
        let zero = vec![0.0; grid.n_nodes()];
        let (phi0, phi1) = if velocity {
            (zero, values)
        } else {
            (values, zero)
        };
        CauchyData {
            grid: grid.clone(),
            phi0,
            phi1,
            h10: true,
        }
    }

    /// Linear combination of basis data.
    pub fn combine(&self, coeffs: &DVector<f64>, grid: &Arc<BulkGrid>) -> CauchyData {
        assert_eq!(coeffs.len(), self.size());
        let per_kind = self.m.pow(self.d as u32);
        let n = grid.n_nodes();
        let mut phi0 = vec![0.0; n];
        let mut phi1 = vec![0.0; n];
        for flat in 0..n {
            let x = grid.point(flat);
            for multi in 0..per_kind {
                let v = self.eval(multi, &x);
                if v != 0.0 {
                    phi0[flat] += coeffs[multi] * v;
                    if self.include_velocity {
                        phi1[flat] += coeffs[per_kind + multi] * v;
                    }
                }
            }
        }
        CauchyData {
            grid: grid.clone(),
            phi0,
            phi1,
            h10: true,
        }
    }

    /// Gram matrix of the basis in the data energy norm `H¹ ⊕ L²`,
    /// assembled from 1-D overlap integrals of the translates.
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.m;
        // 1-D overlaps by Simpson quadrature over the shared support
        // (piecewise-quadratic integrands; the fine rule is exact to 1e-12).
        let overlap = |f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64, sep: f64| -> f64 {
            let lo = (-1.5f64).max(sep - 1.5);
            let hi = 1.5f64.min(sep + 1.5);
            if hi <= lo {
                return 0.0;
            }
            let n = 600;
            let step = (hi - lo) / n as f64;
            let mut acc = 0.0;
            for k in 0..=n {
                let x = lo + k as f64 * step;
                let w = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * f(x) * g(x - sep);
            }
            acc * step / 3.0
        };
        let mut g0 = DMatrix::zeros(m, m);
        let mut g1 = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let sep = (self.center(j) - self.center(i)) / self.h;
                // ∫ B((x−ci)/h) B((x−cj)/h) dx = h ∫ B(u)B(u−sep) du
                g0[(i, j)] = self.h * overlap(&bspline, &bspline, sep);
                // derivative overlaps gain 1/h per factor
                g1[(i, j)] = overlap(&bspline_deriv, &bspline_deriv, sep) / self.h;
            }
        }
        let per_kind = m.pow(self.d as u32);
        let size = self.size();
        let mut gram = DMatrix::zeros(size, size);
        let decode = |mut multi: usize| {
            let mut idx = vec![0usize; self.d];
            for slot in idx.iter_mut() {
                *slot = multi % m;
                multi /= m;
            }
            idx
        };
        for p in 0..per_kind {
            let ip = decode(p);
            for q in 0..per_kind {
                let iq = decode(q);
                let mut l2 = 1.0;
                for a in 0..self.d {
                    l2 *= g0[(ip[a], iq[a])];
                }
                let mut h1 = l2;
                for a in 0..self.d {
                    let mut term = g1[(ip[a], iq[a])];
                    for b in 0..self.d {
                        if b != a {
                            term *= g0[(ip[b], iq[b])];
                        }
                    }
                    h1 += term;
                }
                gram[(p, q)] = h1;
                if self.include_velocity {
                    gram[(per_kind + p, per_kind + q)] = l2;
                }
            }
        }
        gram
    }
}

/// Assembled trace operator `T`: columns are cone traces of the basis
/// solutions in weighted boundary coordinates (`|D_s|^{1/2}`-scaled
/// admissible modes, real and imaginary parts stacked).
pub struct TraceOperator {
    pub basis: SplineBasis,
    pub boundary_grid: Arc<BoundaryGrid>,
    pub bulk_grid: Arc<BulkGrid>,
    pub chart: SpacetimeChart,
    /// `2·n_admissible × M`.
    pub t_matrix: DMatrix<f64>,
    /// Energy Gram of the basis (`M × M`).
    pub gram: DMatrix<f64>,
    /// Singular values of the energy-normalized operator, descending.
    pub singular_values: Vec<f64>,
    chol_l: DMatrix<f64>,
    svd_u: DMatrix<f64>,
    svd_vt: DMatrix<f64>,
}

/// Boundary coordinates used for the trace rows: stacked re/im of the
/// `|D_s|^{1/2}`-weighted admissible coefficients (an isometry onto the
/// natural boundary energy space).
pub(crate) fn boundary_coords(u: &BoundaryFunction) -> DVector<f64> {
    let v = u.abs_ds_sqrt().admissible_vector();
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| {
        if i < n {
            v[i].re
        } else {
            v[i - n].im
        }
    })
}

pub fn assemble_trace_operator(
    bulk_grid: &Arc<BulkGrid>,
    chart: &SpacetimeChart,
    cone: &ConeChart,
    cfg: &BasisConfig,
) -> Result<TraceOperator, BulkError> {
    let basis = SplineBasis::new(bulk_grid.d, bulk_grid.t1, cfg);
    let m_total = basis.size();
    assert!(m_total <= 400, "basis larger than the supported budget");
    let columns: Result<Vec<DVector<f64>>, BulkError> = (0..m_total)
        .into_par_iter()
        .map(|j| {
            let data = basis.datum(j, bulk_grid);
            let (field, _) = solve_cauchy(
                &data,
                chart,
                &SolveOptions {
                    store: StorePolicy::None,
                    cone: Some(cone),
                },
            )?;
            let trace = restrict_to_cone(&field, cone)?;
            Ok(boundary_coords(&trace))
        })
        .collect();
    let columns = columns?;
    let rows = columns[0].len();
    let mut t_matrix = DMatrix::zeros(rows, m_total);
    for (j, col) in columns.iter().enumerate() {
        t_matrix.set_column(j, col);
    }
    let gram = basis.gram();
    let chol = gram
        .clone()
        .cholesky()
        .expect("basis Gram matrix must be positive definite");
    let chol_l = chol.l();
    // Normalized operator T·L^{-T}: solve Lᵀ X = Tᵀ …  i.e. right-divide.
    let lt_inv = chol_l
        .transpose()
        .try_inverse()
        .expect("Cholesky factor invertible");
    let normalized = &t_matrix * &lt_inv;
    let svd = normalized.svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let u_full = svd.u.expect("svd u");
    let vt_full = svd.v_t.expect("svd v_t");
    let k = order.len();
    let mut singular_values = Vec::with_capacity(k);
    let mut svd_u = DMatrix::zeros(u_full.nrows(), k);
    let mut svd_vt = DMatrix::zeros(k, vt_full.ncols());
    for (slot, &src) in order.iter().enumerate() {
        singular_values.push(svd.singular_values[src]);
        svd_u.set_column(slot, &u_full.column(src));
        svd_vt.set_row(slot, &vt_full.row(src));
    }
    Ok(TraceOperator {
        basis,
        boundary_grid: cone.grid.clone(),
        bulk_grid: bulk_grid.clone(),
        chart: chart.clone(),
        t_matrix,
        gram,
        singular_values,
        chol_l,
        svd_u,
        svd_vt,
    })
}

impl TraceOperator {
    /// Condition number of the energy-normalized operator (homeomorphism
    /// proxy: bounded above and below under refinement).
    pub fn condition_number(&self) -> f64 {
        let top = self.singular_values[0];
        let bottom = self.singular_values.last().copied().unwrap_or(0.0);
        top / bottom.max(1e-300)
    }

    /// Forward application in coordinate space: `T c`.
    pub fn forward(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.t_matrix * coeffs
    }
}

#[derive(Debug)]
pub struct GoursatSolution {
    pub data: CauchyData,
    pub coeffs: DVector<f64>,
    /// `‖T·c − w‖ / ‖w‖` in weighted boundary coordinates.
    pub forward_residual: f64,
    /// Fraction of singular values below the cutoff.
    pub cut_fraction: f64,
}

/// Regularized characteristic solve: truncated-SVD least squares for the
/// Cauchy data whose trace best matches `w` (cutoff `10⁻⁸·σ_max`).
pub fn goursat_solve(w: &BoundaryFunction, op: &TraceOperator) -> Result<GoursatSolution, BulkError> {
    assert!(w.grid.compatible(&op.boundary_grid));
    let rhs = boundary_coords(w);
    let cutoff = 1e-8 * op.singular_values[0];
    let total = op.singular_values.len();
    let kept = op.singular_values.iter().filter(|&&s| s > cutoff).count();
    let cut_fraction = (total - kept) as f64 / total as f64;
    if cut_fraction > 0.5 {
        return Err(BulkError::RankDeficient(total - kept, total));
    }
    // y = Σ_k (uₖᵀ rhs / σₖ) vₖ, then c = L^{-T} y.
    let mut y = DVector::zeros(total);
    for k in 0..kept {
        let uk = op.svd_u.column(k);
        let proj = uk.dot(&rhs) / op.singular_values[k];
        y += proj * op.svd_vt.row(k).transpose();
    }
    let coeffs = op
        .chol_l
        .transpose()
        .try_inverse()
        .expect("Cholesky factor invertible")
        * y;
    let residual = (op.forward(&coeffs) - &rhs).norm() / rhs.norm().max(1e-300);
    let data = op.basis.combine(&coeffs, &op.bulk_grid);
    Ok(GoursatSolution {
        data,
        coeffs,
        forward_residual: residual,
        cut_fraction,
    })
}
