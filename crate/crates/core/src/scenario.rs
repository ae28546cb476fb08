//! Scenario-driven verification runs: a TOML-configured description of one
//! chart + cone + boundary setup, a family of states, and the checks to run
//! against them, producing a deterministic [`ReportBundle`] plus CSV tables.
//!
//! A scenario either loads from a TOML file or comes bundled (see
//! [`Scenario::builtin`]). Malformed configurations fail fast with a
//! [`ConfigError`] before any output is written.

use crate::boundary::{BoundaryGrid, ShiftMap};
use crate::bulk::{
    assemble_trace_operator, bulk_two_point, closed_form_on_cone, goursat_solve,
    oracles::SphericalWave, restrict_to_cone, solve_cauchy, verify_monomorphism, BasisConfig,
    BulkGrid, BulkSource, CauchyData, SolveOptions, StorePolicy,
};
use crate::geometry::{
    build_null_coordinates, cone_graph, trace_decay_exponent, validate_hypothesis, ConeChart,
    ConeDefiningFunction, SpacetimeChart,
};
use crate::report::{write_csv, CheckEntry, ReportBundle};
use crate::states::{
    bogoliubov, build_gauge_covariances, build_gauge_covariances_unchecked,
    build_pure_covariances, moretti_pair, purity_check, verify_ccr, verify_musc,
    verify_positivity, CovariancePair, GaugeGenerators, PurityGenerator,
};
use crate::symcalc::SmoothingConfig;
use crate::util::line_fit;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown built-in scenario `{0}` (available: minkowski-moretti, overcoupled-gauge)")]
    UnknownBuiltin(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Which chart family the scenario lives on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    /// `"minkowski"` or `"conformal-gaussian"`.
    pub kind: String,
    /// Spatial dimension (2 or 3).
    pub d: usize,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_amplitude() -> f64 {
    0.1
}
fn default_width() -> f64 {
    1.0
}

impl ChartSpec {
    pub fn build(&self) -> Result<SpacetimeChart, ConfigError> {
        if !(2..=3).contains(&self.d) {
            return Err(invalid(format!("chart dimension {} (supported: 2, 3)", self.d)));
        }
        match self.kind.as_str() {
            "minkowski" => Ok(SpacetimeChart::minkowski(self.d)),
            "conformal-gaussian" => {
                if self.amplitude <= -1.0 {
                    return Err(invalid("conformal amplitude must exceed -1"));
                }
                if self.width <= 0.0 {
                    return Err(invalid("conformal width must be positive"));
                }
                Ok(SpacetimeChart::conformal_gaussian(
                    self.d,
                    self.amplitude,
                    self.width,
                ))
            }
            other => Err(invalid(format!("unknown chart kind `{other}`"))),
        }
    }

    pub fn is_flat(&self) -> bool {
        self.kind == "minkowski"
    }
}

/// The boundary cylinder grid the cone chart and bulk traces live on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    /// `s`-samples (power of two, ≥ 8).
    pub n_s: usize,
    pub s_min: f64,
    pub s_max: f64,
    /// Angular degree cap.
    pub l_max: usize,
}

impl BoundarySpec {
    pub fn build(&self, d: usize) -> Result<Arc<BoundaryGrid>, ConfigError> {
        BoundaryGrid::new(d, self.n_s, self.s_min, self.s_max, self.l_max)
            .map_err(|e| invalid(format!("boundary grid: {e}")))
    }
}

/// Null-coordinate construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    /// Reference null coordinate at `s = 0`.
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    /// Relative tolerance of the generator integration.
    #[serde(default = "default_rtol")]
    pub rtol: f64,
}

fn default_epsilon0() -> f64 {
    0.1
}
fn default_rtol() -> f64 {
    1e-10
}

impl Default for ConeSpec {
    fn default() -> Self {
        Self {
            epsilon0: default_epsilon0(),
            rtol: default_rtol(),
        }
    }
}

/// Interior box, Σ₀ level, and march extent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BulkSpec {
    /// Box half-width.
    pub half: f64,
    /// Nodes per axis (odd keeps a node at the origin).
    pub n_per_axis: usize,
    /// Σ₀ slice time.
    pub t1: f64,
    /// March end time (≥ t1).
    pub t_max: f64,
    /// Courant ratio dt/dx (≤ 0.5).
    #[serde(default = "default_courant")]
    pub courant: f64,
    /// Near-tip fit window for the trace-decay check, in the flat null
    /// coordinate `v`.
    #[serde(default = "default_decay_v_lo")]
    pub decay_v_lo: f64,
    #[serde(default = "default_decay_v_hi")]
    pub decay_v_hi: f64,
}

fn default_courant() -> f64 {
    0.5
}
fn default_decay_v_lo() -> f64 {
    0.002
}
fn default_decay_v_hi() -> f64 {
    0.02
}

impl BulkSpec {
    pub fn build(&self, d: usize) -> Result<Arc<BulkGrid>, ConfigError> {
        BulkGrid::new(d, self.half, self.n_per_axis, self.t1, self.t_max, self.courant)
            .map_err(|e| invalid(format!("bulk grid: {e}")))
    }
}

/// The state family drawn for the verification suite. States use their own
/// (coarser) boundary grid: the verification checks are dense-matrix
/// spectral computations, while the cone/trace grid wants fine `s`-sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub n_s: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub l_max: usize,
    /// Draws from the mixed (gauge) covariance family.
    pub gauge_count: usize,
    /// Draws from the pure covariance family.
    pub pure_count: usize,
    /// Rank of the random generator blocks.
    pub rank: usize,
    /// Operator norm of the cross-sector coupling; > 1 leaves the positive
    /// family (the build gate is bypassed and positivity is expected to
    /// fail, which the report records).
    pub d_norm: f64,
    /// Scale of the diagonal generator blocks.
    pub a_scale: f64,
    /// Include the distinguished multiplier-state checks.
    pub include_moretti: bool,
}

impl StateSpec {
    pub fn build(&self, d: usize) -> Result<Arc<BoundaryGrid>, ConfigError> {
        BoundaryGrid::new(d, self.n_s, self.s_min, self.s_max, self.l_max)
            .map_err(|e| invalid(format!("state grid: {e}")))
    }
}

/// Characteristic (trace-operator) solve parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoursatSpec {
    pub m_per_axis: usize,
    #[serde(default = "default_true")]
    pub include_velocity: bool,
}

fn default_true() -> bool {
    true
}

impl GoursatSpec {
    pub fn basis_config(&self) -> BasisConfig {
        BasisConfig {
            m_per_axis: self.m_per_axis,
            include_velocity: self.include_velocity,
        }
    }
}

/// Which pipelines run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub geometry: bool,
    pub state: bool,
    pub bulk: bool,
    pub goursat: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            geometry: true,
            state: true,
            bulk: true,
            goursat: true,
        }
    }
}

/// Pass thresholds. Defaults are tuned for the flat chart; curved-chart
/// scenarios should widen the geometry entries explicitly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// |f| on sampled cone points and the tip-gradient norm.
    pub hypothesis_residual: f64,
    /// Null/cross residuals of the normal form.
    pub normal_form: f64,
    /// Spread and convention deviation of the generator-parameter slope.
    pub alpha: f64,
    /// Boundary CCR defect `‖λ⁺ − λ⁻ − 2D_s‖ / ‖2D_s‖`.
    pub ccr: f64,
    /// Bogoliubov identity residuals.
    pub bogoliubov: f64,
    /// Involution residual of pure pairs.
    pub purity: f64,
    /// Cone-flux vs Σ₀-slice symplectic defect.
    pub monomorphism: f64,
    /// Bulk CCR defect of pulled-back two-point pairings.
    pub bulk_ccr: f64,
    /// Allowed deviation of the near-tip trace exponent from (d−1)/2.
    pub decay_margin: f64,
    /// Characteristic round-trip residuals.
    pub goursat_round_trip: f64,
    /// Per-step growth threshold of the frequency-decay indicator (its
    /// calibration tracks the resolved band, so denser `s`-grids need a
    /// wider gate).
    pub smoothing_growth: f64,
    /// Minimum fitted convergence order in a sweep.
    pub min_order: f64,
    /// Allowed relative spread of the trace-operator condition number
    /// across sweep levels.
    pub condition_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hypothesis_residual: 1e-8,
            normal_form: 1e-8,
            alpha: 1e-8,
            ccr: 1e-12,
            bogoliubov: 1e-10,
            purity: 1e-6,
            monomorphism: 2e-2,
            bulk_ccr: 5e-2,
            decay_margin: 0.1,
            goursat_round_trip: 1e-6,
            smoothing_growth: SmoothingConfig::default().growth_factor,
            min_order: 1.8,
            condition_spread: 0.2,
        }
    }
}

/// One complete verification configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Mandatory RNG seed; reports are byte-identical for a fixed seed.
    pub seed: u64,
    pub chart: ChartSpec,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub cone: ConeSpec,
    pub bulk: BulkSpec,
    pub state: StateSpec,
    pub goursat: GoursatSpec,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A CSV table produced alongside the report.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let header: Vec<&str> = self.header.iter().map(String::as_str).collect();
        write_csv(&dir.join(&self.name), &header, &self.rows)
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Bundled scenarios: `minkowski-moretti` (the distinguished flat-chart
    /// configuration; all checks expected to pass) and `overcoupled-gauge`
    /// (coupling norm past the positivity gate; the positivity check is
    /// expected to FAIL and the run to exit nonzero).
    pub fn builtin(name: &str) -> Result<Self, ConfigError> {
        match name {
            "minkowski-moretti" => {
                Self::from_toml_str(include_str!("../scenarios/minkowski-moretti.toml"))
            }
            "overcoupled-gauge" => {
                Self::from_toml_str(include_str!("../scenarios/overcoupled-gauge.toml"))
            }
            other => Err(ConfigError::UnknownBuiltin(other.into())),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() {
            return Err(invalid("scenario name must be non-empty"));
        }
        self.chart.build()?;
        if self.boundary.s_min >= self.boundary.s_max {
            return Err(invalid("boundary window needs s_min < s_max"));
        }
        if self.cone.epsilon0 <= 0.0 {
            return Err(invalid("epsilon0 must be positive"));
        }
        if !(self.cone.rtol > 0.0) {
            return Err(invalid("cone integration tolerance must be positive"));
        }
        if self.bulk.courant <= 0.0 || self.bulk.courant > 0.5 {
            return Err(invalid("courant ratio must lie in (0, 0.5]"));
        }
        if self.bulk.t1 <= 0.0 || self.bulk.t_max < self.bulk.t1 {
            return Err(invalid("need 0 < t1 ≤ t_max"));
        }
        if self.bulk.half <= self.bulk.t1 {
            return Err(invalid("box half-width must exceed t1"));
        }
        if self.bulk.n_per_axis < 9 {
            return Err(invalid("bulk grid needs at least 9 nodes per axis"));
        }
        if !(self.bulk.decay_v_lo > 0.0 && self.bulk.decay_v_lo < self.bulk.decay_v_hi) {
            return Err(invalid("decay window needs 0 < v_lo < v_hi"));
        }
        if self.state.rank == 0 || self.state.rank > 8 {
            return Err(invalid("generator rank must lie in 1..=8"));
        }
        if self.state.d_norm < 0.0 {
            return Err(invalid("coupling norm must be nonnegative"));
        }
        if self.goursat.m_per_axis < 2 {
            return Err(invalid("spline basis needs at least 2 bumps per axis"));
        }
        if self.checks.bulk && self.chart.d == 3 && !self.chart.is_flat() {
            return Err(invalid(
                "the symplectic-restriction check uses exact flat solutions; \
                 enable it only on the minkowski chart",
            ));
        }
        // Surface grid construction errors (power-of-two counts, dimension
        // support) at validation time.
        self.boundary.build(self.chart.d)?;
        self.state.build(self.chart.d)?;
        self.bulk.build(self.chart.d)?;
        Ok(())
    }

    fn defining_function(&self, chart: &SpacetimeChart) -> ConeDefiningFunction {
        ConeDefiningFunction::standard(chart)
    }

    /// Build the cone chart shared by the geometry, bulk, and characteristic
    /// pipelines.
    pub fn build_cone(&self) -> anyhow::Result<ConeChart> {
        let chart = self.chart.build()?;
        let f = self.defining_function(&chart);
        let grid = self.boundary.build(self.chart.d)?;
        Ok(build_null_coordinates(
            &chart,
            &f,
            self.cone.epsilon0,
            &grid,
            self.cone.rtol,
        )?)
    }

    /// Cone-geometry checks: defining-function hypothesis, null normal form,
    /// parametrization convention, and the graph property.
    pub fn geometry_checks(&self, cone: &ConeChart) -> anyhow::Result<Vec<CheckEntry>> {
        let tol = &self.tolerances;
        let chart = self.chart.build()?;
        let f = self.defining_function(&chart);
        let report = validate_hypothesis(&chart, &f)?;
        let mut out = vec![
            CheckEntry::bounded(
                "geometry.on_cone_residual",
                "defining function vanishes on sampled cone points",
                report.on_cone_residual,
                tol.hypothesis_residual,
            ),
            CheckEntry::bounded(
                "geometry.tip_gradient",
                "defining-function gradient vanishes at the tip",
                report.tip_gradient,
                tol.hypothesis_residual,
            ),
            CheckEntry::bounded(
                "geometry.hessian_residual",
                "tip Hessian matches -2x the metric",
                report.hessian_residual,
                1e-4,
            )
            .with_detail("min_cone_gradient", report.min_cone_gradient),
            CheckEntry::bounded(
                "geometry.null_residual",
                "cone generators stay null",
                cone.null_residual,
                tol.normal_form,
            ),
            CheckEntry::bounded(
                "geometry.cross_residual",
                "normal-form cross terms vanish",
                cone.cross_residual,
                tol.normal_form,
            ),
            CheckEntry::bounded(
                "geometry.alpha_spread",
                "generator-parameter slope is uniform across generators",
                cone.alpha_spread(),
                tol.alpha,
            ),
            CheckEntry::bounded(
                "geometry.alpha_convention",
                "generator-parameter slope matches the 1/2 normalization",
                (cone.alpha_hat - 0.5).abs(),
                tol.alpha,
            )
            .with_detail("alpha_hat", cone.alpha_hat),
        ];
        let k_lo = cone.k_offset.iter().cloned().fold(f64::INFINITY, f64::min);
        let k_hi = cone
            .k_offset
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(CheckEntry::info(
            "geometry.k_offset_spread",
            "spread of the per-generator parameter offsets",
            k_hi - k_lo,
        ));
        let graph = cone_graph(&chart, &f, self.bulk.t1, 16)?;
        out.push(CheckEntry::flag(
            "geometry.graph_lipschitz",
            "cone is a Lipschitz graph over the spatial slice",
            graph.lipschitz,
            graph.lipschitz.is_finite() && graph.lipschitz > 0.0,
        ));
        Ok(out)
    }

    /// State-family checks on the state grid: CCR, positivity, sector decay,
    /// purity (where applicable), shift conjugation, and the Bogoliubov
    /// identities.
    pub fn state_checks(&self) -> anyhow::Result<Vec<CheckEntry>> {
        let tol = &self.tolerances;
        let grid = self.state.build(self.chart.d)?;
        let cfg = SmoothingConfig {
            growth_factor: tol.smoothing_growth,
            ..SmoothingConfig::default()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();

        if self.state.include_moretti {
            let pair = moretti_pair(&grid);
            out.extend(pair_entries("state.moretti", &pair, &cfg, tol, true));
        }

        if self.state.gauge_count > 0 {
            let mut pairs = Vec::new();
            for _ in 0..self.state.gauge_count {
                let gen = GaugeGenerators::random(
                    &grid,
                    self.state.rank,
                    self.state.d_norm,
                    self.state.a_scale,
                    &mut rng,
                );
                // Past the coupling gate the family leaves the positive
                // cone; build anyway and let the positivity entry record
                // the failure.
                let pair = if self.state.d_norm <= 1.0 {
                    build_gauge_covariances(&gen)?
                } else {
                    build_gauge_covariances_unchecked(&gen)
                };
                pairs.push(pair);
            }
            out.extend(family_entries("state.gauge", &pairs, &cfg, tol, false));
        }

        if self.state.pure_count > 0 {
            let mut gens = Vec::new();
            let mut pairs = Vec::new();
            for _ in 0..self.state.pure_count {
                let gen = PurityGenerator::random(&grid, self.state.rank, &mut rng);
                pairs.push(build_pure_covariances(&gen)?);
                gens.push(gen);
            }
            out.extend(family_entries("state.pure", &pairs, &cfg, tol, true));

            // Conjugation by a null-coordinate shift preserves every check.
            // The amplitude keeps the spectral phase inside the resolved
            // angular band (no aliasing warning) on the default state grid.
            let shift = ShiftMap::new(grid.clone(), |x, phi| 0.05 * (x + phi.cos()));
            let conj: Vec<CovariancePair> = pairs
                .iter()
                .map(|p| p.conjugated_by_shift(&shift))
                .collect::<Result<_, _>>()?;
            out.extend(family_entries("state.pure_shifted", &conj, &cfg, tol, true));

            // Bogoliubov identities of the pure family's implementer.
            let gen = &gens[0];
            let neg = PurityGenerator {
                grid: grid.clone(),
                a: -&gen.a,
            };
            let u = bogoliubov(gen)?;
            let u_inv = bogoliubov(&neg)?;
            let n = grid.admissible_dim();
            let eye = DMatrix::<Complex64>::identity(n, n);
            let inverse_residual = (&u.matrix * &u_inv.matrix - &eye).norm() / eye.norm();
            out.push(CheckEntry::bounded(
                "state.bogoliubov_inverse",
                "negated generator implements the inverse transformation",
                inverse_residual,
                tol.bogoliubov,
            ));
            let c0 = moretti_pair(&grid).c_plus();
            let conjugated = u.matrix.adjoint() * &c0 * &u.matrix;
            let target = build_pure_covariances(gen)?.c_plus();
            let conj_residual = (&conjugated - &target).norm() / target.norm();
            out.push(CheckEntry::bounded(
                "state.bogoliubov_conjugation",
                "transformation maps the base covariance to the generated one",
                conj_residual,
                tol.bogoliubov,
            ));
        }
        Ok(out)
    }

    /// Interior checks against the cone: symplectic restriction, pulled-back
    /// two-point CCR, and near-tip trace decay.
    pub fn bulk_checks(&self, cone: &ConeChart) -> anyhow::Result<(Vec<CheckEntry>, Vec<CsvTable>)> {
        let tol = &self.tolerances;
        let chart = self.chart.build()?;
        let d = self.chart.d;
        let grid = self.bulk.build(d)?;
        let mut out = Vec::new();
        let mut tables = Vec::new();

        if d == 3 && self.chart.is_flat() {
            let w1 = SphericalWave::new(0.55, 0.35);
            let w2 = SphericalWave::new(0.62, 0.30);
            let f1 = closed_form_on_cone(
                &grid,
                &chart,
                cone,
                |t, x| w1.phi(t, x),
                |t, x| w1.phi_t(t, x),
            );
            let f2 = closed_form_on_cone(
                &grid,
                &chart,
                cone,
                |t, x| w2.phi(t, x),
                |t, x| w2.phi_t(t, x),
            );
            let report = verify_monomorphism(&f1, &f2, cone)?;
            out.push(
                CheckEntry::bounded(
                    "bulk.monomorphism",
                    "cone flux matches the slice symplectic form",
                    report.residual,
                    tol.monomorphism,
                )
                .with_detail("sigma_cone", report.sigma_cone)
                .with_detail("sigma_slice", report.sigma_slice),
            );

            let pair = moretti_pair(&cone.grid);
            let u1 = BulkSource::bump(0.50, vec![0.1, 0.0, 0.0], 0.25, 0.30, 1.0);
            let u2 = BulkSource::bump(0.72, vec![-0.08, 0.06, 0.0], 0.25, 0.30, 1.0);
            let two = bulk_two_point(&pair, &u1, &u2, &grid, &chart, cone)?;
            out.push(
                CheckEntry::bounded(
                    "bulk.ccr",
                    "pulled-back two-point pairings reproduce the commutator",
                    two.ccr_residual,
                    tol.bulk_ccr,
                )
                .with_detail("e_pairing", two.e_pairing),
            );
        }

        // Near-tip trace decay: a solution with a nonzero tip value has
        // sup-trace growth exponent (d-1)/2 toward the tip.
        let (gamma, table) = self.trace_decay(&chart, &grid, cone)?;
        let target = (d as f64 - 1.0) / 2.0;
        out.push(
            CheckEntry::bounded(
                "bulk.trace_decay",
                "near-tip trace exponent matches (d-1)/2",
                (gamma - target).abs(),
                tol.decay_margin,
            )
            .with_detail("exponent", gamma)
            .with_detail("target", target),
        );
        tables.push(table);
        Ok((out, tables))
    }

    fn trace_decay(
        &self,
        chart: &SpacetimeChart,
        grid: &Arc<BulkGrid>,
        cone: &ConeChart,
    ) -> anyhow::Result<(f64, CsvTable)> {
        let trace = if self.chart.d == 3 && self.chart.is_flat() {
            // Exact solution with a nonzero tip value: its trace shrinks
            // toward the tip at exactly the density-factor rate.
            let w = SphericalWave::new(0.3, 0.35);
            let field = closed_form_on_cone(
                grid,
                chart,
                cone,
                |t, x| w.phi(t, x),
                |t, x| w.phi_t(t, x),
            );
            restrict_to_cone(&field, cone)?
        } else {
            // No closed form available: evolve a radial bump posed on Σ₀
            // back through the cone interior.
            let bump = crate::bulk::oracles::BumpProfile::new(0.0, 0.5);
            let data = CauchyData::from_fn(
                grid.clone(),
                move |x| {
                    let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                    bump.value(r)
                },
                |_| 0.0,
            )?;
            let (field, _) = solve_cauchy(
                &data,
                chart,
                &SolveOptions {
                    store: StorePolicy::None,
                    cone: Some(cone),
                },
            )?;
            restrict_to_cone(&field, cone)?
        };
        let s_lo = (self.bulk.decay_v_lo / self.cone.epsilon0).ln();
        let s_hi = (self.bulk.decay_v_hi / self.cone.epsilon0).ln();
        // trace_decay_exponent fits sup ~ C e^{-gamma s}; toward the tip the
        // trace *shrinks*, so the growth exponent is the negated fit.
        let gamma = -trace_decay_exponent(&trace, s_lo, s_hi)?;
        let profile = trace.sup_profile();
        let mut table = CsvTable::new("trace_decay.csv", &["s", "sup_trace"]);
        for (i, sup) in profile.iter().enumerate() {
            table.rows.push(vec![cone.grid.s_at(i), *sup]);
        }
        Ok((gamma, table))
    }

    /// Characteristic solve checks: forward/backward round trip through the
    /// regularized trace operator.
    pub fn goursat_checks(
        &self,
        cone: &ConeChart,
    ) -> anyhow::Result<(Vec<CheckEntry>, Vec<CsvTable>)> {
        let tol = &self.tolerances;
        let chart = self.chart.build()?;
        let grid = self.bulk.build(self.chart.d)?;
        let cfg = self.goursat.basis_config();
        let op = assemble_trace_operator(&grid, &chart, cone, &cfg)?;

        let mut coeffs = DVector::zeros(op.basis.size());
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = ((k as f64) * 0.7).sin();
        }
        let data = op.basis.combine(&coeffs, &grid);
        let (field, _) = solve_cauchy(
            &data,
            &chart,
            &SolveOptions {
                store: StorePolicy::None,
                cone: Some(cone),
            },
        )?;
        let trace = restrict_to_cone(&field, cone)?;
        let sol = goursat_solve(&trace, &op)?;
        let recovery = sol.data.energy_distance(&data) / data.energy_norm();

        let entries = vec![
            CheckEntry::bounded(
                "goursat.forward_residual",
                "regularized solve reproduces the prescribed trace",
                sol.forward_residual,
                tol.goursat_round_trip,
            ),
            CheckEntry::bounded(
                "goursat.recovery",
                "round trip recovers the in-basis slice data (energy norm)",
                recovery,
                tol.goursat_round_trip,
            ),
            CheckEntry::info(
                "goursat.condition_number",
                "condition number of the energy-normalized trace operator",
                op.condition_number(),
            )
            .with_detail("cut_fraction", sol.cut_fraction)
            .with_detail("basis_size", op.basis.size() as f64),
        ];
        let mut sv = CsvTable::new("singular_values.csv", &["index", "sigma"]);
        for (i, s) in op.singular_values.iter().enumerate() {
            sv.rows.push(vec![i as f64, *s]);
        }
        Ok((entries, vec![sv]))
    }

    /// Run every enabled pipeline and (optionally) write `report.json` and
    /// the CSV tables into `out_dir`.
    pub fn run(&self, out_dir: Option<&Path>) -> anyhow::Result<ReportBundle> {
        self.validate()?;
        let mut bundle = ReportBundle::new(&self.name, self.seed);
        let mut tables = Vec::new();
        let needs_cone = self.checks.geometry || self.checks.bulk || self.checks.goursat;
        let cone = if needs_cone {
            Some(self.build_cone()?)
        } else {
            None
        };
        if self.checks.geometry {
            bundle.extend(self.geometry_checks(cone.as_ref().unwrap())?);
        }
        if self.checks.state {
            bundle.extend(self.state_checks()?);
        }
        if self.checks.bulk {
            let (entries, t) = self.bulk_checks(cone.as_ref().unwrap())?;
            bundle.extend(entries);
            tables.extend(t);
        }
        if self.checks.goursat {
            let (entries, t) = self.goursat_checks(cone.as_ref().unwrap())?;
            bundle.extend(entries);
            tables.extend(t);
        }
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir)?;
            bundle.write_json(&dir.join("report.json"))?;
            for table in &tables {
                table.write(dir)?;
            }
        }
        Ok(bundle)
    }

    /// Grid-refinement sweep: re-run the symplectic-restriction check (d = 3,
    /// flat chart) and the trace-operator conditioning across `levels`
    /// refinements of the interior grid, fitting the convergence order.
    pub fn convergence_sweep(
        &self,
        levels: usize,
        out_dir: Option<&Path>,
    ) -> anyhow::Result<ReportBundle> {
        self.validate()?;
        if levels < 3 {
            return Err(invalid("a convergence sweep needs at least 3 levels").into());
        }
        let tol = &self.tolerances;
        let chart = self.chart.build()?;
        let d = self.chart.d;
        let cone = self.build_cone()?;
        let with_mono = d == 3 && self.chart.is_flat() && self.checks.bulk;
        let with_goursat = self.checks.goursat;

        let mut bundle = ReportBundle::new(&format!("{}-sweep", self.name), self.seed);
        let mut table = CsvTable::new(
            "sweep.csv",
            &["dx", "monomorphism_residual", "goursat_condition"],
        );
        let mut dxs = Vec::new();
        let mut mono = Vec::new();
        let mut conds = Vec::new();
        for level in 0..levels {
            let n = (self.bulk.n_per_axis - 1) * (1usize << level) + 1;
            let grid = BulkGrid::new(
                d,
                self.bulk.half,
                n,
                self.bulk.t1,
                self.bulk.t_max,
                self.bulk.courant,
            )?;
            dxs.push(grid.dx);
            let residual = if with_mono {
                let w1 = SphericalWave::new(0.55, 0.35);
                let w2 = SphericalWave::new(0.62, 0.30);
                let f1 = closed_form_on_cone(
                    &grid,
                    &chart,
                    &cone,
                    |t, x| w1.phi(t, x),
                    |t, x| w1.phi_t(t, x),
                );
                let f2 = closed_form_on_cone(
                    &grid,
                    &chart,
                    &cone,
                    |t, x| w2.phi(t, x),
                    |t, x| w2.phi_t(t, x),
                );
                let r = verify_monomorphism(&f1, &f2, &cone)?.residual;
                mono.push(r);
                r
            } else {
                f64::NAN
            };
            let condition = if with_goursat {
                let op =
                    assemble_trace_operator(&grid, &chart, &cone, &self.goursat.basis_config())?;
                let c = op.condition_number();
                conds.push(c);
                c
            } else {
                f64::NAN
            };
            table.rows.push(vec![grid.dx, residual, condition]);
        }

        if with_mono {
            let xs: Vec<f64> = dxs.iter().map(|v| v.ln()).collect();
            let ys: Vec<f64> = mono.iter().map(|v| v.ln()).collect();
            let (order, _, _) = line_fit(&xs, &ys);
            bundle.push(CheckEntry::flag(
                "sweep.monomorphism_order",
                "symplectic-restriction defect converges at scheme order",
                order,
                order >= tol.min_order,
            ));
            bundle.push(CheckEntry::bounded(
                "sweep.monomorphism_finest",
                "symplectic-restriction defect at the finest level",
                *mono.last().unwrap(),
                tol.monomorphism,
            ));
        }
        if with_goursat {
            let mean = conds.iter().sum::<f64>() / conds.len() as f64;
            let spread = conds
                .iter()
                .map(|c| (c - mean).abs() / mean)
                .fold(0.0f64, f64::max);
            bundle.push(
                CheckEntry::bounded(
                    "sweep.condition_stability",
                    "trace-operator conditioning is stable under refinement",
                    spread,
                    tol.condition_spread,
                )
                .with_detail("mean_condition", mean),
            );
        }
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir)?;
            bundle.write_json(&dir.join("report.json"))?;
            table.write(dir)?;
        }
        Ok(bundle)
    }
}

/// Entries for one covariance pair: CCR defect, positivity, sector decay,
/// and (for families built to be pure) the purity reconstruction.
fn pair_entries(
    prefix: &str,
    pair: &CovariancePair,
    cfg: &SmoothingConfig,
    tol: &Tolerances,
    expect_pure: bool,
) -> Vec<CheckEntry> {
    family_entries(prefix, std::slice::from_ref(pair), cfg, tol, expect_pure)
}

/// Worst-case aggregation of the verification suite over a drawn family.
fn family_entries(
    prefix: &str,
    pairs: &[CovariancePair],
    cfg: &SmoothingConfig,
    tol: &Tolerances,
    expect_pure: bool,
) -> Vec<CheckEntry> {
    let mut worst_ccr = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    let mut pos_pass = true;
    let mut musc_pass = true;
    let mut worst_ratio = 0.0f64;
    let mut worst_purity = 0.0f64;
    let mut purity_pass = true;
    for pair in pairs {
        worst_ccr = worst_ccr.max(verify_ccr(pair));
        let pos = verify_positivity(pair);
        let scaled = (pos.min_eig_plus / pos.norm_plus.max(1e-300))
            .min(pos.min_eig_minus / pos.norm_minus.max(1e-300));
        worst_eig = worst_eig.min(scaled);
        pos_pass &= pos.pass;
        let musc = verify_musc(pair, cfg);
        musc_pass &= musc.pass;
        for rep in [
            &musc.cross_plus,
            &musc.cross_minus,
            &musc.remainder_plus,
            &musc.remainder_minus,
        ] {
            worst_ratio = worst_ratio.max(rep.max_ratio);
        }
        if expect_pure {
            match purity_check(pair) {
                Ok(rep) => {
                    worst_purity = worst_purity.max(rep.involution_residual);
                    purity_pass &= rep.pass;
                }
                Err(_) => purity_pass = false,
            }
        }
    }
    let mut out = vec![
        CheckEntry::bounded(
            &format!("{prefix}.ccr"),
            "covariance difference equals the commutator form",
            worst_ccr,
            tol.ccr,
        ),
        CheckEntry::flag(
            &format!("{prefix}.positivity"),
            "both covariances are positive semidefinite",
            worst_eig,
            pos_pass,
        ),
        CheckEntry::flag(
            &format!("{prefix}.sector_decay"),
            "wrong-sector blocks pass the frequency-decay indicator",
            worst_ratio,
            musc_pass,
        ),
    ];
    if expect_pure {
        out.push(
            CheckEntry::flag(
                &format!("{prefix}.purity"),
                "generator reconstruction and involution confirm purity",
                worst_purity,
                purity_pass && worst_purity <= tol.purity,
            ),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse_and_validate() {
        let mm = Scenario::builtin("minkowski-moretti").unwrap();
        assert_eq!(mm.name, "minkowski-moretti");
        assert!(mm.checks.geometry && mm.checks.state && mm.checks.bulk && mm.checks.goursat);
        let oc = Scenario::builtin("overcoupled-gauge").unwrap();
        assert!(oc.state.d_norm > 1.0, "falsification scenario overcouples the sectors");
        assert!(oc.checks.state && !oc.checks.bulk);
        assert!(matches!(
            Scenario::builtin("no-such-thing"),
            Err(ConfigError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn malformed_and_invalid_toml_are_config_errors() {
        assert!(matches!(
            Scenario::from_toml_str("name = ["),
            Err(ConfigError::Parse(_))
        ));
        // Unknown fields are rejected rather than silently ignored.
        let mut text = include_str!("../scenarios/overcoupled-gauge.toml").to_owned();
        text.push_str("\n[state2]\nx = 1\n");
        assert!(matches!(
            Scenario::from_toml_str(&text),
            Err(ConfigError::Parse(_))
        ));
        // The seed is mandatory: reports must be reproducible by construction.
        let unseeded = include_str!("../scenarios/overcoupled-gauge.toml")
            .replace("seed = 42\n", "");
        assert!(matches!(
            Scenario::from_toml_str(&unseeded),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn validation_gates_the_numerical_parameters() {
        let base = include_str!("../scenarios/overcoupled-gauge.toml");
        let cases = [
            ("t1 = 1.0\nt_max = 1.0", "t1 = 1.6\nt_max = 1.6"), // Σ₀ outside the box
            ("n_per_axis = 17", "n_per_axis = 5"),              // interior grid too coarse
            ("rank = 4", "rank = 11"),                          // generator rank cap
        ];
        for (from, to) in cases {
            let text = base.replace(from, to);
            assert_ne!(text, base, "replacement must hit");
            assert!(
                matches!(Scenario::from_toml_str(&text), Err(ConfigError::Invalid(_))),
                "expected `{to}` to fail validation"
            );
        }
        let mut s = Scenario::builtin("overcoupled-gauge").unwrap();
        s.bulk.courant = 0.8;
        assert!(s.validate().is_err());
    }

    #[test]
    fn invalid_scenario_produces_no_partial_output() {
        let mut s = Scenario::builtin("overcoupled-gauge").unwrap();
        s.bulk.courant = -1.0;
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("reports");
        assert!(s.run(Some(&out)).is_err());
        assert!(!out.exists(), "no files may be written for a rejected configuration");
    }

    #[test]
    fn reports_are_byte_deterministic_for_a_fixed_seed() {
        let s = Scenario::builtin("overcoupled-gauge").unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let b1 = s.run(Some(d1.path())).unwrap();
        let b2 = s.run(Some(d2.path())).unwrap();
        assert_eq!(b1.to_json(), b2.to_json());
        let j1 = std::fs::read(d1.path().join("report.json")).unwrap();
        let j2 = std::fs::read(d2.path().join("report.json")).unwrap();
        assert_eq!(j1, j2);
        // A different seed must actually change the sampled families.
        let mut s2 = s.clone();
        s2.seed = 7;
        let b3 = s2.run(None).unwrap();
        assert_ne!(b1.to_json(), b3.to_json());
    }

    #[test]
    fn sweep_requires_three_levels() {
        let s = Scenario::builtin("overcoupled-gauge").unwrap();
        assert!(s.convergence_sweep(2, None).is_err());
    }

    #[test]
    fn overcoupled_family_fails_positivity_and_nothing_else() {
        let bundle = Scenario::builtin("overcoupled-gauge").unwrap().run(None).unwrap();
        assert!(!bundle.all_pass());
        for e in &bundle.entries {
            if e.id == "state.gauge.positivity" {
                assert!(!e.pass);
            } else {
                assert!(e.pass, "unexpected failure in {}", e.id);
            }
        }
    }
}
