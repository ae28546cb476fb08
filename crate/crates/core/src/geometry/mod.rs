//! Spacetime charts near the base point, cone-defining functions, and the
//! null-coordinate construction on the lightcone: generator integration,
//! induced angular metric `h`, density factor `β`, cone graph over a Cauchy
//! slice, and trace-decay fitting.

mod chart;
mod cone;
mod graph;
mod null_coords;

pub use chart::SpacetimeChart;
pub use cone::{validate_hypothesis, ConeDefiningFunction, ValidationReport};
pub use graph::{cone_graph, trace_decay_exponent, ConeGraph};
pub use null_coords::{build_null_coordinates, induced_metric_and_beta, ConeChart, ConeChartFile};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("metric invariant violated: {0}")]
    BadMetric(String),
    #[error("gradient of the defining function vanishes on the cone away from the tip")]
    NonVanishingGradientOnCone,
    #[error("Hessian residual {0:.3e} against -2g(p) exceeds 1e-4")]
    HessianMismatch(f64),
    #[error("generator left the chart near s = {0:.3}")]
    GeneratorEscapedChart(f64),
    #[error("generator cannot be reparametrized by v (|∇f·∇v| = {0:.3e})")]
    DegenerateGenerator(f64),
    #[error("induced metric not positive definite (det = {0:.3e})")]
    SingularInducedMetric(f64),
    #[error("no cone crossing found over the root bracket at |x| = {0:.3}")]
    NoRoot(f64),
    #[error("fit window holds {0} usable slices; at least 8 required")]
    WindowTooShort(usize),
    #[error("trace is identically zero; decay exponent undefined")]
    EmptyTrace,
    #[error("ODE integration failed: {0}")]
    Ode(#[from] crate::util::ode::OdeError),
}
