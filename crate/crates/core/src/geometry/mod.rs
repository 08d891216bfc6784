//! Exterior domain, fields and metrics.

pub mod chart;
pub mod curvature;
pub mod fd;
pub mod field;
pub mod metric;

pub use chart::{sphere_area, Chart, ChartMode};
pub use curvature::{
    boundary_mean_curvature, conformal_laplacian_coefficient, conformal_mean_curvature,
    conformal_transform, conformal_transform_polynomial, flat_laplacian, laplace_beltrami,
    normal_derivative, scalar_curvature,
};
pub use field::{BoundaryField, ScalarField};
pub use metric::{
    metric_from_spec, required_decay, AxisymSpec, FrameComponents, MetricField, MetricSpec, Term,
};
