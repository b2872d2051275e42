//! Exterior and Riemannian calculus on a 4-chart: forms, wedge, d, Hodge
//! star, codifferential, curvature and the chiral splitting Λ² = Λ⁺ ⊕ Λ⁻.

pub mod curvature;
pub mod forms;
pub mod metric;

pub use curvature::{
    christoffel, curvature_at, curvature_split, curvature_split_at, ricci, riemann_lowered,
    scalar_curvature, CurvatureSplit, CurvatureVals, GVals, MetricJet, SymTensor2,
};
pub use forms::{binom4, index_position, Form, FormError, INDEX_SETS};
pub use metric::{GeomError, Metric};
