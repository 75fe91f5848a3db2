//! Estimates of the error bound modulus of max-type functions and of linear
//! inequality systems.
//!
//! The modulus at a boundary point `xbar` of `[phi <= 0]` is
//! `liminf phi(x) / d(x, [phi <= 0])` as `x -> xbar` with `phi(x) > 0`. It is
//! bracketed from below by the distance from the origin to the outer limiting
//! subdifferential and from above by the distance to the end set of the
//! subdifferential at `xbar`. This crate computes both brackets, the sampled
//! liminf itself, and the combinatorial and convex-analytic pieces they need.

pub mod builtins;
pub mod endset;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod linsys;
pub mod maxfunc;
pub mod sampling;
pub mod solvers;

pub use builtins::Builtin;
pub use endset::{
    end_set_distance, end_set_distance_over, end_set_member, face_collection, gauge,
    sample_face_point, Body, EndSetDistance, Face, FaceCollection, FaceMode, GaugeMethod,
    GaugeValue,
};
pub use error::{Error, Result};
pub use estimator::{
    empirical_ebm, level_set_distance, sandwich_report, Details, Estimate, Provenance,
    SandwichReport, Scenario, ScenarioKind, ShellProfile, Side,
};
pub use geometry::{support, BodyOracle, PointSet, Support, Tolerances, Vector};
pub use linsys::{
    index_collection, modulus_formula, regularity_probe, Index, IndexCollection, LinearSystem,
    ModulusFormula, ProbeConfig, ProbeKind, RegularityProbe, Verdict,
};
pub use maxfunc::{
    limiting_collection, lower_estimate, upper_estimate, LimitingCollection, MaxFunction,
    SmoothPiece,
};
pub use sampling::SamplingConfig;
pub use solvers::{
    min_norm_point, project_intersection, project_polyhedron, ConvexPiece, MinNormResult,
};
