//! Numerical kernels: dense simplex LP, Wolfe minimum-norm point and Dykstra and active-set projections.

pub mod dykstra;
pub mod lp;
pub mod minnorm;
pub mod polyhedron;

pub use dykstra::{
    project_intersection, project_intersection_with, ConvexPiece, DykstraConfig, Projection,
};
pub use lp::{lp_solve, LpOutcome, LpProblem, VarBound};
pub use minnorm::{min_norm_point, MinNormResult};
pub use polyhedron::project_polyhedron;
