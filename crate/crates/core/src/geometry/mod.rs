//! Bounding volumes, point-membership predicates, control-cell localization
//! and ray-tracing node classification.

mod cell;
mod control;
mod obb;
mod raycast;
mod surface;

pub use cell::{point_in_cell, trilinear_distances, CellMembership, HexCell};
pub use control::{locate_control_cell, Aabb, ControlGrid, ControlLocation};
pub use obb::{build_obb, obb_intersect, point_in_obb, OrientedBoundingBox};
pub use raycast::{classify_points, RayClassifier};
pub use surface::TriSurface;
