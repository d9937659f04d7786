//! Experiment drivers, consistency checks, reports and mesh export.

mod experiments;
mod mesh;
mod registry;
mod report;

pub use experiments::*;
pub use mesh::{build_mesh, export_mesh, GridSpec, Mesh, Projection};
pub use registry::{build_surface, chen_scaled, GlueStage, SurfaceId, SURFACE_PATTERNS};
pub use report::{Check, EnergyReport, Functional, Functionals, Meta};
