//! Reference solver for the rigid mobility problem on the tube surface.

mod convergence;
mod mesh;
mod quadrature;
mod solve;

pub use convergence::{reference_self_convergence, ConvergenceLevel, ConvergenceReport};
pub use mesh::{build_surface_mesh, SurfaceMesh, MIN_SURFACE_NODES};
pub use quadrature::{assemble_corrected, assemble_regularized, blob_width, cutoff, gauss_legendre, CorrectedQuadrature};
pub use solve::{
    single_layer_matrix, solve_reference_mobility, ReferenceMethod, ReferenceSolution, ReferenceSystem,
    SurfaceTraction, DELTA_FACTOR_RANGE,
};
