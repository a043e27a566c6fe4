//! Rigid slender-body mobility of closed-loop fibers in Stokes flow.
//!
//! The slender-body operator is discretized on the centerline
//! ([`kernel`], [`rigid`]); a boundary-integral solver on the tube surface
//! ([`bem`]) supplies the reference answer, and [`study`] compares the two
//! over a sweep of tube radii.

pub mod bem;
pub mod curve;
pub mod error;
pub mod fourier;
pub mod frame;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod rigid;
pub mod study;

pub use bem::{ReferenceMethod, ReferenceSolution, SurfaceMesh};
pub use curve::{ClosedCurve, CurveSpec};
pub use error::{Result, SbtError};
pub use frame::MaterialFrame;
pub use geometry::{Centerline, GeometryConstants, SlenderGeometry};
pub use kernel::{LineForceDensity, SbtMatrix};
pub use rigid::{GrandMobility, MobilitySolution, RigidGram, RigidKinematics, RigidSystem};
pub use study::{RateReport, StudyConfig, SweepRecord, ValidationReport};
