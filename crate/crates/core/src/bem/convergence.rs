//! Self-convergence of the reference solver over a resolution ladder.

use super::mesh::build_surface_mesh;
use super::solve::{ReferenceMethod, ReferenceSystem};
use crate::error::{Result, SbtError};
use crate::geometry::SlenderGeometry;
use crate::rigid::RigidKinematics;
use nalgebra::Vector3;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceLevel {
    pub ns: usize,
    pub ntheta: usize,
    pub kinematics: RigidKinematics,
    pub condition: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// `|dv| + |dw|` between consecutive levels.
    pub differences: Vec<f64>,
    /// Ratio of the last two differences.
    pub ratio: f64,
    /// Finest level plus the geometric tail of the last correction.
    pub extrapolated: RigidKinematics,
    /// Estimated error of the finest level.
    pub error_estimate: f64,
    /// Differences never grow along the ladder.
    pub monotone: bool,
}

impl ConvergenceReport {
    pub fn finest(&self) -> &ConvergenceLevel {
        self.levels.last().expect("a report has at least three levels")
    }
}

pub(crate) fn kinematic_distance(a: &RigidKinematics, b: &RigidKinematics) -> f64 {
    (a.v - b.v).norm() + (a.omega - b.omega).norm()
}

/// Solve on each `(Ns, Ntheta)` of `resolutions` and estimate the error of
/// the finest from the last two differences. With ratio `r < 1` the tail is
/// `d r / (1 - r)`; otherwise the ladder is flagged non-monotone and the
/// last difference itself is reported.
pub fn reference_self_convergence(
    geometry: &SlenderGeometry,
    force: &Vector3<f64>,
    torque: &Vector3<f64>,
    resolutions: &[(usize, usize)],
    method: &ReferenceMethod,
) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(SbtError::Config(format!("need at least 3 ladder rungs, got {}", resolutions.len())));
    }
    if resolutions.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1) {
        return Err(SbtError::Config(format!("ladder {resolutions:?} is not increasing")));
    }
    let mut levels = Vec::with_capacity(resolutions.len());
    for &(ns, ntheta) in resolutions {
        let mesh = build_surface_mesh(geometry, ns, ntheta)?;
        let system = ReferenceSystem::new(&mesh, method)?;
        let sol = system.solve(force, torque)?;
        levels.push(ConvergenceLevel { ns, ntheta, kinematics: sol.kinematics, condition: sol.condition });
    }
    Ok(summarize(levels))
}

pub(crate) fn summarize(levels: Vec<ConvergenceLevel>) -> ConvergenceReport {
    let differences: Vec<f64> = levels.windows(2).map(|w| kinematic_distance(&w[0].kinematics, &w[1].kinematics)).collect();
    let monotone = differences.windows(2).all(|w| w[1] <= w[0]);
    let (dc, df) = (differences[differences.len() - 2], differences[differences.len() - 1]);
    let ratio = if dc > 0.0 { df / dc } else if df == 0.0 { 0.0 } else { f64::INFINITY };
    let n = levels.len();
    let (fine, prev) = (&levels[n - 1].kinematics, &levels[n - 2].kinematics);
    let (extrapolated, error_estimate) = if ratio < 1.0 {
        let tail = ratio / (1.0 - ratio);
        (
            RigidKinematics { v: fine.v + (fine.v - prev.v) * tail, omega: fine.omega + (fine.omega - prev.omega) * tail },
            df * tail,
        )
    } else {
        (*fine, df)
    };
    ConvergenceReport { levels, differences, ratio, extrapolated, error_estimate, monotone: monotone && ratio < 1.0 || df == 0.0 }
}
