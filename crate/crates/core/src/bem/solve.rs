//! Rigid mobility on the tube surface by a first-kind single-layer
//! formulation with the kinematics as extra unknowns.

use super::mesh::SurfaceMesh;
use super::quadrature::{assemble_corrected, assemble_regularized, blob_width, CorrectedQuadrature};
use crate::error::{Result, SbtError};
use crate::linalg::{least_squares, DenseLu, MAX_CONDITION};
use crate::rigid::{cross_matrix, GrandMobility, RigidKinematics};
use nalgebra::{Matrix6, Vector3, Vector6};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// How the single-layer integrals are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReferenceMethod {
    /// Locally corrected Nystrom rule for the true Stokeslet, with orders
    /// from [`CorrectedQuadrature::for_mesh`].
    #[default]
    Corrected,
    /// The corrected rule with explicit parameters.
    CorrectedWith(CorrectedQuadrature),
    /// Regularized Stokeslets with blob width
    /// `delta_factor * max(1/Ns, epsilon * 2pi/Ntheta)`.
    Regularized { delta_factor: f64 },
}

pub const DELTA_FACTOR_RANGE: (f64, f64) = (0.5, 4.0);

/// Surface force density at the mesh nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceTraction {
    pub values: Vec<Vector3<f64>>,
}

impl SurfaceTraction {
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Quadrature total force and torque about the origin.
    pub fn resultants(&self, mesh: &SurfaceMesh) -> (Vector3<f64>, Vector3<f64>) {
        let mut force = Vector3::zeros();
        let mut torque = Vector3::zeros();
        for ((q, w), y) in self.values.iter().zip(&mesh.weights).zip(&mesh.nodes) {
            force += q * *w;
            torque += y.cross(q) * *w;
        }
        (force, torque)
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub traction: SurfaceTraction,
    pub kinematics: RigidKinematics,
    pub condition: f64,
    /// True when the square solve was refused and the SVD least-squares
    /// fallback produced the answer.
    pub least_squares: bool,
}

enum Factor {
    Lu(DenseLu),
    LeastSquares(Array2<f64>, f64),
}

/// Assembled and factored reference system for one mesh.
pub struct ReferenceSystem {
    mesh: SurfaceMesh,
    factor: Factor,
}

impl std::fmt::Debug for ReferenceSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReferenceSystem")
            .field("ns", &self.mesh.ns())
            .field("ntheta", &self.mesh.ntheta())
            .field("condition", &self.condition())
            .finish()
    }
}

/// Single-layer matrix for `mesh` with the chosen discretization.
pub fn single_layer_matrix(mesh: &SurfaceMesh, method: &ReferenceMethod) -> Result<Array2<f64>> {
    mesh.geometry().require_tube()?;
    match method {
        ReferenceMethod::Corrected => {
            single_layer_matrix(mesh, &ReferenceMethod::CorrectedWith(CorrectedQuadrature::for_mesh(mesh.ns(), mesh.ntheta())))
        }
        ReferenceMethod::CorrectedWith(rule) => {
            let eps = mesh.geometry().epsilon();
            if !(rule.patch_radius > 0.0 && rule.patch_radius < 3.0) || rule.patch_radius * eps >= 0.25 {
                return Err(SbtError::Config(format!(
                    "patch radius {} (times epsilon {eps}) must stay below 3 and below a quarter period",
                    rule.patch_radius
                )));
            }
            Ok(assemble_corrected(mesh, rule))
        }
        ReferenceMethod::Regularized { delta_factor } => {
            let (lo, hi) = DELTA_FACTOR_RANGE;
            if !(*delta_factor >= lo && *delta_factor <= hi) {
                return Err(SbtError::Config(format!("delta_factor {delta_factor} outside [{lo}, {hi}]")));
            }
            Ok(assemble_regularized(mesh, blob_width(mesh, *delta_factor)))
        }
    }
}

impl ReferenceSystem {
    pub fn new(mesh: &SurfaceMesh, method: &ReferenceMethod) -> Result<Self> {
        let s = single_layer_matrix(mesh, method)?;
        Self::from_single_layer(mesh, s)
    }

    /// Border the `3M x 3M` single layer with the kinematic unknowns and
    /// constraint rows. The single layer annihilates normal densities, so a
    /// rank-one term `n(x) sum_j w_j n_j . q_j` pins that component to zero
    /// without changing any solution.
    pub fn from_single_layer(mesh: &SurfaceMesh, s: Array2<f64>) -> Result<Self> {
        let m = mesh.len();
        assert_eq!(s.nrows(), 3 * m);
        let dim = 3 * m + 6;
        let mut a = Array2::<f64>::zeros((dim, dim));
        a.slice_mut(ndarray::s![..3 * m, ..3 * m]).assign(&s);
        drop(s);
        for i in 0..m {
            let ni = mesh.normals[i];
            let xc = cross_matrix(&mesh.nodes[i]);
            let wi = mesh.weights[i];
            for r in 0..3 {
                for (j, nj) in mesh.normals.iter().enumerate() {
                    let c = ni[r] * mesh.weights[j];
                    for col in 0..3 {
                        a[[3 * i + r, 3 * j + col]] += c * nj[col];
                    }
                }
                a[[3 * i + r, 3 * m + r]] = -1.0;
                a[[3 * m + r, 3 * i + r]] = wi;
                for c in 0..3 {
                    a[[3 * i + r, 3 * m + 3 + c]] = xc[(r, c)];
                    a[[3 * m + 3 + r, 3 * i + c]] = wi * xc[(r, c)];
                }
            }
        }
        let factor = match DenseLu::factor_unchecked(&a)? {
            lu if lu.condition() <= MAX_CONDITION => Factor::Lu(lu),
            lu => {
                let (_, cond) = least_squares(&a, &vec![0.0; dim])?;
                if !(cond <= MAX_CONDITION) {
                    return Err(SbtError::Singular {
                        condition: lu.condition().min(cond),
                        hint: "reference system is numerically singular; change delta_factor or the surface resolution".into(),
                    });
                }
                Factor::LeastSquares(a, cond)
            }
        };
        Ok(Self { mesh: mesh.clone(), factor })
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn condition(&self) -> f64 {
        match &self.factor {
            Factor::Lu(lu) => lu.condition(),
            Factor::LeastSquares(_, c) => *c,
        }
    }

    pub fn solve(&self, force: &Vector3<f64>, torque: &Vector3<f64>) -> Result<ReferenceSolution> {
        let m = self.mesh.len();
        let mut rhs = vec![0.0; 3 * m + 6];
        rhs[3 * m..3 * m + 3].copy_from_slice(force.as_slice());
        rhs[3 * m + 3..].copy_from_slice(torque.as_slice());
        let (x, least_squares_used) = match &self.factor {
            Factor::Lu(lu) => (lu.solve(&rhs)?, false),
            Factor::LeastSquares(a, _) => (least_squares(a, &rhs)?.0, true),
        };
        let traction = SurfaceTraction {
            values: x[..3 * m].chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect(),
        };
        Ok(ReferenceSolution {
            traction,
            kinematics: RigidKinematics::from_stacked(&Vector6::from_column_slice(&x[3 * m..])),
            condition: self.condition(),
            least_squares: least_squares_used,
        })
    }

    pub fn grand_mobility(&self) -> Result<GrandMobility> {
        let mut m = Matrix6::zeros();
        for k in 0..6 {
            let mut load = Vector6::zeros();
            load[k] = 1.0;
            let sol = self.solve(&load.fixed_rows::<3>(0).into(), &load.fixed_rows::<3>(3).into())?;
            m.set_column(k, &sol.kinematics.stacked());
        }
        Ok(GrandMobility::new(m, self.condition()))
    }
}

/// Assemble, factor and solve in one go.
pub fn solve_reference_mobility(
    mesh: &SurfaceMesh,
    force: &Vector3<f64>,
    torque: &Vector3<f64>,
    method: &ReferenceMethod,
) -> Result<ReferenceSolution> {
    ReferenceSystem::new(mesh, method)?.solve(force, torque)
}
