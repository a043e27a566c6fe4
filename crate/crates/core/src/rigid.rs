//! Rigid slender-body mobility: the constrained saddle solve, the grand
//! mobility matrix and the rigid-motion Gram matrix.

use crate::curve::ClosedCurve;
use crate::error::Result;
use crate::geometry::SlenderGeometry;
use crate::kernel::{assemble_sbt_matrix, LineForceDensity, SbtMatrix};
use crate::linalg::DenseLu;
use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

/// Rigid-body velocity `x -> v + omega x x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidKinematics {
    pub v: Vector3<f64>,
    pub omega: Vector3<f64>,
}

impl RigidKinematics {
    pub fn zero() -> Self {
        Self { v: Vector3::zeros(), omega: Vector3::zeros() }
    }

    pub fn stacked(&self) -> Vector6<f64> {
        Vector6::new(self.v.x, self.v.y, self.v.z, self.omega.x, self.omega.y, self.omega.z)
    }

    pub fn from_stacked(x: &Vector6<f64>) -> Self {
        Self { v: x.fixed_rows::<3>(0).into(), omega: x.fixed_rows::<3>(3).into() }
    }

    pub fn velocity_at(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.v + self.omega.cross(x)
    }

    pub fn is_finite(&self) -> bool {
        self.stacked().iter().all(|x| x.is_finite())
    }
}

/// `[a]_x`, so that `cross_matrix(a) * b = a x b`.
pub fn cross_matrix(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

#[derive(Debug, Clone)]
pub struct MobilitySolution {
    pub force: LineForceDensity,
    pub kinematics: RigidKinematics,
    /// Estimated 1-norm condition number of the saddle system.
    pub condition: f64,
}

/// Factored `(3N + 6)` saddle system for one geometry. Any number of loads
/// can be solved against the single factorization.
#[derive(Debug)]
pub struct RigidSystem {
    sbt: SbtMatrix,
    positions: Vec<Vector3<f64>>,
    lu: DenseLu,
}

impl RigidSystem {
    pub fn new(geometry: &SlenderGeometry) -> Result<Self> {
        let sbt = assemble_sbt_matrix(geometry)?;
        Self::from_matrix(geometry, sbt)
    }

    pub fn from_matrix(geometry: &SlenderGeometry, sbt: SbtMatrix) -> Result<Self> {
        let positions: Vec<Vector3<f64>> = geometry.curve().nodes().to_vec();
        let n = positions.len();
        let h = 1.0 / n as f64;
        let dim = 3 * n + 6;
        let mut a = ndarray::Array2::<f64>::zeros((dim, dim));
        a.slice_mut(ndarray::s![..3 * n, ..3 * n]).assign(&sbt.matrix);
        for (i, x) in positions.iter().enumerate() {
            let xc = cross_matrix(x);
            for r in 0..3 {
                // A f - v + [X]_x omega = 0
                a[[3 * i + r, 3 * n + r]] = -1.0;
                // h sum f = F, h sum X x f = T
                a[[3 * n + r, 3 * i + r]] = h;
                for c in 0..3 {
                    a[[3 * i + r, 3 * n + 3 + c]] = xc[(r, c)];
                    a[[3 * n + 3 + r, 3 * i + c]] = h * xc[(r, c)];
                }
            }
        }
        let lu = DenseLu::factor(
            &a,
            "slender-body operator is numerically singular at this radius; try a different epsilon",
        )?;
        Ok(Self { sbt, positions, lu })
    }

    pub fn sbt_matrix(&self) -> &SbtMatrix {
        &self.sbt
    }

    pub fn condition(&self) -> f64 {
        self.lu.condition()
    }

    pub fn solve(&self, force: &Vector3<f64>, torque: &Vector3<f64>) -> Result<MobilitySolution> {
        let n = self.positions.len();
        let mut rhs = vec![0.0; 3 * n + 6];
        rhs[3 * n..3 * n + 3].copy_from_slice(force.as_slice());
        rhs[3 * n + 3..].copy_from_slice(torque.as_slice());
        let x = self.lu.solve(&rhs)?;
        let kin = Vector6::from_column_slice(&x[3 * n..]);
        Ok(MobilitySolution {
            force: LineForceDensity::from_stacked(&x[..3 * n]),
            kinematics: RigidKinematics::from_stacked(&kin),
            condition: self.condition(),
        })
    }

    /// `max_i |A f - v - omega x X_i|`.
    pub fn rigidity_residual(&self, solution: &MobilitySolution) -> f64 {
        let u = self.sbt.apply(&solution.force);
        u.iter()
            .zip(&self.positions)
            .map(|(ui, x)| (ui - solution.kinematics.velocity_at(x)).norm())
            .fold(0.0, f64::max)
    }

    /// Trapezoidal total force and torque (about the origin) of `f`.
    pub fn resultants(&self, f: &LineForceDensity) -> (Vector3<f64>, Vector3<f64>) {
        let h = 1.0 / self.positions.len() as f64;
        let mut force = Vector3::zeros();
        let mut torque = Vector3::zeros();
        for (x, fi) in self.positions.iter().zip(&f.values) {
            force += fi * h;
            torque += x.cross(fi) * h;
        }
        (force, torque)
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

/// Solve for the line force and rigid motion produced by total force `F`
/// and torque `T` (about the origin).
pub fn solve_mobility(geometry: &SlenderGeometry, force: &Vector3<f64>, torque: &Vector3<f64>) -> Result<MobilitySolution> {
    RigidSystem::new(geometry)?.solve(force, torque)
}

/// `6 x 6` map from stacked `(F, T)` to stacked `(v, omega)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrandMobility {
    pub m: Matrix6<f64>,
    pub condition: f64,
    /// `||M - M^T||_F / ||M||_F`.
    pub symmetry_defect: f64,
    /// Eigenvalues of the symmetric part, ascending.
    pub eigenvalues: Vector6<f64>,
}

impl GrandMobility {
    pub fn new(m: Matrix6<f64>, condition: f64) -> Self {
        let symmetry_defect = (m - m.transpose()).norm() / m.norm();
        let sym = (m + m.transpose()) * 0.5;
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        Self { m, condition, symmetry_defect, eigenvalues: Vector6::from_column_slice(&ev) }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.eigenvalues[0] > 0.0
    }

    pub fn apply(&self, force: &Vector3<f64>, torque: &Vector3<f64>) -> RigidKinematics {
        let load = Vector6::new(force.x, force.y, force.z, torque.x, torque.y, torque.z);
        RigidKinematics::from_stacked(&(self.m * load))
    }
}

pub fn grand_mobility(geometry: &SlenderGeometry) -> Result<GrandMobility> {
    RigidSystem::new(geometry)?.grand_mobility()
}

/// Gram matrix of the rigid motions on the centerline:
/// `(v, w)^T G (v, w) = int |v + w x X|^2 ds`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RigidGram {
    pub g: Matrix6<f64>,
    pub lambda_min: f64,
}

impl RigidGram {
    /// Best constant in `|v| + |w| <= C ||v + w x X||_{L2}` implied by the
    /// Gram matrix, `1 / sqrt(lambda_min)`.
    pub fn constant(&self) -> f64 {
        1.0 / self.lambda_min.sqrt()
    }
}

pub fn rigid_motion_gram(curve: &ClosedCurve) -> RigidGram {
    let nodes = curve.nodes();
    let h = 1.0 / nodes.len() as f64;
    let mut g = Matrix6::zeros();
    for x in nodes {
        // v + w x X = [I, -[X]_x] (v, w)
        let xc = cross_matrix(x);
        let mut p = nalgebra::Matrix3x6::zeros();
        p.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
        p.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-xc));
        g += p.transpose() * p * h;
    }
    let g = (g + g.transpose()) * 0.5;
    let lambda_min = g.symmetric_eigenvalues().min();
    RigidGram { g, lambda_min }
}

/// A rigid change of coordinates.
#[derive(Debug, Clone, Copy)]
pub enum Transform {
    Rotation(Matrix3<f64>),
    Translation(Vector3<f64>),
}

#[derive(Debug, Clone, Copy)]
pub struct EquivarianceReport {
    pub original: RigidKinematics,
    pub transformed: RigidKinematics,
    /// Largest component of the difference from the predicted kinematics.
    pub deviation: f64,
    /// `deviation / max(|v|, |omega|)` of the original solution.
    pub relative: f64,
}

/// Solve on the original and moved geometry and compare with the rigid-body
/// prediction. Rotation `R`: `(RF, RT) -> (Rv, Rw)`. Translation `a`:
/// `(F, T + a x F) -> (v - w x a, w)`.
pub fn equivariance_check(
    geometry: &SlenderGeometry,
    force: &Vector3<f64>,
    torque: &Vector3<f64>,
    transform: &Transform,
) -> Result<EquivarianceReport> {
    let original = solve_mobility(geometry, force, torque)?.kinematics;
    let (moved, f2, t2, predicted) = match transform {
        Transform::Rotation(r) => (
            geometry.transformed(r, &Vector3::zeros())?,
            r * force,
            r * torque,
            RigidKinematics { v: r * original.v, omega: r * original.omega },
        ),
        Transform::Translation(a) => (
            geometry.transformed(&Matrix3::identity(), a)?,
            *force,
            torque + a.cross(force),
            RigidKinematics { v: original.v - original.omega.cross(a), omega: original.omega },
        ),
    };
    let transformed = solve_mobility(&moved, &f2, &t2)?.kinematics;
    let deviation = (transformed.stacked() - predicted.stacked()).amax();
    let scale = original.v.norm().max(original.omega.norm());
    let relative = if scale > 0.0 { deviation / scale } else { deviation };
    Ok(EquivarianceReport { original, transformed, deviation, relative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::{Rotation3, Unit};
    use std::f64::consts::PI;

    fn circle(n: usize, eps: f64) -> SlenderGeometry {
        SlenderGeometry::build(&CurveSpec::Circle, n, eps).unwrap()
    }

    fn wavy(n: usize, eps: f64) -> SlenderGeometry {
        SlenderGeometry::build(&CurveSpec::WavyCircle { amplitude: 0.02, mode: 3 }, n, eps).unwrap()
    }

    #[test]
    fn zero_load_gives_zero_motion() {
        let sol = solve_mobility(&circle(64, 0.01), &Vector3::zeros(), &Vector3::zeros()).unwrap();
        assert!(sol.kinematics.stacked().amax() <= 1e-12);
        assert!(sol.force.values.iter().all(|f| f.norm() <= 1e-12));
    }

    #[test]
    fn axial_force_on_circle() {
        let eps = 0.01;
        let sol = solve_mobility(&circle(128, eps), &Vector3::z(), &Vector3::zeros()).unwrap();
        let k = sol.kinematics;
        assert!(k.v.z > 0.0);
        assert!(k.v.x.abs() <= 1e-8 * k.v.z && k.v.y.abs() <= 1e-8 * k.v.z);
        assert!(k.omega.norm() <= 1e-8 * k.v.z);
        // uniform f = e_z sees no nonlocal contribution on a circle
        let expect = (1.0 - 2.0 * (PI * eps / 4.0).ln()) / (8.0 * PI);
        assert_relative_eq!(k.v.z, expect, max_relative = 1e-10);
    }

    #[test]
    fn axial_torque_spins_circle() {
        let sol = solve_mobility(&circle(128, 0.01), &Vector3::zeros(), &Vector3::z()).unwrap();
        let k = sol.kinematics;
        assert!(k.omega.z > 0.0);
        assert!(k.v.norm() <= 1e-8 * k.omega.z);
        assert!(k.omega.x.abs() + k.omega.y.abs() <= 1e-8 * k.omega.z);
    }

    #[test]
    fn constraints_and_rigidity_hold() {
        let g = wavy(96, 0.01);
        let sys = RigidSystem::new(&g).unwrap();
        let (f, t) = (Vector3::new(0.3, -1.0, 0.5), Vector3::new(0.1, 0.2, -0.05));
        let sol = sys.solve(&f, &t).unwrap();
        let (f2, t2) = sys.resultants(&sol.force);
        assert!((f2 - f).norm() <= 1e-10 * f.norm());
        assert!((t2 - t).norm() <= 1e-10 * t.norm());
        let fnorm = sol.force.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(sys.rigidity_residual(&sol) <= 1e-10 * fnorm);
    }

    #[test]
    fn superposition() {
        let sys = RigidSystem::new(&wavy(64, 0.01)).unwrap();
        let (f1, t1) = (Vector3::new(1.0, 0.0, 0.2), Vector3::new(0.0, 0.1, 0.0));
        let (f2, t2) = (Vector3::new(-0.4, 0.7, 0.0), Vector3::new(0.05, 0.0, -0.3));
        let a = sys.solve(&f1, &t1).unwrap().kinematics.stacked();
        let b = sys.solve(&f2, &t2).unwrap().kinematics.stacked();
        let c = sys.solve(&(f1 + f2), &(t1 + t2)).unwrap().kinematics.stacked();
        assert!((c - a - b).norm() <= 1e-10 * c.norm());
    }

    #[test]
    fn grand_mobility_symmetric_positive() {
        let m = grand_mobility(&circle(128, 0.01)).unwrap();
        assert!(m.symmetry_defect <= 1e-8, "{}", m.symmetry_defect);
        assert!(m.is_positive_definite());
        assert!(m.m[(2, 2)] > 0.0);
        // axial translation decouples from in-plane rotation
        for k in [3, 4] {
            assert!(m.m[(2, k)].abs() <= 1e-10 * m.m[(2, 2)]);
            assert!(m.m[(k, 2)].abs() <= 1e-10 * m.m[(2, 2)]);
        }
        let w = grand_mobility(&wavy(96, 0.01)).unwrap();
        assert!(w.symmetry_defect <= 1e-8 && w.is_positive_definite());
    }

    #[test]
    fn grand_mobility_rotates() {
        let g = wavy(64, 0.01);
        let r = *Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(1.0, 2.0, -0.5)), 0.8).matrix();
        let m = grand_mobility(&g).unwrap().m;
        let mr = grand_mobility(&g.transformed(&r, &Vector3::zeros()).unwrap()).unwrap().m;
        let mut big = Matrix6::zeros();
        big.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        big.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        assert!((mr - big * m * big.transpose()).norm() <= 1e-8 * m.norm());
    }

    #[test]
    fn circle_gram_closed_form() {
        let gram = rigid_motion_gram(circle(64, 0.01).curve());
        let c = 1.0 / (8.0 * PI * PI);
        let expect = Matrix6::from_diagonal(&Vector6::new(1.0, 1.0, 1.0, c, c, 2.0 * c));
        assert_abs_diff_eq!((gram.g - expect).norm(), 0.0, epsilon = 1e-13);
        assert_relative_eq!(gram.lambda_min, 0.0126651, max_relative = 1e-5);
        assert_relative_eq!(gram.constant(), (8.0f64).sqrt() * PI, max_relative = 1e-12);
    }

    #[test]
    fn gram_quadratic_form_matches_direct_quadrature() {
        let g = wavy(128, 0.01);
        let shifted = g.transformed(&Matrix3::identity(), &Vector3::new(0.4, -0.2, 0.1)).unwrap();
        for geom in [&g, &shifted] {
            let gram = rigid_motion_gram(geom.curve());
            assert!(gram.lambda_min > 0.0);
            let (v, w) = (Vector3::new(0.3, -0.7, 1.1), Vector3::new(2.0, 0.5, -1.3));
            let x = Vector6::new(v.x, v.y, v.z, w.x, w.y, w.z);
            // Simpson on a finer grid using the continuous curve
            let m = 2000;
            let direct: f64 = (0..=m)
                .map(|k| {
                    let s = k as f64 / m as f64;
                    let weight = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                    weight * (v + w.cross(&geom.curve().position(s))).norm_squared()
                })
                .sum::<f64>()
                / (3.0 * m as f64);
            assert_relative_eq!((x.transpose() * gram.g * x)[0], direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn equivariance_under_translation_and_rotation() {
        let g = circle(128, 0.01);
        let rep = equivariance_check(&g, &Vector3::x(), &Vector3::zeros(), &Transform::Translation(Vector3::new(0.0, 0.0, 0.3))).unwrap();
        assert!(rep.relative <= 1e-8, "{rep:?}");
        let quarter = *Rotation3::from_axis_angle(&Vector3::z_axis(), PI / 2.0).matrix();
        let rep = equivariance_check(&g, &Vector3::new(1.0, 0.5, 0.2), &Vector3::new(0.0, 0.3, 0.1), &Transform::Rotation(quarter)).unwrap();
        assert!(rep.relative <= 1e-10, "{rep:?}");
        let id = equivariance_check(&g, &Vector3::x(), &Vector3::y(), &Transform::Rotation(Matrix3::identity())).unwrap();
        assert_eq!(id.deviation, 0.0);
    }

    #[test]
    fn kinematics_converge_with_grid() {
        let (f, t) = (Vector3::new(0.4, 1.0, -0.3), Vector3::new(0.2, -0.1, 0.3));
        let mut prev: Option<Vector6<f64>> = None;
        let mut diffs = Vec::new();
        for n in [32, 64, 128, 256] {
            let k = solve_mobility(&wavy(n, 0.01), &f, &t).unwrap().kinematics.stacked();
            if let Some(p) = prev {
                diffs.push((k - p).norm());
            }
            prev = Some(k);
        }
        for w in diffs.windows(2) {
            assert!(w[1] <= w[0] / 3.0, "{diffs:?}");
        }
    }

    #[test]
    fn c1_norm_stable_under_refinement() {
        let (f, t) = (Vector3::new(0.4, 1.0, -0.3), Vector3::new(0.2, -0.1, 0.3));
        let a = solve_mobility(&wavy(128, 0.01), &f, &t).unwrap().force.c1_norm();
        let b = solve_mobility(&wavy(256, 0.01), &f, &t).unwrap().force.c1_norm();
        assert!((a - b).abs() <= 0.01 * b, "{a} {b}");
    }

    #[test]
    fn inadmissible_radius_is_rejected() {
        let g = circle(64, 0.2);
        assert!(solve_mobility(&g, &Vector3::x(), &Vector3::zeros()).is_err());
    }
}
