//! Product grid on the tube surface.

use crate::error::{Result, SbtError};
use crate::geometry::{jacobian_at, SlenderGeometry};
use nalgebra::Vector3;
use std::f64::consts::TAU;

pub const MIN_SURFACE_NODES: usize = 8;

/// Nodes `(s_i, theta_j) = (i / Ns, 2 pi j / Ntheta)` stored with `theta`
/// fastest, so node `(i, j)` has index `i * Ntheta + j`.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    geometry: SlenderGeometry,
    ns: usize,
    ntheta: usize,
    pub nodes: Vec<Vector3<f64>>,
    /// `J(s_i, theta_j) / Ns * 2 pi / Ntheta`.
    pub weights: Vec<f64>,
    /// Outward unit normals `cos(theta) e_n1 + sin(theta) e_n2`.
    pub normals: Vec<Vector3<f64>>,
}

pub fn build_surface_mesh(geometry: &SlenderGeometry, ns: usize, ntheta: usize) -> Result<SurfaceMesh> {
    geometry.require_tube()?;
    let got = ns.min(ntheta);
    if got < MIN_SURFACE_NODES {
        return Err(SbtError::GridTooSmall { got, min: MIN_SURFACE_NODES });
    }
    let eps = geometry.epsilon();
    let cell = TAU / (ns * ntheta) as f64;
    let mut nodes = Vec::with_capacity(ns * ntheta);
    let mut weights = Vec::with_capacity(ns * ntheta);
    let mut normals = Vec::with_capacity(ns * ntheta);
    for i in 0..ns {
        let p = geometry.frame().at(i as f64 / ns as f64);
        for j in 0..ntheta {
            let theta = TAU * j as f64 / ntheta as f64;
            let n = p.radial(theta);
            nodes.push(p.position + n * eps);
            normals.push(n);
            weights.push(jacobian_at(&p, eps, theta) * cell);
        }
    }
    Ok(SurfaceMesh { geometry: geometry.clone(), ns, ntheta, nodes, weights, normals })
}

impl SurfaceMesh {
    pub fn geometry(&self) -> &SlenderGeometry {
        &self.geometry
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ntheta + j
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Rigidly moved copy of the mesh, rebuilt on the moved geometry.
    pub fn transformed(&self, r: &nalgebra::Matrix3<f64>, shift: &Vector3<f64>) -> Result<Self> {
        build_surface_mesh(&self.geometry.transformed(r, shift)?, self.ns, self.ntheta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveSpec;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn circle_area_is_exact() {
        let g = SlenderGeometry::build(&CurveSpec::Circle, 64, 0.05).unwrap();
        let mesh = build_surface_mesh(&g, 48, 12).unwrap();
        assert_abs_diff_eq!(mesh.area(), 2.0 * PI * 0.05, epsilon = 1e-10);
        assert!(mesh.weights.iter().all(|w| *w > 0.0));
        let fine = build_surface_mesh(&g, 96, 24).unwrap();
        assert_abs_diff_eq!(fine.area(), mesh.area(), epsilon = 1e-12);
    }

    #[test]
    fn normals_are_unit_and_orthogonal() {
        let g = SlenderGeometry::build(&CurveSpec::WavyCircle { amplitude: 0.02, mode: 3 }, 64, 0.02).unwrap();
        let mesh = build_surface_mesh(&g, 32, 8).unwrap();
        for i in 0..32 {
            let t = g.frame().at(i as f64 / 32.0).e_t;
            for j in 0..8 {
                let n = mesh.normals[mesh.index(i, j)];
                assert_abs_diff_eq!(n.norm(), 1.0, epsilon = 1e-10);
                assert_abs_diff_eq!(n.dot(&t), 0.0, epsilon = 1e-10);
            }
        }
        assert_abs_diff_eq!(mesh.area(), 2.0 * PI * 0.02, epsilon = 1e-10);
    }

    #[test]
    fn rejects_coarse_or_inadmissible() {
        let g = SlenderGeometry::build(&CurveSpec::Circle, 64, 0.05).unwrap();
        assert!(matches!(build_surface_mesh(&g, 48, 4), Err(SbtError::GridTooSmall { .. })));
        assert!(build_surface_mesh(&g.with_epsilon(0.5), 48, 12).is_err());
    }
}
