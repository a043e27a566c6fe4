//! Slender-body operators: the local term `Lambda`, the subtracted nonlocal
//! term `K`, and their Nystrom matrix on the uniform centerline grid.

use crate::error::{Result, SbtError};
use crate::fourier::spectral_derivative;
use crate::frame::MaterialFrame;
use crate::geometry::SlenderGeometry;
use nalgebra::{Matrix3, Vector3};
use ndarray::Array2;
use rayon::prelude::*;
use std::f64::consts::PI;

const INV_8PI: f64 = 1.0 / (8.0 * PI);

/// Line force density (force per unit length) at nodes `s_i = i / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineForceDensity {
    pub values: Vec<Vector3<f64>>,
}

impl LineForceDensity {
    pub fn new(values: Vec<Vector3<f64>>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![Vector3::zeros(); n])
    }

    /// Sample `f(s)` on `n` uniform nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Vector3<f64>) -> Self {
        Self::new((0..n).map(|i| f(i as f64 / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// `sup |f| + sup |f'|` with the derivative taken spectrally.
    pub fn c1_norm(&self) -> f64 {
        let sup = |v: &[Vector3<f64>]| v.iter().map(|x| x.norm()).fold(0.0, f64::max);
        sup(&self.values) + sup(&spectral_derivative(&self.values))
    }

    /// Trapezoidal `int f ds`.
    pub fn total(&self) -> Vector3<f64> {
        self.values.iter().sum::<Vector3<f64>>() / self.len() as f64
    }

    pub(crate) fn stacked(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
    }

    pub(crate) fn from_stacked(x: &[f64]) -> Self {
        Self::new(x.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect())
    }
}

/// Matrix of the local operator at a point with unit tangent `e_t`.
pub fn local_lambda_matrix(e_t: &Vector3<f64>, epsilon: f64) -> Matrix3<f64> {
    let tt = e_t * e_t.transpose();
    let id = Matrix3::identity();
    let log = (PI * epsilon / 4.0).ln();
    ((id - tt * 3.0) - (id + tt) * (2.0 * log)) * INV_8PI
}

/// `Lambda[f] = (1/8pi) [(I - 3 tt) - 2 (I + tt) log(pi eps / 4)] f`.
pub fn local_lambda(e_t: &Vector3<f64>, epsilon: f64, f: &Vector3<f64>) -> Vector3<f64> {
    local_lambda_matrix(e_t, epsilon) * f
}

/// Stokeslet part `I/|R| + R R^T/|R|^3` for `R = X(s) - X(s')`.
pub fn stokeslet(r: &Vector3<f64>) -> Matrix3<f64> {
    let d = r.norm();
    Matrix3::identity() / d + r * r.transpose() / (d * d * d)
}

/// Subtraction part `(I + t t^T) / |sin(pi (s - s')) / pi|`.
pub fn subtraction(e_t: &Vector3<f64>, s: f64, s_prime: f64) -> Matrix3<f64> {
    let dist = ((PI * (s - s_prime)).sin() / PI).abs();
    (Matrix3::identity() + e_t * e_t.transpose()) / dist
}

/// The two kernels of the nonlocal operator between `s` and `s'`:
/// the Stokeslet `S` (acting on `f(s')`) and the subtraction `T`
/// (acting on `f(s)`).
pub fn nonlocal_kernel(frame: &MaterialFrame, s: f64, s_prime: f64) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let (p, q) = (frame.at(s), frame.at(s_prime));
    let r = p.position - q.position;
    if r.norm() == 0.0 {
        return Err(SbtError::InvalidCurve(format!(
            "centerline points at s={s} and s'={s_prime} coincide"
        )));
    }
    Ok((stokeslet(&r), subtraction(&p.e_t, s, s_prime)))
}

/// Dense `3N x 3N` Nystrom matrix of `Lambda + K`, node-major 3x3 blocks.
#[derive(Debug, Clone)]
pub struct SbtMatrix {
    pub matrix: Array2<f64>,
    pub epsilon: f64,
    pub n: usize,
}

pub const MIN_SBT_NODES: usize = 16;

/// Periodic trapezoidal Nystrom discretization. The subtracted integrand
/// has opposite one-sided limits at `s' = s`, so the diagonal node gets
/// their average, zero.
pub fn assemble_sbt_matrix(geometry: &SlenderGeometry) -> Result<SbtMatrix> {
    geometry.require_tube()?;
    let n = geometry.n_grid();
    if n < MIN_SBT_NODES {
        return Err(SbtError::GridTooSmall { got: n, min: MIN_SBT_NODES });
    }
    let eps = geometry.epsilon();
    let nodes = geometry.frame().nodes();
    for i in 0..n {
        for j in (i + 1)..n {
            if nodes[i].position == nodes[j].position {
                return Err(SbtError::SelfIntersection { i, j });
            }
        }
    }
    let h = 1.0 / n as f64;
    // the subtraction weight depends only on |i - j|
    let inv_sin: Vec<f64> = (0..n)
        .map(|d| if d == 0 { 0.0 } else { PI / (PI * d as f64 * h).sin() })
        .collect();
    let inv_sin_sum: f64 = inv_sin.iter().sum();

    let dim = 3 * n;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rows = vec![0.0; 3 * dim];
            let p = &nodes[i];
            let mut put = |j: usize, block: &Matrix3<f64>| {
                for a in 0..3 {
                    for b in 0..3 {
                        rows[a * dim + 3 * j + b] = block[(a, b)];
                    }
                }
            };
            for (j, q) in nodes.iter().enumerate() {
                if j != i {
                    put(j, &(stokeslet(&(p.position - q.position)) * (INV_8PI * h)));
                }
            }
            let tt = p.e_t * p.e_t.transpose();
            let diag = local_lambda_matrix(&p.e_t, eps)
                - (Matrix3::identity() + tt) * (INV_8PI * h * inv_sin_sum);
            put(i, &diag);
            rows
        })
        .collect();
    let matrix = Array2::from_shape_vec((dim, dim), rows.concat()).expect("row blocks have the right length");
    Ok(SbtMatrix { matrix, epsilon: eps, n })
}

impl SbtMatrix {
    /// Centerline velocity `(Lambda + K)[f]` at the nodes.
    pub fn apply(&self, f: &LineForceDensity) -> Vec<Vector3<f64>> {
        assert_eq!(f.len(), self.n);
        let x = ndarray::Array1::from(f.stacked());
        let y = self.matrix.dot(&x);
        y.as_slice()
            .unwrap()
            .chunks_exact(3)
            .map(|c| Vector3::new(c[0], c[1], c[2]))
            .collect()
    }

    /// `||A - A^T||_F / ||A||_F`.
    pub fn symmetry_defect(&self) -> f64 {
        let a = &self.matrix;
        let diff = a - &a.t();
        frobenius(&diff) / frobenius(a)
    }

    pub fn diagonal_block(&self, i: usize) -> Matrix3<f64> {
        Matrix3::from_fn(|a, b| self.matrix[[3 * i + a, 3 * i + b]])
    }
}

pub(crate) fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
