//! Single-layer Stokes operator on the tube surface, discretized either with
//! regularized Stokeslets or with a locally corrected Nystrom rule.
//!
//! The corrected rule keeps the density on the coarse `(Ns, Ntheta)` grid
//! and interpolates it (Lagrange in `s`, trigonometric in `theta`) onto
//! target-dependent quadrature nodes. Around each target the weakly
//! singular kernel is split by a smooth partition of unity: a polar patch,
//! in which the area element cancels `1/r`, and a remainder integrated on
//! graded Gauss-Legendre panels in `s` times a trapezoid in `theta`.

use super::mesh::SurfaceMesh;
use crate::fourier::{lagrange_stencil, trig_cardinal};
use crate::frame::FramePoint;
use crate::geometry::jacobian_at;
use nalgebra::Vector3;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

const INV_8PI: f64 = 1.0 / (8.0 * PI);

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let legendre = |z: f64| {
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
        (p1, dp)
    };
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Smooth cutoff: 1 on `t <= 0`, 0 on `t >= 1`, all derivatives vanishing
/// at both ends.
pub fn cutoff(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        (2.0 * (-1.0 / t).exp() / (t - 1.0)).exp()
    }
}

/// Regularized Stokeslet `(1/8pi) [(r^2 + 2 d^2) I + r r^T] / (r^2 + d^2)^{3/2}`,
/// returned as the upper triangle `[xx, xy, xz, yy, yz, zz]`.
#[inline]
fn blob_kernel(r: &Vector3<f64>, delta: f64) -> [f64; 6] {
    let r2 = r.norm_squared();
    let d2 = delta * delta;
    let inv = INV_8PI / (r2 + d2).powf(1.5);
    let diag = (r2 + 2.0 * d2) * inv;
    [
        diag + r.x * r.x * inv,
        r.x * r.y * inv,
        r.x * r.z * inv,
        diag + r.y * r.y * inv,
        r.y * r.z * inv,
        diag + r.z * r.z * inv,
    ]
}

/// Stokeslet `(1/8pi) (I / r + r r^T / r^3)` in the same packed layout.
#[inline]
fn stokeslet_packed(r: &Vector3<f64>) -> [f64; 6] {
    let r2 = r.norm_squared();
    let inv = 1.0 / r2.sqrt();
    let inv3 = INV_8PI * inv / r2;
    let diag = INV_8PI * inv;
    [
        diag + r.x * r.x * inv3,
        r.x * r.y * inv3,
        r.x * r.z * inv3,
        diag + r.y * r.y * inv3,
        r.y * r.z * inv3,
        diag + r.z * r.z * inv3,
    ]
}

/// Add `scale * g` (packed symmetric) into the 3x3 block of `row` starting
/// at column `col`. `row` holds three matrix rows of length `stride`.
#[inline]
fn add_block(row: &mut [f64], stride: usize, col: usize, g: &[f64; 6], scale: f64) {
    let idx = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    for a in 0..3 {
        let base = a * stride + col;
        for b in 0..3 {
            row[base + b] += scale * g[idx[a][b]];
        }
    }
}

/// Blob width `delta_factor * max(1/Ns, epsilon * 2pi/Ntheta)`.
pub fn blob_width(mesh: &SurfaceMesh, delta_factor: f64) -> f64 {
    let eps = mesh.geometry().epsilon();
    delta_factor * (1.0 / mesh.ns() as f64).max(eps * TAU / mesh.ntheta() as f64)
}

/// `3M x 3M` regularized-Stokeslet single-layer matrix.
pub fn assemble_regularized(mesh: &SurfaceMesh, delta: f64) -> Array2<f64> {
    let m = mesh.len();
    let dim = 3 * m;
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; 3 * dim];
            let x = mesh.nodes[i];
            for (j, y) in mesh.nodes.iter().enumerate() {
                add_block(&mut row, dim, 3 * j, &blob_kernel(&(x - y), delta), mesh.weights[j]);
            }
            row
        })
        .collect();
    Array2::from_shape_vec((dim, dim), rows.concat()).expect("row blocks have the right length")
}

/// Parameters of the corrected rule. Lengths in `s` are absolute; the
/// patch radius is in units of the tube radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedQuadrature {
    /// Polar patch radius over epsilon, in the plane `(s, epsilon theta)`.
    pub patch_radius: f64,
    /// Gauss-Legendre points per `s` panel.
    pub panel_order: usize,
    /// Largest `s` panel width away from the target.
    pub far_panel_width: f64,
    /// Radial Gauss-Legendre points in the patch.
    pub radial_order: usize,
    /// Angular trapezoid points in the patch.
    pub angular_order: usize,
    /// `theta` trapezoid points per density node, within `near_zone`.
    pub near_theta_factor: usize,
    /// `theta` trapezoid points per density node, beyond `near_zone`.
    pub far_theta_factor: usize,
    /// Half width, in units of epsilon, of the `s` zone using the near
    /// `theta` rule.
    pub near_zone: f64,
    /// Lagrange stencil length for interpolation in `s`.
    pub stencil: usize,
}

impl Default for CorrectedQuadrature {
    fn default() -> Self {
        Self {
            patch_radius: 1.5,
            panel_order: 16,
            far_panel_width: 1.0 / 16.0,
            radial_order: 24,
            angular_order: 48,
            near_theta_factor: 8,
            far_theta_factor: 2,
            near_zone: 10.0,
            stencil: 14,
        }
    }
}

impl CorrectedQuadrature {
    /// Rule whose orders grow with the density grid, so that refining a
    /// ladder of meshes refines the quadrature along with it.
    pub fn for_mesh(ns: usize, ntheta: usize) -> Self {
        let _ = ns;
        Self {
            panel_order: 12 + ntheta / 2,
            radial_order: 16 + ntheta,
            angular_order: 32 + 2 * ntheta,
            ..Self::default()
        }
    }
}

/// Nodes and weights in `u = s' - s` covering one period, graded toward 0.
fn s_panels(rule: &CorrectedQuadrature, r_p: f64) -> Vec<(f64, f64)> {
    let (gx, gw) = gauss_legendre(rule.panel_order);
    let mut edges = vec![0.0, 0.5 * r_p, r_p];
    let mut right = r_p;
    while right < 0.5 {
        let width = right.min(rule.far_panel_width);
        right = (right + width).min(0.5);
        edges.push(right);
    }
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (x, wt) in gx.iter().zip(&gw) {
            let u = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let weight = 0.5 * (b - a) * wt;
            out.push((u, weight));
            out.push((-u, weight));
        }
    }
    out
}

struct Stencil {
    first: i64,
    weights: Vec<f64>,
}

fn stencil_at(s: f64, ns: usize, order: usize) -> Stencil {
    let mut weights = vec![0.0; order];
    let first = lagrange_stencil(s, 1.0 / ns as f64, order, &mut weights);
    Stencil { first, weights }
}

/// Surface sample of the moving-point side of the kernel.
#[derive(Clone, Copy)]
struct Source {
    y: Vector3<f64>,
    jac: f64,
}

/// One remainder column: offset `u`, its weight, the s-interpolation
/// stencil, the sources around the ring and the theta interpolation table.
type RemainderColumn<'a> = (f64, f64, Stencil, Vec<Source>, &'a Vec<Vec<f64>>);

fn source(p: &FramePoint, eps: f64, theta: f64) -> Source {
    Source { y: p.position + p.radial(theta) * eps, jac: jacobian_at(p, eps, theta) }
}

fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

/// `3M x 3M` single-layer matrix with the corrected rule.
pub fn assemble_corrected(mesh: &SurfaceMesh, rule: &CorrectedQuadrature) -> Array2<f64> {
    let geometry = mesh.geometry();
    let frame = geometry.frame();
    let eps = geometry.epsilon();
    let (ns, nt) = (mesh.ns(), mesh.ntheta());
    let dim = 3 * mesh.len();
    let r_p = rule.patch_radius * eps;
    let order = rule.stencil.min(ns);
    let use_trig_s = order == ns;

    let u_rule = s_panels(rule, r_p);
    let nq_near = rule.near_theta_factor * nt;
    let nq_far = rule.far_theta_factor * nt;
    let cardinal_table = |nq: usize| -> Vec<Vec<f64>> {
        (0..nt)
            .map(|l| (0..nq).map(|k| trig_cardinal(nt, TAU * (k as f64 / nq as f64 - l as f64 / nt as f64))).collect())
            .collect()
    };
    let table_near = cardinal_table(nq_near);
    let table_far = cardinal_table(nq_far);

    let (rx, rw) = gauss_legendre(rule.radial_order);
    let patch: Vec<(f64, f64, f64)> = rx
        .iter()
        .zip(&rw)
        .flat_map(|(x, w)| {
            let rho = 0.5 * r_p * (1.0 + x);
            let wr = 0.5 * r_p * w;
            (0..rule.angular_order).map(move |b| {
                let phi = TAU * b as f64 / rule.angular_order as f64;
                (rho, phi, wr)
            })
        })
        .collect();
    let dphi = TAU / rule.angular_order as f64;

    // interpolation weights onto the density nodes in s
    let s_weights = |s: f64| -> Stencil {
        if use_trig_s {
            let weights = (0..ns).map(|k| trig_cardinal(ns, TAU * (s - k as f64 / ns as f64))).collect();
            Stencil { first: 0, weights }
        } else {
            stencil_at(s, ns, order)
        }
    };

    let rows: Vec<Vec<f64>> = (0..ns)
        .into_par_iter()
        .map(|i| {
            let s0 = i as f64 / ns as f64;
            let mut rows = vec![0.0; 3 * nt * dim];

            // remainder: sources on the fixed theta grids at each s node
            let remainder: Vec<RemainderColumn> = u_rule
                .iter()
                .map(|&(u, w)| {
                    let p = frame.at(s0 + u);
                    let (nq, table) = if u.abs() < rule.near_zone * eps { (nq_near, &table_near) } else { (nq_far, &table_far) };
                    let src = (0..nq).map(|k| source(&p, eps, TAU * k as f64 / nq as f64)).collect();
                    (u, w, s_weights(s0 + u), src, table)
                })
                .collect();
            let patch_frames: Vec<(FramePoint, Stencil)> = patch
                .iter()
                .map(|&(rho, phi, _)| {
                    let s = s0 + rho * phi.cos();
                    (frame.at(s), s_weights(s))
                })
                .collect();

            let mut b = vec![[0.0f64; 6]; nt];
            let mut cardinal = vec![0.0; nt];
            for j in 0..nt {
                let theta0 = TAU * j as f64 / nt as f64;
                let x = mesh.nodes[mesh.index(i, j)];
                let row = &mut rows[3 * j * dim..3 * (j + 1) * dim];

                for (u, w, st, src, table) in &remainder {
                    let (u, nq) = (*u, src.len());
                    b.iter_mut().for_each(|v| *v = [0.0; 6]);
                    let dtheta = TAU / nq as f64;
                    for (k, sk) in src.iter().enumerate() {
                        let mut scale = w * dtheta * sk.jac;
                        if u.abs() < r_p {
                            let dth = wrap_angle(TAU * k as f64 / nq as f64 - theta0);
                            let rho = (u * u + eps * eps * dth * dth).sqrt();
                            scale *= 1.0 - cutoff(rho / r_p);
                            if scale == 0.0 {
                                continue;
                            }
                        }
                        let g = stokeslet_packed(&(x - sk.y));
                        for (l, bl) in b.iter_mut().enumerate() {
                            let c = scale * table[l][k];
                            for e in 0..6 {
                                bl[e] += c * g[e];
                            }
                        }
                    }
                    spread(row, dim, nt, ns, st, &b, 1.0);
                }

                for (&(rho, phi, wr), (p, st)) in patch.iter().zip(&patch_frames) {
                    let dth = rho * phi.sin() / eps;
                    let theta = theta0 + dth;
                    let sk = source(p, eps, theta);
                    let scale = wr * dphi * cutoff(rho / r_p) * rho / eps * sk.jac;
                    if scale == 0.0 {
                        continue;
                    }
                    let g = stokeslet_packed(&(x - sk.y));
                    for (l, c) in cardinal.iter_mut().enumerate() {
                        *c = trig_cardinal(nt, theta - TAU * l as f64 / nt as f64);
                    }
                    for (l, bl) in b.iter_mut().enumerate() {
                        for e in 0..6 {
                            bl[e] = cardinal[l] * g[e];
                        }
                    }
                    spread(row, dim, nt, ns, st, &b, scale);
                }
            }
            rows
        })
        .collect();
    Array2::from_shape_vec((dim, dim), rows.concat()).expect("row blocks have the right length")
}

/// Distribute per-`theta`-node blocks over the `s` stencil.
#[inline]
fn spread(row: &mut [f64], dim: usize, nt: usize, ns: usize, st: &Stencil, b: &[[f64; 6]], scale: f64) {
    for (m, wk) in st.weights.iter().enumerate() {
        if *wk == 0.0 {
            continue;
        }
        let k = (st.first + m as i64).rem_euclid(ns as i64) as usize;
        for (l, bl) in b.iter().enumerate() {
            add_block(row, dim, 3 * (k * nt + l), bl, scale * wk);
        }
    }
}
