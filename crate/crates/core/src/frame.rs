//! Periodic orthonormal frame with constant twist along a closed centerline.
//!
//! The frame is the rotation-minimizing (Bishop) frame, obtained by parallel
//! transport of a normal vector around the loop, rotated in the normal plane
//! at the constant rate `kappa3` that cancels its holonomy:
//!
//! ```text
//! e_t'  =  k1 e_n1 + k2 e_n2
//! e_n1' = -k1 e_t  + k3 e_n2
//! e_n2' = -k2 e_t  - k3 e_n1
//! ```

use crate::curve::ClosedCurve;
use crate::error::{Result, SbtError};
use crate::fourier::TrigSeries;
use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

/// Orthonormal frame and curvature coefficients at one arclength position.
#[derive(Debug, Clone, Copy)]
pub struct FramePoint {
    pub position: Vector3<f64>,
    pub e_t: Vector3<f64>,
    pub e_n1: Vector3<f64>,
    pub e_n2: Vector3<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl FramePoint {
    /// `cos(theta) e_n1 + sin(theta) e_n2`.
    pub fn radial(&self, theta: f64) -> Vector3<f64> {
        let (s, c) = theta.sin_cos();
        self.e_n1 * c + self.e_n2 * s
    }
}

#[derive(Debug, Clone)]
pub struct MaterialFrame {
    curve: TrigSeries,
    normal: TrigSeries,
    kappa3: f64,
    holonomy: f64,
    closure_gap: f64,
    nodes: Vec<FramePoint>,
}

/// Residuals of the frame ODEs, max norms over the node grid.
#[derive(Debug, Clone, Copy)]
pub struct FrameResidual {
    pub tangent: f64,
    pub normal1: f64,
    pub normal2: f64,
}

impl FrameResidual {
    pub fn max(&self) -> f64 {
        self.tangent.max(self.normal1).max(self.normal2)
    }
}

const TRANSPORT_STEPS_MIN: usize = 4096;
const CLOSURE_TOLERANCE: f64 = 1e-6;

/// Construct the twisted Bishop frame of `curve`.
pub fn build_frame(curve: &ClosedCurve) -> Result<MaterialFrame> {
    let steps = TRANSPORT_STEPS_MIN.max(8 * curve.n_grid());
    let h = 1.0 / steps as f64;
    let series = curve.series();

    let tangent_and_curvature = |s: f64| {
        let jet = series.jet(s);
        let speed = jet.d1.norm();
        let t = jet.d1 / speed;
        // derivative of the unit tangent with respect to arclength
        let dt = (jet.d2 - t * t.dot(&jet.d2)) / (speed * speed);
        (t, dt)
    };

    let (t0, k0) = tangent_and_curvature(0.0);
    let u0 = initial_normal(&t0, &k0);
    let w0 = t0.cross(&u0);

    // parallel transport u' = -(u . t') t by classical RK4
    let mut transported = Vec::with_capacity(steps + 1);
    let mut u = u0;
    transported.push(u);
    let rhs = |u: &Vector3<f64>, s: f64| {
        let (t, dt) = tangent_and_curvature(s);
        -t * u.dot(&dt)
    };
    for i in 0..steps {
        let s = i as f64 * h;
        let k1 = rhs(&u, s);
        let k2 = rhs(&(u + k1 * (0.5 * h)), s + 0.5 * h);
        let k3 = rhs(&(u + k2 * (0.5 * h)), s + 0.5 * h);
        let k4 = rhs(&(u + k3 * h), s + h);
        u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let (t, _) = tangent_and_curvature(s + h);
        u -= t * t.dot(&u);
        u.normalize_mut();
        transported.push(u);
    }

    let u_end = transported[steps];
    let holonomy = u_end.dot(&w0).atan2(u_end.dot(&u0));
    if !holonomy.is_finite() {
        return Err(SbtError::Frame("parallel transport produced a non-finite normal".into()));
    }
    // atan2 lands in (-pi, pi], so no further 2 pi k shift is needed
    let kappa3 = -holonomy;

    let twisted = |i: usize| {
        let s = i as f64 * h;
        let (t, _) = tangent_and_curvature(s);
        let u = transported[i];
        let w = t.cross(&u);
        let (sn, cs) = (kappa3 * s).sin_cos();
        u * cs + w * sn
    };
    let closure_gap = (twisted(steps) - twisted(0)).norm();
    if closure_gap > CLOSURE_TOLERANCE {
        return Err(SbtError::Frame(format!(
            "twisted frame fails to close: gap {closure_gap:.3e}"
        )));
    }
    let samples: Vec<Vector3<f64>> = (0..steps).map(twisted).collect();
    let normal = TrigSeries::fit(&samples).truncated(1e-15);

    let mut frame = MaterialFrame {
        curve: series.clone(),
        normal,
        kappa3,
        holonomy: holonomy.rem_euclid(2.0 * PI),
        closure_gap,
        nodes: Vec::new(),
    };
    let n = curve.n_grid();
    frame.nodes = (0..n).map(|i| frame.at(i as f64 / n as f64)).collect();
    Ok(frame)
}

/// Principal normal where the curve is bent, otherwise any unit vector
/// orthogonal to the tangent.
fn initial_normal(t: &Vector3<f64>, dt: &Vector3<f64>) -> Vector3<f64> {
    if dt.norm() > 1e-8 {
        return dt.normalize();
    }
    let axis = if t.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    (axis - t * t.dot(&axis)).normalize()
}

impl MaterialFrame {
    /// Frame at arbitrary arclength `s`.
    pub fn at(&self, s: f64) -> FramePoint {
        let jet = self.curve.jet(s);
        let speed = jet.d1.norm();
        let e_t = jet.d1 / speed;
        let dt = (jet.d2 - e_t * e_t.dot(&jet.d2)) / (speed * speed);
        let raw = self.normal.eval(s);
        let e_n1 = (raw - e_t * e_t.dot(&raw)).normalize();
        let e_n2 = e_t.cross(&e_n1);
        FramePoint {
            position: jet.value,
            e_t,
            e_n1,
            e_n2,
            kappa1: dt.dot(&e_n1),
            kappa2: dt.dot(&e_n2),
        }
    }

    pub fn nodes(&self) -> &[FramePoint] {
        &self.nodes
    }

    pub fn n_grid(&self) -> usize {
        self.nodes.len()
    }

    /// Constant twist rate, `|kappa3| <= pi`.
    pub fn kappa3(&self) -> f64 {
        self.kappa3
    }

    /// Holonomy angle of the untwisted transport, in `[0, 2 pi)`.
    pub fn holonomy(&self) -> f64 {
        self.holonomy
    }

    /// `|e_n1(1) - e_n1(0)|` of the integrated frame before fitting.
    pub fn closure_gap(&self) -> f64 {
        self.closure_gap
    }

    /// Frame of the rigidly moved curve `x -> r x + shift`, `r` a proper
    /// rotation. Transporting the existing frame keeps it exactly
    /// equivariant, which rebuilding would only do up to integration error.
    pub fn transformed(&self, r: &Matrix3<f64>, shift: &Vector3<f64>) -> Self {
        let mut out = self.clone();
        out.curve = self.curve.transformed(r, shift);
        out.normal = self.normal.transformed(r, &Vector3::zeros());
        let n = self.n_grid();
        out.nodes = (0..n).map(|i| out.at(i as f64 / n as f64)).collect();
        out
    }

    /// Frame on a different node grid.
    pub fn with_grid(&self, n_grid: usize) -> Self {
        let mut out = self.clone();
        out.nodes = (0..n_grid).map(|i| self.at(i as f64 / n_grid as f64)).collect();
        out
    }

    /// Largest deviation of the node triads from orthonormality.
    pub fn orthonormality_error(&self) -> f64 {
        self.nodes
            .iter()
            .map(|p| {
                let v = [p.e_t, p.e_n1, p.e_n2];
                let mut worst = 0.0f64;
                for i in 0..3 {
                    for j in 0..3 {
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((v[i].dot(&v[j]) - target).abs());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    /// Residuals of the frame ODEs at the nodes, with derivatives taken
    /// spectrally from the curve and normal series.
    pub fn ode_residual(&self) -> FrameResidual {
        let dnormal = self.normal.derivative();
        let mut res = FrameResidual {
            tangent: 0.0,
            normal1: 0.0,
            normal2: 0.0,
        };
        let n = self.nodes.len();
        for (i, p) in self.nodes.iter().enumerate() {
            let s = i as f64 / n as f64;
            let jet = self.curve.jet(s);
            let de_t = jet.d2;
            let de_n1 = dnormal.eval(s);
            let de_n2 = de_t.cross(&p.e_n1) + p.e_t.cross(&de_n1);
            let k3 = self.kappa3;
            res.tangent = res
                .tangent
                .max((de_t - (p.e_n1 * p.kappa1 + p.e_n2 * p.kappa2)).norm());
            res.normal1 = res
                .normal1
                .max((de_n1 - (-p.e_t * p.kappa1 + p.e_n2 * k3)).norm());
            res.normal2 = res
                .normal2
                .max((de_n2 - (-p.e_t * p.kappa2 - p.e_n1 * k3)).norm());
        }
        res
    }
}
