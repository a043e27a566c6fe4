//! Shape constants of a centerline and the slender tube of radius epsilon
//! built around it.

use crate::curve::{build_curve, ClosedCurve, CurveSpec};
use crate::error::{Result, SbtError};
use crate::frame::{build_frame, FramePoint, MaterialFrame};
use nalgebra::{Matrix2, Vector2, Vector3};
use serde::Serialize;
use std::sync::Arc;

/// Shape constants of a closed centerline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryConstants {
    /// Chord-arc constant `inf |X(s) - X(s')| / d(s, s')`.
    pub c_gamma: f64,
    /// `max |X''|`.
    pub kappa_max: f64,
    /// `max |X'''|`.
    pub xi_max: f64,
    /// Smallest distance between doubly-normal point pairs away from the
    /// diagonal.
    pub critical_distance: f64,
    /// Radius of the neighborhood with unique nearest-centerline projection.
    pub r_max: f64,
}

fn periodic_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn chord_arc_ratio(curve: &ClosedCurve, s: f64, t: f64) -> f64 {
    (curve.position(s) - curve.position(t)).norm() / periodic_distance(s, t)
}

/// Chord-arc constant from all pairs of an `m`-point grid, polished by a
/// local pattern search around the best pair.
pub fn chord_arc_constant(curve: &ClosedCurve, m: usize) -> f64 {
    let pts: Vec<Vector3<f64>> = (0..m).map(|i| curve.position(i as f64 / m as f64)).collect();
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..m {
        for j in (i + 1)..m {
            let d = (j - i).min(m - (j - i)) as f64 / m as f64;
            let r = (pts[i] - pts[j]).norm() / d;
            if r < best.0 {
                best = (r, i, j);
            }
        }
    }
    let (mut value, i, j) = best;
    let (mut s, mut t) = (i as f64 / m as f64, j as f64 / m as f64);
    let mut step = 1.0 / m as f64;
    while step > 1e-13 {
        let mut improved = false;
        for (ds, dt) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let (ns, nt) = (s + ds * step, t + dt * step);
            if periodic_distance(ns, nt) < 1e-9 {
                continue;
            }
            let r = chord_arc_ratio(curve, ns, nt);
            if r < value {
                value = r;
                s = ns;
                t = nt;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    value
}

/// Maximum over `s` of `g(s)`: grid search followed by golden-section
/// refinement of every grid local maximum near the top.
fn refined_max(m: usize, g: impl Fn(f64) -> f64) -> f64 {
    let vals: Vec<f64> = (0..m).map(|i| g(i as f64 / m as f64)).collect();
    let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h = 1.0 / m as f64;
    let mut best = top;
    for i in 0..m {
        let (prev, next) = (vals[(i + m - 1) % m], vals[(i + 1) % m]);
        if vals[i] < prev || vals[i] < next || vals[i] < top - 0.05 * top.abs() {
            continue;
        }
        let (mut a, mut b) = (i as f64 * h - h, i as f64 * h + h);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        while b - a > 1e-12 {
            if gc > gd {
                b = d;
                d = c;
                gd = gc;
                c = b - inv_phi * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + inv_phi * (b - a);
                gd = g(d);
            }
        }
        best = best.max(gc.max(gd));
    }
    best
}

/// Smallest `|X(s) - X(s')|` over pairs with `(X(s) - X(s'))` normal to the
/// curve at both ends and periodic separation above `min_separation`.
/// Candidates come from sign changes on an `m x m` grid and are polished by
/// Gauss-Newton on the two orthogonality conditions.
fn critical_distance(curve: &ClosedCurve, m: usize, min_separation: f64) -> f64 {
    let jets: Vec<_> = (0..m).map(|i| curve.jet(i as f64 / m as f64)).collect();
    let g = |i: usize, j: usize| {
        let r = jets[i].value - jets[j].value;
        (r.dot(&jets[i].d1), r.dot(&jets[j].d1))
    };
    let sep = |i: usize, j: usize| {
        let d = (i as isize - j as isize).unsigned_abs() % m;
        d.min(m - d) as f64 / m as f64
    };
    let mut best = f64::INFINITY;
    let mut fallback = f64::INFINITY;
    for i in 0..m {
        for j in 0..m {
            let (i1, j1) = ((i + 1) % m, (j + 1) % m);
            let corners = [(i, j), (i1, j), (i, j1), (i1, j1)];
            if corners.iter().any(|&(a, b)| sep(a, b) <= min_separation) {
                continue;
            }
            let vals = corners.map(|(a, b)| g(a, b));
            let brackets = |f: &dyn Fn(&(f64, f64)) -> f64| {
                let lo = vals.iter().map(f).fold(f64::INFINITY, f64::min);
                let hi = vals.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            };
            if !(brackets(&|v| v.0) && brackets(&|v| v.1)) {
                continue;
            }
            let dist0 = (jets[i].value - jets[j].value).norm();
            fallback = fallback.min(dist0);
            let (mut s, mut t) = (i as f64 / m as f64, j as f64 / m as f64);
            let mut converged = false;
            for _ in 0..40 {
                let (a, b) = (curve.jet(s), curve.jet(t));
                let r = a.value - b.value;
                let f = Vector2::new(r.dot(&a.d1), r.dot(&b.d1));
                if f.norm() < 1e-13 {
                    converged = true;
                    break;
                }
                let jac = Matrix2::new(
                    a.d1.dot(&a.d1) + r.dot(&a.d2),
                    -b.d1.dot(&a.d1),
                    a.d1.dot(&b.d1),
                    -b.d1.dot(&b.d1) + r.dot(&b.d2),
                );
                let Ok(pinv) = jac.pseudo_inverse(1e-12) else { break };
                let step = pinv * f;
                s -= step.x;
                t -= step.y;
                if step.norm() > 0.5 {
                    break;
                }
            }
            if converged && periodic_distance(s, t) > min_separation {
                best = best.min((curve.position(s) - curve.position(t)).norm());
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        fallback
    }
}

/// Compute the shape constants on a grid oversampled `oversample` times
/// relative to the curve's node grid.
pub fn geometry_constants(curve: &ClosedCurve, oversample: usize) -> GeometryConstants {
    let m = (oversample * curve.n_grid()).max(256);
    let c_gamma = chord_arc_constant(curve, m);
    let kappa_max = refined_max(m, |s| curve.jet(s).d2.norm());
    let xi_max = refined_max(m, |s| curve.jet(s).d3.norm());
    let critical = critical_distance(curve, m.min(1024), 1.0 / (4.0 * kappa_max));
    let r_max = (0.5 / kappa_max).min(0.5 * critical);
    GeometryConstants {
        c_gamma,
        kappa_max,
        xi_max,
        critical_distance: critical,
        r_max,
    }
}

/// Centerline, frame and shape constants; independent of the tube radius.
#[derive(Debug, Clone)]
pub struct Centerline {
    pub curve: ClosedCurve,
    pub frame: MaterialFrame,
    pub constants: GeometryConstants,
    pub spec: Option<CurveSpec>,
}

impl Centerline {
    pub fn build(spec: &CurveSpec, n_grid: usize) -> Result<Self> {
        let curve = build_curve(spec, n_grid)?;
        let mut out = Self::from_curve(curve)?;
        out.spec = Some(spec.clone());
        Ok(out)
    }

    pub fn from_curve(curve: ClosedCurve) -> Result<Self> {
        let frame = build_frame(&curve)?;
        let constants = geometry_constants(&curve, 4);
        Ok(Self {
            curve,
            frame,
            constants,
            spec: None,
        })
    }

    /// Rigidly moved copy (`x -> r x + shift`), constants carried over.
    pub fn transformed(&self, r: &nalgebra::Matrix3<f64>, shift: &Vector3<f64>) -> Result<Self> {
        if (r.determinant() - 1.0).abs() > 1e-12 || (r.transpose() * r - nalgebra::Matrix3::identity()).norm() > 1e-12 {
            return Err(SbtError::InvalidCurve("transform is not a proper rotation".into()));
        }
        let curve = self.curve.transformed(r, shift);
        let frame = self.frame.transformed(r, shift);
        Ok(Self {
            curve,
            frame,
            constants: self.constants,
            spec: self.spec.clone(),
        })
    }

    pub fn with_grid(&self, n_grid: usize) -> Self {
        Self {
            curve: self.curve.with_grid(n_grid),
            frame: self.frame.with_grid(n_grid),
            constants: self.constants,
            spec: self.spec.clone(),
        }
    }
}

/// Tube of uniform radius `epsilon` around a centerline.
#[derive(Debug, Clone)]
pub struct SlenderGeometry {
    centerline: Arc<Centerline>,
    epsilon: f64,
}

impl SlenderGeometry {
    pub fn new(centerline: Arc<Centerline>, epsilon: f64) -> Self {
        Self { centerline, epsilon }
    }

    pub fn build(spec: &CurveSpec, n_grid: usize, epsilon: f64) -> Result<Self> {
        Ok(Self::new(Arc::new(Centerline::build(spec, n_grid)?), epsilon))
    }

    /// Rigidly moved tube, same radius.
    pub fn transformed(&self, r: &nalgebra::Matrix3<f64>, shift: &Vector3<f64>) -> Result<Self> {
        Ok(Self::new(Arc::new(self.centerline.transformed(r, shift)?), self.epsilon))
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self::new(self.centerline.clone(), epsilon)
    }

    pub fn centerline(&self) -> &Arc<Centerline> {
        &self.centerline
    }

    pub fn curve(&self) -> &ClosedCurve {
        &self.centerline.curve
    }

    pub fn frame(&self) -> &MaterialFrame {
        &self.centerline.frame
    }

    pub fn constants(&self) -> &GeometryConstants {
        &self.centerline.constants
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_grid(&self) -> usize {
        self.centerline.curve.n_grid()
    }

    /// `epsilon < r_max / 4`: the radius range covered by the error bound.
    pub fn admissible(&self) -> bool {
        self.epsilon > 0.0 && self.epsilon < 0.25 * self.constants().r_max
    }

    /// `epsilon < r_max`: the tube surface is embedded and its Jacobian is
    /// positive, which is all the solvers need.
    pub fn tube_valid(&self) -> bool {
        self.epsilon > 0.0 && self.epsilon < self.constants().r_max
    }

    pub fn require_tube(&self) -> Result<()> {
        if self.tube_valid() {
            Ok(())
        } else {
            Err(SbtError::InadmissibleGeometry {
                epsilon: self.epsilon,
                r_max: self.constants().r_max,
            })
        }
    }

    /// `X(s) + epsilon (cos(theta) e_n1 + sin(theta) e_n2)`.
    pub fn surface_point(&self, s: f64, theta: f64) -> Result<Vector3<f64>> {
        self.require_tube()?;
        let p = self.frame().at(s);
        Ok(p.position + p.radial(theta) * self.epsilon)
    }

    /// Surface area element `epsilon (1 - epsilon (k1 cos + k2 sin))`
    /// per unit `ds dtheta`.
    pub fn surface_jacobian(&self, s: f64, theta: f64) -> Result<f64> {
        self.require_tube()?;
        Ok(jacobian_at(&self.frame().at(s), self.epsilon, theta))
    }
}

pub(crate) fn jacobian_at(p: &FramePoint, epsilon: f64, theta: f64) -> f64 {
    let (sn, cs) = theta.sin_cos();
    epsilon * (1.0 - epsilon * (p.kappa1 * cs + p.kappa2 * sn))
}
