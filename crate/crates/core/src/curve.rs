//! Unit-length closed centerlines parameterized by arclength.

use crate::error::{Result, SbtError};
use crate::fourier::{fit_scalar, Jet, TrigSeries};
use crate::geometry::chord_arc_constant;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Built-in centerline families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum CurveSpec {
    Circle,
    /// Planar ellipse with semi-axes `a`, `b` before rescaling to unit length.
    Ellipse { a: f64, b: f64 },
    /// Circle of radius `1/(2 pi)` with out-of-plane displacement
    /// `amplitude * sin(2 pi mode t)`, rescaled to unit length.
    WavyCircle { amplitude: f64, mode: u32 },
}

impl CurveSpec {
    fn raw_series(&self) -> Result<TrigSeries> {
        let r0 = 1.0 / TAU;
        match *self {
            CurveSpec::Circle => Ok(TrigSeries::new(
                Vector3::zeros(),
                vec![Vector3::new(r0, 0.0, 0.0)],
                vec![Vector3::new(0.0, r0, 0.0)],
            )),
            CurveSpec::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                    return Err(SbtError::InvalidCurve(format!(
                        "ellipse semi-axes must be positive and finite, got a={a}, b={b}"
                    )));
                }
                Ok(TrigSeries::new(
                    Vector3::zeros(),
                    vec![Vector3::new(a, 0.0, 0.0)],
                    vec![Vector3::new(0.0, b, 0.0)],
                ))
            }
            CurveSpec::WavyCircle { amplitude, mode } => {
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return Err(SbtError::InvalidCurve(format!(
                        "wavy circle amplitude must be finite and non-negative, got {amplitude}"
                    )));
                }
                if mode < 2 {
                    return Err(SbtError::InvalidCurve(format!(
                        "wavy circle mode must be at least 2, got {mode}"
                    )));
                }
                let m = mode as usize;
                let mut cos = vec![Vector3::zeros(); m];
                let mut sin = vec![Vector3::zeros(); m];
                cos[0] = Vector3::new(r0, 0.0, 0.0);
                sin[0] = Vector3::new(0.0, r0, 0.0);
                sin[m - 1] += Vector3::new(0.0, 0.0, amplitude);
                Ok(TrigSeries::new(Vector3::zeros(), cos, sin))
            }
        }
    }
}

/// Tolerance on `max | |X'| - 1 |` for an accepted curve.
pub const ARCLENGTH_TOLERANCE: f64 = 1e-8;
/// Smallest chord-arc constant accepted before a curve counts as
/// (nearly) self-intersecting.
pub const MIN_CHORD_ARC: f64 = 1e-2;

/// Closed curve `X(s)`, `s` in `[0, 1)`, with `|X'| = 1`, sampled on a
/// uniform grid of `n_grid` nodes.
#[derive(Debug, Clone)]
pub struct ClosedCurve {
    series: TrigSeries,
    nodes: Vec<Vector3<f64>>,
}

impl ClosedCurve {
    /// Wrap an arclength-parameterized series. Fails if the series is not
    /// unit speed within [`ARCLENGTH_TOLERANCE`].
    pub fn from_series(series: TrigSeries, n_grid: usize) -> Result<Self> {
        let residual = arclength_residual(&series, 4096);
        if residual > ARCLENGTH_TOLERANCE {
            return Err(SbtError::Reparameterization {
                residual,
                tolerance: ARCLENGTH_TOLERANCE,
            });
        }
        Ok(Self::from_series_unchecked(series, n_grid))
    }

    fn from_series_unchecked(series: TrigSeries, n_grid: usize) -> Self {
        let nodes = (0..n_grid)
            .map(|i| series.eval(i as f64 / n_grid as f64))
            .collect();
        Self { series, nodes }
    }

    pub fn n_grid(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    pub fn series(&self) -> &TrigSeries {
        &self.series
    }

    pub fn position(&self, s: f64) -> Vector3<f64> {
        self.series.eval(s)
    }

    /// `X`, `X'`, `X''`, `X'''` at `s`.
    pub fn jet(&self, s: f64) -> Jet {
        self.series.jet(s)
    }

    pub fn curvature(&self, s: f64) -> f64 {
        self.series.jet(s).d2.norm()
    }

    /// Same curve on a different node grid.
    pub fn with_grid(&self, n_grid: usize) -> Self {
        Self::from_series_unchecked(self.series.clone(), n_grid)
    }

    /// Image of the curve under `x -> r x + shift`; `r` must be a rotation.
    pub fn transformed(&self, r: &Matrix3<f64>, shift: &Vector3<f64>) -> Self {
        Self::from_series_unchecked(self.series.transformed(r, shift), self.n_grid())
    }

    pub fn arclength_residual(&self, test_points: usize) -> f64 {
        arclength_residual(&self.series, test_points)
    }
}

fn arclength_residual(series: &TrigSeries, test_points: usize) -> f64 {
    (0..test_points)
        .map(|i| (series.jet(i as f64 / test_points as f64).d1.norm() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Build the unit-length, arclength-parameterized centerline of `spec`
/// sampled on `n_grid` nodes.
pub fn build_curve(spec: &CurveSpec, n_grid: usize) -> Result<ClosedCurve> {
    if n_grid < 3 {
        return Err(SbtError::GridTooSmall { got: n_grid, min: 3 });
    }
    let raw = spec.raw_series()?;
    let rough = rough_chord_arc(&raw);
    if rough < 0.5 * MIN_CHORD_ARC {
        return Err(SbtError::InvalidCurve(format!(
            "{spec:?} is self-intersecting or degenerate (chord-arc constant about {rough:.3e})"
        )));
    }
    let series = match spec {
        CurveSpec::Circle => raw,
        _ => reparameterize(&raw)?,
    };
    let curve = ClosedCurve::from_series(series, n_grid)?;
    let c_gamma = chord_arc_constant(&curve, 512);
    if !(c_gamma > MIN_CHORD_ARC) {
        return Err(SbtError::InvalidCurve(format!(
            "{spec:?} is self-intersecting or degenerate (chord-arc constant {c_gamma:.3e})"
        )));
    }
    Ok(curve)
}

/// Chord-arc constant of a raw curve from a polygonal arclength estimate;
/// cheap screening before the spectral reparameterization.
fn rough_chord_arc(raw: &TrigSeries) -> f64 {
    let m = 2048;
    let pts: Vec<Vector3<f64>> = (0..=m).map(|i| raw.eval(i as f64 / m as f64)).collect();
    let mut cumulative = vec![0.0; m + 1];
    for i in 0..m {
        cumulative[i + 1] = cumulative[i] + (pts[i + 1] - pts[i]).norm();
    }
    let total = cumulative[m];
    let stride = 8;
    let mut best = f64::INFINITY;
    for i in (0..m).step_by(stride) {
        for j in ((i + stride)..m).step_by(stride) {
            let arc = (cumulative[j] - cumulative[i]).min(total - (cumulative[j] - cumulative[i]));
            best = best.min((pts[i] - pts[j]).norm() / arc);
        }
    }
    best
}

/// Cumulative arclength `L(t) = int_0^t |Y'|` of a periodic raw curve,
/// held as the integrated Fourier series of its speed.
struct ArclengthMap {
    mean_speed: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ArclengthMap {
    fn new(raw: &TrigSeries) -> Result<Self> {
        let mut m = 256;
        loop {
            let speed: Vec<f64> = (0..m)
                .map(|i| raw.jet(i as f64 / m as f64).d1.norm())
                .collect();
            let (mean, cos, sin) = fit_scalar(&speed);
            if !(mean > 0.0 && mean.is_finite()) {
                return Err(SbtError::InvalidCurve("raw curve has zero length".into()));
            }
            let tail = cos[cos.len() - 8..]
                .iter()
                .chain(&sin[sin.len() - 8..])
                .fold(0.0f64, |acc, c| acc.max(c.abs()));
            if tail <= 1e-15 * mean || m >= 1 << 15 {
                return Ok(Self {
                    mean_speed: mean,
                    cos,
                    sin,
                });
            }
            m *= 2;
        }
    }

    fn total(&self) -> f64 {
        self.mean_speed
    }

    /// `(L(t), L'(t))`.
    fn eval(&self, t: f64) -> (f64, f64) {
        let mut len = self.mean_speed * t;
        let mut speed = self.mean_speed;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = TAU * (k + 1) as f64;
            let (sn, cs) = (w * t).sin_cos();
            len += (a * sn + b * (1.0 - cs)) / w;
            speed += a * cs + b * sn;
        }
        (len, speed)
    }

    /// Raw parameter `t` at which the normalized arclength equals `s`.
    fn invert(&self, s: f64) -> f64 {
        let target = s * self.total();
        let mut t = s;
        for _ in 0..60 {
            let (len, speed) = self.eval(t);
            let step = (len - target) / speed;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        t
    }
}

/// Resample a raw closed curve at equal arclength and rescale it to unit
/// total length. The node count of the fit doubles until the result is unit
/// speed to well within [`ARCLENGTH_TOLERANCE`].
fn reparameterize(raw: &TrigSeries) -> Result<TrigSeries> {
    let map = ArclengthMap::new(raw)?;
    let length = map.total();
    let mut m = 64;
    let mut best = f64::INFINITY;
    loop {
        let samples: Vec<Vector3<f64>> = (0..m)
            .map(|i| raw.eval(map.invert(i as f64 / m as f64)) / length)
            .collect();
        let series = TrigSeries::fit(&samples);
        let residual = arclength_residual(&series, 4096);
        best = best.min(residual);
        let scale = series.tail_norm(series.degree()).max(1.0 / PI);
        if residual <= 1e-11 && series.tail_norm(4) <= 1e-14 * scale {
            return Ok(series.truncated(1e-16));
        }
        if m >= 8192 {
            if best <= ARCLENGTH_TOLERANCE {
                return Ok(series.truncated(1e-16));
            }
            return Err(SbtError::Reparameterization {
                residual: best,
                tolerance: ARCLENGTH_TOLERANCE,
            });
        }
        m *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Adaptive Simpson quadrature, used as an arclength oracle that shares
    /// nothing with the spectral path.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    #[test]
    fn circle_is_exact() {
        let c = build_curve(&CurveSpec::Circle, 64).unwrap();
        let r0 = 1.0 / TAU;
        for i in 0..64 {
            let s = i as f64 / 64.0;
            let expect = Vector3::new(r0 * (TAU * s).cos(), r0 * (TAU * s).sin(), 0.0);
            assert_abs_diff_eq!((c.nodes()[i] - expect).norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(c.curvature(s), TAU, epsilon = 1e-12);
        }
        assert!(c.arclength_residual(4096) < 1e-14);
    }

    #[test]
    fn ellipse_reparameterization_matches_quadrature_oracle() {
        let (a, b) = (1.0, 0.5);
        let c = build_curve(&CurveSpec::Ellipse { a, b }, 128).unwrap();
        assert!(c.arclength_residual(4096) <= 1e-8);

        let speed = |t: f64| TAU * ((a * (TAU * t).sin()).powi(2) + (b * (TAU * t).cos()).powi(2)).sqrt();
        let total = adaptive_simpson(&speed, 0.0, 1.0, 1e-13);
        // node at s = 0.3 must sit at raw parameter t with L(t)/L = 0.3
        let p = c.position(0.3) * total;
        let t = p.y.atan2(p.x * b / a).rem_euclid(TAU) / TAU;
        let partial = adaptive_simpson(&speed, 0.0, t, 1e-13);
        assert_abs_diff_eq!(partial / total, 0.3, epsilon = 1e-9);
    }

    #[test]
    fn wavy_circle_unit_length() {
        let c = build_curve(&CurveSpec::WavyCircle { amplitude: 0.02, mode: 3 }, 64).unwrap();
        assert!(c.arclength_residual(4096) <= 1e-8);
        // periodicity is exact by construction
        assert_abs_diff_eq!((c.position(1.0) - c.position(0.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        assert!(build_curve(&CurveSpec::Ellipse { a: 0.0, b: 0.0 }, 64).is_err());
        assert!(build_curve(&CurveSpec::Ellipse { a: 1.0, b: -1.0 }, 64).is_err());
        assert!(build_curve(&CurveSpec::WavyCircle { amplitude: 0.01, mode: 1 }, 64).is_err());
        assert!(build_curve(&CurveSpec::WavyCircle { amplitude: f64::NAN, mode: 3 }, 64).is_err());
        // huge even-mode wave squeezes antipodal points together
        let err = build_curve(&CurveSpec::WavyCircle { amplitude: 50.0, mode: 2 }, 64);
        assert!(err.is_err(), "{err:?}");
    }
}
