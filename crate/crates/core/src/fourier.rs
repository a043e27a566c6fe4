//! Real trigonometric series on the unit period and the periodic
//! interpolation helpers built on them.

use nalgebra::{Matrix3, Vector3};
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::TAU;

/// Vector-valued trigonometric series
/// `mean + sum_k cos_k cos(2 pi k s) + sin_k sin(2 pi k s)` for `k = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    mean: Vector3<f64>,
    cos: Vec<Vector3<f64>>,
    sin: Vec<Vector3<f64>>,
}

/// Value and first three derivatives of a series at one parameter.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub value: Vector3<f64>,
    pub d1: Vector3<f64>,
    pub d2: Vector3<f64>,
    pub d3: Vector3<f64>,
}

impl TrigSeries {
    pub fn new(mean: Vector3<f64>, cos: Vec<Vector3<f64>>, sin: Vec<Vector3<f64>>) -> Self {
        assert_eq!(cos.len(), sin.len());
        Self { mean, cos, sin }
    }

    /// Discrete Fourier fit through `samples[n]` taken at `s = n / len`.
    /// The Nyquist mode of an even-length grid is dropped.
    pub fn fit(samples: &[Vector3<f64>]) -> Self {
        let m = samples.len();
        assert!(m >= 3, "need at least three samples");
        let mut comps: [Vec<Complex<f64>>; 3] = Default::default();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(m);
        for (c, buf) in comps.iter_mut().enumerate() {
            *buf = samples.iter().map(|p| Complex::new(p[c], 0.0)).collect();
            fft.process(buf);
        }
        let kmax = (m - 1) / 2;
        let scale = 2.0 / m as f64;
        let mean = Vector3::new(comps[0][0].re, comps[1][0].re, comps[2][0].re) / m as f64;
        let mut cos = Vec::with_capacity(kmax);
        let mut sin = Vec::with_capacity(kmax);
        for k in 1..=kmax {
            cos.push(Vector3::new(comps[0][k].re, comps[1][k].re, comps[2][k].re) * scale);
            sin.push(-Vector3::new(comps[0][k].im, comps[1][k].im, comps[2][k].im) * scale);
        }
        Self { mean, cos, sin }
    }

    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    pub fn mean(&self) -> Vector3<f64> {
        self.mean
    }

    /// Largest coefficient norm among the top `count` harmonics.
    pub fn tail_norm(&self, count: usize) -> f64 {
        let k = self.cos.len();
        (k.saturating_sub(count)..k)
            .map(|i| self.cos[i].norm().max(self.sin[i].norm()))
            .fold(0.0, f64::max)
    }

    /// Drop trailing harmonics whose coefficients are below `rel_tol` times
    /// the largest harmonic.
    pub fn truncated(&self, rel_tol: f64) -> Self {
        let scale = self
            .cos
            .iter()
            .chain(&self.sin)
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let mut keep = self.cos.len();
        while keep > 1
            && self.cos[keep - 1].norm().max(self.sin[keep - 1].norm()) <= rel_tol * scale
        {
            keep -= 1;
        }
        Self {
            mean: self.mean,
            cos: self.cos[..keep].to_vec(),
            sin: self.sin[..keep].to_vec(),
        }
    }

    pub fn eval(&self, s: f64) -> Vector3<f64> {
        let (s1, c1) = (TAU * s).sin_cos();
        let (mut c, mut sn) = (c1, s1);
        let mut out = self.mean;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            out += a * c + b * sn;
            let nc = c * c1 - sn * s1;
            sn = sn * c1 + c * s1;
            c = nc;
        }
        out
    }

    /// Value and derivatives up to third order in one pass.
    pub fn jet(&self, s: f64) -> Jet {
        let (s1, c1) = (TAU * s).sin_cos();
        let (mut c, mut sn) = (c1, s1);
        let mut jet = Jet {
            value: self.mean,
            d1: Vector3::zeros(),
            d2: Vector3::zeros(),
            d3: Vector3::zeros(),
        };
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = TAU * (k + 1) as f64;
            let even = a * c + b * sn;
            let odd = b * c - a * sn;
            jet.value += even;
            jet.d1 += odd * w;
            jet.d2 -= even * (w * w);
            jet.d3 -= odd * (w * w * w);
            let nc = c * c1 - sn * s1;
            sn = sn * c1 + c * s1;
            c = nc;
        }
        jet
    }

    /// Series of the derivative.
    pub fn derivative(&self) -> Self {
        let mut cos = Vec::with_capacity(self.cos.len());
        let mut sin = Vec::with_capacity(self.sin.len());
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = TAU * (k + 1) as f64;
            cos.push(b * w);
            sin.push(-a * w);
        }
        Self {
            mean: Vector3::zeros(),
            cos,
            sin,
        }
    }

    /// Apply `x -> r x + shift` to the represented curve.
    pub fn transformed(&self, r: &Matrix3<f64>, shift: &Vector3<f64>) -> Self {
        Self {
            mean: r * self.mean + shift,
            cos: self.cos.iter().map(|c| r * c).collect(),
            sin: self.sin.iter().map(|c| r * c).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            cos: self.cos.iter().map(|c| c * factor).collect(),
            sin: self.sin.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Real Fourier coefficients `(mean, cos_k, sin_k)` of uniformly sampled
/// scalar data on the unit period.
pub fn fit_scalar(samples: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let m = samples.len();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);
    let kmax = (m - 1) / 2;
    let scale = 2.0 / m as f64;
    let cos = (1..=kmax).map(|k| buf[k].re * scale).collect();
    let sin = (1..=kmax).map(|k| -buf[k].im * scale).collect();
    (buf[0].re / m as f64, cos, sin)
}

/// Spectral derivative (with respect to the unit-period parameter) of
/// uniformly sampled periodic vector data.
pub fn spectral_derivative(values: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let n = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut out = vec![Vector3::zeros(); n];
    for c in 0..3 {
        let mut buf: Vec<Complex<f64>> = values.iter().map(|v| Complex::new(v[c], 0.0)).collect();
        fwd.process(&mut buf);
        for (k, z) in buf.iter_mut().enumerate() {
            let freq = if 2 * k < n {
                k as f64
            } else if 2 * k == n {
                0.0
            } else {
                k as f64 - n as f64
            };
            *z *= Complex::new(0.0, TAU * freq / n as f64);
        }
        inv.process(&mut buf);
        for (o, z) in out.iter_mut().zip(&buf) {
            o[c] = z.re;
        }
    }
    out
}

/// Cardinal function of trigonometric interpolation on `n` equispaced nodes
/// of `[0, 2 pi)`, evaluated at angular offset `x` from its node.
pub fn trig_cardinal(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let t = half.sin();
    if t.abs() < 1e-14 {
        return 1.0;
    }
    let nf = n as f64;
    if n.is_multiple_of(2) {
        (nf * half).sin() * half.cos() / (nf * t)
    } else {
        (nf * half).sin() / (nf * t)
    }
}

/// Barycentric Lagrange weights of a centered `order`-point stencil on a
/// uniform grid of spacing `h`, for interpolation at offset `u`.
/// Returns the grid index offset of the first stencil node.
pub fn lagrange_stencil(u: f64, h: f64, order: usize, weights: &mut [f64]) -> i64 {
    debug_assert_eq!(weights.len(), order);
    let x = u / h;
    let first = x.floor() as i64 - (order as i64 / 2 - 1);
    let mut exact = None;
    for (m, w) in weights.iter_mut().enumerate() {
        let d = x - (first + m as i64) as f64;
        if d.abs() < 1e-14 {
            exact = Some(m);
        }
        *w = d;
    }
    if let Some(m) = exact {
        weights.iter_mut().for_each(|w| *w = 0.0);
        weights[m] = 1.0;
        return first;
    }
    // barycentric weights on equispaced nodes: (-1)^m binom(order-1, m)
    let mut binom = 1.0;
    let mut sum = 0.0;
    for (m, w) in weights.iter_mut().enumerate() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        *w = sign * binom / *w;
        sum += *w;
        binom = binom * (order - 1 - m) as f64 / (m + 1) as f64;
    }
    weights.iter_mut().for_each(|w| *w /= sum);
    first
}
