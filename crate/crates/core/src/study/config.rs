//! Study configuration file.

use crate::bem::{ReferenceMethod, DELTA_FACTOR_RANGE, MIN_SURFACE_NODES};
use crate::curve::CurveSpec;
use crate::error::{Result, SbtError};
use crate::kernel::MIN_SBT_NODES;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

/// `curve` entry as written in the file: a type name and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveEntry {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EllipseParams {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WavyParams {
    amplitude: f64,
    mode: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

impl CurveEntry {
    pub fn to_spec(&self) -> Result<CurveSpec> {
        let params = if self.params.is_null() { Value::Object(Default::default()) } else { self.params.clone() };
        let bad = |e: serde_json::Error| SbtError::Config(format!("curve '{}' params: {e}", self.kind));
        match self.kind.as_str() {
            "circle" => {
                serde_json::from_value::<NoParams>(params).map_err(bad)?;
                Ok(CurveSpec::Circle)
            }
            "ellipse" => {
                let p: EllipseParams = serde_json::from_value(params).map_err(bad)?;
                Ok(CurveSpec::Ellipse { a: p.a, b: p.b })
            }
            "wavy_circle" => {
                let p: WavyParams = serde_json::from_value(params).map_err(bad)?;
                Ok(CurveSpec::WavyCircle { amplitude: p.amplitude, mode: p.mode })
            }
            other => Err(SbtError::Config(format!(
                "unknown curve type '{other}' (expected circle, ellipse or wavy_circle)"
            ))),
        }
    }

    pub fn from_spec(spec: &CurveSpec) -> Self {
        let (kind, params) = match spec {
            CurveSpec::Circle => ("circle", Value::Object(Default::default())),
            CurveSpec::Ellipse { a, b } => ("ellipse", serde_json::json!({ "a": a, "b": b })),
            CurveSpec::WavyCircle { amplitude, mode } => {
                ("wavy_circle", serde_json::json!({ "amplitude": amplitude, "mode": mode }))
            }
        };
        Self { kind: kind.into(), params }
    }
}

/// Which discretization the reference solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RefMethodName {
    #[default]
    Corrected,
    Regularized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub curve: CurveEntry,
    /// Tube radii, strictly decreasing.
    pub epsilons: Vec<f64>,
    pub n_sbt: usize,
    /// Reference `(Ns, Ntheta)` rungs, coarse to fine.
    pub ref_ladder: Vec<[usize; 2]>,
    /// Blob width factor, used by the regularized reference method.
    pub delta_factor: f64,
    pub force: [f64; 3],
    pub torque: [f64; 3],
    pub seed: u64,
    pub ref_method: RefMethodName,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            curve: CurveEntry::from_spec(&CurveSpec::Circle),
            epsilons: vec![0.04, 0.02, 0.01, 0.005],
            n_sbt: 256,
            ref_ladder: vec![[32, 8], [48, 12], [64, 16]],
            delta_factor: 1.0,
            force: [0.0, 0.0, 1.0],
            torque: [0.0, 0.0, 0.0],
            seed: 0,
            ref_method: RefMethodName::Corrected,
        }
    }
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| SbtError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks that do not need the geometry. Radius admissibility is
    /// checked against the built centerline by the sweep and the validator.
    pub fn validate(&self) -> Result<()> {
        self.curve.to_spec()?;
        if self.epsilons.is_empty() {
            return Err(SbtError::Config("epsilons must not be empty".into()));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(SbtError::Config("epsilons must be positive and finite".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SbtError::Config("epsilons must be strictly decreasing".into()));
        }
        if self.n_sbt < MIN_SBT_NODES {
            return Err(SbtError::Config(format!("n_sbt must be at least {MIN_SBT_NODES}")));
        }
        if self.ref_ladder.is_empty() {
            return Err(SbtError::Config("ref_ladder must not be empty".into()));
        }
        if self.ref_ladder.iter().flatten().any(|n| *n < MIN_SURFACE_NODES) {
            return Err(SbtError::Config(format!("ref_ladder sizes must be at least {MIN_SURFACE_NODES}")));
        }
        if self.ref_ladder.windows(2).any(|w| w[1][0] < w[0][0] || w[1][1] < w[0][1]) {
            return Err(SbtError::Config("ref_ladder must be non-decreasing".into()));
        }
        let (lo, hi) = DELTA_FACTOR_RANGE;
        if !(self.delta_factor >= lo && self.delta_factor <= hi) {
            return Err(SbtError::Config(format!("delta_factor must lie in [{lo}, {hi}]")));
        }
        if self.force.iter().chain(&self.torque).any(|x| !x.is_finite()) {
            return Err(SbtError::Config("force and torque must be finite".into()));
        }
        Ok(())
    }

    pub fn curve_spec(&self) -> Result<CurveSpec> {
        self.curve.to_spec()
    }

    pub fn force(&self) -> Vector3<f64> {
        Vector3::from(self.force)
    }

    pub fn torque(&self) -> Vector3<f64> {
        Vector3::from(self.torque)
    }

    pub fn ladder(&self) -> Vec<(usize, usize)> {
        self.ref_ladder.iter().map(|r| (r[0], r[1])).collect()
    }

    pub fn reference_method(&self) -> ReferenceMethod {
        match self.ref_method {
            RefMethodName::Corrected => ReferenceMethod::Corrected,
            RefMethodName::Regularized => ReferenceMethod::Regularized { delta_factor: self.delta_factor },
        }
    }
}
