//! Radius sweeps comparing the slender-body and reference mobilities.

use super::config::StudyConfig;
use crate::bem::reference_self_convergence;
use crate::error::Result;
use crate::geometry::{Centerline, SlenderGeometry};
use crate::rigid::{RigidKinematics, RigidSystem};
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// A reference result whose own error estimate exceeds this fraction of the
/// measured difference is not used for rate fitting.
pub const REFERENCE_BUDGET: f64 = 0.2;
/// Allowed growth of the normalized constant between consecutive radii.
pub const C_EFF_SLACK: f64 = 1.25;
pub const MIN_SLOPE: f64 = 0.35;
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMetric {
    pub err_v: f64,
    pub err_w: f64,
    pub err_total: f64,
}

/// `|v_r - v_s|`, `|w_r - w_s|` and their sum.
pub fn error_metric(kin_r: &RigidKinematics, kin_s: &RigidKinematics) -> ErrorMetric {
    let err_v = (kin_r.v - kin_s.v).norm();
    let err_w = (kin_r.omega - kin_s.omega).norm();
    ErrorMetric { err_v, err_w, err_total: err_v + err_w }
}

/// `sqrt(eps) |log eps|^{3/2} (|log eps|^{1/2} f_c1 + |F| + |T|)`.
pub fn envelope(epsilon: f64, f_c1: f64, force: &Vector3<f64>, torque: &Vector3<f64>) -> f64 {
    let l = epsilon.ln().abs();
    epsilon.sqrt() * l.powf(1.5) * (l.sqrt() * f_c1 + force.norm() + torque.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordFlag {
    Ok,
    ReferenceLimited,
    SolveFailed,
}

impl fmt::Display for RecordFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ok => "ok",
            Self::ReferenceLimited => "reference-limited",
            Self::SolveFailed => "solve-failed",
        })
    }
}

impl std::str::FromStr for RecordFlag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ok" => Ok(Self::Ok),
            "reference-limited" => Ok(Self::ReferenceLimited),
            "solve-failed" => Ok(Self::SolveFailed),
            other => Err(format!("unknown flag '{other}'")),
        }
    }
}

/// One row of the sweep output. Failed quantities are NaN.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub n_sbt: usize,
    pub ns_ref: usize,
    pub ntheta_ref: usize,
    pub vs: Vector3<f64>,
    pub ws: Vector3<f64>,
    pub vr: Vector3<f64>,
    pub wr: Vector3<f64>,
    pub err_v: f64,
    pub err_w: f64,
    pub err_total: f64,
    pub f_c1: f64,
    pub envelope: f64,
    pub cond_sbt: f64,
    pub cond_ref: f64,
    pub ref_err_est: f64,
    pub flag: RecordFlag,
}

impl SweepRecord {
    pub fn c_eff(&self) -> f64 {
        self.err_total / self.envelope
    }

    /// Field-by-field equality with NaN equal to NaN.
    pub fn same_as(&self, other: &Self) -> bool {
        let a = self.numbers();
        let b = other.numbers();
        self.n_sbt == other.n_sbt
            && self.ns_ref == other.ns_ref
            && self.ntheta_ref == other.ntheta_ref
            && self.flag == other.flag
            && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
    }

    fn numbers(&self) -> Vec<f64> {
        let mut out = vec![self.epsilon];
        for v in [&self.vs, &self.ws, &self.vr, &self.wr] {
            out.extend(v.iter());
        }
        out.extend([
            self.err_v,
            self.err_w,
            self.err_total,
            self.f_c1,
            self.envelope,
            self.cond_sbt,
            self.cond_ref,
            self.ref_err_est,
        ]);
        out
    }
}

/// Trend checks over the successful part of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// Least-squares slope of `log err_total` against `log eps`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Records entering the fit (flag `ok`).
    pub fitted: usize,
    /// `(eps, err_total / envelope)` in sweep order.
    pub c_eff: Vec<(f64, f64)>,
    /// Along decreasing radius: `err_total` strictly decreasing.
    pub err_strictly_decreasing: bool,
    /// Along decreasing radius: `C_eff` never grows by more than the slack.
    pub c_eff_non_increasing: bool,
    pub slope_ok: bool,
    pub diagnostic: Option<String>,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.slope.is_some() && self.slope_ok && self.err_strictly_decreasing && self.c_eff_non_increasing
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub rate: RateReport,
}

fn failed_record(epsilon: f64, cfg: &StudyConfig, ns: usize, nt: usize) -> SweepRecord {
    let nan3 = Vector3::repeat(f64::NAN);
    SweepRecord {
        epsilon,
        n_sbt: cfg.n_sbt,
        ns_ref: ns,
        ntheta_ref: nt,
        vs: nan3,
        ws: nan3,
        vr: nan3,
        wr: nan3,
        err_v: f64::NAN,
        err_w: f64::NAN,
        err_total: f64::NAN,
        f_c1: f64::NAN,
        envelope: f64::NAN,
        cond_sbt: f64::NAN,
        cond_ref: f64::NAN,
        ref_err_est: f64::NAN,
        flag: RecordFlag::SolveFailed,
    }
}

fn sweep_point(centerline: &Arc<Centerline>, epsilon: f64, cfg: &StudyConfig) -> SweepRecord {
    let ladder = cfg.ladder();
    let (ns, nt) = *ladder.last().expect("validated ladder is non-empty");
    let mut rec = failed_record(epsilon, cfg, ns, nt);
    let geometry = SlenderGeometry::new(centerline.clone(), epsilon);
    let (force, torque) = (cfg.force(), cfg.torque());

    let sbt = RigidSystem::new(&geometry).and_then(|sys| Ok((sys.solve(&force, &torque)?, sys.condition())));
    let Ok((sbt, cond_sbt)) = sbt else {
        return rec;
    };
    rec.vs = sbt.kinematics.v;
    rec.ws = sbt.kinematics.omega;
    rec.cond_sbt = cond_sbt;
    rec.f_c1 = sbt.force.c1_norm();
    rec.envelope = envelope(epsilon, rec.f_c1, &force, &torque);

    let method = cfg.reference_method();
    let reference = if ladder.len() >= 3 {
        reference_self_convergence(&geometry, &force, &torque, &ladder, &method).map(|rep| {
            let fine = rep.finest();
            (fine.kinematics, fine.condition, rep.error_estimate)
        })
    } else {
        // too short a ladder for an error estimate
        crate::bem::build_surface_mesh(&geometry, ns, nt)
            .and_then(|mesh| crate::bem::solve_reference_mobility(&mesh, &force, &torque, &method))
            .map(|sol| (sol.kinematics, sol.condition, f64::INFINITY))
    };
    let Ok((kin_r, cond_ref, est)) = reference else {
        return rec;
    };
    rec.vr = kin_r.v;
    rec.wr = kin_r.omega;
    rec.cond_ref = cond_ref;
    rec.ref_err_est = est;
    let err = error_metric(&kin_r, &sbt.kinematics);
    rec.err_v = err.err_v;
    rec.err_w = err.err_w;
    rec.err_total = err.err_total;
    rec.flag = if est <= REFERENCE_BUDGET * err.err_total { RecordFlag::Ok } else { RecordFlag::ReferenceLimited };
    rec
}

/// Run the SBT and reference solves at every radius of `cfg`. Failures are
/// recorded and the sweep continues. Records come out in decreasing radius.
pub fn run_sweep(cfg: &StudyConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let centerline = Arc::new(Centerline::build(&cfg.curve_spec()?, cfg.n_sbt)?);
    let mut records: Vec<SweepRecord> =
        cfg.epsilons.par_iter().map(|&eps| sweep_point(&centerline, eps, cfg)).collect();
    records.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let rate = rate_report(&records);
    Ok(SweepOutcome { records, rate })
}

/// Fit and trend checks over records ordered by decreasing radius.
pub fn rate_report(records: &[SweepRecord]) -> RateReport {
    let usable: Vec<&SweepRecord> = records.iter().filter(|r| r.flag == RecordFlag::Ok).collect();
    let c_eff: Vec<(f64, f64)> = usable.iter().map(|r| (r.epsilon, r.c_eff())).collect();
    let err_strictly_decreasing = usable.windows(2).all(|w| w[1].err_total < w[0].err_total);
    let c_eff_non_increasing = c_eff.windows(2).all(|w| w[1].1 <= C_EFF_SLACK * w[0].1);
    if usable.len() < MIN_FIT_POINTS {
        return RateReport {
            slope: None,
            intercept: None,
            fitted: usable.len(),
            c_eff,
            err_strictly_decreasing,
            c_eff_non_increasing,
            slope_ok: false,
            diagnostic: Some(format!(
                "rate fit refused: {} usable record(s) of {}, need at least {MIN_FIT_POINTS}",
                usable.len(),
                records.len()
            )),
        };
    }
    let xs: Vec<f64> = usable.iter().map(|r| r.epsilon.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.err_total.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    RateReport {
        slope: Some(slope),
        intercept: Some(my - slope * mx),
        fitted: usable.len(),
        c_eff,
        err_strictly_decreasing,
        c_eff_non_increasing,
        slope_ok: slope >= MIN_SLOPE,
        diagnostic: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let a = RigidKinematics { v: Vector3::new(1.0, 2.0, 3.0), omega: Vector3::new(-1.0, 0.5, 0.0) };
        assert_eq!(error_metric(&a, &a), ErrorMetric { err_v: 0.0, err_w: 0.0, err_total: 0.0 });
        let b = RigidKinematics { v: a.v + Vector3::new(3.0, 4.0, 0.0), omega: a.omega };
        assert_eq!(error_metric(&a, &b), ErrorMetric { err_v: 5.0, err_w: 0.0, err_total: 5.0 });
        assert_eq!(error_metric(&a, &b), error_metric(&b, &a));
    }

    #[test]
    fn envelope_formula() {
        let eps: f64 = 0.01;
        let l = -eps.ln();
        let e = envelope(eps, 2.0, &Vector3::new(0.0, 3.0, 4.0), &Vector3::new(1.0, 0.0, 0.0));
        assert!((e - 0.1 * l.powf(1.5) * (2.0 * l.sqrt() + 6.0)).abs() < 1e-14);
    }

    fn rec(eps: f64, err: f64) -> SweepRecord {
        let mut r = failed_record(eps, &StudyConfig::default(), 32, 8);
        r.err_total = err;
        r.envelope = envelope(eps, 1.0, &Vector3::z(), &Vector3::zeros());
        r.flag = RecordFlag::Ok;
        r
    }

    #[test]
    fn power_law_slope_is_recovered() {
        let recs: Vec<SweepRecord> = [0.04, 0.02, 0.01, 0.005].iter().map(|&e| rec(e, 3.0 * e)).collect();
        let rate = rate_report(&recs);
        assert!((rate.slope.unwrap() - 1.0).abs() < 1e-12);
        assert!(rate.passed());
    }

    #[test]
    fn fit_refused_with_too_few_points() {
        let mut recs = vec![rec(0.02, 0.1), rec(0.01, 0.05), rec(0.005, 0.01)];
        recs[2].flag = RecordFlag::ReferenceLimited;
        let rate = rate_report(&recs);
        assert!(rate.slope.is_none() && rate.diagnostic.is_some() && !rate.passed());
    }

    #[test]
    fn growth_in_c_eff_is_caught() {
        let recs: Vec<SweepRecord> = [0.04, 0.02, 0.01].iter().map(|&e| rec(e, 0.1 / e)).collect();
        let rate = rate_report(&recs);
        assert!(!rate.c_eff_non_increasing);
        assert!(!rate.slope_ok);
    }
}
