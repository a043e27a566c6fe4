use nalgebra::Vector3;
use proptest::prelude::*;
use sbt_core::curve::CurveSpec;
use sbt_core::geometry::Centerline;
use sbt_core::rigid::RigidKinematics;
use sbt_core::study::*;

const SMALL: &str = r#"{"curve": {"type": "wavy_circle", "params": {"amplitude": 0.02, "mode": 3}},
    "epsilons": [0.04, 0.02, 0.01], "n_sbt": 64, "ref_ladder": [[16, 8], [24, 8], [32, 8]],
    "force": [0.2, 0.1, 1.0], "torque": [0.0, 0.0, 0.1], "seed": 5}"#;

fn csv_bytes(records: &[SweepRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).unwrap();
    buf
}

#[test]
fn sweep_is_deterministic_and_envelope_recomputes() {
    let cfg = StudyConfig::from_json(SMALL).unwrap();
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&cfg).unwrap();
    assert_eq!(csv_bytes(&a.records), csv_bytes(&b.records));
    let eps: Vec<f64> = a.records.iter().map(|r| r.epsilon).collect();
    assert_eq!(eps, vec![0.04, 0.02, 0.01]);
    for r in &a.records {
        assert_eq!(r.flag, RecordFlag::Ok);
        let e = envelope(r.epsilon, r.f_c1, &cfg.force(), &cfg.torque());
        assert!((e - r.envelope).abs() <= 1e-12 * e);
        let m = error_metric(&RigidKinematics { v: r.vr, omega: r.wr }, &RigidKinematics { v: r.vs, omega: r.ws });
        assert_eq!(m.err_total, r.err_total);
        assert!(r.cond_sbt.is_finite() && r.cond_ref.is_finite());
    }
    assert_eq!(a.rate.fitted, 3);
    assert!(a.rate.slope.is_some());
}

#[test]
fn csv_file_round_trip() {
    let cfg = StudyConfig::from_json(SMALL).unwrap();
    let out = run_sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_csv(std::fs::File::create(&path).unwrap(), &out.records).unwrap();
    let back = read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert!(back.iter().zip(&out.records).all(|(a, b)| a.same_as(b)));
    assert_eq!(back.len(), out.records.len());
}

#[test]
fn csv_rejects_wrong_header() {
    assert!(read_csv("eps,n\n0.1,2\n".as_bytes()).is_err());
}

#[test]
fn single_radius_sweep_refuses_fit() {
    let cfg = StudyConfig::from_json(
        r#"{"epsilons": [0.02], "n_sbt": 64, "ref_ladder": [[16, 8], [24, 8], [32, 8]]}"#,
    )
    .unwrap();
    let out = run_sweep(&cfg).unwrap();
    assert_eq!(out.records.len(), 1);
    assert!(out.rate.slope.is_none());
    assert!(out.rate.diagnostic.as_deref().unwrap().contains("refused"));
    assert!(!out.rate.passed());
}

#[test]
fn oversized_radius_is_recorded_as_failed() {
    let r_max = Centerline::build(&CurveSpec::Circle, 64).unwrap().constants.r_max;
    let cfg = StudyConfig {
        epsilons: vec![r_max, 0.02],
        n_sbt: 64,
        ref_ladder: vec![[16, 8], [24, 8], [32, 8]],
        ..StudyConfig::default()
    };
    let out = run_sweep(&cfg).unwrap();
    assert_eq!(out.records[0].flag, RecordFlag::SolveFailed);
    assert!(out.records[0].err_total.is_nan());
    assert_eq!(out.records[1].flag, RecordFlag::Ok);
}

#[test]
fn validate_passes_on_defaults_and_is_reproducible() {
    let cfg = StudyConfig { n_sbt: 128, ref_ladder: vec![[24, 8], [32, 8], [48, 12]], ..StudyConfig::default() };
    let a = run_validate(&cfg).unwrap();
    let failed: Vec<&Check> = a.checks.iter().filter(|c| !c.passed).collect();
    assert!(a.passed, "{failed:#?}");
    assert!(a.checks.iter().any(|c| c.name == "gram.circle_closed_form"));
    let b = run_validate(&cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn validate_flags_radius_at_r_max() {
    let r_max = Centerline::build(&CurveSpec::Circle, 64).unwrap().constants.r_max;
    let cfg = StudyConfig { epsilons: vec![r_max], n_sbt: 64, ..StudyConfig::default() };
    let rep = run_validate(&cfg).unwrap();
    assert!(!rep.passed);
    let adm = rep.checks.iter().find(|c| c.name.starts_with("geometry.admissible")).unwrap();
    assert!(!adm.passed);
}

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-10.0..10.0f64).prop_map(Vector3::from)
}

fn field() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e300..1e300f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(f64::NAN),
        Just(f64::INFINITY),
    ]
}

fn record() -> impl Strategy<Value = SweepRecord> {
    (
        (1e-4..0.5f64, 16usize..4096, 8usize..512, 8usize..128),
        prop::collection::vec(field(), 20),
        prop_oneof![Just(RecordFlag::Ok), Just(RecordFlag::ReferenceLimited), Just(RecordFlag::SolveFailed)],
    )
        .prop_map(|((epsilon, n_sbt, ns_ref, ntheta_ref), x, flag)| SweepRecord {
            epsilon,
            n_sbt,
            ns_ref,
            ntheta_ref,
            vs: Vector3::new(x[0], x[1], x[2]),
            ws: Vector3::new(x[3], x[4], x[5]),
            vr: Vector3::new(x[6], x[7], x[8]),
            wr: Vector3::new(x[9], x[10], x[11]),
            err_v: x[12],
            err_w: x[13],
            err_total: x[14],
            f_c1: x[15],
            envelope: x[16],
            cond_sbt: x[17],
            cond_ref: x[18],
            ref_err_est: x[19],
            flag,
        })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn csv_round_trips_losslessly(records in prop::collection::vec(record(), 0..6)) {
        let bytes = csv_bytes(&records);
        let back = read_csv(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            prop_assert!(a.same_as(b));
        }
        prop_assert_eq!(csv_bytes(&back), bytes);
    }

    #[test]
    fn error_metric_is_a_symmetric_sum(v1 in vec3(), w1 in vec3(), v2 in vec3(), w2 in vec3()) {
        let a = RigidKinematics { v: v1, omega: w1 };
        let b = RigidKinematics { v: v2, omega: w2 };
        let m = error_metric(&a, &b);
        prop_assert_eq!(m, error_metric(&b, &a));
        prop_assert_eq!(m.err_total, m.err_v + m.err_w);
        prop_assert_eq!(error_metric(&a, &a).err_total, 0.0);
    }

    #[test]
    fn envelope_is_positive_and_monotone_in_load(eps in 1e-4..0.3f64, fc in 0.0..100.0f64, f in vec3(), t in vec3()) {
        let e = envelope(eps, fc, &f, &t);
        prop_assert!(e >= 0.0);
        prop_assert!(envelope(eps, fc + 1.0, &f, &t) > e);
        prop_assert!(envelope(eps, fc, &(2.0 * f), &(2.0 * t)) >= e);
    }

    #[test]
    fn power_law_sweeps_recover_their_slope(p in 0.4..2.5f64, c in 1e-3..10.0f64) {
        let recs: Vec<SweepRecord> = [0.04, 0.02, 0.01, 0.005]
            .iter()
            .map(|&eps| {
                let mut r = blank(eps);
                r.err_total = c * f64::powf(eps, p);
                r.envelope = envelope(eps, 1.0, &Vector3::z(), &Vector3::zeros());
                r
            })
            .collect();
        let rate = rate_report(&recs);
        prop_assert!((rate.slope.unwrap() - p).abs() < 1e-9);
        prop_assert!(rate.err_strictly_decreasing);
        prop_assert!(rate.c_eff_non_increasing);
    }
}

fn blank(epsilon: f64) -> SweepRecord {
    let z = Vector3::zeros();
    SweepRecord {
        epsilon,
        n_sbt: 64,
        ns_ref: 32,
        ntheta_ref: 8,
        vs: z,
        ws: z,
        vr: z,
        wr: z,
        err_v: 0.0,
        err_w: 0.0,
        err_total: 0.0,
        f_c1: 1.0,
        envelope: 1.0,
        cond_sbt: 1.0,
        cond_ref: 1.0,
        ref_err_est: 0.0,
        flag: RecordFlag::Ok,
    }
}
