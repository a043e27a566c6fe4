//! CSV form of sweep records.

use super::sweep::SweepRecord;
use crate::error::{Result, SbtError};
use nalgebra::Vector3;
use std::io::{Read, Write};

pub const CSV_HEADER: [&str; 25] = [
    "epsilon", "n_sbt", "ns_ref", "ntheta_ref", "vs_x", "vs_y", "vs_z", "ws_x", "ws_y", "ws_z", "vr_x", "vr_y",
    "vr_z", "wr_x", "wr_y", "wr_z", "err_v", "err_w", "err_total", "f_c1", "envelope", "cond_sbt", "cond_ref",
    "ref_err_est", "flag",
];

/// Shortest scientific form that still round-trips every bit.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(writer: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let mut row = vec![num(r.epsilon), r.n_sbt.to_string(), r.ns_ref.to_string(), r.ntheta_ref.to_string()];
        for v in [&r.vs, &r.ws, &r.vr, &r.wr] {
            row.extend(v.iter().map(|x| num(*x)));
        }
        for x in [r.err_v, r.err_w, r.err_total, r.f_c1, r.envelope, r.cond_sbt, r.cond_ref, r.ref_err_est] {
            row.push(num(x));
        }
        row.push(r.flag.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(reader);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(SbtError::Config(format!("unexpected CSV header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let bad = |field: &str| SbtError::Config(format!("row {}: bad {field}", line + 1));
        let f = |k: usize| row[k].parse::<f64>().map_err(|_| bad(CSV_HEADER[k]));
        let u = |k: usize| row[k].parse::<usize>().map_err(|_| bad(CSV_HEADER[k]));
        let v = |k: usize| -> Result<Vector3<f64>> { Ok(Vector3::new(f(k)?, f(k + 1)?, f(k + 2)?)) };
        out.push(SweepRecord {
            epsilon: f(0)?,
            n_sbt: u(1)?,
            ns_ref: u(2)?,
            ntheta_ref: u(3)?,
            vs: v(4)?,
            ws: v(7)?,
            vr: v(10)?,
            wr: v(13)?,
            err_v: f(16)?,
            err_w: f(17)?,
            err_total: f(18)?,
            f_c1: f(19)?,
            envelope: f(20)?,
            cond_sbt: f(21)?,
            cond_ref: f(22)?,
            ref_err_est: f(23)?,
            flag: row[24].parse().map_err(|_| bad("flag"))?,
        });
    }
    Ok(out)
}
