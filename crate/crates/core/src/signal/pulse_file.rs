//! `t_ns,ex,ey` pulse files, one row per signal sample.

use std::io::{Read, Write};

use super::Signal;
use crate::{Error, Result};

/// Relative tolerance on the sample spacing when reading.
const SPACING_TOL: f64 = 1e-6;

pub fn write_pulse_csv<W: Write>(signal: &Signal, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_ns", "ex", "ey"])?;
    for (k, (x, y)) in signal.ex().iter().zip(signal.ey()).enumerate() {
        let t = k as f64 * signal.dt() * 1e9;
        w.write_record([t.to_string(), x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a pulse file. Rows are numbered from 1 after the header in errors.
pub fn read_pulse_csv<R: Read>(input: R) -> Result<Signal> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t_ns", "ex", "ey"] {
        return Err(Error::PulseFile {
            row: 0,
            msg: format!("expected header t_ns,ex,ey, got {}", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let (mut t, mut ex, mut ey) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::PulseFile { row, msg: e.to_string() })?;
        if rec.len() != 3 {
            return Err(Error::PulseFile {
                row,
                msg: format!("expected 3 fields, got {}", rec.len()),
            });
        }
        let field = |j: usize, name: &str| -> Result<f64> {
            let v: f64 = rec[j].parse().map_err(|_| Error::PulseFile {
                row,
                msg: format!("{name} is not a number: {:?}", &rec[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::PulseFile { row, msg: format!("{name} is not finite") });
            }
            Ok(v)
        };
        t.push(field(0, "t_ns")?);
        ex.push(field(1, "ex")?);
        ey.push(field(2, "ey")?);
    }
    if t.len() < 2 {
        return Err(Error::PulseFile {
            row: t.len(),
            msg: "a pulse needs at least two samples".into(),
        });
    }
    let dt_ns = t[1] - t[0];
    if !(dt_ns > 0.0) {
        return Err(Error::PulseFile { row: 2, msg: "time must increase".into() });
    }
    for (k, &tk) in t.iter().enumerate() {
        let want = t[0] + k as f64 * dt_ns;
        if (tk - want).abs() > SPACING_TOL * dt_ns.max(want.abs()) {
            return Err(Error::PulseFile {
                row: k + 1,
                msg: format!("non-uniform sampling: t = {tk} ns, expected {want} ns"),
            });
        }
    }
    Signal::new(dt_ns * 1e-9, ex, ey)
}
