//! CSV readers and writers, and atomic file output.
//!
//! CSV files carry one leading `#` comment line with unit annotations,
//! followed by a header row. Readers skip `#` lines.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::cavity::CouplingMatrix;
use crate::dynamics::PotentialTable;
use crate::energetics::ModeContribution;
use crate::error::{Error, Result};
use crate::kernels::SpectralEntry;
use crate::trajectory::{Spectrum, Trajectory};

/// Shortest round-trip text of a float.
fn num(x: f64) -> String {
    format!("{x:e}")
}

pub const UNITS: &str = "# units: natural (c = hbar = k_B = 1)";

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn parse_err(what: &str, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{what}: {e}"))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(r)
}

fn field(rec: &csv::StringRecord, i: usize, row: usize, name: &str) -> Result<f64> {
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::Parse(format!("row {row}: missing column `{name}`")))?;
    let v: f64 = raw
        .parse()
        .map_err(|e| Error::Parse(format!("row {row}, column `{name}`: {e} (`{raw}`)")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("row {row}, column `{name}`: non-finite value")));
    }
    Ok(v)
}

/// Parse a uniformly sampled trajectory with header `t,x` or `t,x,v`.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Trajectory> {
    let mut rdr = reader(r);
    let headers = rdr.headers().map_err(|e| parse_err("trajectory header", e))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_v = match names.as_slice() {
        ["t", "x"] => false,
        ["t", "x", "v"] => true,
        _ => {
            return Err(Error::Parse(format!(
                "trajectory header must be `t,x` or `t,x,v`, got `{}`",
                names.join(",")
            )))
        }
    };
    let (mut t, mut x, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err("trajectory row", e))?;
        t.push(field(&rec, 0, row + 1, "t")?);
        x.push(field(&rec, 1, row + 1, "x")?);
        if has_v {
            v.push(field(&rec, 2, row + 1, "v")?);
        }
    }
    if t.len() < 2 {
        return Err(Error::Parse("trajectory needs at least two rows".into()));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parse("trajectory times must increase".into()));
    }
    for (i, ti) in t.iter().enumerate() {
        let expected = t[0] + i as f64 * dt;
        if (ti - expected).abs() > 1e-9 * dt.max(expected.abs()) {
            return Err(Error::Parse(format!(
                "trajectory grid is not uniform at row {} (t = {ti}, expected {expected})",
                i + 1
            )));
        }
    }
    Trajectory::new(t[0], dt, x, has_v.then_some(v)).map_err(|e| Error::Parse(e.to_string()))
}

/// Parse a potential table with header `x,V,dV`.
pub fn read_potential_csv<R: Read>(r: R) -> Result<PotentialTable> {
    let mut rdr = reader(r);
    let headers = rdr.headers().map_err(|e| parse_err("potential header", e))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["x", "V", "dV"] {
        return Err(Error::Parse(format!(
            "potential header must be `x,V,dV`, got `{}`",
            names.join(",")
        )));
    }
    let (mut x, mut v, mut dv) = (Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err("potential row", e))?;
        x.push(field(&rec, 0, row + 1, "x")?);
        v.push(field(&rec, 1, row + 1, "V")?);
        dv.push(field(&rec, 2, row + 1, "dV")?);
    }
    PotentialTable::new(x, v, dv).map_err(|e| Error::Parse(e.to_string()))
}

fn table(units: &str, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "{UNITS}; {units}").expect("writing to memory");
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header).expect("writing to memory");
        for r in rows {
            w.write_record(&r).expect("writing to memory");
        }
        w.flush().expect("writing to memory");
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory) -> Vec<u8> {
    match &traj.v {
        Some(v) => table(
            "t [time], x [length], v [length/time]",
            &["t", "x", "v"],
            (0..traj.len()).map(|i| vec![num(traj.time(i)), num(traj.x[i]), num(v[i])]),
        ),
        None => table(
            "t [time], x [length]",
            &["t", "x"],
            (0..traj.len()).map(|i| vec![num(traj.time(i)), num(traj.x[i])]),
        ),
    }
}

pub fn forces_csv(traj: &Trajectory, fx: &[f64], fv: &[f64]) -> Vec<u8> {
    table(
        "t [time], F_x and F_xdot [energy/length]",
        &["t", "F_x", "F_xdot"],
        (0..traj.len()).map(|i| vec![num(traj.time(i)), num(fx[i]), num(fv[i])]),
    )
}

pub fn coupling_csv(g: &CouplingMatrix) -> Vec<u8> {
    let n = g.k_max();
    table(
        "g dimensionless, 1-based mode labels",
        &["j", "k", "g"],
        (1..=n).flat_map(move |j| (1..=n).map(move |k| vec![j.to_string(), k.to_string(), num(g.get(j, k))])),
    )
}

/// Kernel samples as (t, N, M) rows.
pub fn kernel_csv(samples: &[(f64, f64, f64)], units: &str) -> Vec<u8> {
    table(
        units,
        &["t", "N", "M"],
        samples.iter().map(|s| vec![num(s.0), num(s.1), num(s.2)]),
    )
}

pub fn spectral_csv(entries: &[SpectralEntry]) -> Vec<u8> {
    table(
        "omega_sum [1/time], nu and im_mu dimensionless; singular channel k = -j omitted",
        &["k", "j", "omega_sum", "nu", "im_mu"],
        entries.iter().filter_map(|e| {
            e.coefficient.map(|c| {
                vec![
                    e.k.to_string(),
                    e.j.to_string(),
                    num(e.omega_sum),
                    num(c.nu),
                    num(c.im_mu),
                ]
            })
        }),
    )
}

pub fn spectrum_csv(sp: &Spectrum) -> Vec<u8> {
    table(
        "omega [1/time], re and im of x~ [length*time]",
        &["omega", "re", "im"],
        sp.omega
            .iter()
            .zip(&sp.xt)
            .map(|(w, c): (&f64, &Complex64)| vec![num(*w), num(c.re), num(c.im)]),
    )
}

pub fn mode_breakdown_csv(rows: &[ModeContribution]) -> Vec<u8> {
    table(
        "omega_sum [1/time], contribution to E_trans [energy]",
        &["k", "j", "omega_sum", "contribution"],
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                r.j.to_string(),
                num(r.omega_sum),
                num(r.contribution),
            ]
        }),
    )
}
