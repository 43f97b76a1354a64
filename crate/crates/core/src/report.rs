//! Output artifacts: `report.json` and the CSV tables. Every float is
//! written with 17 significant digits (`{:.16e}`), lines end in LF and
//! nothing time-dependent is written, so reruns are byte-identical.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Command, Derived, ExperimentConfig};
use crate::discretization::{DiscreteSpace, Field};
use crate::error::{Error, Result};
use crate::solvers::{Check, SolverReport, SweepReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    AssertionFailure,
    NonConvergence,
    /// The run stopped early; the message is in `results.error`.
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::AssertionFailure => 1,
            Status::NonConvergence => 3,
            Status::Error => 1,
        }
    }
}

impl Error {
    /// Exit status for a run that stopped with this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse { .. } | Error::ConfigInvalid(_) | Error::InvalidSpec(_) | Error::Io(_) => 2,
            Error::NonConvergence { .. } => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub status: Status,
    pub exit_code: i32,
    pub config: ExperimentConfig,
    pub derived: Derived,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
}

impl RunReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Solver report without the nodal field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub name: String,
    pub energy: f64,
    pub residual_norm: f64,
    pub nehari_first: f64,
    pub nehari_second: f64,
    pub iterations: usize,
    pub eps_reg_final: f64,
    pub converged: bool,
    pub max_value: f64,
}

impl SolveSummary {
    pub fn of(name: &str, r: &SolverReport) -> Self {
        Self {
            name: name.into(),
            energy: r.energy,
            residual_norm: r.residual_norm,
            nehari_first: r.nehari_first,
            nehari_second: r.nehari_second,
            iterations: r.iterations,
            eps_reg_final: r.eps_reg_final,
            converged: r.converged,
            max_value: r.field.max_value(),
        }
    }
}

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header and rows, comma separated, LF terminated.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// `node,x,y,<name>...` for fields on one space.
pub fn write_fields_csv(path: &Path, space: &DiscreteSpace, fields: &[(&str, &Field)]) -> Result<()> {
    for (_, f) in fields {
        space.check(f)?;
    }
    let mut header = vec!["node", "x", "y"];
    header.extend(fields.iter().map(|(n, _)| *n));
    let rows: Vec<Vec<String>> = space
        .coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut row = vec![i.to_string(), fmt_f(c[0]), fmt_f(c[1])];
            row.extend(fields.iter().map(|(_, f)| fmt_f(f.values[i])));
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// `solver,iteration,energy,residual`.
pub fn write_trace_csv(path: &Path, runs: &[(&str, &SolverReport)]) -> Result<()> {
    let rows: Vec<Vec<String>> = runs
        .iter()
        .flat_map(|(name, r)| {
            r.trace
                .iter()
                .enumerate()
                .map(move |(k, t)| vec![name.to_string(), k.to_string(), fmt_f(t.energy), fmt_f(t.residual)])
        })
        .collect();
    write_csv(path, &["solver", "iteration", "energy", "residual"], &rows)
}

/// `lambda,converged,energy,barrier_eps`.
pub fn write_sweep_csv(path: &Path, sweep: &SweepReport) -> Result<()> {
    let rows: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .map(|r| vec![fmt_f(r.lambda), r.converged.to_string(), fmt_f(r.energy), fmt_f(r.barrier_eps)])
        .collect();
    write_csv(path, &["lambda", "converged", "energy", "barrier_eps"], &rows)
}

/// Reads one column of a fields CSV back into a field.
pub fn read_field_csv(path: &Path, column: Option<&str>, space: &DiscreteSpace) -> Result<Field> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| bad(path, "empty file"))?.split(',').collect();
    let col = match column {
        Some(name) => header.iter().position(|h| *h == name).ok_or_else(|| bad(path, &format!("no column {name}")))?,
        None if header.len() > 3 => header.len() - 1,
        None => return Err(bad(path, "no value column")),
    };
    let mut vals = Vec::new();
    for (k, line) in lines.enumerate() {
        let cell = line.split(',').nth(col).ok_or_else(|| bad(path, &format!("short row {}", k + 2)))?;
        let v: f64 = cell.trim().parse().map_err(|_| bad(path, &format!("bad number at row {}", k + 2)))?;
        vals.push(v);
    }
    let f = Field::new(vals);
    space.check(&f)?;
    Ok(f)
}

fn bad(path: &Path, msg: &str) -> Error {
    Error::ConfigInvalid(vec![format!("{}: {msg}", path.display())])
}

/// Pretty printer that writes floats as `{:.16e}`; non-finite values,
/// which JSON cannot carry, become `null`.
struct FixedDigits(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            write!(w, "{v:.16e}")
        } else {
            w.write_all(b"null")
        }
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json(path: &Path, report: &RunReport) -> Result<()> {
    fs::write(path, to_json_string(report)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_space;
    use crate::problem::DomainDescriptor;

    #[test]
    fn field_csv_round_trips_exactly() {
        let space = build_space(&DomainDescriptor::unit_square(), 2, 6).unwrap();
        let f = Field::new(space.coords.iter().map(|c| (c[0] * 3.1).sin() / 7.0 + c[1]).collect());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_fields_csv(&path, &space, &[("value", &f)]).unwrap();
        let back = read_field_csv(&path, None, &space).unwrap();
        assert_eq!(back, f);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("node,x,y,value\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn json_floats_have_seventeen_digits() {
        let s = to_json_string(&serde_json::json!({ "a": 0.1, "b": [1.0, f64::NAN], "c": 3 })).unwrap();
        assert!(s.contains("\"a\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("null"));
        assert!(s.contains("\"c\": 3"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn wrong_length_field_is_rejected() {
        let space = build_space(&DomainDescriptor::unit_interval(), 1, 10).unwrap();
        let other = build_space(&DomainDescriptor::unit_interval(), 1, 12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_fields_csv(&path, &other, &[("value", &other.zero_field())]).unwrap();
        assert!(matches!(read_field_csv(&path, None, &space), Err(Error::DimensionMismatch { .. })));
    }
}
