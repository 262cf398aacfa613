//! Line-oriented text format for [`WorkloadTrace`].
//!
//! ```text
//! # lookahead-trace v1
//! horizon,<H>
//! n_locations,<N>
//! series,<H>
//! t,cpu_0,...,cpu_{N-1},net
//! <H rows>
//! arrivals,<K>
//! arrival_time,location,work,data_size,sla_deadline
//! <K rows>
//! ```
//!
//! Floats use the shortest representation that parses back to the same
//! bits, so a write/read round trip is lossless.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use lookahead_core::workload::{compose, TaskArrival, WorkloadTrace};

use crate::error::{Error, Result};

pub const MAGIC: &str = "# lookahead-trace v1";
pub const ARRIVAL_COLUMNS: &str = "arrival_time,location,work,data_size,sla_deadline";

pub fn series_columns(n_locations: usize) -> String {
    let mut s = String::from("t");
    for i in 0..n_locations {
        let _ = write!(s, ",cpu_{i}");
    }
    s.push_str(",net");
    s
}

pub fn to_string(trace: &WorkloadTrace) -> String {
    let mut out = String::new();
    let n = trace.n_locations();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "horizon,{}", trace.horizon());
    let _ = writeln!(out, "n_locations,{n}");
    let _ = writeln!(out, "series,{}", trace.horizon());
    let _ = writeln!(out, "{}", series_columns(n));
    for t in 0..trace.horizon() {
        let _ = write!(out, "{t}");
        for v in trace.row(t) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "arrivals,{}", trace.arrivals().len());
    let _ = writeln!(out, "{ARRIVAL_COLUMNS}");
    for a in trace.arrivals() {
        let _ = writeln!(out, "{},{},{},{},{}", a.arrival_time, a.location, a.work, a.data_size, a.sla_deadline);
    }
    out
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { path: self.path.to_path_buf(), line: self.line, message: message.into() }
    }

    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim_end_matches('\r'))
            }
            None => {
                self.line += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    fn expect(&mut self, text: &str) -> Result<()> {
        let l = self.next()?;
        if l != text {
            return Err(self.err(format!("expected `{text}`, found `{l}`")));
        }
        Ok(())
    }

    fn keyed(&mut self, key: &str) -> Result<usize> {
        let l = self.next()?;
        match l.split_once(',') {
            Some((k, v)) if k == key => self.parse(v),
            _ => Err(self.err(format!("expected `{key},<count>`, found `{l}`"))),
        }
    }

    fn parse<T: FromStr>(&self, field: &str) -> Result<T> {
        field.parse().map_err(|_| self.err(format!("cannot parse `{field}`")))
    }

    fn fields(&mut self, n: usize) -> Result<Vec<&'a str>> {
        let l = self.next()?;
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != n {
            return Err(self.err(format!("expected {n} fields, found {}", f.len())));
        }
        Ok(f)
    }
}

pub fn from_str(text: &str, path: &Path) -> Result<WorkloadTrace> {
    let mut lines = Lines { path, inner: text.lines().enumerate(), line: 0 };
    lines.expect(MAGIC)?;
    let horizon = lines.keyed("horizon")?;
    let n = lines.keyed("n_locations")?;
    if lines.keyed("series")? != horizon {
        return Err(lines.err("series row count differs from horizon"));
    }
    lines.expect(&series_columns(n))?;
    let mut cpu = vec![Vec::with_capacity(horizon); n];
    let mut net = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let f = lines.fields(n + 2)?;
        if lines.parse::<usize>(f[0])? != t {
            return Err(lines.err(format!("expected timestep {t}")));
        }
        for (series, v) in cpu.iter_mut().zip(&f[1..=n]) {
            series.push(lines.parse(v)?);
        }
        net.push(lines.parse(f[n + 1])?);
    }
    let count = lines.keyed("arrivals")?;
    lines.expect(ARRIVAL_COLUMNS)?;
    let mut arrivals = Vec::with_capacity(count);
    for _ in 0..count {
        let f = lines.fields(5)?;
        arrivals.push(TaskArrival {
            arrival_time: lines.parse(f[0])?,
            location: lines.parse(f[1])?,
            work: lines.parse(f[2])?,
            data_size: lines.parse(f[3])?,
            sla_deadline: lines.parse(f[4])?,
        });
    }
    if let Some((i, l)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Parse { path: path.to_path_buf(), line: i + 1, message: format!("trailing content `{l}`") });
    }
    compose(cpu, net, arrivals).map_err(|e| Error::Format { path: path.to_path_buf(), message: e.to_string() })
}

pub fn read(path: &Path) -> Result<WorkloadTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text, path)
}
