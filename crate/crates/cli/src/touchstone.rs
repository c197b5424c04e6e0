//! Touchstone v1.1 two-port files, real/imaginary format.

use std::fmt::Write as _;
use std::path::Path;

use mlfilter_core::rfsim::{SMatrix2, SParamResult, C64};

use crate::error::CliError;

/// Fixed notation with 9 decimals in `[0.1, 1e6)`, scientific otherwise;
/// zero is written as `0`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (0.1..1e6).contains(&a) {
        format!("{v:.9}")
    } else {
        format!("{v:.9e}")
    }
}

/// Renders `r` with `comments` as leading `!` lines.
pub fn write_touchstone(r: &SParamResult, comments: &[String]) -> Result<String, CliError> {
    if r.is_empty() {
        return Err(CliError::Usage("no frequency points to write".into()));
    }
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "! {line}");
        }
    }
    let _ = writeln!(out, "# GHz S RI R {}", format_z0(r.z0));
    for (f, p) in r.frequencies.iter().zip(&r.points) {
        let fields = [p.s11, p.s21, p.s12, p.s22];
        let mut line = format_number(*f);
        for c in fields {
            line.push(' ');
            line.push_str(&format_number(c.re));
            line.push(' ');
            line.push_str(&format_number(c.im));
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn format_z0(z0: f64) -> String {
    if z0.fract() == 0.0 && z0.abs() < 1e15 {
        format!("{}", z0 as i64)
    } else {
        format!("{z0}")
    }
}

/// Reads a two-port RI file in GHz as written by [`write_touchstone`].
pub fn parse_touchstone(text: &str, origin: &Path) -> Result<SParamResult, CliError> {
    let bad = |m: String| CliError::parse(origin, m);
    let mut z0 = None;
    let mut freqs = Vec::new();
    let mut points = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(opts) = line.strip_prefix('#') {
            let t: Vec<String> = opts.split_whitespace().map(str::to_ascii_uppercase).collect();
            match t.as_slice() {
                [ghz, s, ri, r, z] if ghz == "GHZ" && s == "S" && ri == "RI" && r == "R" => {
                    z0 = Some(z.parse::<f64>().map_err(|_| bad(format!("line {}: bad reference impedance", no + 1)))?);
                }
                _ => return Err(bad(format!("line {}: unsupported option line '{line}'", no + 1))),
            }
            continue;
        }
        if z0.is_none() {
            return Err(bad(format!("line {}: data before option line", no + 1)));
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(format!("line {}: bad number '{t}'", no + 1))))
            .collect::<Result<_, _>>()?;
        if v.len() != 9 {
            return Err(bad(format!("line {}: expected 9 fields, found {}", no + 1, v.len())));
        }
        freqs.push(v[0]);
        points.push(SMatrix2 {
            s11: C64::new(v[1], v[2]),
            s21: C64::new(v[3], v[4]),
            s12: C64::new(v[5], v[6]),
            s22: C64::new(v[7], v[8]),
        });
    }
    let z0 = z0.ok_or_else(|| bad("missing option line".into()))?;
    SParamResult::new(freqs, points, z0).map_err(|e| bad(e.to_string()))
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::io(path, e))
}
