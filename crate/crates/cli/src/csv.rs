//! Magnitude/phase table for plotting.

use std::fmt::Write as _;

use mlfilter_core::rfsim::{db, SParamResult};

pub const HEADER: &str = "f_GHz,S11_dB,S11_deg,S21_dB,S21_deg";

pub fn write_csv(r: &SParamResult) -> String {
    let mut out = String::with_capacity(64 * (r.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for (f, p) in r.frequencies.iter().zip(&r.points) {
        let _ = writeln!(
            out,
            "{f:.9},{:.6},{:.4},{:.6},{:.4}",
            clamp_db(db(p.s11)),
            p.s11.arg().to_degrees(),
            clamp_db(db(p.s21)),
            p.s21.arg().to_degrees()
        );
    }
    out
}

// Exact zeros would print as -inf.
fn clamp_db(v: f64) -> f64 {
    v.max(-400.0)
}
