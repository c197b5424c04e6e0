//! Plain-text tables printed by the commands.

use std::fmt::Write as _;

use mlfilter_core::layout::FilterLayout;
use mlfilter_core::microstrip::SynthesisWarning;
use mlfilter_core::prototype::FilterSpec;
use mlfilter_core::rfsim::BandMetrics;

use crate::design::DesignDocument;

pub const IL_LIMIT_DB: f64 = -3.0;
pub const RL_LIMIT_DB: f64 = -20.0;

pub fn prototype_table(d: &DesignDocument) -> String {
    let mut out = String::new();
    let p = &d.prototype;
    let _ = writeln!(out, "order n = {}, ripple {} dB", p.n, p.ripple_db);
    let g: Vec<String> = p.g.iter().enumerate().map(|(i, g)| format!("g{i}={g:.4}")).collect();
    let _ = writeln!(out, "{}", g.join(" "));
    out
}

pub fn coupling_table(d: &DesignDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>4} {:>8} {:>10} {:>10}", "j", "J/Y0", "Z0e (Ω)", "Z0o (Ω)");
    for (i, s) in d.coupling.sections.iter().enumerate() {
        let _ = writeln!(out, "{:>4} {:>8.4} {:>10.4} {:>10.4}", format!("{i},{}", i + 1), s.j_over_y0, s.z0e, s.z0o);
    }
    out
}

pub fn dimension_table(d: &DesignDocument, warnings: &[(usize, SynthesisWarning)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "substrate {} (eps_r {}, h {} mm)", d.substrate.name, d.substrate.eps_r, d.substrate.h);
    let _ = writeln!(out, "{:>3} {:>8} {:>9} {:>8}", "n", "W (mm)", "L (mm)", "S (mm)");
    for (i, s) in d.dims.iter().enumerate() {
        let _ = writeln!(out, "{i:>3} {:>8.3} {:>9.3} {:>8.3}", s.w, s.l, s.s);
    }
    for (i, w) in warnings {
        let text = match w {
            SynthesisWarning::GapTooSmall { s } => format!("gap {s:.3} mm is below the fabrication floor"),
            SynthesisWarning::OutsideModelRange { w_over_h, s_over_h } => {
                format!("w/h {w_over_h:.3}, s/h {s_over_h:.3} outside the model's fitted range")
            }
        };
        let _ = writeln!(out, "warning: section {i}: {text}");
    }
    out
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn metrics_report(bm: &BandMetrics, spec: &FilterSpec) -> String {
    let mut out = String::new();
    let target_bw = spec.bandwidth_ghz() * 1e3;
    let _ = writeln!(out, "f_lower_3db {:.4} GHz", bm.f_lower_3db);
    let _ = writeln!(out, "f_upper_3db {:.4} GHz", bm.f_upper_3db);
    let _ = writeln!(out, "f_c         {:.4} GHz", bm.f_c);
    let _ = writeln!(out, "bw_3db      {:.2} MHz", bm.bw_3db);
    let _ = writeln!(out, "S21 at f_c  {:.3} dB", bm.il_db);
    let _ = writeln!(out, "S11 in band {:.3} dB", bm.rl_db);
    let _ = writeln!(out, "{} S21 > {IL_LIMIT_DB} dB", verdict(bm.il_db > IL_LIMIT_DB));
    let _ = writeln!(out, "{} S11 < {RL_LIMIT_DB} dB", verdict(bm.rl_db < RL_LIMIT_DB));
    let _ = writeln!(out, "{} BW >= {target_bw:.0} MHz", verdict(bm.bw_3db >= target_bw));
    out
}

pub fn size_line(label: &str, l: &FilterLayout) -> String {
    format!("{label}: {:.3} mm x {:.3} mm ({:.1} mm^2)", l.bounds.0, l.bounds.1, l.area())
}

pub struct CompareRow {
    pub substrate: String,
    pub kind: &'static str,
    pub metrics: BandMetrics,
    pub size: (f64, f64),
}

pub fn comparison_table(rows: &[CompareRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:<4} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>17}",
        "substrate", "kind", "f_L", "f_U", "f_c", "BW MHz", "S21 dB", "S11 dB", "size mm"
    );
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{:<10} {:<4} {:>9.4} {:>9.4} {:>9.4} {:>9.2} {:>9.3} {:>9.3} {:>17}",
            r.substrate,
            r.kind,
            m.f_lower_3db,
            m.f_upper_3db,
            m.f_c,
            m.bw_3db,
            m.il_db,
            m.rl_db,
            format!("{:.2} x {:.2}", r.size.0, r.size.1)
        );
    }
    out
}
