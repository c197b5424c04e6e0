//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary. Failures are reported but only change the exit
//! status when `ACCEPTANCE_STRICT=1`.

use std::fs;
use std::path::{Path, PathBuf};

use mlfilter_cli::commands::{build_layout, simulate_design, substrate_qu, Kind, Mode};
use mlfilter_cli::config::Config;
use mlfilter_cli::design::DesignDocument;
use mlfilter_cli::registry::MaterialsRegistry;
use mlfilter_cli::touchstone::parse_touchstone;
use mlfilter_core::coupling::{coupling_coefficients, CouplingDesign};
use mlfilter_core::layout::area_ratio;
use mlfilter_core::microstrip::{analyze_coupled, synthesize_coupled, CoupledSectionDims, Substrate};
use mlfilter_core::prototype::{g_values, required_order, FilterSpec};
use mlfilter_core::rfsim::*;
use num_complex::Complex64;

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id.to_string());
        }
    }
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn design_for(substrate: &str) -> DesignDocument {
    let cfg = Config::load(&repo().join(format!("configs/{}.toml", substrate.to_lowercase()))).unwrap();
    DesignDocument::synthesize(&cfg, &MaterialsRegistry::builtin(), "1970-01-01T00:00:00Z".into()).unwrap().design
}

fn reference_spec(atten: f64) -> FilterSpec {
    FilterSpec::new(2.52, 2.65, Some(2.58), 0.01, 2.77, atten, 50.0).unwrap()
}

// Lowest order whose Chebyshev response meets the stopband mask.
fn order_oracle(spec: &FilterSpec) -> usize {
    let am2 = 10f64.powf(spec.ripple_db() / 10.0) - 1.0;
    let f = spec.stop_freq_ghz();
    let omega = (spec.f0_ghz() / spec.bandwidth_ghz()) * (f / spec.f0_ghz() - spec.f0_ghz() / f);
    (1..40)
        .find(|&n| {
            let t = (n as f64 * omega.abs().acosh()).cosh();
            10.0 * (1.0 + am2 * t * t).log10() >= spec.stop_atten_db()
        })
        .unwrap()
}

fn criterion_1(r: &mut Report) {
    let p = g_values(4, 0.01).unwrap();
    let d = CouplingDesign::from_prototype(&p, 0.13 / 2.58, 50.0).unwrap();
    let j = [0.3332, 0.0855, 0.0628, 0.0856, 0.3332];
    let z = [(72.2092, 38.8915), (54.6432, 46.0886), (53.3393, 47.0556), (54.6435, 46.0884), (72.2092, 38.8915)];
    let mut worst_j = 0.0f64;
    let mut worst_z = 0.0f64;
    for (i, s) in d.sections.iter().enumerate() {
        worst_j = worst_j.max((s.j_over_y0 - j[i]).abs());
        worst_z = worst_z.max((s.z0e - z[i].0).abs()).max((s.z0o - z[i].1).abs());
    }
    r.check(
        "1 design table",
        worst_j <= 5e-4 && worst_z <= 0.02,
        format!("max |ΔJ/Y0| = {worst_j:.2e}, max |ΔZ| = {worst_z:.4} Ω"),
    );
}

fn criterion_2(r: &mut Report) {
    let n25 = required_order(&reference_spec(25.0)).unwrap();
    let s40 = reference_spec(40.0);
    let (n40, oracle) = (required_order(&s40).unwrap(), order_oracle(&s40));
    r.check(
        "2 filter order",
        n25 == 4 && n40 == 5 && oracle == 5,
        format!("n(25 dB) = {n25}, n(40 dB) = {n40}, oracle {oracle}"),
    );
}

fn criterion_3(r: &mut Report) {
    let g = g_values(4, 0.01).unwrap().g;
    let listed = [1.0, 0.7129, 1.2004, 1.3213, 0.6476, 1.1007];
    let worst = g.iter().zip(listed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.check("3 element values", worst <= 5e-4, format!("max |Δg| = {worst:.2e}"));
}

fn lcg(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn table_check(r: &mut Report, id: &str, sub: &Substrate, table: [(f64, f64, f64); 5]) {
    let d = design_for(&sub.name);
    let mut worst: f64 = 0.0;
    for (i, (dim, (w, l, s))) in d.dims.iter().zip(table).enumerate() {
        let dw = dim.w / w - 1.0;
        let dl = dim.l / l - 1.0;
        let ds = dim.s / s - 1.0;
        println!(
            "     section {i}: W {:.3}/{w} ({:+.1}%)  L {:.3}/{l} ({:+.1}%)  S {:.3}/{s} ({:+.1}%)",
            dim.w,
            dw * 100.0,
            dim.l,
            dl * 100.0,
            dim.s,
            ds * 100.0
        );
        worst = worst.max(dw.abs()).max(dl.abs()).max(ds.abs());
    }
    r.check(id, worst <= 0.15, format!("worst relative deviation {:.1}% (limit 15%)", worst * 100.0));
}

fn criterion_4(r: &mut Report) {
    let mut state = 0x5eed_u64;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let sub = if k % 2 == 0 { Substrate::fr4() } else { Substrate::ro3003() };
        let u = 0.1 * 100f64.powf(lcg(&mut state));
        let g = 0.1 * 100f64.powf(lcg(&mut state));
        let target = analyze_coupled(u * sub.h, g * sub.h, &sub).unwrap();
        let syn = synthesize_coupled(target.z0e, target.z0o, &sub).unwrap();
        let got = analyze_coupled(syn.w, syn.s, &sub).unwrap();
        worst = worst.max((got.z0e / target.z0e - 1.0).abs()).max((got.z0o / target.z0o - 1.0).abs());
    }
    r.check("4a synthesis round trip", worst <= 5e-3, format!("100 pairs, worst {:.2e} (limit 0.5%)", worst));
    table_check(
        r,
        "4b FR4 dimensions vs reference tables",
        &Substrate::fr4(),
        [
            (2.352, 16.528, 0.47708),
            (3.305, 16.073, 2.738),
            (3.331, 16.0557, 4.54),
            (3.305, 16.073, 2.738),
            (2.352, 16.528, 0.47708),
        ],
    );
    table_check(
        r,
        "4c RO3003 dimensions vs reference tables",
        &Substrate::ro3003(),
        [
            (1.543, 19.3057, 0.28032),
            (1.798, 18.7772, 1.2930),
            (1.995, 18.7625, 2.0327),
            (1.798, 18.7772, 1.2930),
            (1.543, 19.3057, 0.28032),
        ],
    );
}

fn criterion_5(r: &mut Report) {
    let d = design_for("FR4");
    let res = simulate_design(&d, Mode::Ideal, &Sweep::default(), true, None).unwrap();
    let bm = extract_metrics(&res).unwrap();
    let ok = bm.il_db >= -0.05 && (bm.f_c / 2.58 - 1.0).abs() <= 0.03 && (130.0..=260.0).contains(&bm.bw_3db);
    r.check(
        "5 ideal edge-coupled sweep",
        ok,
        format!("S21(f_c) {:.4} dB, f_c {:.4} GHz, BW {:.1} MHz", bm.il_db, bm.f_c, bm.bw_3db),
    );
}

fn criterion_6(r: &mut Report) {
    let f0 = (2.52f64 * 2.65).sqrt();
    let m = coupling_coefficients(&g_values(4, 0.01).unwrap(), 0.05038, f0).unwrap();
    let res = sweep_coupling_matrix(&m, &Sweep::default(), 50.0).unwrap();
    let (lo, hi) = level_band_edges(&res, 0.01).unwrap();
    let bw = (hi - lo) * 1e3;
    let s11 = res.s11_db();
    let minima = (1..s11.len() - 1)
        .filter(|&i| res.frequencies[i] >= lo && res.frequencies[i] <= hi)
        .filter(|&i| s11[i] < s11[i - 1] && s11[i] < s11[i + 1])
        .count();
    let am2 = 10f64.powf(0.001) - 1.0;
    let dev = res
        .frequencies
        .iter()
        .zip(&res.points)
        .map(|(f, p)| {
            let omega = (f / f0 - f0 / f) / 0.05038;
            let t = 8.0 * omega.powi(4) - 8.0 * omega.powi(2) + 1.0;
            (-db(p.s21) - 10.0 * (1.0 + am2 * t * t).log10()).abs()
        })
        .fold(0.0, f64::max);
    r.check(
        "6 coupled-resonator model",
        (bw / 130.0 - 1.0).abs() <= 0.02 && minima == 4 && dev <= 0.05,
        format!("ripple BW {bw:.2} MHz, {minima} reflection minima, max deviation from Chebyshev {dev:.2e} dB"),
    );
}

fn criterion_7(r: &mut Report) {
    let il = |sub: &str, mode: Mode| {
        let d = design_for(sub);
        let res = simulate_design(&d, mode, &Sweep::default(), false, None).unwrap();
        extract_metrics(&res).unwrap().il_db
    };
    let (pf, pr) = (il("FR4", Mode::Physical), il("RO3003", Mode::Physical));
    let (mf, mr) = (il("FR4", Mode::Ml), il("RO3003", Mode::Ml));
    let qf = substrate_qu(&design_for("FR4")).unwrap().unwrap();
    let qr = substrate_qu(&design_for("RO3003")).unwrap().unwrap();
    r.check(
        "7 loss ordering",
        pf < pr && mf < mr,
        format!(
            "edge-coupled S21 {pf:.3} (FR4) vs {pr:.3} (RO3003) dB; hairpin S21 {mf:.3} vs {mr:.3} dB (Qu {qf:.0} vs {qr:.0})"
        ),
    );
}

fn criterion_8(r: &mut Report) {
    let sweep = Sweep::default();
    let fr4 = design_for("FR4");
    let results = [
        simulate_design(&fr4, Mode::Ideal, &sweep, true, None).unwrap(),
        simulate_design(&fr4, Mode::Physical, &sweep, true, None).unwrap(),
        simulate_design(&fr4, Mode::Ml, &sweep, true, None).unwrap(),
    ];
    let reciprocal = results.iter().all(|res| res.points.iter().all(|p| p.s12 == p.s21));
    let unitarity = results
        .iter()
        .flat_map(|res| res.points.iter())
        .map(|p| (p.s11.norm_sqr() + p.s21.norm_sqr() - 1.0).abs().max((p.s22.norm_sqr() + p.s12.norm_sqr() - 1.0).abs()))
        .fold(0.0, f64::max);

    let mut state = 42u64;
    let mut det_err = 0.0f64;
    for _ in 0..100 {
        let f = 0.5 + 5.0 * lcg(&mut state);
        let dims = CoupledSectionDims { w: 1.0 + 2.0 * lcg(&mut state), s: 0.2 + 3.0 * lcg(&mut state), l: 16.0 };
        let mut mp = analyze_coupled(dims.w, dims.s, &Substrate::fr4()).unwrap();
        mp.alpha_e = lcg(&mut state);
        mp.alpha_o = lcg(&mut state);
        if let Ok(m) = coupled_section_twoport(&mp, dims.l, f) {
            det_err = det_err.max((m.determinant() - 1.0).norm());
        }
    }

    let mut assoc = 0.0f64;
    for _ in 0..100 {
        let mut mk = || {
            let c = |s: &mut u64| Complex64::new(0.5 + lcg(s), lcg(s) - 0.5);
            let (a, b, cc) = (c(&mut state), c(&mut state) * 50.0, c(&mut state) / 50.0);
            TwoPortAbcd { a, b, c: cc, d: (1.0 + b * cc) / a }
        };
        let (x, y, z) = (mk(), mk(), mk());
        let left = x.then(&y).then(&z);
        let right = x.then(&y.then(&z));
        for (p, q) in [(left.a, right.a), (left.b / 50.0, right.b / 50.0), (left.c * 50.0, right.c * 50.0), (left.d, right.d)] {
            assoc = assoc.max((p - q).norm() / (1.0 + p.norm()));
        }
    }
    r.check(
        "8 numerical invariants",
        reciprocal && unitarity <= 1e-9 && det_err <= 1e-9 && assoc <= 1e-12,
        format!("reciprocity exact: {reciprocal}, unitarity {unitarity:.1e}, |det-1| {det_err:.1e}, associativity {assoc:.1e}"),
    );
}

fn criterion_9(r: &mut Report) {
    let d = design_for("FR4");
    let pcl = build_layout(&d, Kind::Pcl).unwrap();
    let ml = build_layout(&d, Kind::Ml).unwrap();
    let within = |got: (f64, f64), want: (f64, f64), tol: f64| {
        (got.0 / want.0 - 1.0).abs() <= tol && (got.1 / want.1 - 1.0).abs() <= tol
    };
    let ratio = area_ratio(&ml, &pcl);
    let ok = within(pcl.bounds, (73.765, 27.506), 0.15) && within(ml.bounds, (38.66, 31.41), 0.20) && ratio <= 0.65;
    r.check(
        "9 layout sizes",
        ok,
        format!(
            "edge-coupled {:.2} x {:.2} mm, hairpin {:.2} x {:.2} mm, area ratio {ratio:.3}",
            pcl.bounds.0, pcl.bounds.1, ml.bounds.0, ml.bounds.1
        ),
    );
}

fn criterion_10(r: &mut Report) {
    let dir = tempfile::TempDir::new().unwrap();
    let cfg = dir.path().join("fr4.toml");
    fs::copy(repo().join("configs/fr4.toml"), &cfg).unwrap();
    let run = |args: &[&str]| {
        let argv = std::iter::once("mlfilter").chain(args.iter().copied());
        mlfilter_cli::run(argv, &mut Vec::new(), &mut Vec::new())
    };
    let design = dir.path().join("fr4.design.toml");
    let stem = dir.path().join("out");
    let svg = dir.path().join("pcl.svg");
    let codes = [
        run(&["synth", cfg.to_str().unwrap(), "--epoch", "0"]),
        run(&["simulate", design.to_str().unwrap(), "--epoch", "0", "-o", stem.to_str().unwrap()]),
        run(&["layout", design.to_str().unwrap(), "-o", svg.to_str().unwrap()]),
    ];
    let golden = |n: &str| fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(n)).unwrap_or_default();
    let s2p = fs::read(dir.path().join("out.s2p")).unwrap_or_default();
    let same_s2p = !s2p.is_empty() && s2p == golden("fr4_ideal.s2p");
    let same_svg = fs::read(&svg).map(|b| b == golden("fr4_pcl.svg")).unwrap_or(false);

    let doc = DesignDocument::load(&design).unwrap();
    let direct = simulate_design(&doc, Mode::Ideal, &Sweep::default(), false, None).unwrap();
    let parsed = parse_touchstone(&String::from_utf8_lossy(&s2p), Path::new("out.s2p")).unwrap();
    let err = parsed
        .points
        .iter()
        .zip(&direct.points)
        .flat_map(|(p, q)| [p.s11 - q.s11, p.s21 - q.s21, p.s12 - q.s12, p.s22 - q.s22])
        .map(|d| d.re.abs().max(d.im.abs()))
        .fold(0.0, f64::max);
    r.check(
        "10 file formats",
        codes.iter().all(|c| *c == 0) && same_s2p && same_svg && err <= 1e-9,
        format!("touchstone golden {same_s2p}, svg golden {same_svg}, round-trip error {err:.1e}"),
    );
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r);
    println!("acceptance: {} failed", r.failed.len());
    if !r.failed.is_empty() {
        println!("failed: {}", r.failed.join(", "));
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
