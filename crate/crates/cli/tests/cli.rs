use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mlfilter_cli::commands::{simulate_design, Mode};
use mlfilter_cli::design::DesignDocument;
use mlfilter_cli::touchstone::parse_touchstone;
use mlfilter_core::rfsim::Sweep;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn mlfilter(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mlfilter").chain(args.iter().copied());
    let code = mlfilter_cli::run(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn sample_config(dir: &TempDir, substrate: &str) -> PathBuf {
    let src = configs().join(format!("{}.toml", substrate.to_lowercase()));
    let dst = dir.path().join(format!("{}.toml", substrate.to_lowercase()));
    fs::copy(src, &dst).unwrap();
    dst
}

fn synth(dir: &TempDir, substrate: &str) -> PathBuf {
    let cfg = sample_config(dir, substrate);
    let r = mlfilter(&["synth", path_str(&cfg), "--epoch", "0"]);
    assert_eq!(r.code, 0, "{}", r.err);
    dir.path().join(format!("{}.design.toml", substrate.to_lowercase()))
}

fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert!(expected == actual, "{name} differs from golden copy");
}

const SPEC: &str = "[spec]\nf_lower_ghz = 2.52\nf_upper_ghz = 2.65\nripple_db = 0.01\nstop_freq_ghz = 2.77\nstop_atten_db = 25\n";

#[test]
fn synth_prints_design_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = sample_config(&dir, "FR4");
    let r = mlfilter(&["synth", path_str(&cfg), "--epoch", "0"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("order n = 4"));
    assert!(r.out.contains("0.3332    72.2119    38.8910"), "{}", r.out);
    let doc = DesignDocument::load(&dir.path().join("fr4.design.toml")).unwrap();
    assert_eq!(doc.dims.len(), 5);
    assert_eq!(doc.provenance.timestamp, "1970-01-01T00:00:00Z");
}

#[test]
fn outputs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let mut files = Vec::new();
    for dir in [&a, &b] {
        let design = synth(dir, "FR4");
        let d = path_str(&design);
        assert_eq!(mlfilter(&["simulate", d, "--epoch", "0", "--points", "401"]).code, 0);
        assert_eq!(mlfilter(&["layout", d, "--kind", "ml"]).code, 0);
        let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
        files.push([
            read("fr4.design.toml"),
            read("fr4_ideal.s2p"),
            read("fr4_ideal.csv"),
            read("fr4_ml.svg"),
        ]);
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn golden_touchstone_and_svg() {
    let dir = TempDir::new().unwrap();
    let design = synth(&dir, "FR4");
    let d = path_str(&design);
    let stem = dir.path().join("out");
    assert_eq!(mlfilter(&["simulate", d, "--epoch", "0", "-o", path_str(&stem)]).code, 0);
    let svg = dir.path().join("pcl.svg");
    assert_eq!(mlfilter(&["layout", d, "-o", path_str(&svg)]).code, 0);
    check_golden("fr4_ideal.s2p", &fs::read_to_string(dir.path().join("out.s2p")).unwrap());
    check_golden("fr4_pcl.svg", &fs::read_to_string(svg).unwrap());
}

#[test]
fn touchstone_round_trip() {
    let dir = TempDir::new().unwrap();
    let design_path = synth(&dir, "RO3003");
    let d = path_str(&design_path);
    let stem = dir.path().join("rt");
    assert_eq!(mlfilter(&["simulate", d, "--mode", "physical", "-o", path_str(&stem)]).code, 0);
    let text = fs::read_to_string(dir.path().join("rt.s2p")).unwrap();
    let parsed = parse_touchstone(&text, Path::new("rt.s2p")).unwrap();
    let design = DesignDocument::load(&design_path).unwrap();
    let direct = simulate_design(&design, Mode::Physical, &Sweep::default(), false, None).unwrap();
    assert_eq!(parsed.len(), direct.len());
    let mut worst = 0.0f64;
    for (p, q) in parsed.points.iter().zip(&direct.points) {
        for (a, b) in [(p.s11, q.s11), (p.s21, q.s21), (p.s12, q.s12), (p.s22, q.s22)] {
            worst = worst.max((a.re - b.re).abs()).max((a.im - b.im).abs());
        }
    }
    assert!(worst <= 1e-9, "{worst}");
    for (f, g) in parsed.frequencies.iter().zip(&direct.frequencies) {
        assert!((f - g).abs() <= 1e-9);
    }
}

#[test]
fn simulate_modes_report_metrics() {
    let dir = TempDir::new().unwrap();
    let d = synth(&dir, "FR4");
    let r = mlfilter(&["simulate", path_str(&d), "--mode", "ml", "--lossless"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("PASS S21 > -3 dB"));
    let csv = fs::read_to_string(dir.path().join("fr4_ml.csv")).unwrap();
    assert!(csv.starts_with("f_GHz,S11_dB,S11_deg,S21_dB,S21_deg\n"));
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn layout_compare_reports_ratio() {
    let dir = TempDir::new().unwrap();
    let d = synth(&dir, "FR4");
    let r = mlfilter(&["layout", path_str(&d), "--kind", "pcl", "--compare"]);
    assert_eq!(r.code, 0);
    let ratio: f64 = r
        .out
        .lines()
        .find_map(|l| l.strip_prefix("area ratio ml/pcl "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(ratio > 0.0 && ratio <= 0.65);
}

#[test]
fn compare_lists_both_substrates() {
    let dir = TempDir::new().unwrap();
    let cfg = sample_config(&dir, "FR4");
    let r = mlfilter(&["compare", path_str(&cfg), "--points", "601"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.lines().filter(|l| l.starts_with("FR4") || l.starts_with("RO3003")).count(), 4);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();

    let missing = mlfilter(&["synth", path_str(&dir.path().join("nope.toml"))]);
    assert_eq!(missing.code, 1);

    let inside = write(&dir, "inside.toml", &format!("substrate = \"FR4\"\n{}", SPEC.replace("2.77", "2.6")));
    assert_eq!(mlfilter(&["synth", path_str(&inside)]).code, 2);

    let unknown = write(&dir, "unknown.toml", &format!("substrate = \"Kapton\"\n{SPEC}"));
    let r = mlfilter(&["synth", path_str(&unknown)]);
    assert_eq!(r.code, 3);
    assert!(r.err.contains("FR4") && r.err.contains("RO3003"));

    let high_z = write(&dir, "high_z.toml", &format!("substrate = \"FR4\"\n{SPEC}z0 = 300.0\n"));
    let r = mlfilter(&["synth", path_str(&high_z)]);
    assert_eq!(r.code, 4, "{}", r.err);

    let design = synth(&dir, "FR4");
    let narrow = mlfilter(&["simulate", path_str(&design), "--f-start", "2.55", "--f-stop", "2.6"]);
    assert_eq!(narrow.code, 5);

    let tight = write(&dir, "tight.toml", &format!("substrate = \"FR4\"\n{SPEC}[ml]\narm_gap = 40.0\n"));
    assert_eq!(mlfilter(&["synth", path_str(&tight)]).code, 0);
    let r = mlfilter(&["layout", path_str(&dir.path().join("tight.design.toml")), "--kind", "ml"]);
    assert_eq!(r.code, 6, "{}", r.err);

    let garbled = write(&dir, "garbled.toml", "substrate = [");
    assert_eq!(mlfilter(&["synth", path_str(&garbled)]).code, 7);
    assert_eq!(mlfilter(&["simulate", path_str(&garbled)]).code, 7);

    assert_eq!(mlfilter(&["simulate", path_str(&design), "--mode", "bogus"]).code, 64);
    assert_eq!(mlfilter(&["simulate", path_str(&design), "--points", "1"]).code, 64);
    assert_eq!(mlfilter(&[]).code, 64);
    assert_eq!(mlfilter(&["--help"]).code, 0);
    assert!(mlfilter(&["--help"]).out.contains("Exit codes"));
    assert_eq!(mlfilter(&["--version"]).code, 0);
}

#[test]
fn materials_override_via_flag_and_env() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "m.toml", "[[material]]\nname = \"Alumina\"\neps_r = 9.8\ntan_d = 0.0001\nh = 0.635\n");
    let r = mlfilter(&["materials", "list", "--materials", path_str(&file)]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("Alumina") && r.out.contains("FR4"));

    let out = Command::new(env!("CARGO_BIN_EXE_mlfilter"))
        .args(["materials", "list"])
        .env("MLFILTER_MATERIALS", &file)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Alumina"));

    let cfg = write(&dir, "al.toml", &format!("substrate = \"alumina\"\n{SPEC}"));
    let out = Command::new(env!("CARGO_BIN_EXE_mlfilter"))
        .args(["synth", path_str(&cfg)])
        .env("MLFILTER_MATERIALS", &file)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
