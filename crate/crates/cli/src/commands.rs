//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use mlfilter_core::layout::{area_ratio, export_svg, ml_layout_for_substrate, pcl_layout_on, FilterLayout};
use mlfilter_core::microstrip::{analyze_single, dielectric_q, synthesize_single};
use mlfilter_core::rfsim::{
    extract_metrics_in_band, sweep_coupling_matrix, sweep_pcl, LossOptions, PclNetwork, SParamResult, Sweep,
};

use crate::config::Config;
use crate::csv::write_csv;
use crate::design::{DesignDocument, TOOL};
use crate::error::{exit, CliError};
use crate::registry::{MaterialsRegistry, REGISTRY_ENV};
use crate::report::{self, CompareRow};
use crate::touchstone::{write_file, write_touchstone};

const AFTER_HELP: &str = "\
Config, design and materials files are TOML.

Exit codes:
  0   success, all requested files written
  1   file read or write failure
  2   invalid or unsatisfiable filter specification
  3   unknown material name
  4   dimension synthesis failure
  5   passband edges not resolved inside the sweep
  6   infeasible layout geometry
  7   malformed config, design or materials file
  8   numerical failure during simulation
  64  command-line usage error

Set MLFILTER_MATERIALS to a materials file to extend or override the built-in substrates.";

#[derive(Debug, Parser)]
#[command(name = "mlfilter", version, about = "Edge-coupled and multilayer hairpin microstrip bandpass filter design", after_help = AFTER_HELP)]
struct Cli {
    /// Materials file layered over the built-ins (overrides MLFILTER_MATERIALS).
    #[arg(long, global = true, value_name = "FILE")]
    materials: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Design impedances, equal mode velocities, lossless.
    Ideal,
    /// Coupled-line model of the synthesized dimensions with substrate loss.
    Physical,
    /// Coupled-resonator model of the multilayer hairpin filter.
    Ml,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Ideal => "ideal",
            Mode::Physical => "physical",
            Mode::Ml => "ml",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Pcl,
    Ml,
}

#[derive(Debug, Clone, Copy, clap::Args)]
struct SweepArgs {
    /// Sweep start, GHz.
    #[arg(long, default_value_t = 2.0)]
    f_start: f64,
    /// Sweep stop, GHz.
    #[arg(long, default_value_t = 3.0)]
    f_stop: f64,
    /// Number of frequency points.
    #[arg(long, default_value_t = 1001)]
    points: usize,
}

impl SweepArgs {
    fn sweep(&self) -> Result<Sweep, CliError> {
        Ok(Sweep::new(self.f_start, self.f_stop, self.points)?)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a design from a config file.
    Synth {
        config: PathBuf,
        /// Design file to write; defaults to <config stem>.design.toml.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Fixed timestamp (unix seconds or RFC 3339) for reproducible output.
        #[arg(long)]
        epoch: Option<String>,
    },
    /// Sweep a design and write Touchstone and CSV results.
    Simulate {
        /// Design file written by `synth`.
        design: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Ideal)]
        mode: Mode,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Drop substrate loss in physical and ml modes.
        #[arg(long)]
        lossless: bool,
        /// Resonator unloaded Q for ml mode instead of the substrate value.
        #[arg(long)]
        qu: Option<f64>,
        /// Output stem; `.s2p` and `.csv` are appended.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Fixed timestamp for the Touchstone header (unix seconds or RFC 3339).
        #[arg(long)]
        epoch: Option<String>,
    },
    /// Write the SVG layout of a design.
    Layout {
        /// Design file written by `synth`.
        design: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Pcl)]
        kind: Kind,
        /// Also report the multilayer to edge-coupled area ratio.
        #[arg(long)]
        compare: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Inspect the materials registry.
    Materials {
        #[command(subcommand)]
        action: MaterialsAction,
    },
    /// Synthesize and simulate a config on several substrates.
    Compare {
        config: PathBuf,
        /// Substrates to compare.
        #[arg(long, value_delimiter = ',', default_values_t = vec!["FR4".to_string(), "RO3003".to_string()])]
        substrates: Vec<String>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

#[derive(Debug, Subcommand)]
enum MaterialsAction {
    /// List known substrates.
    List,
}

/// Runs the CLI with `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    exit::OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    exit::USAGE
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn registry(path: Option<&Path>) -> Result<MaterialsRegistry, CliError> {
    match path {
        Some(p) => MaterialsRegistry::load(p),
        None => MaterialsRegistry::from_env(),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let materials = cli.materials.as_deref();
    match cli.command {
        Command::Synth { config, output, epoch } => synth(&config, output, epoch.as_deref(), materials, out),
        Command::Simulate { design, mode, sweep, lossless, qu, output, epoch } => {
            simulate(&design, mode, &sweep, lossless, qu, output, epoch.as_deref(), out)
        }
        Command::Layout { design, kind, compare, output } => layout(&design, kind, compare, output, out),
        Command::Materials { action: MaterialsAction::List } => list_materials(materials, out),
        Command::Compare { config, substrates, sweep } => compare(&config, &substrates, &sweep, materials, out),
    }
}

/// RFC 3339 timestamp from `--epoch`, or the current time.
pub fn timestamp(epoch: Option<&str>) -> Result<String, CliError> {
    let t: DateTime<Utc> = match epoch {
        None => Utc::now(),
        Some(s) => match s.parse::<i64>() {
            Ok(secs) => DateTime::from_timestamp(secs, 0)
                .ok_or_else(|| CliError::Usage(format!("epoch {secs} out of range")))?,
            Err(_) => DateTime::parse_from_rfc3339(s)
                .map_err(|e| CliError::Usage(format!("epoch '{s}': {e}")))?
                .with_timezone(&Utc),
        },
    };
    Ok(t.to_rfc3339_opts(SecondsFormat::Secs, true))
}

// `dir/name.design.toml` -> `dir/name`
fn stem(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let base = name.strip_suffix(".toml").unwrap_or(&name);
    let base = base.strip_suffix(".design").unwrap_or(base);
    path.with_file_name(base)
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn synth(
    config_path: &Path,
    output: Option<PathBuf>,
    epoch: Option<&str>,
    materials: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let config = Config::load(config_path)?;
    let reg = registry(materials)?;
    let s = DesignDocument::synthesize(&config, &reg, timestamp(epoch)?)?;
    let path = output.unwrap_or_else(|| with_suffix(&stem(config_path), ".design.toml"));
    write_file(&path, &s.design.to_toml())?;
    emit(out, &report::prototype_table(&s.design))?;
    emit(out, &report::coupling_table(&s.design))?;
    emit(out, &report::dimension_table(&s.design, &s.warnings))?;
    emit(out, &format!("wrote {}\n", path.display()))
}

/// Unloaded resonator Q from the substrate's dielectric loss on a line of
/// the system impedance.
pub fn substrate_qu(design: &DesignDocument) -> Result<Option<f64>, CliError> {
    let spec = design.filter_spec()?;
    let w = synthesize_single(spec.z0(), &design.substrate)?;
    let line = analyze_single(w, &design.substrate)?;
    Ok(dielectric_q(&design.substrate, line.eps_eff, spec.f0_ghz()))
}

pub fn simulate_design(
    design: &DesignDocument,
    mode: Mode,
    sweep: &Sweep,
    lossless: bool,
    qu: Option<f64>,
) -> Result<SParamResult, CliError> {
    let spec = design.filter_spec()?;
    let r = match mode {
        Mode::Ideal => sweep_pcl(&PclNetwork::ideal(&design.coupling, spec.f0_ghz())?, sweep)?,
        Mode::Physical => {
            let losses = LossOptions { dielectric: !lossless, conductor: !lossless };
            let net = PclNetwork::physical(&design.dims, &design.substrate, spec.z0(), losses)?;
            sweep_pcl(&net, sweep)?
        }
        Mode::Ml => {
            let qu = match (lossless, qu) {
                (true, _) => None,
                (false, Some(q)) => Some(q),
                (false, None) => substrate_qu(design)?,
            };
            let model = design.coupling_model()?.with_unloaded_q(qu);
            sweep_coupling_matrix(&model, sweep, spec.z0())?
        }
    };
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    design_path: &Path,
    mode: Mode,
    sweep: &SweepArgs,
    lossless: bool,
    qu: Option<f64>,
    output: Option<PathBuf>,
    epoch: Option<&str>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if let Some(q) = qu {
        if q.is_nan() || q <= 0.0 {
            return Err(CliError::Usage(format!("--qu must be positive, got {q}")));
        }
    }
    let design = DesignDocument::load(design_path)?;
    let spec = design.filter_spec()?;
    let r = simulate_design(&design, mode, &sweep.sweep()?, lossless, qu)?;
    let stem = output.unwrap_or_else(|| with_suffix(&stem(design_path), &format!("_{}", mode.name())));
    let comments = vec![
        TOOL.to_string(),
        format!("generated {}", timestamp(epoch)?),
        format!("design {} order {} on {}", design_path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default(), design.prototype.n, design.substrate.name),
        format!("mode {}{}", mode.name(), if lossless { " lossless" } else { "" }),
    ];
    let s2p = with_suffix(&stem, ".s2p");
    let csv = with_suffix(&stem, ".csv");
    write_file(&s2p, &write_touchstone(&r, &comments)?)?;
    write_file(&csv, &write_csv(&r))?;
    for w in &r.warnings {
        emit(out, &format!("warning: {:?} at {:.6} GHz\n", w.kind, w.f_ghz))?;
    }
    emit(out, &format!("wrote {} and {}\n", s2p.display(), csv.display()))?;
    let bm = extract_metrics_in_band(&r, spec.f_lower_ghz(), spec.f_upper_ghz())?;
    emit(out, &report::metrics_report(&bm, &spec))
}

pub fn build_layout(design: &DesignDocument, kind: Kind) -> Result<FilterLayout, CliError> {
    let spec = design.filter_spec()?;
    let sub = &design.substrate;
    Ok(match kind {
        Kind::Pcl => {
            let feed = synthesize_single(spec.z0(), sub)?;
            pcl_layout_on(&design.dims, feed, design.pcl.feed_length, sub)?
        }
        Kind::Ml => ml_layout_for_substrate(sub, spec.f0_ghz(), spec.z0(), &design.ml)?,
    })
}

fn layout(
    design_path: &Path,
    kind: Kind,
    compare: bool,
    output: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let design = DesignDocument::load(design_path)?;
    let main = build_layout(&design, kind)?;
    let name = match kind {
        Kind::Pcl => "pcl",
        Kind::Ml => "ml",
    };
    let path = output.unwrap_or_else(|| with_suffix(&stem(design_path), &format!("_{name}.svg")));
    write_file(&path, &export_svg(&main))?;
    emit(out, &format!("{}\n", report::size_line(name, &main)))?;
    if compare {
        let (ml, pcl) = match kind {
            Kind::Pcl => (build_layout(&design, Kind::Ml)?, main),
            Kind::Ml => {
                let pcl = build_layout(&design, Kind::Pcl)?;
                (main, pcl)
            }
        };
        let other = if kind == Kind::Pcl { ("ml", &ml) } else { ("pcl", &pcl) };
        emit(out, &format!("{}\n", report::size_line(other.0, other.1)))?;
        emit(out, &format!("area ratio ml/pcl {:.3}\n", area_ratio(&ml, &pcl)))?;
    }
    emit(out, &format!("wrote {}\n", path.display()))
}

fn list_materials(materials: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let reg = registry(materials)?;
    let mut text = format!("{:<12} {:>6} {:>8} {:>7} {:>7} {:>10}\n", "name", "eps_r", "tan_d", "h mm", "t mm", "sigma S/m");
    for s in reg.iter() {
        text.push_str(&format!(
            "{:<12} {:>6} {:>8} {:>7} {:>7} {:>10.3e}\n",
            s.name, s.eps_r, s.tan_d, s.h, s.t, s.conductivity
        ));
    }
    if let Some(p) = materials.map(Path::to_path_buf).or_else(|| std::env::var_os(REGISTRY_ENV).map(PathBuf::from)) {
        text.push_str(&format!("overrides from {}\n", p.display()));
    }
    emit(out, &text)
}

fn compare(
    config_path: &Path,
    substrates: &[String],
    sweep: &SweepArgs,
    materials: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let config = Config::load(config_path)?;
    let reg = registry(materials)?;
    let sweep = sweep.sweep()?;
    let mut rows = Vec::new();
    for name in substrates {
        let cfg = Config { substrate: name.clone(), ..config.clone() };
        let design = DesignDocument::synthesize(&cfg, &reg, String::new())?.design;
        let spec = design.filter_spec()?;
        for (kind, mode) in [(Kind::Pcl, Mode::Physical), (Kind::Ml, Mode::Ml)] {
            let r = simulate_design(&design, mode, &sweep, false, None)?;
            let metrics = extract_metrics_in_band(&r, spec.f_lower_ghz(), spec.f_upper_ghz())?;
            let size = build_layout(&design, kind)?.bounds;
            let kind = if kind == Kind::Pcl { "pcl" } else { "ml" };
            rows.push(CompareRow { substrate: design.substrate.name.clone(), kind, metrics, size });
        }
    }
    emit(out, &report::comparison_table(&rows))
}
