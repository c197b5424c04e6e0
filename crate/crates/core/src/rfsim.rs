//! Circuit-level S-parameter engine.
//!
//! Two simulators share the [`SParamResult`] output: a chain-matrix cascade
//! of coupled-line sections for the edge-coupled filter, and an inline
//! coupled-resonator model for the multilayer hairpin filter.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::coupling::{CouplingDesign, CouplingMatrixModel};
use crate::microstrip::{
    analyze_coupled, conductor_loss, dielectric_loss, CoupledSectionDims, MicrostripError,
    ModeParams, Substrate,
};
use crate::{GHZ, SPEED_OF_LIGHT};

pub type C64 = Complex64;

const J: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RfError {
    #[error("electrical length is a multiple of π at {f_ghz} GHz")]
    SingularAngle { f_ghz: f64 },
    #[error("section has no coupling between its lines")]
    Decoupled,
    #[error("singular ABCD to S conversion at {f_ghz} GHz")]
    SingularConversion { f_ghz: f64 },
    #[error("singular coupling matrix at {f_ghz} GHz")]
    SingularMatrix { f_ghz: f64 },
    #[error("cascade needs at least one section")]
    EmptyCascade,
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no -{level_db} dB crossing {side} of the peak inside the sweep")]
    BandEdgeOutOfRange { side: &'static str, level_db: f64 },
    #[error("only {found} points inside the passband, need {needed}")]
    InsufficientResolution { found: usize, needed: usize },
    #[error(transparent)]
    Microstrip(#[from] MicrostripError),
}

/// Chain (ABCD) matrix. `b` in Ω, `c` in S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPortAbcd {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl TwoPortAbcd {
    pub fn identity() -> Self {
        Self { a: ONE, b: C64::new(0.0, 0.0), c: C64::new(0.0, 0.0), d: ONE }
    }

    pub fn series_impedance(z: C64) -> Self {
        Self { b: z, ..Self::identity() }
    }

    pub fn shunt_admittance(y: C64) -> Self {
        Self { c: y, ..Self::identity() }
    }

    /// This network followed by `next`.
    pub fn then(&self, next: &TwoPortAbcd) -> TwoPortAbcd {
        TwoPortAbcd {
            a: self.a * next.a + self.b * next.c,
            b: self.a * next.b + self.b * next.d,
            c: self.c * next.a + self.d * next.c,
            d: self.c * next.b + self.d * next.d,
        }
    }

    pub fn determinant(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    /// Same reciprocal network driven from the other port.
    pub fn reversed(&self) -> TwoPortAbcd {
        TwoPortAbcd { a: self.d, b: self.b, c: self.c, d: self.a }
    }

    /// Impedance seen at port 1 with port 2 terminated in `load`.
    pub fn input_impedance(&self, load: C64) -> C64 {
        (self.a * load + self.b) / (self.c * load + self.d)
    }
}

/// Two-port impedance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZParams2 {
    pub z11: C64,
    pub z12: C64,
    pub z21: C64,
    pub z22: C64,
}

impl ZParams2 {
    /// `None` when `z21` vanishes (no transmission path).
    pub fn to_abcd(&self) -> Option<TwoPortAbcd> {
        if self.z21.norm() <= 1e-12 * (self.z11.norm() + self.z22.norm() + 1.0) {
            return None;
        }
        let det = self.z11 * self.z22 - self.z12 * self.z21;
        Some(TwoPortAbcd {
            a: self.z11 / self.z21,
            b: det / self.z21,
            c: ONE / self.z21,
            d: self.z22 / self.z21,
        })
    }

    /// S-parameters with both ports referenced to real `z0`.
    pub fn to_s(&self, z0: f64) -> SMatrix2 {
        let z0 = C64::new(z0, 0.0);
        let den = (self.z11 + z0) * (self.z22 + z0) - self.z12 * self.z21;
        let s21 = 2.0 * self.z21 * z0 / den;
        SMatrix2 {
            s11: ((self.z11 - z0) * (self.z22 + z0) - self.z12 * self.z21) / den,
            s12: s21,
            s21,
            s22: ((self.z11 + z0) * (self.z22 - z0) - self.z12 * self.z21) / den,
        }
    }
}

/// Scattering matrix of a 2-port referenced to a common real impedance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix2 {
    pub s11: C64,
    pub s12: C64,
    pub s21: C64,
    pub s22: C64,
}

pub fn db(x: C64) -> f64 {
    20.0 * x.norm().log10()
}

/// Chain product of `sections` in order.
pub fn cascade(sections: &[TwoPortAbcd]) -> Result<TwoPortAbcd, RfError> {
    let (first, rest) = sections.split_first().ok_or(RfError::EmptyCascade)?;
    Ok(rest.iter().fold(*first, |acc, m| acc.then(m)))
}

/// Converts a chain matrix to S-parameters at reference impedance `z0`.
pub fn abcd_to_s(m: &TwoPortAbcd, z0: f64) -> Result<SMatrix2, RfError> {
    abcd_to_s_at(m, z0, f64::NAN)
}

fn abcd_to_s_at(m: &TwoPortAbcd, z0: f64, f_ghz: f64) -> Result<SMatrix2, RfError> {
    let bz = m.b / z0;
    let cz = m.c * z0;
    let den = m.a + bz + cz + m.d;
    if !(den.norm() > 1e-300) || !den.norm().is_finite() {
        return Err(RfError::SingularConversion { f_ghz });
    }
    let s21 = 2.0 / den;
    Ok(SMatrix2 {
        s11: (m.a + bz - cz - m.d) / den,
        s12: 2.0 * m.determinant() / den,
        s21,
        s22: (-m.a + bz - cz + m.d) / den,
    })
}

/// Complex electrical angle `(β - jα) l` of one propagation mode.
fn mode_angle(eps_eff: f64, alpha: f64, l_mm: f64, f_ghz: f64) -> C64 {
    let beta = 2.0 * std::f64::consts::PI * f_ghz * GHZ * eps_eff.sqrt() / SPEED_OF_LIGHT;
    C64::new(beta, -alpha) * (l_mm * 1e-3)
}

/// Four-port impedance matrix of a coupled pair of length `l_mm`.
///
/// Ports 1 and 2 are the near and far ends of the first line, ports 3 and 4
/// the near and far ends of the second.
pub fn coupled_line_z4(mp: &ModeParams, l_mm: f64, f_ghz: f64) -> Result<[[C64; 4]; 4], RfError> {
    let te = mode_angle(mp.eps_eff_e, mp.alpha_e, l_mm, f_ghz);
    let to = mode_angle(mp.eps_eff_o, mp.alpha_o, l_mm, f_ghz);
    let (se, so) = (te.sin(), to.sin());
    if se.norm() < 1e-9 || so.norm() < 1e-9 {
        return Err(RfError::SingularAngle { f_ghz });
    }
    let (cot_e, cot_o) = (te.cos() / se, to.cos() / so);
    let (csc_e, csc_o) = (ONE / se, ONE / so);
    let h = -0.5 * J;
    let self_term = h * (mp.z0e * cot_e + mp.z0o * cot_o);
    let through = h * (mp.z0e * csc_e + mp.z0o * csc_o);
    let near = h * (mp.z0e * cot_e - mp.z0o * cot_o);
    let far = h * (mp.z0e * csc_e - mp.z0o * csc_o);
    Ok([
        [self_term, through, near, far],
        [through, self_term, far, near],
        [near, far, self_term, through],
        [far, near, through, self_term],
    ])
}

/// Two-port impedance matrix of a bandpass section: driven at the near end
/// of one line, output at the far end of the other, remaining ends open.
pub fn coupled_section_z(mp: &ModeParams, l_mm: f64, f_ghz: f64) -> Result<ZParams2, RfError> {
    let z = coupled_line_z4(mp, l_mm, f_ghz)?;
    Ok(ZParams2 { z11: z[0][0], z12: z[0][3], z21: z[3][0], z22: z[3][3] })
}

/// Chain matrix of one bandpass coupled-line section.
pub fn coupled_section_twoport(
    mp: &ModeParams,
    l_mm: f64,
    f_ghz: f64,
) -> Result<TwoPortAbcd, RfError> {
    coupled_section_z(mp, l_mm, f_ghz)?.to_abcd().ok_or(RfError::Decoupled)
}

/// Linear frequency sweep in GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub f_start_ghz: f64,
    pub f_stop_ghz: f64,
    pub n_points: usize,
}

impl Default for Sweep {
    fn default() -> Self {
        Self { f_start_ghz: 2.0, f_stop_ghz: 3.0, n_points: 1001 }
    }
}

impl Sweep {
    pub fn new(f_start_ghz: f64, f_stop_ghz: f64, n_points: usize) -> Result<Self, RfError> {
        let sweep = Self { f_start_ghz, f_stop_ghz, n_points };
        sweep.validate()?;
        Ok(sweep)
    }

    fn validate(&self) -> Result<(), RfError> {
        if self.n_points < 2 {
            return Err(RfError::InvalidSweep(format!("need at least 2 points, got {}", self.n_points)));
        }
        if !(self.f_start_ghz > 0.0 && self.f_stop_ghz > self.f_start_ghz && self.f_stop_ghz.is_finite()) {
            return Err(RfError::InvalidSweep(format!(
                "need 0 < start < stop, got {} .. {}",
                self.f_start_ghz, self.f_stop_ghz
            )));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let last = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                if i + 1 == self.n_points {
                    self.f_stop_ghz
                } else {
                    self.f_start_ghz + (self.f_stop_ghz - self.f_start_ghz) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WarningKind {
    /// Evaluated 1 ppm away from a singular frequency.
    Nudged,
    /// A section or resonator chain carried no coupling.
    Decoupled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepWarning {
    pub f_ghz: f64,
    pub kind: WarningKind,
}

/// Two-port response versus frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SParamResult {
    pub frequencies: Vec<f64>,
    pub points: Vec<SMatrix2>,
    pub z0: f64,
    pub warnings: Vec<SweepWarning>,
}

impl SParamResult {
    pub fn new(frequencies: Vec<f64>, points: Vec<SMatrix2>, z0: f64) -> Result<Self, RfError> {
        if frequencies.len() != points.len() {
            return Err(RfError::InvalidSweep("frequency and data lengths differ".into()));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(RfError::InvalidSweep("frequencies must be strictly increasing".into()));
        }
        Ok(Self { frequencies, points, z0, warnings: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn s21_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| db(p.s21)).collect()
    }

    pub fn s11_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| db(p.s11)).collect()
    }
}

/// Which losses a physical coupled-line network includes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossOptions {
    pub dielectric: bool,
    pub conductor: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct PclSection {
    mode: ModeParams,
    length_mm: f64,
    width_mm: Option<f64>,
}

/// Cascade of coupled-line sections forming an edge-coupled filter.
#[derive(Debug, Clone, PartialEq)]
pub struct PclNetwork {
    sections: Vec<PclSection>,
    z0: f64,
    substrate: Option<Substrate>,
    losses: LossOptions,
}

impl PclNetwork {
    /// Ideal network: design impedances, equal mode velocities, quarter-wave
    /// sections at `f0_ghz`, no loss.
    pub fn ideal(design: &CouplingDesign, f0_ghz: f64) -> Result<Self, RfError> {
        if design.sections.is_empty() {
            return Err(RfError::EmptyCascade);
        }
        if !(f0_ghz > 0.0) {
            return Err(RfError::InvalidModel(format!("centre frequency {f0_ghz} GHz")));
        }
        let length_mm = SPEED_OF_LIGHT / (4.0 * f0_ghz * GHZ) * 1e3;
        let sections = design
            .sections
            .iter()
            .map(|s| PclSection { mode: ModeParams::ideal(s.z0e, s.z0o, 1.0), length_mm, width_mm: None })
            .collect();
        Ok(Self { sections, z0: design.z0, substrate: None, losses: LossOptions::default() })
    }

    /// Physical network: mode parameters from the coupled-line model of
    /// each section's dimensions.
    pub fn physical(
        dims: &[CoupledSectionDims],
        substrate: &Substrate,
        z0: f64,
        losses: LossOptions,
    ) -> Result<Self, RfError> {
        if dims.is_empty() {
            return Err(RfError::EmptyCascade);
        }
        let sections = dims
            .iter()
            .map(|d| {
                if !(d.l > 0.0) {
                    return Err(RfError::InvalidModel(format!("section length {}", d.l)));
                }
                Ok(PclSection {
                    mode: analyze_coupled(d.w, d.s, substrate)?,
                    length_mm: d.l,
                    width_mm: Some(d.w),
                })
            })
            .collect::<Result<Vec<_>, RfError>>()?;
        Ok(Self { sections, z0, substrate: Some(substrate.clone()), losses })
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    fn section_params(&self, section: &PclSection, f_ghz: f64) -> ModeParams {
        let mut mp = section.mode;
        if let Some(sub) = &self.substrate {
            if self.losses.dielectric {
                mp.alpha_e += dielectric_loss(sub, mp.eps_eff_e, f_ghz);
                mp.alpha_o += dielectric_loss(sub, mp.eps_eff_o, f_ghz);
            }
            if let (true, Some(w)) = (self.losses.conductor, section.width_mm) {
                mp.alpha_e += conductor_loss(sub, mp.z0e, w, f_ghz);
                mp.alpha_o += conductor_loss(sub, mp.z0o, w, f_ghz);
            }
        }
        mp
    }

    fn section_z(&self, f_ghz: f64) -> Result<Vec<ZParams2>, RfError> {
        self.sections
            .iter()
            .map(|s| coupled_section_z(&self.section_params(s, f_ghz), s.length_mm, f_ghz))
            .collect()
    }

    fn evaluate(&self, f_ghz: f64) -> Result<(SMatrix2, Option<WarningKind>), RfError> {
        let mut warning = None;
        let zs = match self.section_z(f_ghz) {
            Ok(z) => z,
            Err(RfError::SingularAngle { .. }) => {
                warning = Some(WarningKind::Nudged);
                self.section_z(f_ghz * (1.0 + NUDGE))
                    .or_else(|_| self.section_z(f_ghz * (1.0 - NUDGE)))?
            }
            Err(e) => return Err(e),
        };
        let chain: Option<Vec<TwoPortAbcd>> = zs.iter().map(ZParams2::to_abcd).collect();
        match chain {
            Some(chain) => {
                let mut s = abcd_to_s_at(&cascade(&chain)?, self.z0, f_ghz)?;
                // Coupled-line sections are reciprocal.
                s.s12 = s.s21;
                Ok((s, warning))
            }
            None => Ok((open_chain_s(&zs, self.z0), Some(WarningKind::Decoupled))),
        }
    }
}

// S-parameters when at least one section has no transmission path: each
// port sees the sections up to the first break, terminated by that
// section's open-circuit input impedance.
fn open_chain_s(zs: &[ZParams2], z0: f64) -> SMatrix2 {
    let gamma = |z: C64| (z - z0) / (z + z0);
    let first = zs.iter().position(|z| z.to_abcd().is_none()).unwrap_or(0);
    let last = zs.iter().rposition(|z| z.to_abcd().is_none()).unwrap_or(0);

    let mut z_left = zs[first].z11;
    for z in zs[..first].iter().rev() {
        z_left = z.to_abcd().map_or(z.z11, |m| m.input_impedance(z_left));
    }
    let mut z_right = zs[last].z22;
    for z in &zs[last + 1..] {
        z_right = z.to_abcd().map_or(z.z22, |m| m.reversed().input_impedance(z_right));
    }
    let zero = C64::new(0.0, 0.0);
    SMatrix2 { s11: gamma(z_left), s12: zero, s21: zero, s22: gamma(z_right) }
}

fn run_sweep<F>(sweep: &Sweep, z0: f64, eval: F) -> Result<SParamResult, RfError>
where
    F: Fn(f64) -> Result<(SMatrix2, Option<WarningKind>), RfError> + Sync,
{
    sweep.validate()?;
    let freqs = sweep.frequencies();
    let evaluated = freqs
        .par_iter()
        .map(|&f| eval(f))
        .collect::<Result<Vec<_>, RfError>>()?;
    let mut warnings = Vec::new();
    let mut points = Vec::with_capacity(evaluated.len());
    for (&f, (s, w)) in freqs.iter().zip(evaluated) {
        if let Some(kind) = w {
            warnings.push(SweepWarning { f_ghz: f, kind });
        }
        points.push(s);
    }
    let mut result = SParamResult::new(freqs, points, z0)?;
    result.warnings = warnings;
    Ok(result)
}

/// Frequency sweep of an edge-coupled network.
pub fn sweep_pcl(network: &PclNetwork, sweep: &Sweep) -> Result<SParamResult, RfError> {
    run_sweep(sweep, network.z0, |f| network.evaluate(f))
}

fn validate_model(model: &CouplingMatrixModel) -> Result<(), RfError> {
    let bad = |m: String| Err(RfError::InvalidModel(m));
    if model.n == 0 || model.k.len() + 1 != model.n {
        return bad(format!("order {} with {} couplings", model.n, model.k.len()));
    }
    if model.k.iter().any(|k| !(*k > 0.0)) {
        return bad("couplings must be positive".into());
    }
    if !(model.qe_in > 0.0 && model.qe_out > 0.0) {
        return bad("external Q must be positive".into());
    }
    if !(model.fbw > 0.0 && model.fbw < 1.0 && model.f0_ghz > 0.0) {
        return bad("centre frequency and bandwidth must be positive".into());
    }
    if let Some(qu) = model.qu {
        if !(qu > 0.0) {
            return bad(format!("unloaded Q {qu}"));
        }
    }
    Ok(())
}

/// Response of the inline coupled-resonator model at one frequency.
///
/// Normalization: with `p = jΩ`, `Ω = (f/f0 - f0/f) / FBW`, the network
/// matrix is `A = diag(p + 1/(FBW Qu)) - j m + diag(1/q_in, 0.., 1/q_out)`
/// where `m_{i,i+1} = k_{i,i+1}/FBW` and `q = Qe FBW`. Then
/// `S21 = 2 [A^-1]_{n1} / sqrt(q_in q_out)` and `S11 = 1 - 2 [A^-1]_{11} / q_in`.
fn coupling_matrix_point(model: &CouplingMatrixModel, f_ghz: f64) -> Result<SMatrix2, RfError> {
    let n = model.n;
    let fbw = model.fbw;
    let omega = (f_ghz / model.f0_ghz - model.f0_ghz / f_ghz) / fbw;
    let loss = model.qu.map_or(0.0, |qu| 1.0 / (fbw * qu));
    let q_in = model.qe_in * fbw;
    let q_out = model.qe_out * fbw;

    let mut a = DMatrix::<C64>::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        a[(i, i)] = C64::new(loss, omega);
    }
    for (i, k) in model.k.iter().enumerate() {
        let m = -J * (k / fbw);
        a[(i, i + 1)] = m;
        a[(i + 1, i)] = m;
    }
    a[(0, 0)] += 1.0 / q_in;
    a[(n - 1, n - 1)] += 1.0 / q_out;

    let lu = a.lu();
    let mut e1 = DVector::<C64>::zeros(n);
    e1[0] = ONE;
    let mut en = DVector::<C64>::zeros(n);
    en[n - 1] = ONE;
    let singular = || RfError::SingularMatrix { f_ghz };
    let col1 = lu.solve(&e1).ok_or_else(singular)?;
    let coln = lu.solve(&en).ok_or_else(singular)?;
    if col1.iter().chain(coln.iter()).any(|v| !v.norm().is_finite()) {
        return Err(singular());
    }

    let s21 = 2.0 * col1[n - 1] / (q_in * q_out).sqrt();
    Ok(SMatrix2 {
        s11: ONE - 2.0 * col1[0] / q_in,
        s12: s21,
        s21,
        s22: ONE - 2.0 * coln[n - 1] / q_out,
    })
}

/// Frequency sweep of the coupled-resonator model.
pub fn sweep_coupling_matrix(
    model: &CouplingMatrixModel,
    sweep: &Sweep,
    z0: f64,
) -> Result<SParamResult, RfError> {
    validate_model(model)?;
    run_sweep(sweep, z0, |f| match coupling_matrix_point(model, f) {
        Ok(s) => Ok((s, None)),
        Err(RfError::SingularMatrix { .. }) => {
            let s = coupling_matrix_point(model, f * (1.0 + NUDGE))?;
            Ok((s, Some(WarningKind::Nudged)))
        }
        Err(e) => Err(e),
    })
}

/// Passband summary of a response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandMetrics {
    /// Centre of the -3 dB band, GHz.
    pub f_c: f64,
    /// -3 dB bandwidth, MHz.
    pub bw_3db: f64,
    /// Transmission at `f_c`, dB.
    pub il_db: f64,
    /// Worst reflection inside the evaluation band, dB.
    pub rl_db: f64,
    pub f_lower_3db: f64,
    pub f_upper_3db: f64,
    /// Peak transmission, dB.
    pub peak_db: f64,
}

const MIN_INBAND_POINTS: usize = 50;

fn crossing(f: &[f64], y: &[f64], i: usize, j: usize, level: f64) -> f64 {
    let t = (level - y[i]) / (y[j] - y[i]);
    f[i] + t * (f[j] - f[i])
}

fn interpolate(f: &[f64], y: &[f64], at: f64) -> f64 {
    let idx = f.partition_point(|x| *x <= at).clamp(1, f.len() - 1);
    let (i, j) = (idx - 1, idx);
    y[i] + (y[j] - y[i]) * (at - f[i]) / (f[j] - f[i])
}

/// Band edges where transmission falls `drop_db` below its peak, searching
/// outward from the peak with linear interpolation.
pub fn band_edges_below_peak(r: &SParamResult, drop_db: f64) -> Result<(f64, f64), RfError> {
    let s21 = r.s21_db();
    let f = &r.frequencies;
    let peak = s21
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best });
    let level = peak.1 - drop_db;
    let out = |side| RfError::BandEdgeOutOfRange { side, level_db: drop_db };

    let lo = (0..peak.0).rev().find(|&i| s21[i] < level).ok_or(out("below"))?;
    let hi = (peak.0 + 1..s21.len()).find(|&i| s21[i] < level).ok_or(out("above"))?;
    Ok((crossing(f, &s21, lo, lo + 1, level), crossing(f, &s21, hi - 1, hi, level)))
}

/// Outermost frequencies where transmission is within `level_db` of 0 dB,
/// e.g. the ripple-level band of a lossless Chebyshev response.
pub fn level_band_edges(r: &SParamResult, level_db: f64) -> Result<(f64, f64), RfError> {
    let s21 = r.s21_db();
    let f = &r.frequencies;
    let level = -level_db - 1e-9;
    let out = |side| RfError::BandEdgeOutOfRange { side, level_db };
    let first = s21.iter().position(|v| *v >= level).ok_or(out("below"))?;
    let last = s21.iter().rposition(|v| *v >= level).ok_or(out("above"))?;
    if first == 0 {
        return Err(out("below"));
    }
    if last + 1 == s21.len() {
        return Err(out("above"));
    }
    Ok((crossing(f, &s21, first - 1, first, level), crossing(f, &s21, last, last + 1, level)))
}

/// Metrics with the return loss taken over the central half of the -3 dB
/// band.
pub fn extract_metrics(r: &SParamResult) -> Result<BandMetrics, RfError> {
    metrics(r, None)
}

/// Metrics with the return loss taken over `[f_lo_ghz, f_hi_ghz]`, usually
/// the specified passband.
pub fn extract_metrics_in_band(
    r: &SParamResult,
    f_lo_ghz: f64,
    f_hi_ghz: f64,
) -> Result<BandMetrics, RfError> {
    metrics(r, Some((f_lo_ghz, f_hi_ghz)))
}

fn metrics(r: &SParamResult, band: Option<(f64, f64)>) -> Result<BandMetrics, RfError> {
    if r.len() < 3 {
        return Err(RfError::InsufficientResolution { found: r.len(), needed: MIN_INBAND_POINTS });
    }
    let (f_lower_3db, f_upper_3db) = band_edges_below_peak(r, 3.0)?;
    let f = &r.frequencies;
    let inside = f.iter().filter(|x| **x >= f_lower_3db && **x <= f_upper_3db).count();
    if inside < MIN_INBAND_POINTS {
        return Err(RfError::InsufficientResolution { found: inside, needed: MIN_INBAND_POINTS });
    }
    let s21 = r.s21_db();
    let s11 = r.s11_db();
    let f_c = 0.5 * (f_lower_3db + f_upper_3db);
    let quarter = 0.25 * (f_upper_3db - f_lower_3db);
    let (lo, hi) = band.unwrap_or((f_c - quarter, f_c + quarter));
    let rl_db = f
        .iter()
        .zip(&s11)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BandMetrics {
        f_c,
        bw_3db: (f_upper_3db - f_lower_3db) * 1e3,
        il_db: interpolate(f, &s21, f_c),
        rl_db,
        f_lower_3db,
        f_upper_3db,
        peak_db: s21.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::coupling_coefficients;
    use crate::prototype::g_values;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_to_s() {
        let s = abcd_to_s(&TwoPortAbcd::identity(), 50.0).unwrap();
        assert!((s.s21 - ONE).norm() < 1e-15);
        assert!(s.s11.norm() < 1e-15);
    }

    #[test]
    fn series_resistor_to_s() {
        let s = abcd_to_s(&TwoPortAbcd::series_impedance(c(50.0, 0.0)), 50.0).unwrap();
        assert!((s.s11 - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        // Mesh solve: source 2 V behind 50 Ω, 50 Ω series, 50 Ω load.
        let i = 2.0 / 150.0;
        let v2 = i * 50.0;
        assert!((s.s21.re - v2).abs() < 1e-15);
    }

    #[test]
    fn singular_conversion_reported() {
        let zero = C64::new(0.0, 0.0);
        let m = TwoPortAbcd { a: zero, b: zero, c: zero, d: zero };
        assert!(matches!(abcd_to_s(&m, 50.0), Err(RfError::SingularConversion { .. })));
    }

    #[test]
    fn cascade_edge_cases() {
        assert_eq!(cascade(&[]), Err(RfError::EmptyCascade));
        let m = TwoPortAbcd::series_impedance(c(3.0, 4.0));
        assert_eq!(cascade(&[m]).unwrap(), m);
    }

    #[test]
    fn section_then_reverse_is_symmetric() {
        let mp = ModeParams { alpha_e: 0.3, alpha_o: 0.5, ..ModeParams::ideal(70.0, 40.0, 3.0) };
        let m = coupled_section_twoport(&mp, 15.0, 2.4).unwrap();
        let asym = m.then(&TwoPortAbcd::shunt_admittance(c(0.0, 0.01)));
        let net = asym.then(&asym.reversed());
        let s = abcd_to_s(&net, 50.0).unwrap();
        assert!((s.s11 - s.s22).norm() < 1e-12);
    }

    #[test]
    fn decoupled_section() {
        let mp = ModeParams::ideal(50.0, 50.0, 3.0);
        for f in [1.0, 2.2, 3.7] {
            let z = coupled_section_z(&mp, 16.0, f).unwrap();
            assert!(z.to_s(50.0).s21.norm() < 1e-15);
            assert_eq!(coupled_section_twoport(&mp, 16.0, f), Err(RfError::Decoupled));
        }
    }

    #[test]
    fn quarter_wave_image_impedance() {
        // At θ = 90° the section reduces to an inverter of impedance (Ze-Zo)/2.
        let mp = ModeParams::ideal(72.21, 38.89, 1.0);
        let l = SPEED_OF_LIGHT / (4.0 * 2.58e9) * 1e3;
        let m = coupled_section_twoport(&mp, l, 2.58).unwrap();
        let zi = (m.b / m.c).sqrt();
        assert!((zi.norm() - 16.66).abs() < 0.01, "{zi}");
        assert!(m.a.norm() < 1e-9 && m.d.norm() < 1e-9);
    }

    #[test]
    fn singular_angle_detected() {
        let mp = ModeParams::ideal(70.0, 40.0, 1.0);
        let l = SPEED_OF_LIGHT / (2.0 * 2.58e9) * 1e3;
        assert!(matches!(coupled_section_z(&mp, l, 2.58), Err(RfError::SingularAngle { .. })));
    }

    #[test]
    fn sweep_rejects_bad_input() {
        assert!(Sweep::new(2.0, 3.0, 1).is_err());
        assert!(Sweep::new(3.0, 2.0, 10).is_err());
        let f = Sweep::new(1.0, 2.0, 11).unwrap().frequencies();
        assert_eq!(f.len(), 11);
        assert_eq!(f[10], 2.0);
    }

    #[test]
    fn result_rejects_unsorted() {
        let p = abcd_to_s(&TwoPortAbcd::identity(), 50.0).unwrap();
        assert!(SParamResult::new(vec![2.0, 1.0], vec![p, p], 50.0).is_err());
        assert!(SParamResult::new(vec![1.0], vec![p, p], 50.0).is_err());
    }

    #[test]
    fn ideal_pcl_nudges_at_harmonic() {
        let p = g_values(4, 0.01).unwrap();
        let d = CouplingDesign::from_prototype(&p, 0.13 / 2.58, 50.0).unwrap();
        let net = PclNetwork::ideal(&d, 2.58).unwrap();
        let r = sweep_pcl(&net, &Sweep::new(4.16, 6.16, 11).unwrap()).unwrap();
        assert!(r.warnings.iter().any(|w| w.kind == WarningKind::Nudged && (w.f_ghz - 5.16).abs() < 1e-9));
    }

    #[test]
    fn degenerate_pcl_blocks_transmission() {
        let p = g_values(4, 0.01).unwrap();
        let mut d = CouplingDesign::from_prototype(&p, 0.05, 50.0).unwrap();
        for s in &mut d.sections {
            s.j_over_y0 = 0.0;
            s.z0e = 50.0;
            s.z0o = 50.0;
        }
        let net = PclNetwork::ideal(&d, 2.58).unwrap();
        let r = sweep_pcl(&net, &Sweep::default()).unwrap();
        assert!(r.points.iter().all(|p| p.s21.norm() == 0.0));
        assert!(r.points.iter().all(|p| (p.s11.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn coupling_matrix_loss_monotone() {
        let p = g_values(4, 0.01).unwrap();
        let m = coupling_coefficients(&p, 0.13 / 2.5842, 2.5842).unwrap();
        let sweep = Sweep::new(2.5842, 2.6, 2).unwrap();
        let il = |qu: Option<f64>| {
            let r = sweep_coupling_matrix(&m.clone().with_unloaded_q(qu), &sweep, 50.0).unwrap();
            db(r.points[0].s21)
        };
        let mut prev = il(None);
        for qu in [2000.0, 500.0, 200.0, 50.0, 20.0] {
            let v = il(Some(qu));
            assert!(v < prev, "qu={qu}");
            prev = v;
        }
    }

    #[test]
    fn coupling_matrix_centre_is_lossless() {
        let p = g_values(4, 0.01).unwrap();
        let m = coupling_coefficients(&p, 0.05, 2.58).unwrap();
        let r = sweep_coupling_matrix(&m, &Sweep::new(2.57, 2.58, 2).unwrap(), 50.0).unwrap();
        let s = r.points[1];
        assert!((s.s11.norm_sqr() + s.s21.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_validation() {
        let p = g_values(3, 0.1).unwrap();
        let mut m = coupling_coefficients(&p, 0.05, 2.0).unwrap();
        m.k.pop();
        assert!(matches!(
            sweep_coupling_matrix(&m, &Sweep::default(), 50.0),
            Err(RfError::InvalidModel(_))
        ));
    }

    #[test]
    fn metrics_need_a_passband() {
        let p = abcd_to_s(&TwoPortAbcd::series_impedance(c(10.0, 0.0)), 50.0).unwrap();
        let f: Vec<f64> = (0..200).map(|i| 1.0 + i as f64 * 0.01).collect();
        let pts: Vec<SMatrix2> = f
            .iter()
            .map(|x| abcd_to_s(&TwoPortAbcd::series_impedance(c(0.0, 20.0 * x)), 50.0).unwrap())
            .collect();
        let r = SParamResult::new(f, pts, 50.0).unwrap();
        assert!(matches!(extract_metrics(&r), Err(RfError::BandEdgeOutOfRange { .. })));
        let flat = SParamResult::new(vec![1.0, 2.0, 3.0], vec![p; 3], 50.0).unwrap();
        assert!(extract_metrics(&flat).is_err());
    }

    #[test]
    fn metrics_of_ideal_coupling_matrix() {
        let p = g_values(4, 0.01).unwrap();
        let f0 = (2.52f64 * 2.65).sqrt();
        let m = coupling_coefficients(&p, 0.13 / f0, f0).unwrap();
        let r = sweep_coupling_matrix(&m, &Sweep::default(), 50.0).unwrap();
        let bm = extract_metrics_in_band(&r, 2.52, 2.65).unwrap();
        assert!(bm.f_lower_3db < bm.f_c && bm.f_c < bm.f_upper_3db);
        assert!((bm.bw_3db - (bm.f_upper_3db - bm.f_lower_3db) * 1e3).abs() < 1e-9);
        assert!((bm.f_c / f0 - 1.0).abs() < 0.003);
        assert!(bm.il_db <= 0.0 && bm.il_db > -0.02);
        assert!(bm.rl_db < -20.0);
        let (lo, hi) = level_band_edges(&r, 0.01).unwrap();
        assert!(((hi - lo) * 1e3 / 130.0 - 1.0).abs() < 0.02);
    }
}
