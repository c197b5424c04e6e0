//! Quasi-static microstrip models and coupled-line dimension synthesis.
//!
//! Single lines use the Hammerstad–Jensen closed forms. Edge-coupled pairs
//! use the Kirschning–Jansen even/odd-mode expressions, which reduce to the
//! single-line values as the gap grows. Conductor thickness and dispersion
//! are not modelled.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::CouplingDesign;
use crate::{ETA0, GHZ, MU0, SPEED_OF_LIGHT};

/// Fabrication floor for coupled-line gaps, mm.
pub const MIN_GAP_MM: f64 = 0.1;

const U_RANGE: (f64, f64) = (0.1, 10.0);
const G_RANGE: (f64, f64) = (0.1, 10.0);
const SOLVER_U: (f64, f64) = (1e-3, 1e3);
const SOLVER_G: (f64, f64) = (1e-2, 1e3);
const MAX_ITER: usize = 200;
const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MicrostripError {
    #[error("invalid substrate {name}: {reason}")]
    InvalidSubstrate { name: String, reason: String },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid target impedances z0e={z0e} z0o={z0o}")]
    InvalidTarget { z0e: f64, z0o: f64 },
    #[error("coupling unreachable: z0e/z0o = {required:.4} exceeds the model maximum {max:.4} at the minimum gap")]
    CouplingUnreachable { required: f64, max: f64 },
    #[error("mean impedance {target:.2} Ω outside the realizable range {min:.2}..{max:.2} Ω")]
    ImpedanceUnreachable { target: f64, min: f64, max: f64 },
    #[error("synthesis did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Dielectric board description. Lengths in mm, conductivity in S/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substrate {
    pub name: String,
    pub eps_r: f64,
    pub tan_d: f64,
    pub h: f64,
    pub t: f64,
    pub conductivity: f64,
}

const COPPER: f64 = 5.8e7;

impl Substrate {
    /// Glass-epoxy laminate, 1.6 mm.
    pub fn fr4() -> Self {
        Self {
            name: "FR4".into(),
            eps_r: 4.3,
            tan_d: 0.025,
            h: 1.6,
            t: 0.035,
            conductivity: COPPER,
        }
    }

    /// Ceramic-filled PTFE laminate, 1.52 mm.
    pub fn ro3003() -> Self {
        Self {
            name: "RO3003".into(),
            eps_r: 3.0,
            tan_d: 0.0013,
            h: 1.52,
            t: 0.035,
            conductivity: COPPER,
        }
    }

    pub fn validate(&self) -> Result<(), MicrostripError> {
        let fail = |reason: &str| {
            Err(MicrostripError::InvalidSubstrate {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if !(self.eps_r >= 1.0 && self.eps_r.is_finite()) {
            return fail("eps_r must be >= 1");
        }
        if !(self.tan_d >= 0.0 && self.tan_d.is_finite()) {
            return fail("tan_d must be >= 0");
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return fail("height must be positive");
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return fail("conductor thickness must be >= 0");
        }
        if !(self.conductivity > 0.0) {
            return fail("conductivity must be positive");
        }
        Ok(())
    }
}

/// Physical dimensions of one coupled-line section, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledSectionDims {
    pub w: f64,
    pub s: f64,
    pub l: f64,
}

/// Electrical parameters of a symmetric coupled pair. Attenuation in Np/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    pub z0e: f64,
    pub z0o: f64,
    pub eps_eff_e: f64,
    pub eps_eff_o: f64,
    pub alpha_e: f64,
    pub alpha_o: f64,
}

impl ModeParams {
    /// Lossless pair with identical mode velocities.
    pub fn ideal(z0e: f64, z0o: f64, eps_eff: f64) -> Self {
        Self {
            z0e,
            z0o,
            eps_eff_e: eps_eff,
            eps_eff_o: eps_eff,
            alpha_e: 0.0,
            alpha_o: 0.0,
        }
    }

    pub fn eps_eff_avg(&self) -> f64 {
        0.5 * (self.eps_eff_e + self.eps_eff_o)
    }

    /// Copy with per-mode dielectric attenuation at `f_ghz`.
    pub fn with_dielectric_loss(&self, sub: &Substrate, f_ghz: f64) -> Self {
        Self {
            alpha_e: dielectric_loss(sub, self.eps_eff_e, f_ghz),
            alpha_o: dielectric_loss(sub, self.eps_eff_o, f_ghz),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleLine {
    pub z0: f64,
    pub eps_eff: f64,
}

/// Non-fatal conditions reported alongside a synthesized geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisWarning {
    /// Gap below the fabrication floor; the value is still returned.
    GapTooSmall { s: f64 },
    /// Normalized width or gap outside the published fit range.
    OutsideModelRange { w_over_h: f64, s_over_h: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSynthesis {
    pub w: f64,
    pub s: f64,
    pub warnings: Vec<SynthesisWarning>,
}

// Hammerstad–Jensen exponent shared by single and even-mode permittivity.
fn hj_exponent(u: f64, eps_r: f64) -> f64 {
    let a = 1.0
        + ((u.powi(4) + (u / 52.0).powi(2)) / (u.powi(4) + 0.432)).ln() / 49.0
        + (1.0 + (u / 18.1).powi(3)).ln() / 18.7;
    let b = 0.564 * ((eps_r - 0.9) / (eps_r + 3.0)).powf(0.053);
    a * b
}

/// (Z0, eps_eff, Z0 in air) of a zero-thickness strip with `u = w/h`.
fn hj_single(u: f64, eps_r: f64) -> (f64, f64, f64) {
    let eps_eff = (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 * (1.0 + 10.0 / u).powf(-hj_exponent(u, eps_r));
    let f = 6.0 + (2.0 * PI - 6.0) * (-(30.666 / u).powf(0.7528)).exp();
    let z_air = ETA0 / (2.0 * PI) * (f / u + (1.0 + 4.0 / (u * u)).sqrt()).ln();
    (z_air / eps_eff.sqrt(), eps_eff, z_air)
}

// ln(g^10 / (1 + (g/c)^10)) without overflow.
fn log_ratio10(g: f64, c: f64) -> f64 {
    10.0 * g.ln() - (10.0 * (g / c).ln()).exp().ln_1p()
}

/// Even/odd (Z, eps_eff) for normalized width `u` and gap `g`.
fn kj_coupled(u: f64, g: f64, eps_r: f64) -> (f64, f64, f64, f64) {
    let (z_l, eps_single, _) = hj_single(u, eps_r);
    let mean = (eps_r + 1.0) / 2.0;

    let v = u * (20.0 + g * g) / (10.0 + g * g) + g * (-g).exp();
    let eps_e = mean + (eps_r - 1.0) / 2.0 * (1.0 + 10.0 / v).powf(-hj_exponent(v, eps_r));

    let a_o = 0.7287 * (eps_single - mean) * (1.0 - (-0.179 * u).exp());
    let b_o = 0.747 * eps_r / (0.15 + eps_r);
    let c_o = b_o - (b_o - 0.207) * (-0.414 * u).exp();
    let d_o = 0.593 + 0.694 * (-0.562 * u).exp();
    let eps_o = (mean + a_o - eps_single) * (-c_o * g.powf(d_o)).exp() + eps_single;

    let q1 = 0.8695 * u.powf(0.194);
    let q2 = 1.0 + 0.7519 * g + 0.189 * g.powf(2.31);
    let q3 = 0.1975 + (16.6 + (8.4 / g).powi(6)).powf(-0.387) + log_ratio10(g, 3.4) / 241.0;
    let q4 = 2.0 * q1 / q2 / ((-g).exp() * u.powf(q3) + (2.0 - (-g).exp()) * u.powf(-q3));
    let q5 = 1.794 + 1.14 * (1.0 + 0.638 / (g + 0.517 * g.powf(2.43))).ln();
    let q6 = 0.2305 + log_ratio10(g, 5.8) / 281.3 + (1.0 + 0.598 * g.powf(1.154)).ln() / 5.1;
    let q7 = (10.0 + 190.0 * g * g) / (1.0 + 82.3 * g.powi(3));
    let q8 = (-6.5 - 0.95 * g.ln() - (g / 0.15).powi(5)).exp();
    let q9 = q7.ln() * (q8 + 1.0 / 16.5);
    let q10 = q4 - q5 / q2 * (q6 * u.ln() / u.powf(q9)).exp();

    let scale = z_l / ETA0 * eps_single.sqrt();
    let z_e = z_l * (eps_single / eps_e).sqrt() / (1.0 - scale * q4);
    let z_o = z_l * (eps_single / eps_o).sqrt() / (1.0 - scale * q10);
    (z_e, z_o, eps_e, eps_o)
}

fn positive(name: &str, v: f64) -> Result<(), MicrostripError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(MicrostripError::InvalidGeometry(format!("{name} must be positive, got {v}")))
    }
}

/// Characteristic impedance and effective permittivity of a single strip.
pub fn analyze_single(w: f64, sub: &Substrate) -> Result<SingleLine, MicrostripError> {
    positive("width", w)?;
    sub.validate()?;
    let (z0, eps_eff, _) = hj_single(w / sub.h, sub.eps_r);
    Ok(SingleLine { z0, eps_eff })
}

/// Strip width (mm) giving characteristic impedance `z0`.
pub fn synthesize_single(z0: f64, sub: &Substrate) -> Result<f64, MicrostripError> {
    positive("impedance", z0)?;
    sub.validate()?;
    let z_at = |ln_u: f64| hj_single(ln_u.exp(), sub.eps_r).0;
    let (mut lo, mut hi) = (SOLVER_U.0.ln(), SOLVER_U.1.ln());
    if z0 > z_at(lo) || z0 < z_at(hi) {
        return Err(MicrostripError::InvalidGeometry(format!(
            "impedance {z0} outside the realizable range"
        )));
    }
    // Impedance falls with width.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if z_at(mid) > z0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp() * sub.h)
}

/// Lossless even/odd-mode parameters of a coupled pair.
pub fn analyze_coupled(w: f64, s: f64, sub: &Substrate) -> Result<ModeParams, MicrostripError> {
    positive("width", w)?;
    positive("gap", s)?;
    sub.validate()?;
    let (z0e, z0o, eps_eff_e, eps_eff_o) = kj_coupled(w / sub.h, s / sub.h, sub.eps_r);
    Ok(ModeParams { z0e, z0o, eps_eff_e, eps_eff_o, alpha_e: 0.0, alpha_o: 0.0 })
}

/// Warning when `(w, s)` lies outside the coupled-line model's fit range.
pub fn validity_warning(w: f64, s: f64, sub: &Substrate) -> Option<SynthesisWarning> {
    let (u, g) = (w / sub.h, s / sub.h);
    let inside = |v: f64, r: (f64, f64)| v >= r.0 && v <= r.1;
    if inside(u, U_RANGE) && inside(g, G_RANGE) {
        None
    } else {
        Some(SynthesisWarning::OutsideModelRange { w_over_h: u, s_over_h: g })
    }
}

struct Target {
    ln_ze: f64,
    ln_zo: f64,
}

impl Target {
    fn residual(&self, x: [f64; 2], eps_r: f64) -> [f64; 2] {
        let (ze, zo, _, _) = kj_coupled(x[0].exp(), x[1].exp(), eps_r);
        [ze.ln() - self.ln_ze, zo.ln() - self.ln_zo]
    }
}

fn norm(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

fn clamp_x(x: [f64; 2]) -> [f64; 2] {
    [
        x[0].clamp(SOLVER_U.0.ln(), SOLVER_U.1.ln()),
        x[1].clamp(SOLVER_G.0.ln(), SOLVER_G.1.ln()),
    ]
}

// Damped Newton in (ln u, ln g). Returns the final point and residual.
fn newton(target: &Target, eps_r: f64, start: [f64; 2]) -> ([f64; 2], f64, usize) {
    let mut x = start;
    let mut r = target.residual(x, eps_r);
    let mut iterations = 0;
    while iterations < MAX_ITER && norm(r) > 1e-12 {
        iterations += 1;
        let step = 1e-6;
        let mut jac = [[0.0; 2]; 2];
        for c in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[c] += step;
            xm[c] -= step;
            let (rp, rm) = (target.residual(xp, eps_r), target.residual(xm, eps_r));
            for row in 0..2 {
                jac[row][c] = (rp[row] - rm[row]) / (2.0 * step);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            break;
        }
        let mut dx = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let big = dx[0].abs().max(dx[1].abs());
        if big > 0.5 {
            dx = [dx[0] * 0.5 / big, dx[1] * 0.5 / big];
        }
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-4 {
            let trial = clamp_x([x[0] + lambda * dx[0], x[1] + lambda * dx[1]]);
            let rt = target.residual(trial, eps_r);
            if norm(rt).is_finite() && norm(rt) < norm(r) {
                x = trial;
                r = rt;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, norm(r), iterations)
}

// Width giving geometric-mean impedance `ln_zm` at fixed ln g.
fn width_for_mean(ln_zm: f64, ln_g: f64, eps_r: f64) -> f64 {
    let mean = |ln_u: f64| {
        let (ze, zo, _, _) = kj_coupled(ln_u.exp(), ln_g.exp(), eps_r);
        0.5 * (ze.ln() + zo.ln())
    };
    let (mut lo, mut hi) = (SOLVER_U.0.ln(), SOLVER_U.1.ln());
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) > ln_zm {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn split_at(ln_g: f64, ln_zm: f64, eps_r: f64) -> f64 {
    let ln_u = width_for_mean(ln_zm, ln_g, eps_r);
    let (ze, zo, _, _) = kj_coupled(ln_u.exp(), ln_g.exp(), eps_r);
    ze.ln() - zo.ln()
}

// Nested bisection: gap sets the impedance ratio, width the geometric mean.
fn bisection(target: &Target, eps_r: f64) -> Result<[f64; 2], MicrostripError> {
    let ln_zm = 0.5 * (target.ln_ze + target.ln_zo);
    let want = target.ln_ze - target.ln_zo;
    let (mut lo, mut hi) = (SOLVER_G.0.ln(), SOLVER_G.1.ln());
    let mean = |ln_u: f64| {
        let (ze, zo, _, _) = kj_coupled(ln_u.exp(), lo.exp(), eps_r);
        (0.5 * (ze.ln() + zo.ln())).exp()
    };
    let (z_min, z_max) = (mean(SOLVER_U.1.ln()), mean(SOLVER_U.0.ln()));
    if !(z_min..=z_max).contains(&ln_zm.exp()) {
        return Err(MicrostripError::ImpedanceUnreachable { target: ln_zm.exp(), min: z_min, max: z_max });
    }
    let strongest = split_at(lo, ln_zm, eps_r);
    if strongest < want {
        return Err(MicrostripError::CouplingUnreachable {
            required: want.exp(),
            max: strongest.exp(),
        });
    }
    if split_at(hi, ln_zm, eps_r) > want {
        return Err(MicrostripError::NoConvergence { iterations: 0, residual: f64::INFINITY });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if split_at(mid, ln_zm, eps_r) > want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ln_g = 0.5 * (lo + hi);
    Ok([width_for_mean(ln_zm, ln_g, eps_r), ln_g])
}

/// Width and gap (mm) of a coupled pair realizing `(z0e, z0o)`.
pub fn synthesize_coupled(
    z0e: f64,
    z0o: f64,
    sub: &Substrate,
) -> Result<CoupledSynthesis, MicrostripError> {
    if !(z0o > 0.0 && z0e > z0o && z0e.is_finite()) {
        return Err(MicrostripError::InvalidTarget { z0e, z0o });
    }
    sub.validate()?;
    let eps_r = sub.eps_r;
    let target = Target { ln_ze: z0e.ln(), ln_zo: z0o.ln() };

    let start = match synthesize_single((z0e * z0o).sqrt(), sub) {
        Ok(w) => clamp_x([(w / sub.h).ln(), 0.0]),
        Err(_) => [0.0, 0.0],
    };
    let (mut x, mut residual, iterations) = newton(&target, eps_r, start);
    if residual > TOL {
        let seed = bisection(&target, eps_r)?;
        let (polished, r, _) = newton(&target, eps_r, seed);
        x = polished;
        residual = r;
        if residual > TOL {
            return Err(MicrostripError::NoConvergence { iterations, residual });
        }
    }

    let (w, s) = (x[0].exp() * sub.h, x[1].exp() * sub.h);
    let mut warnings = Vec::new();
    if s < MIN_GAP_MM {
        warnings.push(SynthesisWarning::GapTooSmall { s });
    }
    warnings.extend(validity_warning(w, s, sub));
    Ok(CoupledSynthesis { w, s, warnings })
}

/// Synthesis warnings tagged with the index of the section that raised them.
pub type SectionWarnings = Vec<(usize, SynthesisWarning)>;

/// Physical dimensions for every section of an edge-coupled design.
pub fn synthesize_sections(
    design: &CouplingDesign,
    sub: &Substrate,
    f0_ghz: f64,
) -> Result<(Vec<CoupledSectionDims>, SectionWarnings), MicrostripError> {
    let mut dims = Vec::with_capacity(design.sections.len());
    let mut warnings = Vec::new();
    for (i, sec) in design.sections.iter().enumerate() {
        let syn = synthesize_coupled(sec.z0e, sec.z0o, sub)?;
        let mp = analyze_coupled(syn.w, syn.s, sub)?;
        dims.push(CoupledSectionDims { w: syn.w, s: syn.s, l: resonator_length(&mp, f0_ghz) });
        warnings.extend(syn.warnings.into_iter().map(|w| (i, w)));
    }
    Ok((dims, warnings))
}

/// Quarter-wave section length (mm) at `f0_ghz` using the mean of the
/// even- and odd-mode effective permittivities.
pub fn resonator_length(mp: &ModeParams, f0_ghz: f64) -> f64 {
    SPEED_OF_LIGHT / (4.0 * f0_ghz * GHZ * mp.eps_eff_avg().sqrt()) * 1e3
}

/// Dielectric attenuation of a quasi-TEM line, Np/m.
pub fn dielectric_loss(sub: &Substrate, eps_eff: f64, f_ghz: f64) -> f64 {
    let lambda0 = SPEED_OF_LIGHT / (f_ghz * GHZ);
    let filling = if (sub.eps_r - 1.0).abs() < 1e-12 {
        eps_eff.sqrt()
    } else {
        sub.eps_r * (eps_eff - 1.0) / (eps_eff.sqrt() * (sub.eps_r - 1.0))
    };
    PI / lambda0 * filling * sub.tan_d
}

/// Simple conductor attenuation `R_s / (Z0 w)`, Np/m.
pub fn conductor_loss(sub: &Substrate, z0: f64, w: f64, f_ghz: f64) -> f64 {
    let rs = (PI * f_ghz * GHZ * MU0 / sub.conductivity).sqrt();
    rs / (z0 * w * 1e-3)
}

/// Dielectric-limited unloaded Q of a resonator on `sub`. `None` when lossless.
pub fn dielectric_q(sub: &Substrate, eps_eff: f64, f_ghz: f64) -> Option<f64> {
    let alpha = dielectric_loss(sub, eps_eff, f_ghz);
    if alpha <= 0.0 {
        return None;
    }
    let beta = 2.0 * PI * f_ghz * GHZ * eps_eff.sqrt() / SPEED_OF_LIGHT;
    Some(beta / (2.0 * alpha))
}
