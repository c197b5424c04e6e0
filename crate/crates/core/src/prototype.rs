//! Chebyshev lowpass prototype: order selection and ladder element values.

use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::GHZ;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrototypeError {
    #[error("invalid filter specification: {0}")]
    InvalidSpec(String),
    #[error("ripple must be positive, got {0} dB")]
    NonPositiveRipple(f64),
    #[error("stopband frequency {stop_ghz} GHz lies inside the passband")]
    StopInsidePassband { stop_ghz: f64 },
    #[error("specification unsatisfiable: {0}")]
    Unsatisfiable(String),
    #[error("filter order must be at least 1")]
    ZeroOrder,
}

/// Band, ripple and selectivity requirements of a bandpass filter.
///
/// Frequencies are kept in Hz; constructors and accessors speak GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    f_lower: f64,
    f_upper: f64,
    f0: f64,
    ripple_db: f64,
    stop_freq: f64,
    stop_atten_db: f64,
    z0: f64,
}

impl FilterSpec {
    /// Builds and validates a specification. When `f0_ghz` is `None` the
    /// centre frequency is the geometric mean of the band edges.
    pub fn new(
        f_lower_ghz: f64,
        f_upper_ghz: f64,
        f0_ghz: Option<f64>,
        ripple_db: f64,
        stop_freq_ghz: f64,
        stop_atten_db: f64,
        z0: f64,
    ) -> Result<Self, PrototypeError> {
        let invalid = |msg: String| Err(PrototypeError::InvalidSpec(msg));
        let all = [f_lower_ghz, f_upper_ghz, ripple_db, stop_freq_ghz, stop_atten_db, z0];
        if all.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite value".into());
        }
        if !(f_lower_ghz > 0.0 && f_lower_ghz < f_upper_ghz) {
            return invalid(format!(
                "band edges must satisfy 0 < f_lower < f_upper (got {f_lower_ghz}, {f_upper_ghz})"
            ));
        }
        if ripple_db <= 0.0 {
            return Err(PrototypeError::NonPositiveRipple(ripple_db));
        }
        if stop_atten_db <= ripple_db {
            return invalid(format!(
                "stopband attenuation {stop_atten_db} dB must exceed ripple {ripple_db} dB"
            ));
        }
        if z0 <= 0.0 {
            return invalid(format!("system impedance must be positive, got {z0}"));
        }
        if (f_lower_ghz..=f_upper_ghz).contains(&stop_freq_ghz) {
            return Err(PrototypeError::StopInsidePassband { stop_ghz: stop_freq_ghz });
        }
        if stop_freq_ghz <= 0.0 {
            return invalid(format!("stopband frequency must be positive, got {stop_freq_ghz}"));
        }
        let f0_ghz = f0_ghz.unwrap_or_else(|| (f_lower_ghz * f_upper_ghz).sqrt());
        if !(f0_ghz.is_finite() && f0_ghz > 0.0) {
            return invalid(format!("centre frequency must be positive, got {f0_ghz}"));
        }
        let fbw = (f_upper_ghz - f_lower_ghz) / f0_ghz;
        if !(fbw > 0.0 && fbw < 1.0) {
            return invalid(format!("fractional bandwidth {fbw} outside (0, 1)"));
        }
        Ok(Self {
            f_lower: f_lower_ghz * GHZ,
            f_upper: f_upper_ghz * GHZ,
            f0: f0_ghz * GHZ,
            ripple_db,
            stop_freq: stop_freq_ghz * GHZ,
            stop_atten_db,
            z0,
        })
    }

    pub fn f_lower_ghz(&self) -> f64 {
        self.f_lower / GHZ
    }

    pub fn f_upper_ghz(&self) -> f64 {
        self.f_upper / GHZ
    }

    pub fn f0_ghz(&self) -> f64 {
        self.f0 / GHZ
    }

    pub fn stop_freq_ghz(&self) -> f64 {
        self.stop_freq / GHZ
    }

    pub fn ripple_db(&self) -> f64 {
        self.ripple_db
    }

    pub fn stop_atten_db(&self) -> f64 {
        self.stop_atten_db
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    /// Passband width in GHz.
    pub fn bandwidth_ghz(&self) -> f64 {
        (self.f_upper - self.f_lower) / GHZ
    }

    /// Fractional bandwidth `(f_upper - f_lower) / f0`.
    pub fn fbw(&self) -> f64 {
        (self.f_upper - self.f_lower) / self.f0
    }

    /// Same spec with a different stopband requirement.
    pub fn with_stopband(&self, stop_freq_ghz: f64, stop_atten_db: f64) -> Result<Self, PrototypeError> {
        Self::new(
            self.f_lower_ghz(),
            self.f_upper_ghz(),
            Some(self.f0_ghz()),
            self.ripple_db,
            stop_freq_ghz,
            stop_atten_db,
            self.z0,
        )
    }
}

/// Order and element values `g0 ..= g(n+1)` of a Chebyshev ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevPrototype {
    pub n: usize,
    pub ripple_db: f64,
    pub g: Vec<f64>,
}

impl ChebyshevPrototype {
    /// Insertion loss in dB of the prototype at normalized frequency `omega`.
    pub fn attenuation_db(&self, omega: f64) -> f64 {
        let am2 = 10f64.powf(self.ripple_db / 10.0) - 1.0;
        let t = chebyshev_t(self.n, omega);
        10.0 * (1.0 + am2 * t * t).log10()
    }
}

/// Chebyshev polynomial of the first kind, valid for any real argument.
pub(crate) fn chebyshev_t(n: usize, x: f64) -> f64 {
    let n = n as f64;
    if x.abs() <= 1.0 {
        (n * x.acos()).cos()
    } else {
        let sign = if x < 0.0 && (n as u64) % 2 == 1 { -1.0 } else { 1.0 };
        sign * (n * x.abs().acosh()).cosh()
    }
}

/// Passband ripple height `a_m^2 = 10^(ripple/10) - 1`.
pub fn ripple_height(ripple_db: f64) -> Result<f64, PrototypeError> {
    if !(ripple_db > 0.0) {
        return Err(PrototypeError::NonPositiveRipple(ripple_db));
    }
    Ok(10f64.powf(ripple_db / 10.0) - 1.0)
}

/// Attenuation height `a = sqrt((10^(L/10) - 1) / a_m^2)`.
///
/// Returns an error when the stopband requirement is below the ripple level
/// (`a < 1`).
pub fn attenuation_height(stop_atten_db: f64, am2: f64) -> Result<f64, PrototypeError> {
    if !(stop_atten_db > 0.0) || !(am2 > 0.0) {
        return Err(PrototypeError::Unsatisfiable(format!(
            "attenuation {stop_atten_db} dB and ripple height {am2} must both be positive"
        )));
    }
    let a = ((10f64.powf(stop_atten_db / 10.0) - 1.0) / am2).sqrt();
    if a < 1.0 {
        return Err(PrototypeError::Unsatisfiable(format!(
            "stopband attenuation {stop_atten_db} dB lies below the passband ripple"
        )));
    }
    Ok(a)
}

/// Lowpass-to-bandpass mapping of `f_ghz` for the given spec:
/// `(f0 / BW) * (f/f0 - f0/f)`.
pub fn normalized_frequency(spec: &FilterSpec, f_ghz: f64) -> f64 {
    let f = f_ghz * GHZ;
    (spec.f0 / (spec.f_upper - spec.f_lower)) * (f / spec.f0 - spec.f0 / f)
}

/// Signed normalized stopband frequency. Negative below the band.
pub fn normalized_stopband(spec: &FilterSpec) -> Result<f64, PrototypeError> {
    if (spec.f_lower..=spec.f_upper).contains(&spec.stop_freq) {
        return Err(PrototypeError::StopInsidePassband { stop_ghz: spec.stop_freq_ghz() });
    }
    Ok(normalized_frequency(spec, spec.stop_freq_ghz()))
}

/// Smallest Chebyshev order meeting the stopband requirement:
/// `ceil(acosh(a) / acosh(|Ω_s|))`.
pub fn required_order(spec: &FilterSpec) -> Result<usize, PrototypeError> {
    let am2 = ripple_height(spec.ripple_db)?;
    let a = attenuation_height(spec.stop_atten_db, am2)?;
    if a <= 1.0 {
        return Err(PrototypeError::Unsatisfiable(
            "stopband attenuation equals the ripple level".into(),
        ));
    }
    let omega_s = normalized_stopband(spec)?.abs();
    if omega_s <= 1.0 {
        return Err(PrototypeError::Unsatisfiable(format!(
            "normalized stopband {omega_s:.6} does not exceed the cutoff"
        )));
    }
    let ratio = a.acosh() / omega_s.acosh();
    // Guard against ratios such as 3.0000000000000004 caused by rounding.
    let n = (ratio - 1e-12).ceil().max(1.0);
    Ok(n as usize)
}

/// Chebyshev ladder element values by the closed-form recursion.
pub fn g_values(n: usize, ripple_db: f64) -> Result<ChebyshevPrototype, PrototypeError> {
    if n == 0 {
        return Err(PrototypeError::ZeroOrder);
    }
    if !(ripple_db > 0.0) {
        return Err(PrototypeError::NonPositiveRipple(ripple_db));
    }
    let nf = n as f64;
    // beta = ln coth(L_Ar / 17.37), with 17.37 = 40 / ln 10
    let beta = (1.0 / (ripple_db * LN_10 / 40.0).tanh()).ln();
    let gamma = (beta / (2.0 * nf)).sinh();
    let a = |k: usize| ((2 * k - 1) as f64 * PI / (2.0 * nf)).sin();
    let b = |k: usize| gamma * gamma + (k as f64 * PI / nf).sin().powi(2);

    let mut g = Vec::with_capacity(n + 2);
    g.push(1.0);
    g.push(2.0 * a(1) / gamma);
    for k in 2..=n {
        let prev = g[k - 1];
        g.push(4.0 * a(k - 1) * a(k) / (b(k - 1) * prev));
    }
    let load = if n % 2 == 1 {
        1.0
    } else {
        let c = 1.0 / (beta / 4.0).tanh();
        c * c
    };
    g.push(load);
    Ok(ChebyshevPrototype { n, ripple_db, g })
}
