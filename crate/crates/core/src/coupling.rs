//! Inverter admittances, even/odd-mode section impedances and the
//! equivalent coupled-resonator description of a Chebyshev prototype.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prototype::ChebyshevPrototype;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CouplingError {
    #[error("fractional bandwidth must lie in (0, 1), got {0}")]
    BadBandwidth(f64),
    #[error("system impedance must be positive, got {0}")]
    BadImpedance(f64),
    #[error("prototype is malformed: {0}")]
    BadPrototype(String),
}

/// One coupled-line section of an edge-coupled filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledSection {
    pub j_over_y0: f64,
    pub z0e: f64,
    pub z0o: f64,
}

/// The `n + 1` coupled sections realizing a prototype at impedance `z0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingDesign {
    pub z0: f64,
    pub sections: Vec<CoupledSection>,
}

impl CouplingDesign {
    pub fn from_prototype(
        proto: &ChebyshevPrototype,
        fbw: f64,
        z0: f64,
    ) -> Result<Self, CouplingError> {
        if !(z0 > 0.0 && z0.is_finite()) {
            return Err(CouplingError::BadImpedance(z0));
        }
        let sections = j_inverters(proto, fbw)?
            .into_iter()
            .map(|j| {
                let (z0e, z0o) = even_odd_impedances(j, z0);
                CoupledSection { j_over_y0: j, z0e, z0o }
            })
            .collect();
        Ok(Self { z0, sections })
    }
}

fn check_inputs(proto: &ChebyshevPrototype, fbw: f64) -> Result<(), CouplingError> {
    if !(fbw > 0.0 && fbw < 1.0) {
        return Err(CouplingError::BadBandwidth(fbw));
    }
    if proto.n == 0 || proto.g.len() != proto.n + 2 {
        return Err(CouplingError::BadPrototype(format!(
            "order {} with {} element values",
            proto.n,
            proto.g.len()
        )));
    }
    if proto.g.iter().any(|g| !(*g > 0.0)) {
        return Err(CouplingError::BadPrototype("non-positive element value".into()));
    }
    Ok(())
}

/// Normalized inverter admittances `J/Y0` for the `n + 1` coupling sections.
pub fn j_inverters(proto: &ChebyshevPrototype, fbw: f64) -> Result<Vec<f64>, CouplingError> {
    check_inputs(proto, fbw)?;
    let g = &proto.g;
    let n = proto.n;
    let half = PI * fbw / 2.0;
    let mut j = Vec::with_capacity(n + 1);
    j.push((half / (g[0] * g[1])).sqrt());
    for k in 1..n {
        j.push(half / (g[k] * g[k + 1]).sqrt());
    }
    j.push((half / (g[n] * g[n + 1])).sqrt());
    Ok(j)
}

/// Even- and odd-mode impedances `Z0 (1 ± J/Y0 + (J/Y0)^2)`.
pub fn even_odd_impedances(j_over_y0: f64, z0: f64) -> (f64, f64) {
    let j2 = j_over_y0 * j_over_y0;
    (z0 * (1.0 + j_over_y0 + j2), z0 * (1.0 - j_over_y0 + j2))
}

/// Inline coupled-resonator description: inter-resonator couplings and the
/// input/output external quality factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrixModel {
    pub n: usize,
    pub k: Vec<f64>,
    pub qe_in: f64,
    pub qe_out: f64,
    pub f0_ghz: f64,
    pub fbw: f64,
    /// Unloaded resonator Q; `None` for a lossless model.
    pub qu: Option<f64>,
}

impl CouplingMatrixModel {
    pub fn with_unloaded_q(mut self, qu: Option<f64>) -> Self {
        self.qu = qu;
        self
    }
}

/// Narrowband couplings `k = FBW / sqrt(g_i g_{i+1})` and external Qs.
pub fn coupling_coefficients(
    proto: &ChebyshevPrototype,
    fbw: f64,
    f0_ghz: f64,
) -> Result<CouplingMatrixModel, CouplingError> {
    check_inputs(proto, fbw)?;
    let g = &proto.g;
    let n = proto.n;
    let k = (1..n).map(|i| fbw / (g[i] * g[i + 1]).sqrt()).collect();
    Ok(CouplingMatrixModel {
        n,
        k,
        qe_in: g[0] * g[1] / fbw,
        qe_out: g[n] * g[n + 1] / fbw,
        f0_ghz,
        fbw,
        qu: None,
    })
}
