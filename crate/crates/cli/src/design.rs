//! Persisted synthesis result.

use std::path::Path;

use mlfilter_core::coupling::{coupling_coefficients, CouplingDesign, CouplingMatrixModel};
use mlfilter_core::microstrip::{synthesize_sections, CoupledSectionDims, Substrate, SynthesisWarning};
use mlfilter_core::prototype::{g_values, required_order, ChebyshevPrototype, FilterSpec};
use serde::{Deserialize, Serialize};

use crate::config::{Config, PclLayoutConfig, SpecConfig};
use crate::error::CliError;
use crate::registry::MaterialsRegistry;
use mlfilter_core::layout::MlHairpinParams;

pub const TOOL: &str = concat!("mlfilter ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDocument {
    pub substrate_name: String,
    pub provenance: Provenance,
    pub spec: SpecConfig,
    pub substrate: Substrate,
    pub prototype: ChebyshevPrototype,
    pub coupling: CouplingDesign,
    pub dims: Vec<CoupledSectionDims>,
    pub pcl: PclLayoutConfig,
    pub ml: MlHairpinParams,
}

/// Design plus the per-section synthesis warnings, which are reported but
/// not persisted.
pub struct Synthesized {
    pub design: DesignDocument,
    pub warnings: Vec<(usize, SynthesisWarning)>,
}

impl DesignDocument {
    pub fn synthesize(config: &Config, registry: &MaterialsRegistry, timestamp: String) -> Result<Synthesized, CliError> {
        let spec = config.spec.to_spec()?;
        let substrate = registry.get(&config.substrate)?.clone();
        let n = required_order(&spec)?;
        let prototype = g_values(n, spec.ripple_db())?;
        let coupling = CouplingDesign::from_prototype(&prototype, spec.fbw(), spec.z0())?;
        let (dims, warnings) = synthesize_sections(&coupling, &substrate, spec.f0_ghz())?;
        let design = DesignDocument {
            substrate_name: substrate.name.clone(),
            provenance: Provenance { tool: TOOL.to_string(), timestamp },
            spec: config.spec,
            substrate,
            prototype,
            coupling,
            dims,
            pcl: config.pcl,
            ml: config.ml,
        };
        Ok(Synthesized { design, warnings })
    }

    pub fn filter_spec(&self) -> Result<FilterSpec, CliError> {
        self.spec.to_spec()
    }

    pub fn coupling_model(&self) -> Result<CouplingMatrixModel, CliError> {
        let spec = self.filter_spec()?;
        Ok(coupling_coefficients(&self.prototype, spec.fbw(), spec.f0_ghz())?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("design document serializes")
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let doc: Self = toml::from_str(text).map_err(|e| CliError::parse(origin, e.message()))?;
        doc.check(origin)?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Prototype and coupling must follow from the stored spec.
    fn check(&self, origin: &Path) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::parse(origin, format!("inconsistent design: {m}")));
        let spec = self.filter_spec().map_err(|e| CliError::parse(origin, e))?;
        let p = &self.prototype;
        let expected = g_values(p.n, spec.ripple_db()).map_err(|e| CliError::parse(origin, e))?;
        if p.ripple_db != spec.ripple_db() || !close(&p.g, &expected.g) {
            return bad("prototype does not match the spec ripple".into());
        }
        let coupling = CouplingDesign::from_prototype(p, spec.fbw(), spec.z0()).map_err(|e| CliError::parse(origin, e))?;
        let flat = |d: &CouplingDesign| d.sections.iter().flat_map(|s| [s.j_over_y0, s.z0e, s.z0o]).collect::<Vec<_>>();
        if coupling.sections.len() != self.coupling.sections.len() || !close(&flat(&coupling), &flat(&self.coupling)) {
            return bad("coupling sections do not follow from the prototype".into());
        }
        if self.dims.len() != p.n + 1 {
            return bad(format!("{} section dimensions for order {}", self.dims.len(), p.n));
        }
        self.substrate.validate().map_err(|e| CliError::parse(origin, e))?;
        Ok(())
    }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + y.abs()))
}
