//! Named substrate table with built-in FR4 and RO3003 entries.

use std::collections::BTreeMap;
use std::path::Path;

use mlfilter_core::microstrip::Substrate;
use serde::Deserialize;

use crate::error::CliError;

/// Environment variable naming a TOML file of extra or overriding materials.
pub const REGISTRY_ENV: &str = "MLFILTER_MATERIALS";

fn default_t() -> f64 {
    0.035
}

fn default_conductivity() -> f64 {
    5.8e7
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialEntry {
    name: String,
    eps_r: f64,
    tan_d: f64,
    h: f64,
    #[serde(default = "default_t")]
    t: f64,
    #[serde(default = "default_conductivity")]
    conductivity: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    #[serde(default)]
    material: Vec<MaterialEntry>,
}

/// Substrates keyed by lower-cased name.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialsRegistry {
    entries: BTreeMap<String, Substrate>,
}

impl Default for MaterialsRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl MaterialsRegistry {
    pub fn builtin() -> Self {
        let mut r = Self { entries: BTreeMap::new() };
        r.insert(Substrate::fr4());
        r.insert(Substrate::ro3003());
        r
    }

    /// Adds or replaces an entry; names compare case-insensitively.
    pub fn insert(&mut self, sub: Substrate) {
        self.entries.insert(sub.name.to_lowercase(), sub);
    }

    pub fn get(&self, name: &str) -> Result<&Substrate, CliError> {
        self.entries.get(&name.to_lowercase()).ok_or_else(|| CliError::UnknownMaterial {
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.values().map(|s| s.name.clone()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Substrate> {
        self.entries.values()
    }

    /// Parses `[[material]]` tables and layers them over the built-ins.
    pub fn with_overrides(mut self, text: &str, origin: &Path) -> Result<Self, CliError> {
        let file: MaterialFile = toml::from_str(text).map_err(|e| CliError::parse(origin, e.message()))?;
        let mut seen = BTreeMap::new();
        for m in file.material {
            if seen.insert(m.name.to_lowercase(), ()).is_some() {
                return Err(CliError::parse(origin, format!("material '{}' listed twice", m.name)));
            }
            let sub = Substrate {
                name: m.name,
                eps_r: m.eps_r,
                tan_d: m.tan_d,
                h: m.h,
                t: m.t,
                conductivity: m.conductivity,
            };
            sub.validate().map_err(|e| CliError::parse(origin, e))?;
            self.insert(sub);
        }
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::builtin().with_overrides(&text, path)
    }

    /// Built-ins plus the file named by [`REGISTRY_ENV`], if set.
    pub fn from_env() -> Result<Self, CliError> {
        match std::env::var_os(REGISTRY_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::builtin()),
        }
    }
}
