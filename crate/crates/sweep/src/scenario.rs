//! Built-in scenarios, one TOML file each.

use std::path::Path;

use crate::config::{suggest, SweepSpec};
use crate::error::{Result, SweepError};

macro_rules! builtins {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*]
    };
}

pub const BUILTIN: &[(&str, &str)] = builtins!(
    "fig1a", "fig1b", "fig1c", "fig1d", "fig2a", "fig2c", "fig3a", "fig3b", "fig3c", "fig3d",
    "fig4a", "fig4b", "fig4c", "fig4d", "figS2a", "figS2b",
);

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

pub fn builtin(name: &str) -> Result<SweepSpec> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| SweepError::UnknownScenario {
            name: name.to_string(),
            suggestions: suggest(name, names()),
        })?;
    SweepSpec::from_toml_str(text)
}

/// A built-in name or a path to a config file.
pub fn load(name_or_path: &str) -> Result<SweepSpec> {
    if BUILTIN.iter().any(|(n, _)| *n == name_or_path) {
        return builtin(name_or_path);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        return load_file(path);
    }
    builtin(name_or_path)
}

pub fn load_file(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| SweepError::io(path, e))?;
    SweepSpec::from_toml_str(&text)
}
