use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub beta: f64,
    pub tol: f64,
    pub algorithm: gnwood::Algorithm,
    pub steps: usize,
}

/// Record of one run: inputs and outputs, configuration, version and timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Role (`mesh`, `survey`, `observations`, `result`, ...) to path.
    pub files: BTreeMap<String, PathBuf>,
    pub config: Option<ConfigEcho>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            files: BTreeMap::new(),
            config: None,
            timings: BTreeMap::new(),
        }
    }

    pub fn file(&mut self, role: &str, path: &Path) -> &mut Self {
        self.files.insert(role.into(), path.to_path_buf());
        self
    }

    /// Writes the manifest; every listed file must exist.
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some((role, p)) = self.files.iter().find(|(_, p)| !p.exists()) {
            return Err(CliError::Runtime(gnwood::Error::Parameter(format!(
                "manifest lists missing {role} file {}",
                p.display()
            ))));
        }
        let w = gnwood::io::create(path)?;
        serde_json::to_writer_pretty(w, self).map_err(gnwood::Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let mut m = RunManifest::new("invert");
        m.config = Some(ConfigEcho { beta: 0.1, tol: 1e-7, algorithm: gnwood::Algorithm::WoodburyMinres, steps: 2 });
        m.timings.insert("total".into(), 1.25);
        let s = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn refuses_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("invert");
        m.file("mesh", &dir.path().join("absent.json"));
        assert!(matches!(m.write(&dir.path().join("manifest.json")), Err(CliError::Runtime(_))));
    }
}
