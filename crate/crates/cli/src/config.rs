//! Pipeline configuration file (TOML). Relative paths resolve against the
//! directory holding the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use popgrid::regress::{BootstrapConfig, CvConfig, RansacConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Inputs,
    /// Key/value filter file; defaults apply when absent.
    pub filter: Option<PathBuf>,
    pub slot_s: i64,
    pub sanitize_k: u32,
    pub clusters: usize,
    pub activity: String,
    pub overnight_hours: [i64; 2],
    pub folds: usize,
    pub persistence: f64,
    pub ransac: RansacSettings,
    pub bootstrap: BootstrapSettings,
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: Inputs::default(),
            filter: None,
            slot_s: 900,
            sanitize_k: 1,
            clusters: 5,
            activity: "call".into(),
            overnight_hours: [0, 8],
            folds: 3,
            persistence: 0.8,
            ransac: RansacSettings::default(),
            bootstrap: BootstrapSettings::default(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub grid: Option<PathBuf>,
    pub admin: Option<PathBuf>,
    pub census: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub presence: Option<PathBuf>,
    pub volumes: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub signatures: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub event_specs: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub estimates: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacSettings {
    pub max_iterations: usize,
    pub mad_factor: f64,
    pub min_samples: usize,
}

impl Default for RansacSettings {
    fn default() -> Self {
        let d = RansacConfig::default();
        RansacSettings {
            max_iterations: d.max_iterations,
            mad_factor: d.mad_factor,
            min_samples: d.min_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSettings {
    pub resamples: usize,
    pub level: f64,
    pub min_inliers: usize,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        let d = BootstrapConfig::default();
        BootstrapSettings {
            resamples: d.resamples,
            level: d.level,
            min_inliers: d.min_inliers,
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let i = &mut cfg.inputs;
        for p in [
            &mut i.grid,
            &mut i.admin,
            &mut i.census,
            &mut i.events,
            &mut i.presence,
            &mut i.volumes,
            &mut i.labels,
            &mut i.signatures,
            &mut i.params,
            &mut i.event_specs,
            &mut i.truth,
            &mut i.estimates,
            &mut i.baseline,
            &mut cfg.filter,
        ] {
            rebase(base, p);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config serializes")
    }

    pub fn ransac(&self, seed: u64) -> RansacConfig {
        RansacConfig {
            max_iterations: self.ransac.max_iterations,
            mad_factor: self.ransac.mad_factor,
            min_samples: self.ransac.min_samples,
            seed,
            ..RansacConfig::default()
        }
    }

    pub fn cv(&self, seed: u64) -> CvConfig {
        CvConfig {
            folds: self.folds,
            ransac: self.ransac(seed),
            bootstrap: BootstrapConfig {
                resamples: self.bootstrap.resamples,
                level: self.bootstrap.level,
                min_inliers: self.bootstrap.min_inliers,
                seed,
            },
            persistence: self.persistence,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let back: PipelineConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "slot_s = 3600\n[inputs]\ngrid = \"grid.csv\"\npresence = \"/abs/p.csv\"\n").unwrap();
        let cfg = PipelineConfig::read(&path).unwrap();
        assert_eq!(cfg.slot_s, 3600);
        assert_eq!(cfg.inputs.grid, Some(dir.path().join("grid.csv")));
        assert_eq!(cfg.inputs.presence, Some(PathBuf::from("/abs/p.csv")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "slots = 3600\n").unwrap();
        assert!(matches!(PipelineConfig::read(&path), Err(CliError::Config(_))));
    }
}
