//! Output directory bookkeeping: `.meta` sidecars and the run log.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Output {
    dir: PathBuf,
    command: &'static str,
    config_hash: String,
    seed: u64,
    files: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path, command: &'static str, config_text: &str, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            command,
            config_hash: sha256_hex(config_text),
            seed,
            files: Vec::new(),
        })
    }

    /// Path for an output file; it gets a sidecar on `finish`.
    pub fn file(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn finish(self) -> Result<Vec<PathBuf>, CliError> {
        let meta = format!(
            "command = {}\nconfig_sha256 = {}\nseed = {}\n",
            self.command, self.config_hash, self.seed
        );
        for f in &self.files {
            let mut side = f.clone().into_os_string();
            side.push(".meta");
            fs::write(&side, &meta).map_err(|e| CliError::io(Path::new(&side), e))?;
        }
        let log = self.dir.join("run.log");
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log)
            .map_err(|e| CliError::io(&log, e))?;
        writeln!(
            file,
            "{} {} seed={} config_sha256={} files={}",
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            self.command,
            self.seed,
            self.config_hash,
            self.files.len()
        )
        .map_err(|e| CliError::io(&log, e))?;
        Ok(self.files)
    }
}
