//! Run manifests: resolved settings, seed, file-format versions and input hashes.
//!
//! ```text
//! # propml-manifest v1
//! command = cv
//! tool_version = 0.1.0
//! seed = 7
//! [config]
//! folds = 5
//! [formats]
//! results = propml-results v1
//! [inputs]
//! <sha256 hex>  data/synth.ml
//! ```

use std::fmt::{Display, Write as _};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use propml_core::Error;

pub const DATASET_FORMAT: &str = "ml v1";
pub const OVERLAY_FORMAT: &str = "cand v1";
pub const RESULTS_FORMAT: &str = "propml-results v1";
pub const CD_PLOT_FORMAT: &str = "cd-plot v1";

pub struct Manifest {
    command: &'static str,
    seed: u64,
    config: Vec<String>,
    formats: Vec<String>,
    inputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Manifest {
            command,
            seed,
            config: Vec::new(),
            formats: Vec::new(),
            inputs: Vec::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.config.push(format!("{key} = {value}"));
        self
    }

    /// Adds pre-rendered `key = value` lines.
    pub fn config_text(&mut self, text: &str) -> &mut Self {
        self.config.extend(text.lines().map(str::to_string));
        self
    }

    pub fn format(&mut self, kind: &str, version: &str) -> &mut Self {
        self.formats.push(format!("{kind} = {version}"));
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self, Error> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.inputs.push(format!(
            "{}  {}",
            hex::encode(Sha256::digest(&bytes)),
            path.display()
        ));
        Ok(self)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# propml-manifest v1\n");
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "tool_version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "seed = {}", self.seed);
        for (title, lines) in [
            ("config", &self.config),
            ("formats", &self.formats),
            ("inputs", &self.inputs),
        ] {
            let _ = writeln!(out, "[{title}]");
            for l in lines {
                let _ = writeln!(out, "{l}");
            }
        }
        out
    }

    pub fn write(&self, path: &PathBuf) -> Result<(), Error> {
        std::fs::write(path, self.render()).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })
    }
}
