//! Run manifest: the resolved configuration, tool version, hashes of the
//! initial grid data and the output paths, written before any compute.

use std::path::Path;

use makino_core::fluid::FluidState;
use makino_core::grid::dump::write_to;
use makino_core::grid::GridFunction;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::{io_error, CliError};

pub const TOOL: &str = "makino";

/// SHA-256 digests of the initial fields in dump encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridHashes {
    pub w: String,
    pub v: String,
}

impl GridHashes {
    pub fn of(state: &FluidState) -> Result<Self, CliError> {
        Ok(Self {
            w: sha256_of(&state.w)?,
            v: sha256_of(&state.v)?,
        })
    }
}

/// Hex SHA-256 of a field's dump bytes (header plus samples).
pub fn sha256_of(u: &GridFunction) -> Result<String, CliError> {
    let mut bytes = Vec::new();
    write_to(u, &mut bytes)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Output locations, relative to the working directory as configured.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outputs {
    pub csv: String,
    pub picard_csv: Option<String>,
    pub dump_dir: Option<String>,
    pub manifest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Requested worker threads; kernels currently run on one thread.
    pub threads: usize,
    pub config: RunConfig,
    pub grid_hashes: GridHashes,
    pub outputs: Outputs,
}

impl RunManifest {
    pub fn new(config: &RunConfig, threads: usize, initial: &FluidState) -> Result<Self, CliError> {
        Ok(Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            threads,
            config: config.clone(),
            grid_hashes: GridHashes::of(initial)?,
            outputs: Outputs {
                csv: config.output.csv.clone(),
                picard_csv: config.picard.enabled.then(|| picard_csv_path(&config.output.csv)),
                dump_dir: config.output.dump_dir.clone(),
                manifest: config.output.manifest.clone(),
            },
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io_error("create", dir, e))?;
        }
        let mut text = serde_json::to_string_pretty(self).map_err(|e| io_error("encode", path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| io_error("write", path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error("read", path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(vec![format!("malformed manifest {}: {e}", path.display())]))
    }
}

/// Picard trace location derived from the series CSV path.
pub fn picard_csv_path(csv: &str) -> String {
    match csv.strip_suffix(".csv") {
        Some(stem) => format!("{stem}.picard.csv"),
        None => format!("{csv}.picard.csv"),
    }
}
