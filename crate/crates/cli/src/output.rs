use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

/// First 16 hex digits of the SHA-256 of the resolved config's JSON. The
/// output directory is left out so relocated runs share a hash.
pub fn config_hash(config: &RunConfig) -> String {
    let mut config = config.clone();
    config.output.dir = Default::default();
    let json = serde_json::to_vec(&config).expect("config serializes");
    let digest = Sha256::digest(&json);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn metadata_line(config: &RunConfig) -> String {
    format!("# dressgate {} config_hash={}", env!("CARGO_PKG_VERSION"), config_hash(config))
}

pub struct Outputs<'a> {
    pub dir: PathBuf,
    pub config: &'a RunConfig,
}

impl<'a> Outputs<'a> {
    pub fn new(dir: PathBuf, config: &'a RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, config })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes rows after a metadata comment line and a header row.
    pub fn csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(out, "{}", metadata_line(self.config))?;
        {
            let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(&mut out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        out.flush()?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        write_json(&path, value)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
