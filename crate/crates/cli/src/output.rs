//! Output directory handling. Every file starts with `#` metadata lines.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Metadata = Vec<(String, String)>;

pub fn metadata(config: &RunConfig, command: &str) -> Metadata {
    vec![
        ("tool".into(), format!("uavpl {VERSION}")),
        ("command".into(), command.into()),
        ("config_sha256".into(), config.hash()),
        ("seed".into(), config.sim.seed.to_string()),
    ]
}

pub fn write_header(out: &mut impl Write, meta: &Metadata) -> std::io::Result<()> {
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}")?;
    }
    Ok(())
}

pub struct OutDir {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    /// Creates the directory and stores the effective configuration in it.
    pub fn create(config: &RunConfig) -> Result<Self, CliError> {
        let dir = config.output.dir.clone();
        fs::create_dir_all(&dir)?;
        let mut out = Self {
            dir,
            written: Vec::new(),
        };
        let text = config.to_toml();
        out.write("config.toml", |w| w.write_all(text.as_bytes()))?;
        Ok(out)
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        self.written.push(path.clone());
        Ok(path)
    }
}
