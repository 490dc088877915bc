use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Output directory that records every file written to it.
pub struct OutDir {
    root: PathBuf,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    config: &'a C,
    seed: u64,
    artifacts: &'a [String],
    library_version: &'static str,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.open(name)?);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Hand the writer to a library routine that emits its own CSV.
    pub fn with_writer(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> lintransfer::Result<()>) -> Result<()> {
        let mut w = self.open(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn finish<C: Serialize>(self, command: &str, config: &C, seed: u64) -> Result<()> {
        let manifest = Manifest {
            command,
            config,
            seed,
            artifacts: &self.artifacts,
            library_version: env!("CARGO_PKG_VERSION"),
        };
        let path = self.root.join("manifest.json");
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

pub fn num(v: f64) -> String {
    v.to_string()
}
