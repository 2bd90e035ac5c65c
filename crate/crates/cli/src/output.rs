//! Output files and the run manifest written next to them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use binfar_core::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

/// Collects the files a command writes into its output directory.
pub struct Sink {
    dir: Option<PathBuf>,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            written: Vec::new(),
        })
    }

    /// Note a file written into the directory by other means.
    pub fn record(&mut self, name: &str) {
        if self.dir.is_some() {
            self.written.push(name.to_string());
        }
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    /// Write `name` inside the output directory; a no-op without one.
    pub fn file<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let mut w = BufWriter::new(File::create(dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.file(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<()> {
        self.file(name, |w| Ok(w.write_all(content.as_bytes())?))
    }

    /// Write the manifest into the output directory, or to stderr when the
    /// command has none.
    pub fn finish(self, manifest: &ManifestBuilder) -> Result<()> {
        let m = manifest.build(self.written);
        match &self.dir {
            Some(dir) => {
                let mut f = BufWriter::new(File::create(dir.join(MANIFEST))?);
                serde_json::to_writer_pretty(&mut f, &m)?;
                writeln!(f)?;
                f.flush()?;
            }
            None => eprintln!("{}", serde_json::to_string(&m)?),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run a command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub version: &'static str,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}

pub struct ManifestBuilder {
    command: String,
    argv: Vec<String>,
    seeds: Vec<u64>,
    inputs: Vec<InputDigest>,
    threads: usize,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, argv: Vec<String>, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            argv,
            seeds: Vec::new(),
            inputs: Vec::new(),
            threads,
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seeds.push(seed);
    }

    /// Record the digest of an input file, or of every file in a directory.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(path)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            entries.sort();
            for p in entries.into_iter().filter(|p| p.is_file() && !p.ends_with(MANIFEST)) {
                self.input(&p)?;
            }
            return Ok(());
        }
        let bytes = fs::read(path)?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    fn build(&self, outputs: Vec<String>) -> RunManifest {
        RunManifest {
            command: self.command.clone(),
            argv: self.argv.clone(),
            seeds: self.seeds.clone(),
            inputs: self.inputs.clone(),
            outputs,
            version: env!("CARGO_PKG_VERSION"),
            threads: self.threads,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}
