//! CSV, JSON and JSON-lines writers. Every record carries the artifact
//! version and the config hash.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::{ExperimentConfig, VERSION};

#[derive(Debug, Clone)]
pub struct Stamp {
    pub version: &'static str,
    pub config_hash: String,
    pub dir: PathBuf,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    version: &'a str,
    config_hash: &'a str,
    #[serde(flatten)]
    record: &'a T,
}

impl Stamp {
    /// Creates the output directory.
    pub fn new(cfg: &ExperimentConfig) -> anyhow::Result<Self> {
        fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
        Ok(Self { version: VERSION, config_hash: cfg.hash(), dir: cfg.out.clone() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn line<T: Serialize>(&self, record: &T) -> anyhow::Result<String> {
        Ok(serde_json::to_string(&Stamped { version: self.version, config_hash: &self.config_hash, record })?)
    }

    pub fn write_jsonl<T: Serialize>(&self, name: &str, records: &[T]) -> anyhow::Result<()> {
        let mut w = BufWriter::new(create(&self.path(name))?);
        for r in records {
            writeln!(w, "{}", self.line(r)?)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, record: &T) -> anyhow::Result<()> {
        let stamped = Stamped { version: self.version, config_hash: &self.config_hash, record };
        let mut text = serde_json::to_string_pretty(&stamped)?;
        text.push('\n');
        fs::write(self.path(name), text).with_context(|| format!("writing {name}"))
    }

    /// `rows` must be flat structs; the stamp columns come first.
    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(create(&self.path(name))?);
        for r in rows {
            w.serialize((CsvStamp { version: self.version, config_hash: &self.config_hash }, r))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn create(path: &Path) -> anyhow::Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

#[derive(Serialize)]
struct CsvStamp<'a> {
    version: &'a str,
    config_hash: &'a str,
}
