//! Output files with provenance headers.
//!
//! Every CSV starts with `# ` comment lines that record the generator, the
//! git-style blob hash of the raw config text and the resolved config as
//! JSON. Readers skip them with `comment = '#'`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// SHA-256 of `blob {len}\0{bytes}`, the framing git uses for blobs.
pub fn blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// What every output file records about its inputs.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub input_sha256: String,
    pub config_json: String,
}

impl Provenance {
    pub fn new(raw_config: &str, resolved_json: String) -> Self {
        Self {
            input_sha256: blob_sha256(raw_config.as_bytes()),
            config_json: resolved_json,
        }
    }

    fn header_lines(&self) -> [String; 3] {
        [
            format!("# generator: erosion {}", env!("CARGO_PKG_VERSION")),
            format!("# input_sha256: {}", self.input_sha256),
            format!("# config: {}", self.config_json),
        ]
    }
}

/// Output directory; created on first use.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    provenance: Provenance,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>, provenance: Provenance) -> Self {
        Self {
            root: root.into(),
            provenance,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn create(&self, name: &str) -> anyhow::Result<(PathBuf, BufWriter<File>)> {
        std::fs::create_dir_all(&self.root).with_context(|| format!("creating {}", self.root.display()))?;
        let path = self.root.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok((path, BufWriter::new(f)))
    }

    /// Writes `rows` under `header` as CSV; `None` cells stay empty.
    pub fn write_csv<I, R>(&self, name: &str, header: &[&str], rows: I) -> anyhow::Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = Cell>,
    {
        let (path, mut w) = self.create(name)?;
        for line in self.provenance.header_lines() {
            writeln!(w, "{line}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header)?;
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
            if cells.len() != header.len() {
                anyhow::bail!("{name}: row has {} cells, header {}", cells.len(), header.len());
            }
            csv.write_record(&cells)?;
        }
        csv.flush()?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Writes `{config, input_sha256, <key>: value}` as pretty JSON.
    pub fn write_json<T: Serialize>(&self, name: &str, key: &str, value: &T) -> anyhow::Result<PathBuf> {
        let config: serde_json::Value = serde_json::from_str(&self.provenance.config_json)?;
        let mut doc = serde_json::Map::new();
        doc.insert("generator".into(), format!("erosion {}", env!("CARGO_PKG_VERSION")).into());
        doc.insert("input_sha256".into(), self.provenance.input_sha256.clone().into());
        doc.insert("config".into(), config);
        doc.insert(key.into(), serde_json::to_value(value)?);
        let (path, mut w) = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        w.flush()?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // shortest round-trip representation
            Cell::Float(v) => write!(f, "{v:?}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git() {
        // `printf 'hello\n' | git hash-object --stdin` framing, hashed with SHA-256
        assert_eq!(
            blob_sha256(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn csv_has_header_and_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::new(dir.path().join("o"), Provenance::new("{}", "{\"a\":1}".into()));
        let p = out
            .write_csv("x.csv", &["t", "v"], [[Cell::from(1usize), Cell::from(0.5)], [2usize.into(), None.into()]])
            .unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# generator"));
        assert!(lines[1].starts_with("# input_sha256: "));
        assert_eq!(lines[2], "# config: {\"a\":1}");
        assert_eq!(&lines[3..], ["t,v", "1,0.5", "2,"]);
    }

    #[test]
    fn ragged_row_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::new(dir.path(), Provenance::new("", "{}".into()));
        assert!(out.write_csv("x.csv", &["a", "b"], [[Cell::from(1.0)]]).is_err());
    }
}
