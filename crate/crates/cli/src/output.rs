//! Atomic file output: everything is written to a temporary file in the
//! target directory and renamed into place.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::SCHEMA_VERSION;
use crate::error::CliError;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Write `name` through `fill`, replacing any previous file at once.
    pub fn write_with(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
    ) -> Result<PathBuf, CliError> {
        let target = self.path(name);
        let tmp = tempfile::NamedTempFile::new_in(&self.root)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w)?;
            w.flush()?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| CliError::from(e.error))?;
        self.written.push(target.clone());
        Ok(target)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| Ok(w.write_all(text.as_bytes())?))
    }

    /// JSON document with `schema_version` inserted as the first key.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let body = serde_json::to_value(value)?;
        let mut doc = serde_json::Map::new();
        doc.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
        match body {
            Value::Object(map) => doc.extend(map),
            other => {
                doc.insert("data".into(), other);
            }
        }
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, &Value::Object(doc))?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// CSV from a header and rows of numbers.
    pub fn write_table(
        &mut self,
        name: &str,
        header: &[String],
        rows: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(header)?;
            for row in rows {
                c.write_record(row.iter().map(|x| format!("{x:?}")))?;
            }
            c.flush()?;
            Ok(())
        })
    }
}

/// Read a JSON output, checking its schema version.
pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)?;
    match v.get("schema_version").and_then(Value::as_u64) {
        Some(x) if x == SCHEMA_VERSION as u64 => Ok(v),
        other => Err(CliError::Validation(format!(
            "{}: unsupported schema version {other:?}",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replaces_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("a/b")).unwrap();
        out.write_text("x.txt", "one").unwrap();
        out.write_text("x.txt", "two").unwrap();
        assert_eq!(std::fs::read_to_string(out.path("x.txt")).unwrap(), "two");
        let leftovers = std::fs::read_dir(dir.path().join("a/b")).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn json_is_versioned() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let p = out
            .write_json("s.json", &serde_json::json!({"a": 1}))
            .unwrap();
        let v = read_json(&p).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["a"], 1);
        std::fs::write(&p, "{\"schema_version\": 7}").unwrap();
        assert!(read_json(&p).is_err());
    }

    #[test]
    fn failed_fill_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let r = out.write_with("y", |_| Err(CliError::Validation("boom".into())));
        assert!(r.is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
