//! Dataset manifests: CSV with header `ref,dis,dmos[,tag]`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestRow {
    pub ref_path: PathBuf,
    pub dis_path: PathBuf,
    pub dmos: f64,
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dmos(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.dmos).collect()
    }

    /// Fails on the first row whose reference or distorted path is missing.
    pub fn check_paths(&self) -> Result<()> {
        for row in &self.rows {
            for p in [&row.ref_path, &row.dis_path] {
                if !p.exists() {
                    return Err(Error::file(p, std::io::Error::from(std::io::ErrorKind::NotFound)));
                }
            }
        }
        Ok(())
    }
}

/// Parses manifest text. Relative paths are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<DatasetManifest> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ref_col), Some(dis_col), Some(dmos_col)) = (col("ref"), col("dis"), col("dmos")) else {
        let missing: Vec<&str> = ["ref", "dis", "dmos"].into_iter().filter(|c| col(c).is_none()).collect();
        return Err(Error::Schema(format!("missing column(s): {}", missing.join(", "))));
    };
    let tag_col = col("tag");

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Row {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        let dmos_text = field(dmos_col);
        let dmos: f64 = dmos_text.parse().map_err(|_| Error::Row {
            line,
            message: format!("dmos `{dmos_text}` is not a number"),
        })?;
        if !dmos.is_finite() {
            return Err(Error::Row {
                line,
                message: format!("dmos `{dmos_text}` is not finite"),
            });
        }
        let resolve = |s: &str| {
            let p = PathBuf::from(s);
            if p.is_relative() { base.join(p) } else { p }
        };
        rows.push(ManifestRow {
            ref_path: resolve(field(ref_col)),
            dis_path: resolve(field(dis_col)),
            dmos,
            tag: tag_col.map(|i| field(i).to_string()),
        });
    }
    Ok(DatasetManifest { rows })
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new("")))
}
