use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::media::Frame;

use super::dis::{estimate_flow, FlowParams};
use super::field::{read_flo, FlowField};

/// Which sequence a requested flow belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowRole {
    Reference,
    Distorted,
}

impl FlowRole {
    fn prefix(self) -> &'static str {
        match self {
            FlowRole::Reference => "ref",
            FlowRole::Distorted => "dis",
        }
    }
}

/// Supplies the flow from frame `index - 1` to frame `index`.
pub trait FlowProvider: Send + Sync {
    fn flow(&self, role: FlowRole, index: usize, prev: &Frame, next: &Frame) -> Result<FlowField>;
}

/// The built-in estimator.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinFlow {
    pub params: FlowParams,
}

impl FlowProvider for BuiltinFlow {
    fn flow(&self, _role: FlowRole, _index: usize, prev: &Frame, next: &Frame) -> Result<FlowField> {
        estimate_flow(prev, next, &self.params)
    }
}

/// Precomputed `.flo` files named `ref_%06d.flo` / `dis_%06d.flo`, indexed by
/// the (0-based) second frame of each pair.
#[derive(Debug, Clone)]
pub struct FloDirectory {
    dir: PathBuf,
}

impl FloDirectory {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FloDirectory { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, role: FlowRole, index: usize) -> PathBuf {
        self.dir.join(format!("{}_{index:06}.flo", role.prefix()))
    }
}

impl FlowProvider for FloDirectory {
    fn flow(&self, role: FlowRole, index: usize, prev: &Frame, _next: &Frame) -> Result<FlowField> {
        let path = self.path_for(role, index);
        if !path.is_file() {
            return Err(Error::Provider { index, path });
        }
        let field = read_flo(&path)?;
        if (field.width(), field.height()) != (prev.width(), prev.height()) {
            return Err(Error::Shape(format!(
                "{} is {}x{}, frames are {}x{}",
                path.display(),
                field.width(),
                field.height(),
                prev.width(),
                prev.height()
            )));
        }
        Ok(field)
    }
}

/// Parsed `--flow` option: `builtin` or `flo-dir:<path>`.
#[derive(Debug, Clone)]
pub enum FlowSource {
    Builtin(BuiltinFlow),
    FloDir(FloDirectory),
}

impl Default for FlowSource {
    fn default() -> Self {
        FlowSource::Builtin(BuiltinFlow::default())
    }
}

impl std::str::FromStr for FlowSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "builtin" {
            Ok(FlowSource::default())
        } else if let Some(dir) = s.strip_prefix("flo-dir:") {
            if dir.is_empty() {
                return Err(Error::Argument("flo-dir needs a path".into()));
            }
            Ok(FlowSource::FloDir(FloDirectory::new(dir)))
        } else {
            Err(Error::Argument(format!(
                "unknown flow provider `{s}` (expected builtin or flo-dir:<path>)"
            )))
        }
    }
}

impl FlowProvider for FlowSource {
    fn flow(&self, role: FlowRole, index: usize, prev: &Frame, next: &Frame) -> Result<FlowField> {
        match self {
            FlowSource::Builtin(b) => b.flow(role, index, prev, next),
            FlowSource::FloDir(d) => d.flow(role, index, prev, next),
        }
    }
}
