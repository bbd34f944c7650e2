//! Input manifest: WAV paths listed under `[clean]` and `[noise]` sections.
//!
//! ```text
//! # comments and blank lines are ignored
//! [clean]
//! speech/0001.wav
//! [noise]
//! noise/babble.wav
//! ```
//!
//! Relative paths are resolved against the manifest's directory by [`Manifest::load`].

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub clean: Vec<PathBuf>,
    pub noise: Vec<PathBuf>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::default();
        let mut section: Option<bool> = None; // Some(true) = clean
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                section = match line {
                    "[clean]" => Some(true),
                    "[noise]" => Some(false),
                    other => {
                        return Err(Error::format("manifest", format!("line {}: unknown section {other}", i + 1)))
                    }
                };
                continue;
            }
            let path = PathBuf::from(line);
            match section {
                Some(true) => m.clean.push(path),
                Some(false) => m.noise.push(path),
                None => {
                    return Err(Error::format("manifest", format!("line {}: path before any section", i + 1)))
                }
            }
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut m = Self::parse(&text)?;
        for p in m.clean.iter_mut().chain(m.noise.iter_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("[clean]\n");
        for p in &self.clean {
            s.push_str(&format!("{}\n", p.display()));
        }
        s.push_str("[noise]\n");
        for p in &self.noise {
            s.push_str(&format!("{}\n", p.display()));
        }
        s
    }
}
