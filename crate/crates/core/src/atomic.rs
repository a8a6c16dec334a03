//! Temp-file-and-rename output, so a failed run never leaves a partial file.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{Error, Result};

fn staging_file(path: &Path) -> Result<NamedTempFile> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))
}

fn fill<F>(path: &Path, tmp: &mut NamedTempFile, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let mut w = BufWriter::new(tmp.as_file_mut());
    write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let mut tmp = staging_file(path)?;
    fill(path, &mut tmp, write)?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Several outputs staged together and renamed into place only once every
/// one of them has been written.
#[derive(Default)]
pub struct Batch {
    staged: Vec<(PathBuf, NamedTempFile)>,
}

impl Batch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage<F>(&mut self, path: impl Into<PathBuf>, write: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = path.into();
        let mut tmp = staging_file(&path)?;
        fill(&path, &mut tmp, write)?;
        self.staged.push((path, tmp));
        Ok(())
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.staged.len());
        for (path, tmp) in self.staged {
            tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}
