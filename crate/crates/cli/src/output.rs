use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use chronoeval::tempeval::io::write_warnings;

/// Output directory that creates itself on first use.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| chronoeval::Error::Io {
            path: root.to_path_buf(),
            source: e,
        })?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes one file through `body`, which receives a buffered writer.
    pub fn write<F>(&self, name: &str, body: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> chronoeval::Result<()>,
    {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| chronoeval::Error::Io {
                path: parent.to_path_buf(),
                source: e,
            })?;
        }
        let file = File::create(&path).map_err(|e| chronoeval::Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let mut writer = BufWriter::new(file);
        body(&mut writer).with_context(|| format!("writing {}", path.display()))?;
        writer.flush().map_err(|e| chronoeval::Error::Io {
            path: path.clone(),
            source: e,
        })?;
        Ok(path)
    }

    pub fn warnings(&self, warnings: &[String]) -> Result<PathBuf> {
        self.write("warnings.json", |w| write_warnings(w, warnings))
    }
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        chronoeval::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}
