//! Clustered ordinal datasets: the in-memory table, delimited-text loading
//! with covariate encoding, synthetic generation and draws persistence.

mod dataset;
pub mod draws_file;
pub mod encoding;
mod load;
pub mod synth;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use dataset::{Dataset, DatasetBuilder};
pub use draws_file::{load_draws, save_draws, DrawsFormat};
pub use encoding::{ColumnKind, EncodingPlan};
pub use load::{load, write_dataset_csv, LoadReport};
pub use synth::{generate, score_recovery, CovariateLaw, Generated, RecoveryReport, RecoveryRow, TrueParams, TruthManifest};

/// Writes `bytes` to a temporary sibling of `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a file path")))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/out.txt"), b"x").is_err());
    }
}
