//! On-disk cache of cohomology dimensions, Hecke matrices and fixture records.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use gl3eis::eisenstein::HnfLabel;
use gl3eis::linalg::QMat;

pub struct Cache {
    root: PathBuf,
}

fn stem(l: HnfLabel) -> String {
    format!("{}_{}_{}", l.norm, l.c, l.d)
}

/// Writes through a temporary file in the same directory so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, text: &str) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl Cache {
    pub fn new(root: PathBuf) -> Self {
        Cache { root }
    }

    pub fn fixtures_dir(&self) -> PathBuf {
        self.root.join("fixtures")
    }

    fn cohomology_path(&self, level: HnfLabel) -> PathBuf {
        self.root.join("cohomology").join(format!("{}.txt", stem(level)))
    }

    fn hecke_path(&self, level: HnfLabel, prime: HnfLabel, k: u8) -> PathBuf {
        self.root.join("hecke").join(stem(level)).join(format!("T{}_{k}.txt", stem(prime)))
    }

    pub fn cohomology(&self, level: HnfLabel) -> Option<usize> {
        fs::read_to_string(self.cohomology_path(level)).ok()?.trim().parse().ok()
    }

    pub fn put_cohomology(&self, level: HnfLabel, dim: usize) -> io::Result<()> {
        write_atomic(&self.cohomology_path(level), &format!("{dim}\n"))
    }

    pub fn hecke(&self, level: HnfLabel, prime: HnfLabel, k: u8) -> Option<QMat> {
        QMat::from_text(&fs::read_to_string(self.hecke_path(level, prime, k)).ok()?).ok()
    }

    pub fn put_hecke(&self, level: HnfLabel, prime: HnfLabel, k: u8, m: &QMat) -> io::Result<()> {
        write_atomic(&self.hecke_path(level, prime, k), &m.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().to_path_buf());
        let l = HnfLabel::new(73, 8, 1);
        let p = HnfLabel::new(3, 1, 1);
        assert_eq!(cache.cohomology(l), None);
        cache.put_cohomology(l, 2).unwrap();
        assert_eq!(cache.cohomology(l), Some(2));
        let m = QMat::from_text("2 2\n1 -1/2\n0 3\n").unwrap();
        cache.put_hecke(l, p, 2, &m).unwrap();
        assert_eq!(cache.hecke(l, p, 2), Some(m));
        assert_eq!(cache.hecke(l, p, 1), None);
    }
}
