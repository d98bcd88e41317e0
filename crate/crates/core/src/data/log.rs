use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const HEADER: &str = "iteration,loss";

/// Append-only `iteration,loss` CSV.
#[derive(Debug)]
pub struct LossLog {
    path: PathBuf,
    file: File,
}

impl LossLog {
    /// Opens `path` for appending. Rows past `keep_through` (written after the
    /// checkpoint being resumed from) are dropped so the log stays monotone.
    pub fn open(path: &Path, keep_through: u64) -> Result<Self> {
        let existing = if path.exists() { read_loss_log(path)? } else { vec![] };
        let kept: Vec<_> = existing.iter().filter(|(i, _)| *i <= keep_through).collect();
        if kept.len() != existing.len() || existing.is_empty() {
            let mut text = format!("{HEADER}\n");
            for (i, l) in kept {
                text.push_str(&format!("{i},{l}\n"));
            }
            std::fs::write(path, text)?;
        }
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(Self { path: path.to_path_buf(), file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, iteration: u64, loss: f64) -> Result<()> {
        writeln!(self.file, "{iteration},{loss}")?;
        self.file.flush()?;
        Ok(())
    }
}

pub fn read_loss_log(path: &Path) -> Result<Vec<(u64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(HEADER) => {}
        _ => return Err(Error::Data(format!("{}: expected header `{HEADER}`", path.display()))),
    }
    lines
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(n, l)| {
            let bad = || Error::Data(format!("{}: row {}: `{l}`", path.display(), n + 2));
            let (i, v) = l.split_once(',').ok_or_else(bad)?;
            Ok((i.parse().map_err(|_| bad())?, v.parse().map_err(|_| bad())?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resume_drops_rows_past_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("loss.csv");
        let mut log = LossLog::open(&p, 0).unwrap();
        for i in [10, 20, 30] {
            log.append(i, i as f64 * 0.5).unwrap();
        }
        drop(log);
        let mut log = LossLog::open(&p, 20).unwrap();
        log.append(30, 1.0).unwrap();
        assert_eq!(read_loss_log(&p).unwrap(), vec![(10, 5.0), (20, 10.0), (30, 1.0)]);
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("iteration,loss\n"));
    }
}
