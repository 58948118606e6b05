//! CSV and manifest artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::batch::BatchTrajectory;
use crate::error::{Error, Result};

/// Formats a real with 17 significant digits in the style of C's `%.17g`.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Serializes a trajectory as CSV: `step, replica, <metric columns>`.
pub fn write_csv<W: Write>(traj: &BatchTrajectory, out: W) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string(), "replica".to_string()];
    header.extend(traj.columns.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    let mut n = 0;
    for row in &traj.rows {
        for record in &row.records {
            let mut fields = vec![row.step.to_string(), row.replica.to_string()];
            fields.extend(record.iter().map(|&v| format_g17(v)));
            w.write_record(&fields).map_err(csv_err)?;
            n += 1;
        }
    }
    w.flush()?;
    Ok(n)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: RunConfig,
    /// Keys of the per-replica seeds, in replica order.
    pub replica_seeds: Vec<u64>,
    pub columns: Vec<String>,
    pub csv: PathBuf,
    pub rows: usize,
}

/// Manifest path paired with a CSV path: `out.csv` becomes `out.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes `path` via a sibling temporary file that is renamed into place on
/// success and removed on failure.
pub fn write_atomically(path: &Path, f: impl FnOnce(&mut fs::File) -> Result<()>) -> Result<()> {
    let tmp = partial_path(path);
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        f(&mut file)?;
        file.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (100.0, "100"),
            (0.1, "0.10000000000000001"),
            (-2.5, "-2.5"),
            (1e20, "1e+20"),
            (1.5e-7, "1.4999999999999999e-07"),
            (0.0, "0"),
            (600.0, "600"),
            (123456789.25, "123456789.25"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g17(v), s, "{v}");
        }
    }

    #[test]
    fn g17_round_trips() {
        for v in [0.1, 1.0 / 3.0, 99.98046875, 1e-300, f64::MAX, -7.25e15] {
            assert_eq!(format_g17(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let r = write_atomically(&path, |f| {
            f.write_all(b"half")?;
            Err(Error::Io("boom".into()))
        });
        assert!(r.is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
