//! On-disk formats: field CSV with a JSON sidecar, cone profiles, reports
//! and the per-run manifest. Floats are written with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use hypmin::asymptotics::AsymptoticsReport;
use hypmin::cone_profile::ConeProfile;
use hypmin::elliptic_solver::{GridField, SolverMeta};
use hypmin::geometry::{DomainSpec, Point};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot write {path}: {reason}")]
    WriteFailure { path: PathBuf, reason: String },
    #[error("cannot read {path}: {reason}")]
    ReadFailure { path: PathBuf, reason: String },
    #[error("malformed {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, IoError>;

fn write_err(path: &Path, e: impl ToString) -> IoError {
    IoError::WriteFailure {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn read_err(path: &Path, e: impl ToString) -> IoError {
    IoError::ReadFailure {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn malformed(path: &Path, e: impl ToString) -> IoError {
    IoError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| write_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| write_err(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| malformed(path, e))
}

/// Domain configuration file: a JSON [`DomainSpec`].
pub fn read_domain(path: &Path) -> Result<DomainSpec> {
    read_json(path)
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_err(path, e))?;
    w.write_record(header).map_err(|e| write_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| read_err(path, e))?;
    let found: Vec<String> = r
        .headers()
        .map_err(|e| malformed(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(malformed(path, format!("header {found:?}, expected {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| malformed(path, e))?;
            rec.iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| malformed(path, format!("{s:?}: {e}")))
                })
                .collect()
        })
        .collect()
}

/// Sidecar of a field CSV: everything needed to rebuild the lattice.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FieldMetadata {
    pub domain: DomainSpec,
    pub domain_hash: String,
    pub origin: [f64; 2],
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub boundary_value: f64,
    pub exponent: f64,
    pub solver: SolverMeta,
}

const FIELD_HEADER: [&str; 5] = ["i", "j", "x", "y", "f"];

/// Writes `<stem>.csv` (one row per lattice node, `f = 0` outside) and
/// `<stem>.json`. Returns both paths.
pub fn write_field(dir: &Path, stem: &str, field: &GridField) -> Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let rows = (0..field.ny).flat_map(|j| {
        (0..field.nx).map(move |i| {
            let p = field.node_point(i, j);
            vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(field.values[field.index(i, j)]),
            ]
        })
    });
    write_rows(&csv_path, &FIELD_HEADER, rows)?;
    let meta = FieldMetadata {
        domain: field.domain_spec().clone(),
        domain_hash: field.domain_spec().hash(),
        origin: [field.origin.x, field.origin.y],
        spacing: field.spacing,
        nx: field.nx,
        ny: field.ny,
        boundary_value: field.boundary_value,
        exponent: field.exponent,
        solver: field.meta.clone(),
    };
    write_json(&json_path, &meta)?;
    Ok((csv_path, json_path))
}

/// Reads a field from its sidecar; the CSV is the sibling with the same
/// stem.
pub fn read_field(json_path: &Path) -> Result<GridField> {
    let meta: FieldMetadata = read_json(json_path)?;
    let csv_path = json_path.with_extension("csv");
    let rows = read_rows(&csv_path, &FIELD_HEADER)?;
    if rows.len() != meta.nx * meta.ny {
        return Err(malformed(
            &csv_path,
            format!("{} rows for a {} x {} lattice", rows.len(), meta.nx, meta.ny),
        ));
    }
    let mut values = vec![f64::NAN; rows.len()];
    for row in &rows {
        let (i, j) = (row[0] as usize, row[1] as usize);
        if i >= meta.nx || j >= meta.ny {
            return Err(malformed(&csv_path, format!("node ({i}, {j}) outside the lattice")));
        }
        values[j * meta.nx + i] = row[4];
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(malformed(&csv_path, "missing nodes"));
    }
    GridField::from_lattice(
        meta.domain,
        Point::new(meta.origin[0], meta.origin[1]),
        meta.spacing,
        (meta.nx, meta.ny),
        values,
        meta.boundary_value,
        meta.exponent,
        meta.solver,
    )
    .map_err(|e| malformed(json_path, e))
}

const PROFILE_HEADER: [&str; 3] = ["theta", "h", "dh"];

/// Writes `<stem>.csv` with `theta, h, h'` and the complete profile as
/// `<stem>.json`.
pub fn write_profile(dir: &Path, stem: &str, profile: &ConeProfile) -> Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let rows = (0..profile.theta.len())
        .map(|k| vec![fmt_f64(profile.theta[k]), fmt_f64(profile.h[k]), fmt_f64(profile.dh[k])]);
    write_rows(&csv_path, &PROFILE_HEADER, rows)?;
    write_json(&json_path, profile)?;
    Ok((csv_path, json_path))
}

pub fn read_profile(json_path: &Path) -> Result<ConeProfile> {
    read_json(json_path)
}

/// Reads the `theta, h, h'` columns of a profile CSV.
pub fn read_profile_csv(path: &Path) -> Result<Vec<[f64; 3]>> {
    Ok(read_rows(path, &PROFILE_HEADER)?
        .into_iter()
        .map(|r| [r[0], r[1], r[2]])
        .collect())
}

const SERIES_HEADER: [&str; 2] = ["r", "e"];

/// Writes the report as `<stem>.json` and its series as `<stem>.csv`.
pub fn write_report(dir: &Path, stem: &str, report: &AsymptoticsReport) -> Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    write_rows(
        &csv_path,
        &SERIES_HEADER,
        report.series.iter().map(|p| vec![fmt_f64(p.r), fmt_f64(p.e)]),
    )?;
    write_json(&json_path, report)?;
    Ok((csv_path, json_path))
}

pub fn read_report(json_path: &Path) -> Result<AsymptoticsReport> {
    read_json(json_path)
}

pub fn read_series_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    Ok(read_rows(path, &SERIES_HEADER)?
        .into_iter()
        .map(|r| (r[0], r[1]))
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Record of one run: the command, its resolved configuration and the
/// files it wrote.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub exit_code: i32,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Hashes the listed files and writes `manifest.json` into `dir`.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    config: serde_json::Value,
    exit_code: i32,
    files: &[PathBuf],
) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(files.len());
    for f in files {
        let bytes = fs::read(f).map_err(|e| read_err(f, e))?;
        let rel = f.strip_prefix(dir).unwrap_or(f);
        entries.push(ManifestEntry {
            path: rel.to_string_lossy().into_owned(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let manifest = Manifest {
        tool: "hypmin".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config,
        exit_code,
        files: entries,
    };
    let path = dir.join(MANIFEST_NAME);
    write_json(&path, &manifest)?;
    Ok(path)
}
