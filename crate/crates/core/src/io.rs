//! On-disk artifacts: time-series CSV, binary density snapshots, sweep
//! tables and contour polylines.
//!
//! Density snapshot layout (all little-endian):
//!
//! | offset | size          | content                       |
//! |--------|---------------|-------------------------------|
//! | 0      | 16            | `b"RINGSPLITDENS\0\0\0"`      |
//! | 16     | 8 + 8         | `n_x`, `n_y` as `u64`         |
//! | 32     | 8 + 8 + 8     | `dx`, `dy`, `t` as `f64`      |
//! | 56     | 8 n_x n_y     | densities as `f64`, row-major |
//!
//! Row-major means the value at `(x_i, y_j)` sits at index `i * n_y + j`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::analysis::SweepResult;
use crate::contour::ContourSet;
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::observables::TimeSeries;

pub const SNAPSHOT_MAGIC: &[u8; 16] = b"RINGSPLITDENS\0\0\0";
pub const SNAPSHOT_HEADER_LEN: usize = 56;

const TIMESERIES_HEADER: [&str; 7] = ["t", "ac1", "ac2", "S", "norm1", "norm2", "energy"];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

/// Writes a series with 17 significant digits per value.
pub fn write_timeseries(series: &TimeSeries, path: &Path) -> Result<()> {
    series.validate()?;
    let mut w = csv_writer(path)?;
    w.write_record(TIMESERIES_HEADER).map_err(|e| csv_error(path, e))?;
    for k in 0..series.len() {
        let row = [
            series.t[k],
            series.ac1[k],
            series.ac2[k],
            series.s[k],
            series.norm1[k],
            series.norm2[k],
            series.energy[k],
        ];
        w.write_record(row.map(fmt)).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_timeseries(path: &Path) -> Result<TimeSeries> {
    let bad = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(TIMESERIES_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut series = TimeSeries::default();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let mut v = [0.0; 7];
        if record.len() != 7 {
            return Err(bad(format!("row {} has {} fields", line + 2, record.len())));
        }
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: cannot parse {field:?}", line + 2)))?;
        }
        series.push(v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
    }
    Ok(series)
}

/// A density table read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySnapshot {
    pub dx: f64,
    pub dy: f64,
    pub t: f64,
    /// Shape `(n_x, n_y)`.
    pub density: Array2<f64>,
}

impl DensitySnapshot {
    /// Rectangle-rule integral of the density.
    pub fn integral(&self) -> f64 {
        self.density.sum() * self.dx * self.dy
    }
}

/// Serializes a density sampled on `grid` at time `t`.
pub fn encode_density_snapshot(grid: &Grid2D, density: &Array2<f64>, t: f64) -> Result<Vec<u8>> {
    if density.dim() != grid.shape() {
        return Err(Error::GridMismatch);
    }
    let mut out = Vec::with_capacity(SNAPSHOT_HEADER_LEN + 8 * density.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&(grid.n_x as u64).to_le_bytes());
    out.extend_from_slice(&(grid.n_y as u64).to_le_bytes());
    for v in [grid.dx, grid.dy, t] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in density.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_density_snapshot(bytes: &[u8]) -> std::result::Result<DensitySnapshot, String> {
    if bytes.len() < SNAPSHOT_HEADER_LEN {
        return Err(format!("file too short ({} bytes)", bytes.len()));
    }
    if &bytes[..16] != SNAPSHOT_MAGIC {
        return Err("bad magic".into());
    }
    let word = |k: usize| -> [u8; 8] { bytes[16 + 8 * k..24 + 8 * k].try_into().unwrap() };
    let n_x = u64::from_le_bytes(word(0)) as usize;
    let n_y = u64::from_le_bytes(word(1)) as usize;
    let dx = f64::from_le_bytes(word(2));
    let dy = f64::from_le_bytes(word(3));
    let t = f64::from_le_bytes(word(4));
    let expected = n_x
        .checked_mul(n_y)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(SNAPSHOT_HEADER_LEN))
        .ok_or("header size overflow")?;
    if bytes.len() != expected {
        return Err(format!("expected {expected} bytes for {n_x}x{n_y}, found {}", bytes.len()));
    }
    let values: Vec<f64> = bytes[SNAPSHOT_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let density = Array2::from_shape_vec((n_x, n_y), values).map_err(|e| e.to_string())?;
    Ok(DensitySnapshot { dx, dy, t, density })
}

pub fn write_density_snapshot(path: &Path, grid: &Grid2D, density: &Array2<f64>, t: f64) -> Result<()> {
    let bytes = encode_density_snapshot(grid, density, t)?;
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_density_snapshot(path: &Path) -> Result<DensitySnapshot> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_density_snapshot(&bytes).map_err(|msg| Error::Format {
        path: path.to_path_buf(),
        msg,
    })
}

/// `name.ext` becomes `name.ext.toml`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}

/// Writes a TOML sidecar: comment lines from `notes`, then `config_toml`.
pub fn write_sidecar(path: &Path, notes: &[String], config_toml: &str) -> Result<()> {
    let mut text = String::new();
    for n in notes {
        text.push_str("# ");
        text.push_str(n);
        text.push('\n');
    }
    text.push_str(config_toml);
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Long-format table `r0,a12,label,yield,peak_time`; failed cells are NaN.
pub fn write_sweep(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["r0", "a12", "label", "yield", "peak_time"])
        .map_err(|e| csv_error(path, e))?;
    for (i, &r0) in result.r0_values.iter().enumerate() {
        for (j, &a12) in result.a12_values.iter().enumerate() {
            let (v, t) = match &result.cells[i][j] {
                crate::analysis::CellResult::Ok { value, t } => (*value, *t),
                crate::analysis::CellResult::Failed(_) => (f64::NAN, f64::NAN),
            };
            w.write_record([fmt(r0), fmt(a12), result.target.name().to_string(), fmt(v), fmt(t)])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per vertex: `level,polyline,closed,vertex,r0,a12`.
pub fn write_contours(sets: &[ContourSet], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["level", "polyline", "closed", "vertex", "r0", "a12"])
        .map_err(|e| csv_error(path, e))?;
    for set in sets {
        for (k, line) in set.polylines.iter().enumerate() {
            for (m, &(x, y)) in line.points.iter().enumerate() {
                w.write_record([
                    fmt(set.level),
                    k.to_string(),
                    (line.closed as u8).to_string(),
                    m.to_string(),
                    fmt(x),
                    fmt(y),
                ])
                .map_err(|e| csv_error(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
