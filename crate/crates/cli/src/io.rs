use ovals_core::{Error, Result};
use serde::Serialize;
use std::path::Path;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

/// One header row from the field names, then one row per record. Floats use the
/// shortest representation that reads back to the same value.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
pub struct ProfileRow {
    pub z: f64,
    pub f: f64,
}

#[derive(Serialize)]
pub struct BryantRow {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
    pub k_orb: f64,
    pub k_rad: f64,
    pub scalar: f64,
}

#[derive(Serialize)]
pub struct BarrierRow {
    pub s: f64,
    pub psi: f64,
    pub n: f64,
}

pub const PROFILE_HEADER: [&str; 2] = ["z", "f"];
pub const HISTORY_HEADER: [&str; 6] = ["t", "r_max", "d_tip_left", "d_tip_right", "R_tip_left", "R_tip_right"];
pub const SPECTRAL_HEADER: [&str; 7] = ["tau", "alpha", "gamma_plus", "gamma_zero", "gamma_minus", "delta", "rho_max"];
pub const BRYANT_HEADER: [&str; 6] = ["r", "phi", "z", "k_orb", "k_rad", "R"];
pub const BARRIER_HEADER: [&str; 3] = ["s", "psi", "N_of_psi"];
pub const SCAN_HEADER: [&str; 3] = ["item", "t_or_y", "ratio"];
pub const BOUND_HEADER: [&str; 4] = ["mu", "lhs", "rhs", "pass"];
