//! Scalar fields over a (φ, jz/J) grid on a Poincaré surface.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell-centred lattice over `φ ∈ [0, 2π)` and `jz/J ∈ [jz_min, jz_max]`.
/// Points are ordered row-major with rows of constant `jz/J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapGrid {
    pub n_phi: usize,
    pub n_jz: usize,
    #[serde(default = "default_jz_min")]
    pub jz_min: f64,
    #[serde(default = "default_jz_max")]
    pub jz_max: f64,
}

fn default_jz_min() -> f64 {
    -1.0
}

fn default_jz_max() -> f64 {
    1.0
}

impl MapGrid {
    pub fn new(n_phi: usize, n_jz: usize) -> Self {
        Self {
            n_phi,
            n_jz,
            jz_min: -1.0,
            jz_max: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_phi == 0 || self.n_jz == 0 {
            return Err(Error::InvalidArgument(
                "map grid must have at least one cell".into(),
            ));
        }
        if !(self.jz_min >= -1.0 && self.jz_max <= 1.0 && self.jz_min < self.jz_max) {
            return Err(Error::InvalidArgument(format!(
                "jz range [{}, {}] must lie inside [-1, 1]",
                self.jz_min, self.jz_max
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_phi * self.n_jz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(φ, jz/J)` of point `index`.
    pub fn coords(&self, index: usize) -> (f64, f64) {
        let (row, col) = (index / self.n_phi, index % self.n_phi);
        let phi = TAU * (col as f64 + 0.5) / self.n_phi as f64;
        let dj = (self.jz_max - self.jz_min) / self.n_jz as f64;
        (phi, self.jz_min + dj * (row as f64 + 0.5))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    /// Outside the energy shell: no surface point.
    OffShell,
    /// The computation failed (truncation, integration error).
    Failed,
    /// Exceeded the per-point work budget.
    Timeout,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::OffShell => "off_shell",
            PointStatus::Failed => "failed",
            PointStatus::Timeout => "timeout",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ok" => PointStatus::Ok,
            "off_shell" => PointStatus::OffShell,
            "failed" => PointStatus::Failed,
            "timeout" => PointStatus::Timeout,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub value: f64,
    pub status: PointStatus,
}

impl MapRecord {
    pub fn ok(value: f64) -> Self {
        Self {
            value,
            status: PointStatus::Ok,
        }
    }

    pub fn missing(status: PointStatus) -> Self {
        Self {
            value: f64::NAN,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarMap {
    pub grid: MapGrid,
    pub records: Vec<MapRecord>,
}

impl ScalarMap {
    pub fn value(&self, index: usize) -> Option<f64> {
        let r = self.records[index];
        (r.status == PointStatus::Ok).then_some(r.value)
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.records
            .iter()
            .filter(|r| r.status == PointStatus::Ok)
            .map(|r| r.value)
    }

    pub fn count(&self, status: PointStatus) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    /// Fraction of present points whose value exceeds `threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        let (n, k) = self.present().fold((0usize, 0usize), |(n, k), v| {
            (n + 1, k + usize::from(v > threshold))
        });
        if n == 0 {
            0.0
        } else {
            k as f64 / n as f64
        }
    }

    pub fn median(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.present().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("phi,jz_tilde,value,status\n");
        for (i, r) in self.records.iter().enumerate() {
            let (phi, jt) = self.grid.coords(i);
            let value = if r.status == PointStatus::Ok {
                format!("{:.16e}", r.value)
            } else {
                "nan".to_string()
            };
            let _ = writeln!(s, "{phi:.16e},{jt:.16e},{value},{}", r.status.as_str());
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parse a map written by [`ScalarMap::to_csv`] for the given grid.
    pub fn from_csv(text: &str, grid: MapGrid) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("phi,jz_tilde,value,status") {
            return Err(Error::InvalidArgument("missing map header".into()));
        }
        let mut records = Vec::with_capacity(grid.len());
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || Error::InvalidArgument(format!("malformed map line {}: {line}", i + 2));
            if cols.len() != 4 {
                return Err(bad());
            }
            let status = PointStatus::parse(cols[3]).ok_or_else(bad)?;
            let value = cols[2].parse::<f64>().map_err(|_| bad())?;
            records.push(MapRecord { value, status });
        }
        if records.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} records for a grid of {}",
                records.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coords_are_cell_centred() {
        let g = MapGrid::new(4, 2);
        assert_eq!(g.coords(0), (TAU / 8.0, -0.5));
        assert_eq!(g.coords(7), (TAU * 7.0 / 8.0, 0.5));
    }

    #[test]
    fn csv_round_trip() {
        let g = MapGrid::new(3, 2);
        let m = ScalarMap {
            grid: g,
            records: vec![
                MapRecord::ok(0.1 + 0.2),
                MapRecord::missing(PointStatus::OffShell),
                MapRecord::ok(-1.0 / 3.0),
                MapRecord::ok(1e-300),
                MapRecord::missing(PointStatus::Timeout),
                MapRecord::ok(7.0),
            ],
        };
        let back = ScalarMap::from_csv(&m.to_csv(), g).unwrap();
        for (a, b) in m.records.iter().zip(&back.records) {
            assert_eq!(a.status, b.status);
            if a.status == PointStatus::Ok {
                assert_eq!(a.value.to_bits(), b.value.to_bits());
            }
        }
    }
}
