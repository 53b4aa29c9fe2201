//! Nodal scalar fields and their on-disk formats.
//!
//! CSV files carry one row per domain node with columns `x,y,value`.
//! Binary blocks are a single JSON header line followed by the row-major
//! little-endian `f64` values of every grid node.

use std::io::{BufRead, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{Grid, GridMeta, Mask};

/// One real value per grid node. Values off the closed domain are carried but
/// never read by the numerical routines.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch);
        }
        if let Some(k) = (0..values.len()).find(|&k| grid.in_domain(k) && !values[k].is_finite()) {
            return Err(LabError::InvalidArgument(format!("non-finite value at node {k}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> ScalarField {
        let n = grid.len();
        ScalarField { grid, values: vec![c; n] }
    }

    pub fn zeros(grid: Arc<Grid>) -> ScalarField {
        ScalarField::constant(grid, 0.0)
    }

    /// Evaluates `f(x, y)` at every domain node; exterior nodes get zero.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let values = (0..grid.len())
            .map(|k| {
                if grid.in_domain(k) {
                    let (x, y) = grid.coords(k);
                    f(x, y)
                } else {
                    0.0
                }
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.check_same_grid(other)?;
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, t: f64) -> ScalarField {
        self.map(|v| t * v)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a + b)
    }

    /// Largest absolute value over the domain nodes.
    pub fn max_abs(&self) -> f64 {
        self.grid.domain_nodes().map(|k| self.values[k].abs()).fold(0.0, f64::max)
    }

    pub fn min_over(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&k| self.values[k]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_over(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&k| self.values[k]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Keeps boundary values and zeroes everything else.
    pub fn boundary_trace(&self) -> ScalarField {
        let mut values = vec![0.0; self.values.len()];
        for &b in self.grid.boundary_nodes() {
            values[b] = self.values[b];
        }
        ScalarField { grid: self.grid.clone(), values }
    }

    pub fn write_csv(&self, path: &Path, header_comment: Option<&str>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv_to(&mut out, header_comment)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_csv_to(&self, out: &mut impl Write, header_comment: Option<&str>) -> Result<()> {
        if let Some(c) = header_comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "x,y,value")?;
        for k in self.grid.domain_nodes() {
            let (x, y) = self.grid.coords(k);
            writeln!(out, "{x},{y},{}", self.values[k])?;
        }
        Ok(())
    }

    /// Reads a CSV written by [`ScalarField::write_csv`] onto a matching grid.
    pub fn read_csv(grid: Arc<Grid>, path: &Path) -> Result<ScalarField> {
        let file = std::fs::File::open(path).map_err(|e| LabError::MissingInput(format!("{}: {e}", path.display())))?;
        let mut values = vec![0.0; grid.len()];
        let mut seen = 0usize;
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("x,") {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
            if cols.len() != 3 {
                return Err(LabError::Io(format!("{}: expected 3 columns", path.display())));
            }
            let k = grid.nearest_node(cols[0], cols[1]).ok_or(LabError::GridMismatch)?;
            let (x, y) = grid.coords(k);
            if (x - cols[0]).abs() > 1e-6 * grid.spacing() || (y - cols[1]).abs() > 1e-6 * grid.spacing() {
                return Err(LabError::GridMismatch);
            }
            values[k] = cols[2];
            seen += 1;
        }
        if seen != grid.domain_nodes().count() {
            return Err(LabError::GridMismatch);
        }
        ScalarField::from_values(grid, values)
    }

    pub fn write_binary(&self, path: &Path, name: &str, config_hash: Option<&str>) -> Result<()> {
        let header = BinaryHeader {
            name: name.to_string(),
            grid: self.grid.meta(),
            dtype: "float64-le".into(),
            order: "row-major".into(),
            shape: [self.grid.ny(), self.grid.nx()],
            config_hash: config_hash.map(str::to_string),
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<(BinaryHeader, ScalarField)> {
        let file = std::fs::File::open(path).map_err(|e| LabError::MissingInput(format!("{}: {e}", path.display())))?;
        let mut reader = std::io::BufReader::new(file);
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let header: BinaryHeader = serde_json::from_str(line.trim_end())?;
        let grid = Arc::new(Grid::new(header.grid.domain.clone(), header.grid.resolution)?);
        if grid.nx() != header.shape[1] || grid.ny() != header.shape[0] {
            return Err(LabError::GridMismatch);
        }
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != grid.len() * 8 {
            return Err(LabError::Io(format!("{}: truncated block", path.display())));
        }
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        Ok((header, ScalarField::from_values(grid, values)?))
    }
}

/// JSON header preceding a binary field block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryHeader {
    pub name: String,
    pub grid: GridMeta,
    pub dtype: String,
    pub order: String,
    pub shape: [usize; 2],
    #[serde(default)]
    pub config_hash: Option<String>,
}

/// Export a mask as CSV rows `x,y,tag`.
pub fn write_mask_csv(grid: &Grid, masks: &[(&Mask, &str)], out: &mut impl Write) -> Result<()> {
    writeln!(out, "x,y,tag")?;
    for (mask, tag) in masks {
        for &k in mask.nodes() {
            let (x, y) = grid.coords(k);
            writeln!(out, "{x},{y},{tag}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_and_csv_round_trip(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let grid = Arc::new(Grid::new(Domain::LShape, 17).unwrap());
            let f = ScalarField::from_fn(grid.clone(), |x, y| a * x.sin() + b * y * y);
            let dir = tempfile::tempdir().unwrap();
            let bin = dir.path().join("f.bin");
            f.write_binary(&bin, "f", Some("abc")).unwrap();
            let (header, g) = ScalarField::read_binary(&bin).unwrap();
            prop_assert_eq!(header.config_hash.as_deref(), Some("abc"));
            prop_assert_eq!(g.values(), f.values());
            let csv = dir.path().join("f.csv");
            f.write_csv(&csv, Some("config_sha256=abc")).unwrap();
            let c = ScalarField::read_csv(grid, &csv).unwrap();
            prop_assert_eq!(c.values(), f.values());
        }
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = ScalarField::constant(Arc::new(Grid::new(Domain::UnitSquare, 17).unwrap()), 1.0);
        let b = ScalarField::constant(Arc::new(Grid::new(Domain::UnitSquare, 33).unwrap()), 1.0);
        assert_eq!(a.sub(&b).unwrap_err(), LabError::GridMismatch);
    }
}
