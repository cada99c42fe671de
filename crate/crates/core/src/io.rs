//! CSV export/import of nodal fields and their JSON metadata sidecars.
//!
//! One node per row in storage order. Polar grids write `r,theta,...`,
//! rectangles `x,y,...`. Floats are written in shortest round-trip form so
//! identical fields always produce identical bytes.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Domain, ScalarField, VectorField};

fn coord_header(d: &Domain) -> [&'static str; 2] {
    if d.is_polar() {
        ["r", "theta"]
    } else {
        ["x", "y"]
    }
}

fn coords(d: &Domain, k: usize) -> (f64, f64) {
    let (i, j) = d.split(k);
    (d.coord1(i), d.coord2(j))
}

pub fn write_scalar_csv<W: Write>(f: &ScalarField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let [a, b] = coord_header(&f.domain);
    w.write_record([a, b, "value"])?;
    for (k, v) in f.values.iter().enumerate() {
        let (c1, c2) = coords(&f.domain, k);
        w.write_record([c1.to_string(), c2.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector_csv<W: Write>(f: &VectorField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let [a, b] = coord_header(&f.domain);
    w.write_record([a, b, "vx", "vy"])?;
    for k in 0..f.domain.len() {
        let (c1, c2) = coords(&f.domain, k);
        w.write_record([c1.to_string(), c2.to_string(), f.x[k].to_string(), f.y[k].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_scalar_csv(f: &ScalarField, path: &Path) -> Result<()> {
    write_scalar_csv(f, std::fs::File::create(path)?)
}

pub fn save_vector_csv(f: &VectorField, path: &Path) -> Result<()> {
    write_vector_csv(f, std::fs::File::create(path)?)
}

/// Reads a scalar field written in the export format onto `domain`.
///
/// Node coordinates must match the grid to within `1e-9` relative.
pub fn read_scalar_csv<R: Read>(domain: Domain, name: &str, input: R) -> Result<ScalarField> {
    let mut rdr = csv::Reader::from_reader(input);
    let expected = coord_header(&domain);
    let headers = rdr.headers()?.clone();
    if headers.len() != 3 || headers[0].trim() != expected[0] || headers[1].trim() != expected[1] {
        return Err(Error::Domain(format!(
            "field header {:?} does not match grid (expected {},{},value)",
            headers.iter().collect::<Vec<_>>(),
            expected[0],
            expected[1]
        )));
    }
    let mut values = Vec::with_capacity(domain.len());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if k >= domain.len() {
            return Err(Error::Shape { expected: domain.len(), got: k + 1 });
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Domain(format!("row {}: {e}", k + 1)));
        let (c1, c2) = coords(&domain, k);
        let (r1, r2) = (parse(&rec[0])?, parse(&rec[1])?);
        let scale = 1.0 + c1.abs().max(c2.abs());
        if (r1 - c1).abs() > 1e-9 * scale || (r2 - c2).abs() > 1e-9 * scale {
            return Err(Error::Domain(format!(
                "row {}: node ({r1}, {r2}) does not match grid node ({c1}, {c2})",
                k + 1
            )));
        }
        values.push(parse(&rec[2])?);
    }
    ScalarField::new(domain, name, values)
}

pub fn load_scalar_csv(domain: Domain, name: &str, path: &Path) -> Result<ScalarField> {
    read_scalar_csv(domain, name, std::fs::File::open(path)?)
}

/// Metadata written next to each exported field.
#[derive(Debug, Clone, Serialize)]
pub struct FieldMetadata {
    pub name: String,
    pub units: String,
    pub domain: Domain,
    pub nodes: usize,
    pub layout: &'static str,
    pub created_unix_seconds: u64,
}

impl FieldMetadata {
    pub fn for_field(f: &ScalarField) -> Self {
        FieldMetadata {
            name: f.name.clone(),
            units: f.units.clone(),
            domain: f.domain,
            nodes: f.domain.len(),
            layout: "row-major, first axis outer",
            created_unix_seconds: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}
