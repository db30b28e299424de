//! Point-cloud CSV: header `x,y,z` (or `x1,..,xN` off three dimensions),
//! one row per point, 17 significant digits, `.` decimal separator.

use std::io::{BufRead, Write};

use super::cloud::PointSet;
use super::GeometryError;

/// Round-trip exact, locale independent.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn header(dim: usize) -> Vec<String> {
    match dim {
        1..=3 => ["x", "y", "z"][..dim].iter().map(|s| s.to_string()).collect(),
        _ => (1..=dim).map(|i| format!("x{i}")).collect(),
    }
}

fn io_err(e: std::io::Error) -> GeometryError {
    GeometryError::Io(e.to_string())
}

pub fn write_points_csv<W: Write>(mut w: W, points: &PointSet) -> Result<(), GeometryError> {
    writeln!(w, "{}", header(points.dim()).join(",")).map_err(io_err)?;
    for p in points.iter() {
        let row: Vec<String> = p.iter().map(|&v| format_f64(v)).collect();
        writeln!(w, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// Points plus one value column, e.g. heat-map data `x,y,z,value`.
pub fn write_values_csv<W: Write>(
    mut w: W,
    points: &PointSet,
    values: &[f64],
    value_name: &str,
) -> Result<(), GeometryError> {
    if values.len() != points.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    let mut head = header(points.dim());
    head.push(value_name.to_string());
    writeln!(w, "{}", head.join(",")).map_err(io_err)?;
    for (p, &v) in points.iter().zip(values) {
        let mut row: Vec<String> = p.iter().map(|&c| format_f64(c)).collect();
        row.push(format_f64(v));
        writeln!(w, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_points_csv<R: BufRead>(r: R) -> Result<PointSet, GeometryError> {
    let mut lines = r.lines();
    let head = lines
        .next()
        .ok_or_else(|| GeometryError::Csv("missing header".into()))?
        .map_err(io_err)?;
    let dim = head.split(',').count();
    if head.split(',').map(str::trim).collect::<Vec<_>>() != header(dim) {
        return Err(GeometryError::Csv(format!("unexpected header `{head}`")));
    }
    let mut coords = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| GeometryError::Csv(format!("row {}: {e}", i + 1)))?;
        if row.len() != dim {
            return Err(GeometryError::Csv(format!("row {} has {} fields", i + 1, row.len())));
        }
        coords.extend(row);
    }
    PointSet::new(dim, coords)
}
