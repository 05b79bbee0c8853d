//! Text formats for points and query workloads.
//!
//! Points: one per line, `d` comma-separated decimals. Workloads: one query
//! per line, `lo1,...,lod,hi1,...,hid`. Blank lines and lines starting with
//! `#` are skipped.

use std::io::BufRead;

use super::domain::{RangeQuery, SpatialDataset, SpatialDomain};
use crate::{Error, Result};

fn parse_rows<R: BufRead>(reader: R) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InputLine { line: i + 1, message: format!("not a finite number: {f:?}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((i + 1, row));
    }
    Ok(rows)
}

/// Raw point rows; all rows must have the same width.
pub fn read_points<R: BufRead>(reader: R) -> Result<Vec<Vec<f64>>> {
    let rows = parse_rows(reader)?;
    let width = rows.first().map_or(0, |r| r.1.len());
    rows.into_iter()
        .map(|(line, row)| {
            if row.len() == width {
                Ok(row)
            } else {
                Err(Error::InputLine { line, message: format!("expected {width} fields, found {}", row.len()) })
            }
        })
        .collect()
}

/// Points checked against `domain`, with the offending line on error.
pub fn read_dataset<R: BufRead>(reader: R, domain: SpatialDomain) -> Result<SpatialDataset> {
    let rows = parse_rows(reader)?;
    let d = domain.dims();
    let mut flat = Vec::with_capacity(rows.len() * d);
    for (line, row) in rows {
        if row.len() != d {
            return Err(Error::InputLine { line, message: format!("expected {d} fields, found {}", row.len()) });
        }
        if !domain.holds(&row, &domain) {
            return Err(Error::InputLine { line, message: format!("point {row:?} lies outside the domain") });
        }
        flat.extend(row);
    }
    SpatialDataset::from_flat(domain, flat)
}

/// Smallest box covering every point, widened slightly so that the maxima
/// stay inside. The result depends on the data and therefore leaks it; only
/// use it when the bounds are public anyway.
pub fn infer_domain(points: &[Vec<f64>]) -> Result<SpatialDomain> {
    let first = points.first().ok_or_else(|| Error::input("cannot infer a domain from no points"))?;
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in points {
        for (i, &x) in p.iter().enumerate() {
            lo[i] = lo[i].min(x);
            hi[i] = hi[i].max(x);
        }
    }
    for i in 0..lo.len() {
        if hi[i] <= lo[i] {
            hi[i] = lo[i] + 1.0;
        }
    }
    SpatialDomain::new(lo, hi)
}

pub fn read_workload<R: BufRead>(reader: R, dims: usize) -> Result<Vec<RangeQuery>> {
    parse_rows(reader)?
        .into_iter()
        .map(|(line, row)| {
            if row.len() != 2 * dims {
                return Err(Error::InputLine { line, message: format!("expected {} fields, found {}", 2 * dims, row.len()) });
            }
            let (lo, hi) = row.split_at(dims);
            RangeQuery::new(lo.to_vec(), hi.to_vec()).map_err(|e| Error::InputLine { line, message: e.to_string() })
        })
        .collect()
}

pub fn write_workload(queries: &[RangeQuery]) -> String {
    let mut out = String::new();
    for q in queries {
        let fields: Vec<String> = q.lo.iter().chain(&q.hi).map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
