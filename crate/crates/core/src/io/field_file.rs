//! Field files: one `# ` line holding a JSON header, then CSV.
//!
//! ```text
//! # {"kind":"lattice","dims":[3,2],"meta":{}}
//! x,y,value
//! 0,0,1.2000000000000000e0
//! ...
//! ```
//!
//! Lattice rows may come in any order but must cover every site exactly once;
//! the writer always emits row-major order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fmt_num;
use crate::error::{Error, Result};
use crate::field::{LatticeField, PointField, Region};
use crate::inference::Data;

/// Free-form provenance attached to a field (model, seed, window, ...).
pub type Meta = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldHeader {
    Lattice {
        dims: Vec<usize>,
        #[serde(default)]
        meta: Meta,
    },
    Points {
        region: Region,
        #[serde(default)]
        intensity_hint: Option<f64>,
        #[serde(default)]
        meta: Meta,
    },
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn column_line(d: usize) -> String {
    let mut s = AXES[..d].join(",");
    s.push_str(",value");
    s
}

pub fn render_field(data: &Data, meta: &Meta) -> String {
    let header = match data {
        Data::Lattice(f) => FieldHeader::Lattice {
            dims: f.dims().to_vec(),
            meta: meta.clone(),
        },
        Data::Points(p) => FieldHeader::Points {
            region: p.region(),
            intensity_hint: p.intensity_hint(),
            meta: meta.clone(),
        },
    };
    let mut out = String::new();
    out.push_str("# ");
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    match data {
        Data::Lattice(f) => {
            let dims = f.dims();
            out.push_str(&column_line(dims.len()));
            out.push('\n');
            let mut idx = vec![0usize; dims.len()];
            for &v in f.values() {
                for i in &idx {
                    let _ = write!(out, "{i},");
                }
                out.push_str(&fmt_num(v));
                out.push('\n');
                // Row-major increment, last axis fastest.
                for k in (0..dims.len()).rev() {
                    idx[k] += 1;
                    if idx[k] < dims[k] {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        Data::Points(p) => {
            out.push_str(&column_line(2));
            out.push('\n');
            for (loc, &v) in p.locations().iter().zip(p.values()) {
                let _ = writeln!(out, "{},{},{}", fmt_num(loc[0]), fmt_num(loc[1]), fmt_num(v));
            }
        }
    }
    out
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number {tok:?}")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::parse(line, format!("value must be finite and nonnegative, got {tok:?}")));
    }
    Ok(v)
}

fn parse_coord(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad coordinate {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("coordinate must be finite, got {tok:?}")));
    }
    Ok(v)
}

pub fn parse_field(text: &str) -> Result<(Data, Meta)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (n, first) = lines.next().ok_or_else(|| Error::parse(1, "empty field file"))?;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(n, "first line must be '# {json header}'"))?;
    let header: FieldHeader =
        serde_json::from_str(json.trim()).map_err(|e| Error::parse(n, format!("header: {e}")))?;
    let (d, cols) = match &header {
        FieldHeader::Lattice { dims, .. } => (dims.len(), column_line(dims.len())),
        FieldHeader::Points { .. } => (2, column_line(2)),
    };
    if d == 0 || d > 3 {
        return Err(Error::parse(n, format!("spatial dimension must be 1, 2 or 3, got {d}")));
    }
    let (n, col_line) = lines
        .next()
        .ok_or_else(|| Error::parse(n + 1, "missing column line"))?;
    if col_line.trim() != cols {
        return Err(Error::parse(n, format!("expected columns {cols:?}, got {col_line:?}")));
    }

    match header {
        FieldHeader::Lattice { dims, meta } => {
            let mut rows = Vec::new();
            for (n, line) in lines {
                let toks: Vec<&str> = line.split(',').collect();
                if toks.len() != d + 1 {
                    return Err(Error::parse(n, format!("expected {} fields, got {}", d + 1, toks.len())));
                }
                let mut flat = 0usize;
                for (k, tok) in toks[..d].iter().enumerate() {
                    let i: usize = tok
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(n, format!("bad index {tok:?}")))?;
                    if i >= dims[k] {
                        return Err(Error::parse(n, format!("index {i} outside axis of length {}", dims[k])));
                    }
                    flat = flat
                        .checked_mul(dims[k])
                        .and_then(|f| f.checked_add(i))
                        .ok_or_else(|| Error::parse(n, format!("grid {dims:?} too large")))?;
                }
                rows.push((flat, parse_value(toks[d], n)?, n));
            }
            // Checked before allocating, so a huge header cannot force a huge buffer.
            let total = dims
                .iter()
                .try_fold(1usize, |acc, &k| acc.checked_mul(k))
                .filter(|&t| t > 0 && t <= rows.len())
                .ok_or_else(|| Error::parse(0, format!("{} rows cannot fill grid {dims:?}", rows.len())))?;
            let mut values = vec![f64::NAN; total];
            let mut seen = vec![false; total];
            for (flat, v, n) in rows {
                if seen[flat] {
                    return Err(Error::parse(n, "duplicate site"));
                }
                seen[flat] = true;
                values[flat] = v;
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::parse(0, format!("site {missing} (row-major) has no value")));
            }
            Ok((Data::Lattice(LatticeField::new(dims, values)?), meta))
        }
        FieldHeader::Points {
            region,
            intensity_hint,
            meta,
        } => {
            let mut locations = Vec::new();
            let mut values = Vec::new();
            for (n, line) in lines {
                let toks: Vec<&str> = line.split(',').collect();
                if toks.len() != 3 {
                    return Err(Error::parse(n, format!("expected 3 fields, got {}", toks.len())));
                }
                let p = [parse_coord(toks[0], n)?, parse_coord(toks[1], n)?];
                if !(region.x0 <= p[0] && p[0] <= region.x1 && region.y0 <= p[1] && p[1] <= region.y1) {
                    return Err(Error::parse(n, format!("location {p:?} outside region")));
                }
                locations.push(p);
                values.push(parse_value(toks[2], n)?);
            }
            Ok((Data::Points(PointField::new(locations, values, region, intensity_hint)?), meta))
        }
    }
}

pub fn write_field_file(path: &Path, data: &Data, meta: &Meta) -> Result<()> {
    std::fs::write(path, render_field(data, meta))?;
    Ok(())
}

pub fn read_field_file(path: &Path) -> Result<(Data, Meta)> {
    parse_field(&std::fs::read_to_string(path)?)
}
