//! Space-time cubes and the block-maxima pipeline.
//!
//! Input CSV has the column line `t,x,y,value` (optionally `,time_label`)
//! followed by one row per cell. Indices are zero-based and every
//! `(t, x, y)` must appear exactly once.

use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::LatticeField;

/// Values indexed `(t, x, y)`, stored with `y` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    nx: usize,
    ny: usize,
    n_times: usize,
    values: Vec<f64>,
    time_labels: Option<Vec<String>>,
}

impl SpaceTimeGrid {
    pub fn new(
        nx: usize,
        ny: usize,
        n_times: usize,
        values: Vec<f64>,
        time_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 || n_times == 0 {
            return Err(Error::invalid(format!("empty cube {n_times}x{nx}x{ny}")));
        }
        let n = n_times
            .checked_mul(nx)
            .and_then(|v| v.checked_mul(ny))
            .ok_or_else(|| Error::invalid("cube size overflows"))?;
        if values.len() != n {
            return Err(Error::invalid(format!("{} values for cube {n_times}x{nx}x{ny}", values.len())));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("values must be finite and nonnegative, got {bad}")));
        }
        if let Some(labels) = &time_labels {
            if labels.len() != n_times {
                return Err(Error::invalid(format!("{} time labels for {n_times} times", labels.len())));
            }
        }
        Ok(Self {
            nx,
            ny,
            n_times,
            values,
            time_labels,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn time_labels(&self) -> Option<&[String]> {
        self.time_labels.as_deref()
    }

    pub fn get(&self, t: usize, x: usize, y: usize) -> f64 {
        self.values[(t * self.nx + x) * self.ny + y]
    }

    /// The `nx x ny` slice at time `t`.
    pub fn slice(&self, t: usize) -> &[f64] {
        let n = self.nx * self.ny;
        &self.values[t * n..(t + 1) * n]
    }
}

pub fn spatial_block_max(grid: &SpaceTimeGrid, k: usize) -> Result<SpaceTimeGrid> {
    let (nx, ny) = grid.dims();
    if k == 0 || nx % k != 0 || ny % k != 0 {
        return Err(Error::NonDivisibleBlock { block: k, nx, ny });
    }
    let (bx, by) = (nx / k, ny / k);
    let mut out = vec![0.0f64; grid.n_times * bx * by];
    for t in 0..grid.n_times {
        let src = grid.slice(t);
        let dst = &mut out[t * bx * by..(t + 1) * bx * by];
        for x in 0..nx {
            for y in 0..ny {
                let cell = &mut dst[(x / k) * by + y / k];
                *cell = cell.max(src[x * ny + y]);
            }
        }
    }
    SpaceTimeGrid::new(bx, by, grid.n_times, out, grid.time_labels.clone())
}

/// One field per window, each cell the maximum over the window's times.
pub fn temporal_max(grid: &SpaceTimeGrid, windows: &[Range<usize>]) -> Result<Vec<LatticeField>> {
    if windows.is_empty() {
        return Err(Error::invalid("no time windows given"));
    }
    let n = grid.nx * grid.ny;
    windows
        .iter()
        .map(|w| {
            if w.start >= w.end || w.end > grid.n_times {
                return Err(Error::WindowOutOfRange {
                    start: w.start,
                    end: w.end,
                    n_times: grid.n_times,
                });
            }
            let mut acc = vec![0.0f64; n];
            for t in w.clone() {
                for (a, &v) in acc.iter_mut().zip(grid.slice(t)) {
                    *a = a.max(v);
                }
            }
            LatticeField::new(vec![grid.nx, grid.ny], acc)
        })
        .collect()
}

fn parse_index(tok: &str, line: usize, what: &str) -> Result<usize> {
    let i: usize = tok
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {what} index {tok:?}")))?;
    if i >= 1 << 24 {
        return Err(Error::parse(line, format!("{what} index {i} too large")));
    }
    Ok(i)
}

pub fn parse_spacetime(text: &str) -> Result<SpaceTimeGrid> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (n, cols) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let with_labels = match cols.trim() {
        "t,x,y,value" => false,
        "t,x,y,value,time_label" => true,
        other => {
            return Err(Error::parse(
                n,
                format!("expected columns \"t,x,y,value[,time_label]\", got {other:?}"),
            ))
        }
    };
    let width = if with_labels { 5 } else { 4 };

    let mut rows: Vec<(usize, usize, usize, f64, usize)> = Vec::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    let (mut nt, mut nx, mut ny) = (0usize, 0usize, 0usize);
    for (n, line) in lines {
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != width {
            return Err(Error::parse(n, format!("expected {width} fields, got {}", toks.len())));
        }
        let t = parse_index(toks[0], n, "t")?;
        let x = parse_index(toks[1], n, "x")?;
        let y = parse_index(toks[2], n, "y")?;
        let v: f64 = toks[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(n, format!("bad value {:?}", toks[3])))?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::parse(n, format!("value must be finite and nonnegative, got {:?}", toks[3])));
        }
        if with_labels {
            if labels.len() <= t {
                labels.resize(t + 1, None);
            }
            let label = toks[4].trim();
            match &labels[t] {
                Some(prev) if prev != label => {
                    return Err(Error::parse(n, format!("time {t} labelled both {prev:?} and {label:?}")))
                }
                Some(_) => {}
                None => labels[t] = Some(label.to_string()),
            }
        }
        nt = nt.max(t + 1);
        nx = nx.max(x + 1);
        ny = ny.max(y + 1);
        rows.push((t, x, y, v, n));
    }
    let total = nt
        .checked_mul(nx)
        .and_then(|v| v.checked_mul(ny))
        .filter(|&v| v > 0)
        .ok_or_else(|| Error::parse(0, format!("unusable cube {nt}x{nx}x{ny}")))?;
    // Fewer rows than cells means a hole; checked before allocating.
    if rows.len() < total {
        return Err(Error::parse(0, format!("{} rows for a {nt}x{nx}x{ny} cube", rows.len())));
    }
    let mut values = vec![f64::NAN; total];
    let mut seen = vec![false; total];
    for &(t, x, y, v, n) in &rows {
        let i = (t * nx + x) * ny + y;
        if seen[i] {
            return Err(Error::parse(n, format!("duplicate cell t={t}, x={x}, y={y}")));
        }
        seen[i] = true;
        values[i] = v;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let (t, x, y) = (i / (nx * ny), (i / ny) % nx, i % ny);
        return Err(Error::parse(0, format!("no value for t={t}, x={x}, y={y}")));
    }
    let time_labels = if with_labels {
        Some(labels.into_iter().map(|l| l.expect("every time has a row")).collect())
    } else {
        None
    };
    SpaceTimeGrid::new(nx, ny, nt, values, time_labels)
}

pub fn read_spacetime_file(path: &Path) -> Result<SpaceTimeGrid> {
    parse_spacetime(&std::fs::read_to_string(path)?)
}
