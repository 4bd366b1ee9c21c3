//! Two-column CSV used for decay curves, scans, visibility and Rabi data.
//!
//! Lines starting with `#` are comments. A first non-comment line that does
//! not parse as numbers is taken as the column header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct XyData {
    pub header: Option<(String, String)>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl XyData {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { header: None, x, y }
    }

    pub fn with_header(mut self, x: &str, y: &str) -> Self {
        self.header = Some((x.into(), y.into()));
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

pub fn read_xy_from<R: BufRead>(reader: R) -> Result<XyData> {
    let mut data = XyData::default();
    let mut seen_row = false;
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: n,
            msg: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::Parse {
                line: n,
                msg: format!("expected two comma-separated columns, got `{line}`"),
            });
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
                data.x.push(x);
                data.y.push(y);
                seen_row = true;
            }
            (Ok(_), Ok(_)) => {
                return Err(Error::Parse {
                    line: n,
                    msg: "non-finite value".into(),
                });
            }
            _ if !seen_row && data.header.is_none() => data.header = Some((a.into(), b.into())),
            _ => {
                return Err(Error::Parse {
                    line: n,
                    msg: format!("cannot parse `{line}` as two numbers"),
                })
            }
        }
    }
    Ok(data)
}

pub fn read_xy(path: impl AsRef<Path>) -> Result<XyData> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_xy_from(BufReader::new(f))
}

pub fn write_xy_to<W: Write>(data: &XyData, mut w: W) -> std::io::Result<()> {
    if let Some((a, b)) = &data.header {
        writeln!(w, "{a},{b}")?;
    }
    for (x, y) in data.x.iter().zip(&data.y) {
        writeln!(w, "{x},{y}")?;
    }
    w.flush()
}

pub fn write_xy(data: &XyData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_xy_to(data, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}
