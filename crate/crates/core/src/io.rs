//! Output writers: field snapshots (CSV, PGM), tabular CSV and atomic file
//! replacement.
//!
//! Snapshot CSVs are headerless, one grid row (`y` fixed) per line, values in
//! C `%.17g` form. Tabular CSVs use the shortest representation that parses
//! back to the same double. PGM images are binary (`P5`), 8-bit, linearly
//! scaled from the field minimum to maximum, with both recorded in a comment.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::spectral::Field;

/// Formats `x` as C's `printf("%.17g", x)`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Shortest round-trip representation, switching to exponent form for very
/// small or large magnitudes; integral values drop the trailing `.0`.
pub fn format_shortest(x: f64) -> String {
    let s = format!("{x:?}");
    match s.strip_suffix(".0") {
        Some(t) => t.to_string(),
        None => s,
    }
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = PathBuf::from(path);
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    tmp.set_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn field_csv(field: &Field) -> String {
    let nx = field.grid().nx();
    let mut out = String::with_capacity(field.values().len() * 24);
    for row in field.values().chunks(nx) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_g17(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    write_atomic(path, field_csv(field).as_bytes())
}

/// Reads a headerless snapshot CSV back into row-major values.
pub fn parse_field_csv(text: &str) -> Option<Vec<f64>> {
    let mut values = Vec::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        for item in line.split(',') {
            values.push(item.trim().parse().ok()?);
        }
    }
    Some(values)
}

/// Binary PGM, rows in storage order. A constant field maps to all zeros.
pub fn field_pgm(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let values = field.values();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let header = format!(
        "P5\n# min={} max={}\n{} {}\n255\n",
        format_g17(min),
        format_g17(max),
        grid.nx(),
        grid.ny()
    );
    let mut out = header.into_bytes();
    out.extend(values.iter().map(|&v| {
        if span > 0.0 {
            ((v - min) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

pub fn write_field_pgm(path: &Path, field: &Field) -> Result<()> {
    write_atomic(path, &field_pgm(field))
}

/// Minimal CSV table builder with a fixed header.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: usize,
    text: String,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { columns: header.len(), text }
    }

    /// Appends a row of preformatted cells.
    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width must match the header");
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}

/// Formats an optional number; `None` becomes an empty cell.
pub fn cell(x: Option<f64>) -> String {
    x.map(format_shortest).unwrap_or_default()
}
