//! Text format for user-supplied tableaux.
//!
//! ```toml
//! name = "ars-222"
//! order = 2
//!
//! [implicit]
//! a = [["0.2928932188134524"], ["0.4142135623730950", "0.2928932188134524"]]
//! b = ["1/2", "1/2"]
//! c = ["0.2928932188134524", "0.7071067811865476"]   # optional
//!
//! [explicit]
//! a = [[0], [1]]
//! b = ["1/2", "1/2"]
//! ```
//!
//! Entries are TOML numbers or strings holding a decimal or a `p/q`
//! rational. Rows may stop at the diagonal; missing entries are zero. When
//! `c` is omitted it is taken as the row sums of `a`.

use toml::Value;

use super::DoubleButcherTableau;
use crate::error::{Error, Result};

pub(super) fn parse(text: &str, origin: &str) -> Result<DoubleButcherTableau> {
    let err = |message: String| Error::TableauFile {
        path: origin.to_string(),
        message,
    };
    let root: toml::Table = text.parse().map_err(|e: toml::de::Error| err(e.to_string()))?;
    for key in root.keys() {
        if !matches!(key.as_str(), "name" | "order" | "implicit" | "explicit") {
            return Err(err(format!("unknown key `{key}`")));
        }
    }
    let name = match root.get("name") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(err("`name` must be a string".into())),
        None => origin.to_string(),
    };
    let order = match root.get("order") {
        Some(Value::Integer(p)) if *p >= 1 => *p as u32,
        Some(_) => return Err(err("`order` must be a positive integer".into())),
        None => return Err(err("missing `order`".into())),
    };
    let (a, b, c) = section(&root, "implicit").map_err(&err)?;
    let (abar, bbar, cbar) = section(&root, "explicit").map_err(&err)?;
    DoubleButcherTableau::new(name, order, a, abar, b, bbar, c, cbar)
}

type Section = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>);

fn section(root: &toml::Table, key: &str) -> std::result::Result<Section, String> {
    let table = match root.get(key) {
        Some(Value::Table(t)) => t,
        Some(_) => return Err(format!("`{key}` must be a table")),
        None => return Err(format!("missing [{key}] section")),
    };
    for k in table.keys() {
        if !matches!(k.as_str(), "a" | "b" | "c") {
            return Err(format!("unknown key `{key}.{k}`"));
        }
    }
    let b = match table.get("b") {
        Some(v) => entries(v, &format!("{key}.b"))?,
        None => return Err(format!("missing `{key}.b`")),
    };
    let s = b.len();
    let rows = match table.get("a") {
        Some(Value::Array(rows)) => rows,
        Some(_) => return Err(format!("`{key}.a` must be an array of rows")),
        None => return Err(format!("missing `{key}.a`")),
    };
    if rows.len() != s {
        return Err(format!("`{key}.a` has {} rows but b has {s} entries", rows.len()));
    }
    let mut a = Vec::with_capacity(s);
    for (i, row) in rows.iter().enumerate() {
        let mut row = entries(row, &format!("{key}.a[{}]", i + 1))?;
        if row.len() > s {
            return Err(format!("`{key}.a[{}]` has more than {s} entries", i + 1));
        }
        row.resize(s, 0.0);
        a.push(row);
    }
    let c = match table.get("c") {
        Some(v) => entries(v, &format!("{key}.c"))?,
        None => a.iter().map(|r| r.iter().sum()).collect(),
    };
    Ok((a, b, c))
}

fn entries(v: &Value, what: &str) -> std::result::Result<Vec<f64>, String> {
    match v {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(j, item)| entry(item).map_err(|m| format!("`{what}` entry {}: {m}", j + 1)))
            .collect(),
        _ => Err(format!("`{what}` must be an array")),
    }
}

fn entry(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(x) => Ok(*x),
        Value::String(s) => parse_number(s),
        other => Err(format!("unsupported value {other}")),
    }
}

/// Parses `"3/8"`, `"-2260/8211"` or a plain decimal.
pub(crate) fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        if q == 0 {
            return Err(format!("zero denominator in `{s}`"));
        }
        if p.unsigned_abs() >= 1 << 53 || q.unsigned_abs() >= 1 << 53 {
            return Err(format!("`{s}` exceeds 2^53 and cannot be rounded once"));
        }
        Ok(p as f64 / q as f64)
    } else {
        s.parse::<f64>().map_err(|_| format!("cannot parse `{s}`"))
    }
}
