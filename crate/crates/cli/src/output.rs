//! Deterministic serialization: struct field order is kept, floats carry 12
//! significant digits, and non-finite values become `null` (JSON) or
//! `nan` / `inf` (CSV).

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::{CliError, CliResult};

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN));
            *v = Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(normalize),
        Value::Object(map) => map.values_mut().for_each(normalize),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> CliResult<String> {
    let mut v = serde_json::to_value(doc).map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    normalize(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        Number::from_f64(round_sig(x)).map_or_else(|| "nan".into(), |n| n.to_string())
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Builds a CSV document from a header and rows of already formatted fields.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Numeric(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Numeric(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Numeric(e.to_string()))
}

pub fn write_file(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

/// Writes to `out` when given, otherwise to stdout.
pub fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write { path: "<stdout>".into(), source })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(1e300).parse::<f64>().unwrap(), 1e300);
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn json_nulls_non_finite_and_keeps_order() {
        #[derive(Serialize)]
        struct Doc {
            z: f64,
            a: f64,
            m: u32,
        }
        let s = to_json(&Doc { z: f64::INFINITY, a: 2.0 / 3.0, m: 7 }).unwrap();
        assert_eq!(s, "{\n  \"z\": null,\n  \"a\": 0.666666666667,\n  \"m\": 7\n}\n");
    }

    #[test]
    fn csv_quotes_when_needed() {
        let t = csv_table(&["a", "b"], vec![vec!["1".into(), "x, y".into()]]).unwrap();
        assert_eq!(t, "a,b\n1,\"x, y\"\n");
    }
}
