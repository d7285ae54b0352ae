//! JSON and CSV emission.
//!
//! CSV rounds every number to 12 significant digits. Tables come from an
//! array of records; anything else is flattened to `key,value` rows with
//! dotted paths.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Shortest decimal that round-trips the value rounded to 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if rounded.abs() < 1e-4 || rounded.abs() >= 1e15 {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.as_f64().map(sig12).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

fn write_csv(header: &[String], rows: &[Vec<String>]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// `key,value` rows.
pub fn csv_pairs(v: &Value) -> anyhow::Result<String> {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let rows: Vec<Vec<String>> = rows.into_iter().map(|(k, v)| vec![k, v]).collect();
    write_csv(&["key".into(), "value".into()], &rows)
}

/// One row per record; columns are the union of flattened keys in order of
/// first appearance.
pub fn csv_table(records: &[Value]) -> anyhow::Result<String> {
    let flat: Vec<Vec<(String, String)>> = records
        .iter()
        .map(|r| {
            let mut out = Vec::new();
            flatten("", r, &mut out);
            out
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for row in &flat {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let rows: Vec<Vec<String>> = flat
        .iter()
        .map(|row| {
            header
                .iter()
                .map(|h| row.iter().find(|(k, _)| k == h).map(|(_, v)| v.clone()).unwrap_or_default())
                .collect()
        })
        .collect();
    write_csv(&header, &rows)
}

/// Renders `report`; for CSV, `table` names an array field to tabulate.
pub fn render<S: Serialize>(report: &S, format: Format, table: Option<&str>) -> anyhow::Result<String> {
    let v = serde_json::to_value(report)?;
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&v)? + "\n"),
        Format::Csv => match table.and_then(|t| if t.is_empty() { v.as_array() } else { v.get(t).and_then(Value::as_array) }) {
            Some(records) => csv_table(records),
            None => csv_pairs(&v),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(0.1 + 0.2), "0.3");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(f64::INFINITY), "inf");
        assert_eq!(sig12(-2.5e-17), "-2.5e-17");
    }

    #[test]
    fn tables_and_pairs() {
        let t = csv_table(&[json!({"x": [0.5], "m": 1.0}), json!({"x": [1.0], "m": null, "e": "no"})]).unwrap();
        assert_eq!(t, "m,x.0,e\n1,0.5,\n,1,no\n");
        let p = csv_pairs(&json!({"a": {"b": true}, "c": [1, 2]})).unwrap();
        assert_eq!(p, "key,value\na.b,true\nc.0,1\nc.1,2\n");
    }
}
