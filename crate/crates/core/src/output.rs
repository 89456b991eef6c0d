//! Deterministic JSON rendering: insertion-ordered keys, floats at 17
//! significant digits (`{:.16e}`), non-finite values as `null`.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// Renders `value` as pretty-printed JSON with fixed float formatting.
pub fn to_stable_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

/// A float the way it appears in every artifact.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = items.iter().all(|i| !matches!(i, Value::Array(_) | Value::Object(_)));
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                if flat {
                    if k > 0 {
                        out.push(' ');
                    }
                } else {
                    out.push('\n');
                    indent(out, level + 1);
                }
                write_value(out, item, level + 1);
            }
            if !flat {
                out.push('\n');
                indent(out, level);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push('\n');
                indent(out, level + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, level + 1);
            }
            out.push('\n');
            indent(out, level);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits_and_round_trip() {
        let s = to_stable_json(&json!({"b": 0.1, "a": [1.0, -2.5e-300], "n": 3})).unwrap();
        assert!(s.contains("\"b\": 1.0000000000000001e-1"));
        assert!(s.find("\"b\"").unwrap() < s.find("\"a\"").unwrap());
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64().unwrap(), 0.1);
        assert_eq!(back["a"][1].as_f64().unwrap(), -2.5e-300);
    }

    #[test]
    fn nan_becomes_null() {
        #[derive(Serialize)]
        struct T {
            x: f64,
            y: Vec<f64>,
        }
        let s = to_stable_json(&T {
            x: f64::NAN,
            y: vec![1.0, f64::INFINITY],
        })
        .unwrap();
        let back: Value = serde_json::from_str(&s).unwrap();
        assert!(back["x"].is_null() && back["y"][1].is_null());
        assert_eq!(format_float(f64::NAN), "null");
    }

    #[test]
    fn identical_input_gives_identical_bytes() {
        let v = json!({"z": [{"q": 1.5}], "s": "a\"b"});
        assert_eq!(to_stable_json(&v).unwrap(), to_stable_json(&v).unwrap());
        let back: Value = serde_json::from_str(&to_stable_json(&v).unwrap()).unwrap();
        assert_eq!(back["s"], "a\"b");
    }
}
