//! Deterministic JSON writer: object keys come out sorted (the map is
//! tree-backed) and floats carry 17 significant digits, enough to round
//! back to the same double.

use serde_json::Value;
use std::fmt::Write;

pub fn to_json_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let _ = write!(out, "{:.16e}", n.as_f64().expect("finite number"));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("key serialization"));
                out.push(':');
                write_value(out, item);
            }
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip_through_17_digits() {
        for x in [0.8f64, 1.0 / 3.0, 1e-9, 123456.789, -0.0625] {
            let s = to_json_string(&json!(x));
            let back: f64 = s.trim().parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn integers_stay_integers() {
        let s = to_json_string(&json!({"count": 3, "items": [1, 2]}));
        assert_eq!(s.trim(), r#"{"count":3,"items":[1,2]}"#);
    }

    #[test]
    fn keys_are_sorted() {
        let s = to_json_string(&json!({"b": 1, "a": 2}));
        assert_eq!(s.trim(), r#"{"a":2,"b":1}"#);
    }
}
