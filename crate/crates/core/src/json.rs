//! Deterministic JSON text: keys sorted, floats printed with 17
//! significant digits, non-finite floats as the strings `"inf"`, `"-inf"`
//! and `"nan"`.

use std::fmt::Write;

use serde_json::Value;

/// A float as a JSON value; non-finite values become strings.
pub fn num(x: f64) -> Value {
    match serde_json::Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None if x.is_nan() => Value::String("nan".into()),
        None if x > 0.0 => Value::String("inf".into()),
        None => Value::String("-inf".into()),
    }
}

/// `{:.16e}` for floats, plain digits for integers.
pub fn format_number(n: &serde_json::Number) -> String {
    if let Some(i) = n.as_i64() {
        return i.to_string();
    }
    if let Some(u) = n.as_u64() {
        return u.to_string();
    }
    format_float(n.as_f64().unwrap_or(f64::NAN))
}

/// Fixed 17-significant-digit form of a finite float.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty-printed text with two-space indentation and sorted keys.
pub fn to_string_pretty(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
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
        Value::Number(n) => out.push_str(&format_number(n)),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(out, level + 1);
                let _ = write!(out, "{}: ", serde_json::to_string(k).expect("keys serialize"));
                write_value(out, &map[k.as_str()], level + 1);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
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
    fn floats_use_seventeen_digits_and_keys_are_sorted() {
        let v = json!({"b": 0.1, "a": [1, num(f64::INFINITY), num(f64::NAN)], "c": {"y": true, "x": null}});
        let text = to_string_pretty(&v);
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        let a = text.find("\"a\"").unwrap();
        let b = text.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(text.contains("\"inf\"") && text.contains("\"nan\""));
        assert!(text.find("\"x\"").unwrap() < text.find("\"y\"").unwrap());
        // Round trip keeps the value bit for bit.
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"].as_f64().unwrap(), 0.1);
    }
}
