use serde_json::{Map, Value};

use maxstream_core::verify::sig6;

/// Rendered command result and whether it counts as a verification pass.
pub struct Output {
    pub text: String,
    pub pass: bool,
}

impl Output {
    pub fn ok(text: String) -> Self {
        Output { text, pass: true }
    }
}

pub fn json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map(sig6).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// `name,value` rows for the scalar entries of a flat object; arrays become
/// `name_1, name_2, ...`.
pub fn key_value_csv(obj: &Map<String, Value>) -> String {
    let mut out = String::from("name,value\n");
    for (k, v) in obj {
        match v {
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&format!("{k}_{},{}\n", i + 1, csv_cell(item)));
                }
            }
            Value::Object(_) => {}
            _ => out.push_str(&format!("{k},{}\n", csv_cell(v))),
        }
    }
    out
}

/// `index,value` rows with 1-based indices.
pub fn sequence_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, sig6(*v)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn key_value_rows() {
        let v = json!({"metric": "m1", "value": 0.123456789, "by_k": [1.0, 0.5], "nested": {"a": 1}});
        let csv = key_value_csv(v.as_object().unwrap());
        assert_eq!(csv, "name,value\nby_k_1,1\nby_k_2,0.5\nmetric,m1\nvalue,0.123457\n");
    }

    #[test]
    fn sequence_rows() {
        assert_eq!(sequence_csv(&[1.5, 1234567.0]), "index,value\n1,1.5\n2,1.23457e6\n");
    }
}
