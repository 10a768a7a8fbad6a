use serde_json::{Number, Value};

/// A JSON number with 17 significant digits, which round-trips every `f64`.
/// Non-finite values become `null`.
pub fn number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    text.parse::<Number>().map(Value::Number).unwrap_or(Value::Null)
}

pub(crate) fn optional(x: Option<f64>) -> Value {
    x.map_or(Value::Null, number)
}

/// Pretty-printed document with a trailing newline.
pub fn render(doc: &Value) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("values always serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(number(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(number(54.0).to_string(), "5.4000000000000000e+1");
        assert_eq!(number(f64::NAN), Value::Null);
    }

    #[test]
    fn round_trips() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 13.656854249492381] {
            let back: f64 = number(x).to_string().parse().unwrap();
            assert_eq!(back, x);
        }
    }
}
