//! `key: value` reports followed by one JSON line with the same content.

use std::io::Write;

use serde_json::{Map, Value};

pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Report {
    entries: Vec<(String, Value, String)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Self { entries: Vec::new() };
        r.text("command", command);
        r
    }

    pub fn num(&mut self, key: &str, x: f64) -> &mut Self {
        let v = serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null);
        self.entries.push((key.into(), v, sci(x)));
        self
    }

    pub fn int(&mut self, key: &str, n: u64) -> &mut Self {
        self.entries.push((key.into(), Value::from(n), n.to_string()));
        self
    }

    pub fn flag(&mut self, key: &str, b: bool) -> &mut Self {
        self.entries.push((key.into(), Value::Bool(b), b.to_string()));
        self
    }

    pub fn text(&mut self, key: &str, s: &str) -> &mut Self {
        self.entries.push((key.into(), Value::String(s.into()), s.into()));
        self
    }

    pub fn texts(&mut self, key: &str, items: &[String]) -> &mut Self {
        let v = Value::Array(items.iter().cloned().map(Value::String).collect());
        self.entries.push((key.into(), v, items.join(",")));
        self
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut map = Map::new();
        for (k, v, shown) in &self.entries {
            writeln!(w, "{k}: {shown}")?;
            map.insert(k.clone(), v.clone());
        }
        writeln!(w, "{}", Value::Object(map))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_then_json() {
        let mut r = Report::new("demo");
        r.num("x", 0.25).int("n", 3).flag("ok", true);
        let mut buf = Vec::new();
        r.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "command: demo");
        assert_eq!(lines[1], "x: 2.5000000000000000e-1");
        assert_eq!(lines[4], r#"{"command":"demo","n":3,"ok":true,"x":0.25}"#);
    }
}
