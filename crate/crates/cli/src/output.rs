//! Report envelope and the three renderers.

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::args::Format;

pub const SCHEMA: &str = "freeprob-report/1";

pub struct Report {
    pub command: String,
    pub pass: bool,
    pub config: Value,
    pub tolerances: Value,
    pub result: Value,
    /// Native rows (header first) for csv and table output; otherwise the
    /// result is flattened into `key,value` rows.
    pub rows: Option<Vec<Vec<String>>>,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.into(),
            pass: true,
            config,
            tolerances: Value::Object(Map::new()),
            result: Value::Null,
            rows: None,
        }
    }

    /// Rows from a CSV body whose cells contain no commas.
    pub fn set_csv(&mut self, body: &str) {
        self.rows = Some(body.lines().map(|l| l.split(',').map(str::to_string).collect()).collect());
    }

    pub fn envelope(&self) -> Value {
        let mut m = Map::new();
        m.insert("schema".into(), SCHEMA.into());
        m.insert("version".into(), freeprob::VERSION.into());
        m.insert("command".into(), self.command.clone().into());
        m.insert("pass".into(), self.pass.into());
        m.insert("config".into(), self.config.clone());
        m.insert("tolerances".into(), self.tolerances.clone());
        m.insert("result".into(), self.result.clone());
        Value::Object(m)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut out = String::new();
                write_json(&mut out, &self.envelope(), 0);
                out.push('\n');
                out
            }
            Format::Csv => self.render_csv(),
            Format::Table => self.render_table(),
        }
    }

    fn header_lines(&self) -> String {
        let mut compact = String::new();
        write_compact(&mut compact, &self.config);
        let mut tol = String::new();
        write_compact(&mut tol, &self.tolerances);
        format!(
            "# {SCHEMA} freeprob {} {}\n# pass: {}\n# config: {compact}\n# tolerances: {tol}\n",
            freeprob::VERSION,
            self.command,
            self.pass
        )
    }

    fn rows(&self) -> Vec<Vec<String>> {
        match &self.rows {
            Some(rows) => rows.clone(),
            None => {
                let mut rows = vec![vec!["key".to_string(), "value".to_string()]];
                flatten("", &self.result, &mut rows);
                rows
            }
        }
    }

    fn render_csv(&self) -> String {
        let mut out = self.header_lines();
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_table(&self) -> String {
        let rows = self.rows();
        let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..cols)
            .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|c| c.chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{} ({}): {}\n", self.command, freeprob::VERSION, if self.pass { "PASS" } else { "FAIL" });
        for (i, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, c)| format!("{c:<w$}", w = widths[j]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                out.push_str(&rule.join("  "));
                out.push('\n');
            }
        }
        out
    }
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

pub fn scalar_text(v: &Value) -> String {
    let mut s = String::new();
    match v {
        Value::String(t) => s.push_str(t),
        other => write_compact(&mut s, other),
    }
    s
}

/// Leaves of `v` as `path,value` rows; arrays of scalars stay on one row.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<Vec<String>>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, rows);
            }
        }
        Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), x, rows);
            }
        }
        Value::Array(a) => {
            let items: Vec<String> = a.iter().map(scalar_text).collect();
            rows.push(vec![prefix.to_string(), items.join(" ")]);
        }
        other => rows.push(vec![prefix.to_string(), scalar_text(other)]),
    }
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if let Some(i) = n.as_i64() {
        let _ = write!(out, "{i}");
    } else if let Some(u) = n.as_u64() {
        let _ = write!(out, "{u}");
    } else {
        let _ = write!(out, "{:.16e}", n.as_f64().unwrap_or(f64::NAN));
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serializes"));
}

/// Compact JSON with floats at 17 significant digits.
pub fn write_compact(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => write_string(out, s),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_compact(out, x);
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            for (i, (k, x)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(out, k);
                out.push(':');
                write_compact(out, x);
            }
            out.push('}');
        }
    }
}

/// Indented JSON; arrays of scalars stay on one line.
pub fn write_json(out: &mut String, v: &Value, depth: usize) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_json(out, x, depth + 1);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(m) if !m.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_string(out, k);
                out.push_str(": ");
                write_json(out, x, depth + 1);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        other => write_compact(out, other),
    }
}
