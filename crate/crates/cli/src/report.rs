use std::fmt::Write as _;

use serde_json::Value;

use crate::{Format, Global};

pub struct Report {
    pub json: Value,
    pub markdown: Option<String>,
    /// False when a numerical check or an expectation failed.
    pub ok: bool,
}

impl Report {
    pub fn new(json: Value, ok: bool) -> Self {
        Self {
            json,
            markdown: None,
            ok,
        }
    }

    pub fn with_markdown(mut self, md: String) -> Self {
        self.markdown = Some(md);
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Md => self.markdown.clone().unwrap_or_else(|| table(&self.json)),
        }
    }

    pub fn emit(&self, g: &Global) -> purelab::Result<()> {
        let text = self.render(g.format);
        match &g.out {
            Some(path) => purelab::io::write_text(path, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

/// Two-column table of the top-level fields; nested values are inlined as JSON.
fn table(v: &Value) -> String {
    let mut out = String::from("| field | value |\n|---|---|\n");
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let cell = match x {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                let _ = writeln!(out, "| {k} | {} |", cell.replace('|', "\\|"));
            }
        }
        other => {
            let _ = writeln!(out, "| value | {other} |");
        }
    }
    out
}
