//! Output assembly: every command produces one [`Table`], rendered as CSV
//! with `#`-prefixed header comments or as a single versioned JSON object.
//! Rendering is a pure function of (config, table), so identical runs give
//! byte-identical files regardless of thread count.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use crate::config::{RunConfig, OUTPUT_DIR_VAR};
use crate::Format;

/// JSON schema version written into every JSON artifact.
const SCHEMA: u32 = 1;

/// One table cell; integers keep their own rendering so counts and Chern
/// numbers do not pick up exponents.
#[derive(Clone, Copy, Debug)]
pub enum Cell {
    Int(i64),
    Num(f64),
}

impl Cell {
    fn csv(&self) -> String {
        match *self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => fmt_f64(x),
        }
    }

    fn json(&self) -> Value {
        match *self {
            Cell::Int(i) => Value::from(i),
            // Non-finite values have no JSON number; they become null.
            Cell::Num(x) => serde_json::Number::from_f64(x).map_or(Value::Null, Value::from),
        }
    }
}

/// Reals carry 17 significant digits, enough to round-trip an f64.
fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A command's complete output: data rows plus scalar summary readings.
/// Notes are diagnostics that also go to stderr.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            ..Table::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, note: String) {
        self.notes.push(note);
    }
}

fn render_csv(config: &RunConfig, table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# geomphase {}\n",
        env!("CARGO_PKG_VERSION")
    ));
    for (key, value) in config.echo() {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    if !table.columns.is_empty() {
        out.push_str(&format!("# columns: {}\n", table.columns.join(",")));
    }
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    for (key, value) in &table.summary {
        out.push_str(&format!("# summary: {key} = {}\n", value.csv()));
    }
    for note in &table.notes {
        out.push_str(&format!("# note: {note}\n"));
    }
    out
}

fn render_json(config: &RunConfig, table: &Table) -> String {
    let config_echo: Map<String, Value> = config
        .echo()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::from(v)))
        .collect();
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let object: Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(&col, cell)| (col.to_string(), cell.json()))
                .collect();
            Value::Object(object)
        })
        .collect();
    let mut summary: Map<String, Value> = table
        .summary
        .iter()
        .map(|(k, v)| (k.clone(), v.json()))
        .collect();
    if !table.notes.is_empty() {
        summary.insert("notes".to_string(), json!(table.notes));
    }
    let object = json!({
        "schema": SCHEMA,
        "config": config_echo,
        "rows": rows,
        "summary": summary,
    });
    let mut text = serde_json::to_string_pretty(&object).expect("valid JSON");
    text.push('\n');
    text
}

/// Renders `table` in the configured format and writes it to the configured
/// destination (stdout when no path was given). Notes are echoed to stderr
/// either way.
pub fn write_table(config: &RunConfig, table: &Table) -> Result<()> {
    let text = match config.format {
        Format::Csv => render_csv(config, table),
        Format::Json => render_json(config, table),
    };
    match &config.output {
        Some(path) => {
            let path = resolve_output(path.clone());
            fs::write(&path, text)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => {
            std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .context("cannot write to stdout")?;
        }
    }
    for note in &table.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

/// Relative output paths land in `GEOMPHASE_OUTPUT_DIR` when it is set.
fn resolve_output(path: PathBuf) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_VAR) {
            return PathBuf::from(dir).join(path);
        }
    }
    path
}
