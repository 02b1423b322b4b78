//! CSV, SVG and JSON artifacts.
//!
//! Numbers are printed with `{:e}`, which is the shortest representation that
//! parses back to the same `f64`, so every file is deterministic and
//! round-trips exactly.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const ARTIFACT: &str = concat!("qbrown ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

/// Line chart of some columns against the first one.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Comment lines written after the data, without the `#`.
    pub footer: Vec<String>,
    pub plot: Option<PlotSpec>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
            footer: vec![],
            plot: None,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| Cell::Num(x)).collect());
    }

    pub fn with_plot(mut self, title: &str, columns: &[&str]) -> Self {
        self.plot = Some(PlotSpec {
            title: title.into(),
            x_label: self.columns[0].clone(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
        });
        self
    }

    fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        self.rows
            .iter()
            .map(|r| match r[k] {
                Cell::Num(x) => Some(x),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

/// Everything a command produces.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub summary: serde_json::Map<String, Value>,
    /// Diagnostic lines, also written to stderr.
    pub log: Vec<String>,
    /// Check that failed after the artifacts were produced. They are still
    /// written, and the run exits as a numerical failure.
    pub failure: Option<qbrown_core::Error>,
}

impl Artifacts {
    pub fn note(&mut self, line: impl Into<String>) {
        self.log.push(line.into());
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }
}

/// JSON number that stays valid for non-finite input.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(fmt_num(x)))
}

fn header_comment(config: &RunConfig) -> Result<String, CliError> {
    let params =
        serde_json::to_string(&config.params).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(format!(
        "# {ARTIFACT} command={} seed={} params={params}",
        config.command.name(),
        config.seed
    ))
}

pub fn render_csv(table: &Table, config: &RunConfig) -> Result<String, CliError> {
    let mut out = header_comment(config)?;
    out.push('\n');
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    for line in &table.footer {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a CSV written by [`render_csv`]: header names and numeric rows.
/// Text cells come back as NaN.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let header = r.headers().map_err(io)?.iter().map(String::from).collect();
    let mut rows = vec![];
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        rows.push(rec.iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect());
    }
    Ok((header, rows))
}

pub fn render_svg(table: &Table) -> Result<Option<String>, CliError> {
    let Some(spec) = &table.plot else {
        return Ok(None);
    };
    let x = table
        .column(&spec.x_label)
        .ok_or_else(|| CliError::Io(format!("column {} is not numeric", spec.x_label)))?;
    let series: Vec<(String, Vec<f64>)> = spec
        .columns
        .iter()
        .map(|c| {
            table
                .column(c)
                .map(|v| (c.clone(), v))
                .ok_or_else(|| CliError::Io(format!("column {c} is not numeric")))
        })
        .collect::<Result<_, _>>()?;
    let finite = |v: &&f64| v.is_finite();
    let (x0, x1) = bounds(x.iter().filter(finite).copied());
    let (y0, y1) = bounds(
        series
            .iter()
            .flat_map(|(_, v)| v.iter().filter(finite).copied()),
    );
    let pad = 0.05 * (y1 - y0);
    let mut svg = String::new();
    {
        let draw = |e: String| CliError::Io(format!("plot: {e}"));
        let root = SVGBackend::with_string(&mut svg, (800, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| draw(e.to_string()))?;
        let mut chart = ChartBuilder::on(&root)
            .caption(&spec.title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(70)
            .build_cartesian_2d(x0..x1, (y0 - pad)..(y1 + pad))
            .map_err(|e| draw(e.to_string()))?;
        chart
            .configure_mesh()
            .x_desc(spec.x_label.as_str())
            .y_label_formatter(&|v| format!("{v:.3e}"))
            .draw()
            .map_err(|e| draw(e.to_string()))?;
        for (i, (name, y)) in series.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            let points = x
                .iter()
                .zip(y)
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(&a, &b)| (a, b));
            chart
                .draw_series(LineSeries::new(points, color.stroke_width(2)))
                .map_err(|e| draw(e.to_string()))?
                .label(name.as_str())
                .legend(move |(px, py)| PathElement::new(vec![(px, py), (px + 20, py)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| draw(e.to_string()))?;
        root.present().map_err(|e| draw(e.to_string()))?;
    }
    Ok(Some(svg))
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn render_json(artifacts: &Artifacts, config: &RunConfig) -> Result<String, CliError> {
    let mut top = serde_json::Map::new();
    top.insert("artifact".into(), ARTIFACT.into());
    top.insert("command".into(), config.command.name().into());
    top.insert("seed".into(), config.seed.into());
    top.insert(
        "params".into(),
        serde_json::to_value(&config.params).map_err(|e| CliError::Config(e.to_string()))?,
    );
    top.insert("summary".into(), Value::Object(artifacts.summary.clone()));
    let mut s = serde_json::to_string_pretty(&Value::Object(top))
        .map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes the requested formats; returns the paths written.
pub fn write_all(artifacts: &Artifacts, config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = vec![];
    let mut put = |path: PathBuf, text: &str| -> Result<(), CliError> {
        write_file(&path, text)?;
        written.push(path);
        Ok(())
    };
    for t in &artifacts.tables {
        if config.wants(Format::Csv) {
            put(dir.join(format!("{}.csv", t.name)), &render_csv(t, config)?)?;
        }
        if config.wants(Format::Svg) {
            if let Some(svg) = render_svg(t)? {
                put(dir.join(format!("{}.svg", t.name)), &svg)?;
            }
        }
    }
    if config.wants(Format::Json) {
        put(
            dir.join(format!("{}.json", config.command.name())),
            &render_json(artifacts, config)?,
        )?;
    }
    Ok(written)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
