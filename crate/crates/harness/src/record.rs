use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::HarnessError;

/// Version written as `# schema=N` on the first line of every CSV file.
pub const CSV_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Plot with logarithmic axes.
    pub log_scale: bool,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), log_scale: false }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric entries of one column (text cells skipped).
    pub fn numbers(&self, column: &str) -> Vec<f64> {
        self.column_index(column)
            .map(|i| self.rows.iter().filter_map(|r| r[i].as_f64()).collect())
            .unwrap_or_default()
    }

    /// Cell at the row whose first column is `key`.
    pub fn lookup(&self, key: &str, column: &str) -> Option<&Cell> {
        let i = self.column_index(column)?;
        self.rows.iter().find(|r| matches!(&r[0], Cell::Text(s) if s == key)).map(|r| &r[i])
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output");
        format!("# schema={CSV_SCHEMA}\n{body}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    /// `|value| ≤ factor · reference`.
    Vanishes,
    /// `|value| > factor · reference`.
    Exceeds,
    /// `|value − reference| ≤ factor · |reference|`.
    Agrees,
}

/// A pass/fail statement about a measured value and the scale it is
/// compared with. For `Vanishes` and `Exceeds` the reference is a floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub kind: ClaimKind,
    pub value: f64,
    pub reference: f64,
    pub factor: f64,
    pub holds: bool,
}

impl Claim {
    pub fn vanishes(name: &str, value: f64, floor: f64, factor: f64) -> Self {
        let holds = value.abs() <= factor * floor;
        Self { name: name.into(), kind: ClaimKind::Vanishes, value, reference: floor, factor, holds }
    }

    pub fn exceeds(name: &str, value: f64, floor: f64, factor: f64) -> Self {
        let holds = value.abs() > factor * floor.abs();
        Self { name: name.into(), kind: ClaimKind::Exceeds, value, reference: floor, factor, holds }
    }

    pub fn agrees(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        let holds = (value - reference).abs() <= tolerance * reference.abs();
        Self { name: name.into(), kind: ClaimKind::Agrees, value, reference, factor: tolerance, holds }
    }

    /// `|value| / reference`, or the relative difference for `Agrees`.
    pub fn ratio(&self) -> f64 {
        match self.kind {
            ClaimKind::Agrees => (self.value - self.reference).abs() / self.reference.abs(),
            _ => self.value.abs() / self.reference.abs(),
        }
    }
}

/// Error sources of the headline numbers of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorBudget {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    pub input_hash: String,
    pub scalars: Vec<(String, f64)>,
    pub claims: Vec<Claim>,
    pub tables: Vec<Table>,
    pub budget: ErrorBudget,
    pub notes: Vec<String>,
    pub wall_clock: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    status: &'a str,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    input_hash: &'a str,
    wall_clock_s: f64,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    notes: &'a [String],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    tables: Vec<String>,
    scalars: toml::Table,
    budget: ErrorBudget,
    #[serde(skip_serializing_if = "<[Claim]>::is_empty")]
    claims: &'a [Claim],
}

impl ResultRecord {
    pub fn new(experiment: &str, input_hash: &str) -> Self {
        Self {
            experiment: experiment.into(),
            input_hash: input_hash.into(),
            scalars: Vec::new(),
            claims: Vec::new(),
            tables: Vec::new(),
            budget: ErrorBudget::default(),
            notes: Vec::new(),
            wall_clock: 0.0,
        }
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.scalars.push((name.into(), value));
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn claim(&self, name: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn all_claims_hold(&self) -> bool {
        self.claims.iter().all(|c| c.holds)
    }

    fn csv_name(&self, t: &Table) -> String {
        format!("{}_{}.csv", self.experiment, t.name)
    }

    pub fn summary_toml(&self, scenario_echo: &str) -> String {
        let scalars = self.scalars.iter().map(|(k, v)| (k.clone(), toml::Value::Float(*v))).collect();
        let s = Summary {
            experiment: &self.experiment,
            status: "ok",
            exit_code: 0,
            error: None,
            input_hash: &self.input_hash,
            wall_clock_s: self.wall_clock,
            notes: &self.notes,
            tables: self.tables.iter().map(|t| self.csv_name(t)).collect(),
            scalars,
            budget: self.budget,
            claims: &self.claims,
        };
        with_scenario(toml::to_string(&s).expect("summary serialises"), scenario_echo)
    }

    /// Summary document for a run that failed.
    pub fn error_summary(experiment: &str, input_hash: &str, error: &HarnessError, scenario_echo: &str) -> String {
        let s = Summary {
            experiment,
            status: "error",
            exit_code: error.exit_code(),
            error: Some(error.to_string()),
            input_hash,
            wall_clock_s: 0.0,
            notes: &[],
            tables: Vec::new(),
            scalars: toml::Table::new(),
            budget: ErrorBudget::default(),
            claims: &[],
        };
        with_scenario(toml::to_string(&s).expect("summary serialises"), scenario_echo)
    }

    /// Gnuplot commands plotting every numeric column against the first.
    pub fn gnuplot_script(&self) -> String {
        let mut out = String::from("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n");
        for t in &self.tables {
            let Some(first) = t.rows.first() else { continue };
            if first[0].as_f64().is_none() {
                continue;
            }
            let ys: Vec<usize> = (1..t.columns.len()).filter(|&i| first[i].as_f64().is_some()).collect();
            if ys.is_empty() {
                continue;
            }
            let csv = self.csv_name(t);
            let _ = writeln!(out, "\nset output '{}_{}.png'", self.experiment, t.name);
            let _ = writeln!(out, "set xlabel '{}'", t.columns[0]);
            out.push_str(if t.log_scale { "set logscale xy\n" } else { "unset logscale\n" });
            let parts: Vec<String> = ys
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let file = if k == 0 { format!("'{csv}'") } else { "''".into() };
                    format!("{file} using 1:{} with linespoints", i + 1)
                })
                .collect();
            let _ = writeln!(out, "plot {}", parts.join(", \\\n     "));
        }
        out
    }

    /// Writes the CSV tables, the summary and the plot script into `dir`,
    /// each file atomically.
    pub fn write(&self, dir: &Path, scenario_echo: &str) -> Result<Vec<PathBuf>, HarnessError> {
        let mut written = Vec::new();
        for t in &self.tables {
            written.push(write_atomic(dir, &self.csv_name(t), &t.to_csv())?);
        }
        written.push(write_atomic(dir, &format!("{}.gp", self.experiment), &self.gnuplot_script())?);
        written.push(write_atomic(dir, &format!("{}.summary.toml", self.experiment), &self.summary_toml(scenario_echo))?);
        Ok(written)
    }
}

fn with_scenario(mut summary: String, echo: &str) -> String {
    if !echo.is_empty() {
        summary.push_str("\n# effective scenario\n");
        for line in echo.lines() {
            let _ = writeln!(summary, "# {line}");
        }
    }
    summary
}

/// Writes through a temporary file in the same directory and renames it.
pub(crate) fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
    let fail = |e: std::io::Error| HarnessError::Write { path: dir.join(name).display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(fail)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| fail(e.error))?;
    Ok(path)
}
