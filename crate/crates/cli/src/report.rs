//! Reports: named results with budgets, pass/fail checks, tables, and a canonical JSON encoding.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::RunError;

/// Minimal JSON tree whose encoding is canonical: sorted keys, floats as `{:.16e}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(BTreeMap<String, Json>),
}

impl Json {
    pub fn obj<I, K>(pairs: I) -> Json
    where
        I: IntoIterator<Item = (K, Json)>,
        K: Into<String>,
    {
        Json::Obj(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn encode(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, 0);
        s.push('\n');
        s
    }

    fn write(&self, out: &mut String, indent: usize) {
        let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat(' ').take(2 * n));
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Json::Num(v) => {
                if v.is_finite() {
                    let _ = write!(out, "{v:.16e}");
                } else {
                    // JSON has no NaN or infinity
                    let _ = write!(out, "\"{v}\"");
                }
            }
            Json::Str(s) => write_str(out, s),
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                let flat = items.iter().all(|v| !matches!(v, Json::Arr(_) | Json::Obj(_)));
                out.push('[');
                for (k, v) in items.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    if flat {
                        if k > 0 {
                            out.push(' ');
                        }
                    } else {
                        out.push('\n');
                        pad(out, indent + 1);
                    }
                    v.write(out, indent + 1);
                }
                if !flat {
                    out.push('\n');
                    pad(out, indent);
                }
                out.push(']');
            }
            Json::Obj(map) => {
                if map.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (k, (key, v)) in map.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    pad(out, indent + 1);
                    write_str(out, key);
                    out.push_str(": ");
                    v.write(out, indent + 1);
                }
                out.push('\n');
                pad(out, indent);
                out.push('}');
            }
        }
    }
}

fn write_str(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

impl From<f64> for Json {
    fn from(v: f64) -> Self {
        Json::Num(v)
    }
}

impl From<usize> for Json {
    fn from(v: usize) -> Self {
        Json::Int(v as i64)
    }
}

impl From<bool> for Json {
    fn from(v: bool) -> Self {
        Json::Bool(v)
    }
}

impl From<&str> for Json {
    fn from(v: &str) -> Self {
        Json::Str(v.to_string())
    }
}

impl From<String> for Json {
    fn from(v: String) -> Self {
        Json::Str(v)
    }
}

/// How a result's accuracy is accounted for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Exact up to roundoff (closed forms, finite sums).
    Exact,
    /// Absolute error bound.
    Abs(f64),
}

impl Budget {
    fn json(&self) -> Json {
        match self {
            Budget::Exact => Json::from("exact"),
            Budget::Abs(b) => Json::Num(*b),
        }
    }
}

/// Comparison behind a pass flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// |value − reference| ≤ tol.
    Abs { reference: f64, tol: f64 },
    /// |value/reference − 1| ≤ tol.
    Rel { reference: f64, tol: f64 },
    /// value ≤ bound.
    AtMost(f64),
    /// value ≥ bound.
    AtLeast(f64),
    Flag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub criterion: Criterion,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, criterion: Criterion) -> Self {
        let pass = match criterion {
            Criterion::Abs { reference, tol } => (value - reference).abs() <= tol,
            Criterion::Rel { reference, tol } => (value / reference - 1.0).abs() <= tol,
            Criterion::AtMost(b) => value <= b,
            Criterion::AtLeast(b) => value >= b,
            Criterion::Flag => value != 0.0,
        };
        Check {
            name: name.into(),
            value,
            criterion,
            pass,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check::new(name, if ok { 1.0 } else { 0.0 }, Criterion::Flag)
    }

    fn json(&self) -> Json {
        let mut m = BTreeMap::new();
        m.insert("value".into(), Json::Num(self.value));
        m.insert("pass".into(), Json::Bool(self.pass));
        let (kind, rest): (&str, Vec<(&str, f64)>) = match self.criterion {
            Criterion::Abs { reference, tol } => ("abs", vec![("reference", reference), ("tolerance", tol)]),
            Criterion::Rel { reference, tol } => ("rel", vec![("reference", reference), ("tolerance", tol)]),
            Criterion::AtMost(b) => ("at_most", vec![("bound", b)]),
            Criterion::AtLeast(b) => ("at_least", vec![("bound", b)]),
            Criterion::Flag => ("flag", vec![]),
        };
        m.insert("kind".into(), Json::from(kind));
        for (k, v) in rest {
            m.insert(k.into(), Json::Num(v));
        }
        Json::Obj(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub budget: Budget,
}

impl Table {
    pub fn new(columns: &[&str], budget: Budget) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            budget,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn json(&self) -> Json {
        Json::obj([
            ("columns", Json::Arr(self.columns.iter().map(|c| Json::from(c.as_str())).collect())),
            ("rows", Json::Arr(self.rows.iter().map(|r| Json::Arr(r.iter().map(|v| Json::Num(*v)).collect())).collect())),
            ("budget", self.budget.json()),
        ])
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub task: String,
    pub config: BTreeMap<String, Json>,
    pub results: BTreeMap<String, (Json, Budget)>,
    pub checks: Vec<Check>,
    pub tables: BTreeMap<String, Table>,
    pub wall_clock: Option<f64>,
}

impl Report {
    pub fn new(task: &str, config: BTreeMap<String, Json>) -> Self {
        Report {
            task: task.to_string(),
            config,
            results: BTreeMap::new(),
            checks: Vec::new(),
            tables: BTreeMap::new(),
            wall_clock: None,
        }
    }

    pub fn result(&mut self, name: &str, value: impl Into<Json>, budget: Budget) {
        self.results.insert(name.to_string(), (value.into(), budget));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn table(&mut self, name: &str, t: Table) {
        self.tables.insert(name.to_string(), t);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Folds another report in, prefixing its names with `prefix/`.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for (k, v) in other.config {
            self.config.insert(format!("{prefix}/{k}"), v);
        }
        for (k, v) in other.results {
            self.results.insert(format!("{prefix}/{k}"), v);
        }
        for mut c in other.checks {
            c.name = format!("{prefix}/{}", c.name);
            self.checks.push(c);
        }
        for (k, v) in other.tables {
            self.tables.insert(format!("{prefix}/{k}"), v);
        }
    }

    pub fn to_json(&self) -> Json {
        let mut m = BTreeMap::new();
        m.insert("task".to_string(), Json::from(self.task.as_str()));
        m.insert("config".to_string(), Json::Obj(self.config.clone()));
        m.insert(
            "results".to_string(),
            Json::Obj(
                self.results
                    .iter()
                    .map(|(k, (v, b))| (k.clone(), Json::obj([("value", v.clone()), ("budget", b.json())])))
                    .collect(),
            ),
        );
        m.insert(
            "checks".to_string(),
            Json::Obj(self.checks.iter().map(|c| (c.name.clone(), c.json())).collect()),
        );
        m.insert(
            "tables".to_string(),
            Json::Obj(self.tables.iter().map(|(k, t)| (k.clone(), t.json())).collect()),
        );
        m.insert("pass".to_string(), Json::Bool(self.pass()));
        m.insert(
            "versions".to_string(),
            Json::obj([("eh-glue", Json::from(env!("CARGO_PKG_VERSION"))), ("ehglue", Json::from(ehglue::VERSION))]),
        );
        if let Some(w) = self.wall_clock {
            m.insert("wall_clock_s".to_string(), Json::Num(w));
        }
        Json::Obj(m)
    }

    pub fn encode(&self) -> String {
        self.to_json().encode()
    }
}

/// Write-then-rename in the target's directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
