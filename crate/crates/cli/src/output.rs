use std::fmt::Write as _;

use serde_json::{Map, Number, Value};

/// How a reported number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Bound,
    MonteCarlo,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::Bound => "bound",
            Provenance::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    /// A computed value, rounded to six significant digits on output.
    Num(f64),
    /// A value echoed from the command line.
    Input(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => sig6(*v),
            Cell::Input(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        let num = |v: f64| {
            Number::from_f64(v).map_or_else(|| Value::String(format!("{v}")), Value::Number)
        };
        match self {
            Cell::Num(v) => num(sig6(*v).parse().expect("formatted float")),
            Cell::Input(v) => num(*v),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }
}

/// Six significant digits, plain notation where that stays short.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..15).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{v:.decimals$}");
        // rounding can carry into a new leading digit
        let digits = s
            .trim_start_matches('-')
            .replace('.', "")
            .trim_start_matches('0')
            .len();
        if digits > 6 && decimals > 0 {
            format!("{v:.prec$}", prec = decimals - 1)
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

pub struct Record {
    pub command: String,
    pub inputs: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<(Vec<Cell>, Provenance)>,
}

impl Record {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.into(),
            inputs: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn input(mut self, name: &str, cell: Cell) -> Self {
        self.inputs.push((name.into(), cell));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>, provenance: Provenance) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push((row, provenance));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<String> = self.columns.clone();
        header.push("provenance".into());
        let _ = writeln!(out, "{}", header.join(","));
        for (row, prov) in &self.rows {
            let mut fields: Vec<String> = row.iter().map(Cell::csv).collect();
            fields.push(prov.label().into());
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut inputs = Map::new();
        for (k, v) in &self.inputs {
            inputs.insert(k.clone(), v.json());
        }
        let outputs: Vec<Value> = self
            .rows
            .iter()
            .map(|(row, prov)| {
                let mut obj = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    obj.insert(c.clone(), v.json());
                }
                obj.insert("provenance".into(), prov.label().into());
                Value::Object(obj)
            })
            .collect();
        let mut labels: Vec<&str> = self.rows.iter().map(|(_, p)| p.label()).collect();
        labels.dedup();
        let provenance = match labels.as_slice() {
            [one] => Value::from(*one),
            [] => Value::Null,
            _ => Value::from("mixed"),
        };
        let mut rec = Map::new();
        rec.insert("command".into(), Value::String(self.command.clone()));
        rec.insert("inputs".into(), Value::Object(inputs));
        rec.insert("outputs".into(), Value::Array(outputs));
        rec.insert("provenance".into(), provenance);
        rec.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        let mut s = serde_json::to_string_pretty(&Value::Object(rec)).expect("serializable");
        s.push('\n');
        s
    }
}
