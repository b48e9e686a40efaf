//! A small in-memory data source for `serve --data`.
//!
//! The file is a JSON object mapping table names to arrays of row objects:
//! `{"product": [{"sales": 10, "country": "USA"}, ...]}`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use ifgen::sql::{Ast, Label};

use crate::error::CliError;

pub type Row = Map<String, Value>;

#[derive(Debug, Clone, Default)]
pub struct Database {
    tables: BTreeMap<String, Vec<Row>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("no table named {0:?}")]
    UnknownTable(String),
    #[error("unsupported query shape: {0}")]
    Shape(String),
}

impl Database {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let tables: BTreeMap<String, Vec<Row>> =
            serde_json::from_str(text).map_err(|e| CliError::Parse(format!("data file: {e}")))?;
        Ok(Database { tables })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn execute(&self, q: &Ast) -> Result<ResultSet, ExecError> {
        let shape = |m: &str| ExecError::Shape(m.to_string());
        if q.label != Label::Select {
            return Err(shape("root is not a select"));
        }
        let find = |l: Label| q.children.iter().find(|c| c.label == l);
        let table = find(Label::From)
            .and_then(|f| f.children.first())
            .and_then(|t| t.value.as_deref())
            .ok_or_else(|| shape("missing from"))?;
        let rows = self
            .tables
            .get(table)
            .ok_or_else(|| ExecError::UnknownTable(table.to_string()))?;
        let limit = match find(Label::Top) {
            Some(t) => Some(
                t.children
                    .first()
                    .and_then(|n| n.value.as_deref())
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| shape("bad top"))?,
            ),
            None => None,
        };
        let preds: Vec<&Ast> = match find(Label::Where).and_then(|w| w.children.first()) {
            None => Vec::new(),
            Some(a) if a.label == Label::And => a.children.iter().collect(),
            Some(p) => vec![p],
        };
        let mut kept = Vec::new();
        for r in rows {
            let mut ok = true;
            for p in &preds {
                if !matches(r, p)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                kept.push(r);
            }
        }
        let item = find(Label::Project)
            .and_then(|p| p.children.first())
            .ok_or_else(|| shape("missing project"))?;
        let mut out = match item.label {
            Label::AggExpr => ResultSet {
                columns: vec!["count".into()],
                rows: vec![vec![Value::from(kept.len())]],
            },
            Label::ColExpr => {
                let col = item.value.clone().unwrap_or_default();
                let rows = kept
                    .iter()
                    .map(|r| vec![r.get(&col).cloned().unwrap_or(Value::Null)])
                    .collect();
                ResultSet { columns: vec![col], rows }
            }
            _ => return Err(shape("unsupported projection")),
        };
        if let Some(n) = limit {
            out.rows.truncate(n);
        }
        Ok(out)
    }
}

fn literal(a: &Ast) -> Option<Value> {
    let v = a.value.as_deref()?;
    match a.label {
        Label::NumExpr => v.parse::<f64>().ok().map(Value::from),
        Label::StrExpr => Some(Value::from(v)),
        _ => None,
    }
}

fn compare(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64()?.partial_cmp(&y.as_f64()?),
        (Value::String(x), Value::String(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn matches(row: &Row, p: &Ast) -> Result<bool, ExecError> {
    let shape = || ExecError::Shape(format!("bad predicate {:?}", p.label));
    let col = p
        .children
        .first()
        .and_then(|c| c.value.as_deref())
        .ok_or_else(shape)?;
    let Some(cell) = row.get(col) else {
        return Ok(false);
    };
    match (p.label, p.children.as_slice()) {
        (Label::BiExpr, [_, op, lit]) => {
            let lit = literal(lit).ok_or_else(shape)?;
            let Some(ord) = compare(cell, &lit) else {
                return Ok(false);
            };
            Ok(match op.value.as_deref() {
                Some("=") => ord == Ordering::Equal,
                Some("!=") | Some("<>") => ord != Ordering::Equal,
                Some("<") => ord == Ordering::Less,
                Some(">") => ord == Ordering::Greater,
                Some("<=") => ord != Ordering::Greater,
                Some(">=") => ord != Ordering::Less,
                _ => return Err(shape()),
            })
        }
        (Label::Between, [_, lo, hi]) => {
            let (lo, hi) = (literal(lo).ok_or_else(shape)?, literal(hi).ok_or_else(shape)?);
            Ok(matches!(compare(cell, &lo), Some(Ordering::Greater | Ordering::Equal))
                && matches!(compare(cell, &hi), Some(Ordering::Less | Ordering::Equal)))
        }
        _ => Err(shape()),
    }
}
