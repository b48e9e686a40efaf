use std::fmt;

use serde::{Deserialize, Serialize};

/// Grammar rule names. The set is closed: rules and widget binding match on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Select,
    Project,
    AggExpr,
    ColExpr,
    Top,
    NumExpr,
    From,
    Table,
    Where,
    And,
    BiExpr,
    Between,
    StrExpr,
    Op,
}

impl Label {
    pub const ALL: [Label; 14] = [
        Label::Select,
        Label::Project,
        Label::AggExpr,
        Label::ColExpr,
        Label::Top,
        Label::NumExpr,
        Label::From,
        Label::Table,
        Label::Where,
        Label::And,
        Label::BiExpr,
        Label::Between,
        Label::StrExpr,
        Label::Op,
    ];

    /// Leaf labels carry a token value and never have children.
    pub fn is_leaf(self) -> bool {
        matches!(
            self,
            Label::ColExpr
                | Label::StrExpr
                | Label::NumExpr
                | Label::Table
                | Label::Op
                | Label::AggExpr
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Select => "Select",
            Label::Project => "Project",
            Label::AggExpr => "AggExpr",
            Label::ColExpr => "ColExpr",
            Label::Top => "Top",
            Label::NumExpr => "NumExpr",
            Label::From => "From",
            Label::Table => "Table",
            Label::Where => "Where",
            Label::And => "And",
            Label::BiExpr => "BiExpr",
            Label::Between => "Between",
            Label::StrExpr => "StrExpr",
            Label::Op => "Op",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labeled ordered tree for one query.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ast {
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default)]
    pub children: Vec<Ast>,
}

impl Ast {
    pub fn leaf(label: Label, value: impl Into<String>) -> Self {
        Ast {
            label,
            value: Some(value.into()),
            children: Vec::new(),
        }
    }

    pub fn node(label: Label, children: Vec<Ast>) -> Self {
        Ast {
            label,
            value: None,
            children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty() && self.value.is_some()
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Ast::size).sum::<usize>()
    }

    /// Largest child count of any node, used to bound repetition.
    pub fn max_fanout(&self) -> usize {
        self.children
            .iter()
            .map(Ast::max_fanout)
            .max()
            .unwrap_or(0)
            .max(self.children.len())
    }
}

/// Structural equality: labels, values and child sequences identical.
pub fn ast_equal(a: &Ast, b: &Ast) -> bool {
    a == b
}

/// Ordered, non-empty sequence of queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Ast>", into = "Vec<Ast>")]
pub struct QueryLog {
    queries: Vec<Ast>,
}

#[derive(Debug, thiserror::Error)]
#[error("query log is empty")]
pub struct EmptyLog;

impl QueryLog {
    pub fn new(queries: Vec<Ast>) -> Result<Self, EmptyLog> {
        if queries.is_empty() {
            return Err(EmptyLog);
        }
        Ok(QueryLog { queries })
    }

    pub fn queries(&self) -> &[Ast] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Ast> {
        self.queries.iter()
    }

    /// Consecutive pairs in log order.
    pub fn pairs(&self) -> impl Iterator<Item = (&Ast, &Ast)> {
        self.queries.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Distinct queries in first-appearance order.
    pub fn distinct(&self) -> Vec<&Ast> {
        let mut out: Vec<&Ast> = Vec::new();
        for q in &self.queries {
            if !out.contains(&q) {
                out.push(q);
            }
        }
        out
    }
}

impl TryFrom<Vec<Ast>> for QueryLog {
    type Error = EmptyLog;
    fn try_from(v: Vec<Ast>) -> Result<Self, EmptyLog> {
        QueryLog::new(v)
    }
}

impl From<QueryLog> for Vec<Ast> {
    fn from(log: QueryLog) -> Self {
        log.queries
    }
}

impl<'a> IntoIterator for &'a QueryLog {
    type Item = &'a Ast;
    type IntoIter = std::slice::Iter<'a, Ast>;
    fn into_iter(self) -> Self::IntoIter {
        self.queries.iter()
    }
}
