use super::ast::{Ast, Label};
use super::SqlError;

fn incomplete(msg: impl Into<String>) -> SqlError {
    SqlError::Incomplete(msg.into())
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(
            s.to_ascii_lowercase().as_str(),
            "select" | "top" | "from" | "where" | "and" | "between" | "count"
        )
}

fn is_number(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    !body.is_empty()
        && body.chars().next().is_some_and(|c| c.is_ascii_digit())
        && body.chars().filter(|&c| c == '.').count() <= 1
        && body.chars().all(|c| c.is_ascii_digit() || c == '.')
        && !body.ends_with('.')
}

fn leaf(ast: &Ast, label: Label) -> Result<&str, SqlError> {
    if ast.label != label || !ast.children.is_empty() {
        return Err(incomplete(format!("expected {label} leaf, found {}", ast.label)));
    }
    let v = ast
        .value
        .as_deref()
        .ok_or_else(|| incomplete(format!("{label} leaf has no value")))?;
    let ok = match label {
        Label::ColExpr | Label::Table => is_identifier(v),
        Label::NumExpr => is_number(v),
        Label::Op => matches!(v, "=" | "<" | ">" | "<=" | ">=" | "!="),
        Label::AggExpr => v == "count",
        Label::StrExpr => true,
        _ => false,
    };
    if ok {
        Ok(v)
    } else {
        Err(incomplete(format!("invalid {label} value {v:?}")))
    }
}

fn single(ast: &Ast, label: Label) -> Result<&Ast, SqlError> {
    if ast.label != label || ast.value.is_some() {
        return Err(incomplete(format!("expected {label}, found {}", ast.label)));
    }
    match ast.children.as_slice() {
        [c] => Ok(c),
        _ => Err(incomplete(format!(
            "{label} needs exactly one child, has {}",
            ast.children.len()
        ))),
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn predicate(ast: &Ast) -> Result<String, SqlError> {
    match ast.label {
        Label::BiExpr => match ast.children.as_slice() {
            [c, o, lit] => {
                let col = leaf(c, Label::ColExpr)?;
                let op = leaf(o, Label::Op)?;
                let rhs = match lit.label {
                    Label::NumExpr => leaf(lit, Label::NumExpr)?.to_string(),
                    Label::StrExpr => quote(leaf(lit, Label::StrExpr)?),
                    other => return Err(incomplete(format!("invalid literal {other}"))),
                };
                Ok(format!("{col} {op} {rhs}"))
            }
            _ => Err(incomplete("BiExpr needs three children")),
        },
        Label::Between => match ast.children.as_slice() {
            [c, lo, hi] => Ok(format!(
                "{} between {} and {}",
                leaf(c, Label::ColExpr)?,
                leaf(lo, Label::NumExpr)?,
                leaf(hi, Label::NumExpr)?
            )),
            _ => Err(incomplete("Between needs three children")),
        },
        other => Err(incomplete(format!("expected predicate, found {other}"))),
    }
}

fn where_body(ast: &Ast) -> Result<String, SqlError> {
    if ast.label == Label::And {
        if ast.children.len() < 2 {
            return Err(incomplete("And needs at least two predicates"));
        }
        let parts = ast
            .children
            .iter()
            .map(predicate)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(parts.join(" and "))
    } else {
        predicate(ast)
    }
}

/// Canonical SQL for a complete query. Fails if the tree is not a well-formed
/// query of the dialect.
pub fn to_sql(ast: &Ast) -> Result<String, SqlError> {
    if ast.label != Label::Select || ast.value.is_some() {
        return Err(incomplete(format!("root must be Select, found {}", ast.label)));
    }
    let mut kids = ast.children.iter().peekable();
    let mut out = String::from("select");
    if let Some(top) = kids.next_if(|c| c.label == Label::Top) {
        let n = leaf(single(top, Label::Top)?, Label::NumExpr)?;
        out.push_str(" top ");
        out.push_str(n);
    }
    let proj = kids
        .next()
        .ok_or_else(|| incomplete("missing Project"))?;
    let item = single(proj, Label::Project)?;
    match item.label {
        Label::AggExpr => {
            leaf(item, Label::AggExpr)?;
            out.push_str(" count(*)");
        }
        _ => {
            out.push(' ');
            out.push_str(leaf(item, Label::ColExpr)?);
        }
    }
    let from = kids.next().ok_or_else(|| incomplete("missing From"))?;
    out.push_str(" from ");
    out.push_str(leaf(single(from, Label::From)?, Label::Table)?);
    if let Some(w) = kids.next() {
        out.push_str(" where ");
        out.push_str(&where_body(single(w, Label::Where)?)?);
    }
    if let Some(extra) = kids.next() {
        return Err(incomplete(format!("unexpected {} under Select", extra.label)));
    }
    Ok(out)
}

/// Validate that `ast` is a complete query of the dialect.
pub fn check_query(ast: &Ast) -> Result<(), SqlError> {
    to_sql(ast).map(|_| ())
}

/// Best-effort SQL text for any subtree; used for widget labels.
pub fn fragment(ast: &Ast) -> String {
    if ast.label == Label::Select {
        if let Ok(s) = to_sql(ast) {
            return s;
        }
    }
    let kids = || {
        ast.children
            .iter()
            .map(fragment)
            .collect::<Vec<_>>()
    };
    match ast.label {
        Label::AggExpr => "count(*)".into(),
        Label::StrExpr => quote(ast.value.as_deref().unwrap_or("")),
        _ if ast.is_leaf() => ast.value.clone().unwrap_or_default(),
        Label::Top => format!("top {}", kids().join(" ")),
        Label::From => format!("from {}", kids().join(" ")),
        Label::Where => format!("where {}", kids().join(" and ")),
        Label::And => kids().join(" and "),
        Label::Between => match kids().as_slice() {
            [c, lo, hi] => format!("{c} between {lo} and {hi}"),
            other => other.join(" "),
        },
        _ => kids().join(" "),
    }
}
