//! Restricted SQL dialect: parsing into labeled ASTs and canonical serialization.
//!
//! Supported statements:
//!
//! ```text
//! SELECT [TOP n] (column | count(*)) FROM table
//!     [WHERE pred (AND pred)*]
//! pred := column op literal | column BETWEEN n AND n
//! ```

mod ast;
mod emit;
mod lexer;
mod parser;

pub use ast::{ast_equal, Ast, EmptyLog, Label, QueryLog};
pub use emit::{check_query, fragment, to_sql};
pub use parser::parse;

use lexer::{tokenize, Tok, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SqlError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("incomplete query: {0}")]
    Incomplete(String),
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("query log is empty")]
    Empty,
    #[error("query {index} does not parse: {source}\n  {statement}")]
    Parse {
        index: usize,
        statement: String,
        #[source]
        source: SqlError,
    },
}

/// Parse a query log: semicolon-separated statements, or one statement per
/// line when the text has no semicolons (a line that does not start with
/// `select` continues the previous statement). `--` comments are ignored.
pub fn parse_log(text: &str) -> Result<QueryLog, LogError> {
    let tokens = tokenize(text).map_err(|e| LogError::Parse {
        index: 0,
        statement: text.lines().next().unwrap_or("").to_string(),
        source: e,
    })?;
    let chunks = split_statements(&tokens);
    let lines: Vec<&str> = text.lines().collect();
    let mut queries = Vec::with_capacity(chunks.len());
    for (index, chunk) in chunks.iter().enumerate() {
        let first = chunk[0].line;
        let last = chunk[chunk.len() - 1].line;
        let eof = (last, usize::MAX);
        let ast = parser::parse_tokens(chunk, eof).map_err(|source| LogError::Parse {
            index,
            statement: lines[first - 1..last.min(lines.len())].join("\n"),
            source,
        })?;
        queries.push(ast);
    }
    QueryLog::new(queries).map_err(|_| LogError::Empty)
}

fn split_statements(tokens: &[Token]) -> Vec<Vec<Token>> {
    let mut out: Vec<Vec<Token>> = Vec::new();
    if tokens.iter().any(|t| t.tok == Tok::Semicolon) {
        let mut cur = Vec::new();
        for t in tokens {
            if t.tok == Tok::Semicolon {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            } else {
                cur.push(t.clone());
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        return out;
    }
    let mut last_line = 0;
    for t in tokens {
        let starts_line = t.line != last_line;
        last_line = t.line;
        let is_select = matches!(&t.tok, Tok::Word(w) if w.eq_ignore_ascii_case("select"));
        match out.last_mut() {
            Some(cur) if !(starts_line && is_select) => cur.push(t.clone()),
            _ => out.push(vec![t.clone()]),
        }
    }
    out
}
