use super::ast::{Ast, Label};
use super::lexer::{tokenize, Tok, Token};
use super::SqlError;

const UNSUPPORTED: &[&str] = &[
    "join", "inner", "outer", "left", "right", "cross", "group", "order", "having", "union",
    "limit", "or", "not", "in", "like", "distinct", "as", "on", "exists",
];

const KEYWORDS: &[&str] = &["select", "top", "from", "where", "and", "between", "count"];

/// Parse a single statement of the supported dialect.
pub fn parse(sql: &str) -> Result<Ast, SqlError> {
    let tokens = tokenize(sql)?;
    parse_tokens(&tokens, end_position(sql))
}

pub(crate) fn parse_tokens(tokens: &[Token], eof: (usize, usize)) -> Result<Ast, SqlError> {
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        eof,
    };
    let ast = p.select()?;
    if matches!(p.peek(), Some(Tok::Semicolon)) {
        p.pos += 1;
    }
    if let Some(t) = p.toks.get(p.pos) {
        return Err(p.error_at(t, format!("unexpected {} after end of query", describe(&t.tok))));
    }
    Ok(ast)
}

pub(crate) fn end_position(src: &str) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for c in src.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("'{w}'"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Str(s) => format!("string '{s}'"),
        Tok::Op(o) => format!("operator {o}"),
        Tok::Star => "'*'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Semicolon => "';'".into(),
    }
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    eof: (usize, usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn error_at(&self, t: &Token, msg: String) -> SqlError {
        SqlError::Syntax {
            line: t.line,
            col: t.col,
            msg,
        }
    }

    fn error_here(&self, msg: impl Into<String>) -> SqlError {
        match self.toks.get(self.pos) {
            Some(t) => self.error_at(t, msg.into()),
            None => SqlError::Syntax {
                line: self.eof.0,
                col: self.eof.1,
                msg: format!("{} at end of input", msg.into()),
            },
        }
    }

    fn unsupported_check(&self) -> Result<(), SqlError> {
        if let Some(t) = self.toks.get(self.pos) {
            if let Tok::Word(w) = &t.tok {
                let lw = w.to_ascii_lowercase();
                if UNSUPPORTED.contains(&lw.as_str()) {
                    return Err(self.error_at(t, format!("unsupported construct '{w}'")));
                }
            }
            if matches!(t.tok, Tok::Comma) {
                return Err(self.error_at(t, "unsupported construct: multiple items".into()));
            }
        }
        Ok(())
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        self.unsupported_check()?;
        match self.peek() {
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw) => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let d = describe(t);
                Err(self.error_here(format!("expected '{kw}', found {d}")))
            }
            None => Err(self.error_here(format!("expected '{kw}'"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn ident(&mut self, what: &str) -> Result<String, SqlError> {
        self.unsupported_check()?;
        match self.peek() {
            Some(Tok::Word(w)) if !KEYWORDS.contains(&w.to_ascii_lowercase().as_str()) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            Some(Tok::LParen) => Err(self.error_here("unsupported construct: subquery")),
            Some(t) => {
                let d = describe(t);
                Err(self.error_here(format!("expected {what}, found {d}")))
            }
            None => Err(self.error_here(format!("expected {what}"))),
        }
    }

    fn number(&mut self) -> Result<String, SqlError> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            Some(t) => {
                let d = describe(t);
                Err(self.error_here(format!("expected number, found {d}")))
            }
            None => Err(self.error_here("expected number")),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SqlError> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let (d, e) = (describe(t), describe(&tok));
                Err(self.error_here(format!("expected {e}, found {d}")))
            }
            None => Err(self.error_here(format!("expected {}", describe(&tok)))),
        }
    }

    fn select(&mut self) -> Result<Ast, SqlError> {
        self.keyword("select")?;
        let mut children = Vec::new();
        if self.at_keyword("top") {
            self.pos += 1;
            let n = self.number()?;
            children.push(Ast::node(Label::Top, vec![Ast::leaf(Label::NumExpr, n)]));
        }
        children.push(self.projection()?);
        self.keyword("from")?;
        let table = self.ident("table name")?;
        children.push(Ast::node(Label::From, vec![Ast::leaf(Label::Table, table)]));
        self.unsupported_check()?;
        if self.at_keyword("where") {
            self.pos += 1;
            let mut preds = vec![self.predicate()?];
            while self.at_keyword("and") {
                self.pos += 1;
                preds.push(self.predicate()?);
            }
            self.unsupported_check()?;
            let body = if preds.len() == 1 {
                preds.pop().unwrap()
            } else {
                Ast::node(Label::And, preds)
            };
            children.push(Ast::node(Label::Where, vec![body]));
        }
        Ok(Ast::node(Label::Select, children))
    }

    fn projection(&mut self) -> Result<Ast, SqlError> {
        self.unsupported_check()?;
        let item = if self.at_keyword("count") {
            self.pos += 1;
            self.expect(Tok::LParen)?;
            self.expect(Tok::Star)?;
            self.expect(Tok::RParen)?;
            Ast::leaf(Label::AggExpr, "count")
        } else {
            Ast::leaf(Label::ColExpr, self.ident("column or count(*)")?)
        };
        self.unsupported_check()?;
        Ok(Ast::node(Label::Project, vec![item]))
    }

    fn predicate(&mut self) -> Result<Ast, SqlError> {
        if matches!(self.peek(), Some(Tok::LParen)) {
            return Err(self.error_here("unsupported construct: parenthesized predicate"));
        }
        let col = Ast::leaf(Label::ColExpr, self.ident("column")?);
        if self.at_keyword("between") {
            self.pos += 1;
            let lo = self.number()?;
            self.keyword("and")?;
            let hi = self.number()?;
            return Ok(Ast::node(
                Label::Between,
                vec![col, Ast::leaf(Label::NumExpr, lo), Ast::leaf(Label::NumExpr, hi)],
            ));
        }
        self.unsupported_check()?;
        let op = match self.peek() {
            Some(Tok::Op(o)) => {
                let o = if o == "<>" { "!=".to_string() } else { o.clone() };
                self.pos += 1;
                o
            }
            Some(t) => {
                let d = describe(t);
                return Err(self.error_here(format!("expected comparison operator, found {d}")));
            }
            None => return Err(self.error_here("expected comparison operator")),
        };
        let lit = match self.peek() {
            Some(Tok::Number(n)) => Ast::leaf(Label::NumExpr, n.clone()),
            Some(Tok::Str(s)) => Ast::leaf(Label::StrExpr, s.clone()),
            Some(Tok::LParen) => return Err(self.error_here("unsupported construct: subquery")),
            Some(t) => {
                let d = describe(t);
                return Err(self.error_here(format!("expected literal, found {d}")));
            }
            None => return Err(self.error_here("expected literal")),
        };
        self.pos += 1;
        Ok(Ast::node(
            Label::BiExpr,
            vec![col, Ast::leaf(Label::Op, op), lit],
        ))
    }
}
