//! Worked example inputs shipped with the crate: a three-query log and the
//! ten-query range-filter log, plus the hand-factored tree for the former.

use std::sync::Arc;

use crate::difftree::{DiffNode, Stamp};
use crate::sql::{parse_log, Ast, Label, QueryLog};
use crate::widgets::{
    build_widget_tree, InterfaceSpec, Orientation, Screen, SizeClass, WidgetAssignment, WidgetChoice, WidgetKind,
};

pub const FIG1_SQL: &str = include_str!("../fixtures/fig1.sql");
pub const LISTING1_SQL: &str = include_str!("../fixtures/listing1.sql");

/// `select sales|costs from product [where country = 'USA'|'EUR']`.
pub fn fig1_log() -> QueryLog {
    parse_log(FIG1_SQL).expect("fixture parses")
}

pub fn fig1_queries() -> [Ast; 3] {
    let log = fig1_log();
    let q = log.queries();
    [q[0].clone(), q[1].clone(), q[2].clone()]
}

pub fn listing1_log() -> QueryLog {
    parse_log(LISTING1_SQL).expect("fixture parses")
}

fn stamp(label: Label) -> Vec<Stamp> {
    vec![Stamp { label, value: None }]
}

/// The factored tree for [`fig1_log`]: a column choice and an optional WHERE
/// whose string literal is a choice.
pub fn fig5_tree() -> Arc<DiffNode> {
    let project = DiffNode::all(
        stamp(Label::Project),
        vec![DiffNode::any(vec![
            DiffNode::leaf(Label::ColExpr, "sales"),
            DiffNode::leaf(Label::ColExpr, "costs"),
        ])],
    );
    let from = DiffNode::all(stamp(Label::From), vec![DiffNode::leaf(Label::Table, "product")]);
    let pred = DiffNode::all(
        stamp(Label::BiExpr),
        vec![
            DiffNode::leaf(Label::ColExpr, "country"),
            DiffNode::leaf(Label::Op, "="),
            DiffNode::any(vec![
                DiffNode::leaf(Label::StrExpr, "USA"),
                DiffNode::leaf(Label::StrExpr, "EUR"),
            ]),
        ],
    );
    let where_ = DiffNode::opt(DiffNode::all(stamp(Label::Where), vec![pred]));
    DiffNode::all(stamp(Label::Select), vec![project, from, where_])
}

/// Widgets for [`fig5_tree`]: a dropdown for the column, and a vertical
/// toggle over a dropdown for the WHERE clause.
pub fn fig2b_assignment() -> WidgetAssignment {
    let large = |kind| WidgetChoice {
        kind,
        size: Some(SizeClass::Large),
    };
    let mut a = WidgetAssignment::default();
    a.widgets.insert(vec![0, 0], large(WidgetKind::Dropdown));
    a.widgets.insert(vec![2], large(WidgetKind::Toggle));
    a.widgets.insert(vec![2, 0, 0, 2], large(WidgetKind::Dropdown));
    a.layouts.insert(vec![], Orientation::Vertical);
    a.layouts.insert(vec![2], Orientation::Vertical);
    a
}

/// [`fig2b_assignment`] on a 100x40 screen, starting at `start`.
pub fn fig2b_spec(start: &Ast) -> InterfaceSpec {
    let t = fig5_tree();
    let w = build_widget_tree(&t, &fig2b_assignment());
    InterfaceSpec::new(t, w, Screen { width: 100, height: 40 }, start).expect("query is expressible")
}

/// A random query over a small vocabulary, for property tests.
pub fn random_query<R: rand::Rng>(rng: &mut R) -> Ast {
    use rand::seq::IndexedRandom;
    let col = ["a", "b", "c"];
    let mut sql = String::from("select ");
    if rng.random_bool(0.3) {
        sql += &format!("top {} ", ["10", "100"].choose(rng).unwrap());
    }
    if rng.random_bool(0.2) {
        sql += "count(*)";
    } else {
        sql += col.choose(rng).unwrap();
    }
    sql += &format!(" from {}", ["t", "u"].choose(rng).unwrap());
    let preds = rng.random_range(0..=3);
    for i in 0..preds {
        sql += if i == 0 { " where " } else { " and " };
        let c = col.choose(rng).unwrap();
        match rng.random_range(0..3) {
            0 => sql += &format!("{c} between {} and {}", rng.random_range(0..3), rng.random_range(5..7)),
            1 => sql += &format!("{c} = '{}'", ["x", "y"].choose(rng).unwrap()),
            _ => sql += &format!("{c} > {}", rng.random_range(0..3)),
        }
    }
    crate::sql::parse(&sql).expect("generated query parses")
}

pub fn random_log<R: rand::Rng>(rng: &mut R, n: usize) -> QueryLog {
    QueryLog::new((0..n).map(|_| random_query(rng)).collect()).expect("n > 0")
}
