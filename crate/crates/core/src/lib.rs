//! Interface generation from SQL query logs.
//!
//! A log of queries is factored into a DiffTree ([`difftree`]) whose choice
//! nodes capture how the queries differ. Rewrite rules ([`rules`]) restructure
//! the tree, widgets ([`widgets`]) are assigned to its choice nodes, and a cost
//! model ([`cost`]) scores the resulting interface. A Monte Carlo tree search
//! ([`search`]) looks for the cheapest interface that still expresses the log.

pub mod cost;
pub mod difftree;
pub mod fixtures;
pub mod par;
pub mod rules;
pub mod search;
pub mod sql;
pub mod widgets;
