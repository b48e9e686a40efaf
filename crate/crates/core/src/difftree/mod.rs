//! DiffTrees: ALL/ANY/OPT/MULTI trees that encode the shared structure and
//! the variation of a set of query ASTs.
//!
//! A node stands for a (possibly empty) sequence of AST nodes. ALL emits its
//! payload stamp wrapped around its children's output, ANY emits one chosen
//! child, OPT emits its child or nothing, MULTI emits zero or more copies of
//! its child and ABSENT emits nothing.

mod choice;
mod express;
mod node;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use choice::{
    complete_defaults, default_selection, instantiate, instantiate_forest, reachable_choices, static_path,
    ChoiceAssignment, Selection,
};
pub use express::{expressible, witnesses};
pub use node::{
    canonical_hash, initial_difftree, lift, replace_at, DiffNode, Digest, NodeKind, Path, Stamp,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffTreeError {
    #[error("invalid DiffTree at {path:?}: {reason}")]
    Invalid { path: Path, reason: String },
    #[error("no selection for choice node at {0:?}")]
    MissingChoice(Path),
    #[error("selection at {0:?} does not fit the node")]
    InvalidChoice(Path),
    #[error("tree instantiates to {0} root nodes, expected 1")]
    NotAQuery(usize),
}

/// Compact one-line rendering, e.g. `ANY{Select[..] | ∅}`.
pub fn render(n: &DiffNode) -> String {
    let kids = |sep: &str| {
        n.children()
            .iter()
            .map(|c| render(c))
            .collect::<Vec<_>>()
            .join(sep)
    };
    match n.kind() {
        NodeKind::All => {
            let mut head = n
                .payload()
                .iter()
                .map(|s| match &s.value {
                    Some(v) => format!("{}({v})", s.label),
                    None => s.label.to_string(),
                })
                .collect::<Vec<_>>()
                .join("/");
            if !n.children().is_empty() || n.payload().is_empty() {
                head.push('[');
                head.push_str(&kids(", "));
                head.push(']');
            }
            head
        }
        NodeKind::Any => format!("ANY{{{}}}", kids(" | ")),
        NodeKind::Opt => format!("OPT({})", kids("")),
        NodeKind::Multi => format!("MULTI({})", kids("")),
        NodeKind::Absent => "∅".into(),
    }
}

#[derive(Serialize, Deserialize)]
struct RawNode {
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payload: Option<Vec<Stamp>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<RawNode>>,
}

impl RawNode {
    fn from_node(n: &DiffNode) -> Self {
        if n.is_absent() {
            return RawNode {
                kind: NodeKind::Absent,
                payload: None,
                children: None,
            };
        }
        RawNode {
            kind: n.kind(),
            payload: Some(n.payload().to_vec()),
            children: Some(n.children().iter().map(|c| RawNode::from_node(c)).collect()),
        }
    }

    fn into_node(self) -> Result<Arc<DiffNode>, DiffTreeError> {
        let children = self
            .children
            .unwrap_or_default()
            .into_iter()
            .map(RawNode::into_node)
            .collect::<Result<Vec<_>, _>>()?;
        DiffNode::try_new(self.kind, self.payload.unwrap_or_default(), children)
    }
}

impl Serialize for DiffNode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawNode::from_node(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiffNode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawNode::deserialize(d)?;
        let node = raw.into_node().map_err(serde::de::Error::custom)?;
        Ok(Arc::unwrap_or_clone(node))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sql::{parse, Label};

    #[test]
    fn lift_is_all_isomorphic() {
        let q1 = parse("select sales from product where country = 'USA'").unwrap();
        let t = lift(&q1);
        let mut all_all = true;
        t.walk(&mut |_, n| all_all &= n.kind() == NodeKind::All);
        assert!(all_all);
        assert_eq!(t.size(), q1.size());
        assert_eq!(instantiate(&t, &ChoiceAssignment::new()).unwrap(), q1);

        let leaf = lift(&crate::sql::Ast::leaf(Label::ColExpr, "sales"));
        assert!(leaf.is_leaf());
        assert_eq!(leaf.payload()[0].value.as_deref(), Some("sales"));
    }

    #[test]
    fn initial_tree_has_one_child_per_distinct_query() {
        let log = fixtures::fig1_log();
        let t = initial_difftree(&log);
        assert_eq!(t.kind(), NodeKind::Any);
        assert_eq!(t.children().len(), 3);
        for (i, q) in log.iter().enumerate() {
            assert_eq!(*t.children()[i], *lift(q));
        }
        let dup = crate::sql::QueryLog::new(vec![log.queries()[0].clone(); 2]).unwrap();
        assert_eq!(initial_difftree(&dup).children().len(), 1);
    }

    #[test]
    fn fig5_instantiation() {
        let t = fixtures::fig5_tree();
        let [q1, q2, q3] = fixtures::fig1_queries();
        // root ALL(Select): children Project(0), From(1), OPT(2)
        let mut c = ChoiceAssignment::new();
        c.set(vec![0, 0], Selection::Any(1));
        c.set(vec![2], Selection::Opt(false));
        assert_eq!(instantiate(&t, &c).unwrap(), q3);
        c.set(vec![0, 0], Selection::Any(0));
        c.set(vec![2], Selection::Opt(true));
        c.set(vec![2, 0, 0, 2], Selection::Any(0));
        assert_eq!(instantiate(&t, &c).unwrap(), q1);
        c.remove(&[2, 0, 0, 2]);
        assert_eq!(
            instantiate(&t, &c),
            Err(DiffTreeError::MissingChoice(vec![2, 0, 0, 2]))
        );
        let w = expressible(&t, &q2).unwrap();
        assert_eq!(w.get(&[0, 0]), Some(Selection::Any(1)));
        assert_eq!(w.get(&[2]), Some(Selection::Opt(true)));
        assert_eq!(w.get(&[2, 0, 0, 2]), Some(Selection::Any(1)));
    }

    #[test]
    fn expressibility_oracle_on_initial_tree() {
        let log = fixtures::fig1_log();
        let t = initial_difftree(&log);
        // brute force over the root choices
        for q in log.iter() {
            let brute = (0..t.children().len()).any(|i| {
                let mut c = ChoiceAssignment::new();
                c.set(vec![], Selection::Any(i));
                instantiate(&t, &c).as_ref() == Ok(q)
            });
            assert!(brute);
            let w = expressible(&t, q).unwrap();
            assert_eq!(&instantiate(&t, &w).unwrap(), q);
        }
        let [q1, q2, _] = fixtures::fig1_queries();
        assert!(expressible(&lift(&q1), &q2).is_none());
    }

    #[test]
    fn multi_expresses_repetitions() {
        let tmpl = DiffNode::all(
            vec![Stamp { label: Label::Between, value: None }],
            vec![
                DiffNode::any(vec![
                    DiffNode::leaf(Label::ColExpr, "u"),
                    DiffNode::leaf(Label::ColExpr, "g"),
                ]),
                DiffNode::leaf(Label::NumExpr, "0"),
                DiffNode::leaf(Label::NumExpr, "30"),
            ],
        );
        let and = DiffNode::all(
            vec![Stamp { label: Label::And, value: None }],
            vec![DiffNode::multi(tmpl)],
        );
        let q = parse("select a from t where u between 0 and 30 and g between 0 and 30").unwrap();
        let and_ast = &q.children[2].children[0];
        let (ws, complete) = witnesses(&and, and_ast, 16);
        assert!(complete);
        assert_eq!(ws.len(), 1);
        let w = &ws[0];
        assert_eq!(w.get(&[0]), Some(Selection::Multi(2)));
        assert_eq!(w.get(&[0, 0, 0]), Some(Selection::Any(0)));
        assert_eq!(w.get(&[0, 1, 0]), Some(Selection::Any(1)));
        assert_eq!(&instantiate(&and, w).unwrap(), and_ast);
    }

    #[test]
    fn hash_ignores_any_order_only() {
        let a = DiffNode::leaf(Label::ColExpr, "a");
        let b = DiffNode::leaf(Label::ColExpr, "b");
        let ab = DiffNode::any(vec![a.clone(), b.clone()]);
        let ba = DiffNode::any(vec![b.clone(), a.clone()]);
        assert_eq!(canonical_hash(&ab), canonical_hash(&ba));
        let all_ab = DiffNode::all(vec![Stamp { label: Label::And, value: None }], vec![a.clone(), b.clone()]);
        let all_ba = DiffNode::all(vec![Stamp { label: Label::And, value: None }], vec![b, a]);
        assert_ne!(canonical_hash(&all_ab), canonical_hash(&all_ba));
        let fig1 = initial_difftree(&fixtures::fig1_log());
        assert_ne!(canonical_hash(&fig1), canonical_hash(&fixtures::fig5_tree()));
        let copy: DiffNode = (*fixtures::fig5_tree()).clone();
        assert_eq!(canonical_hash(&copy), canonical_hash(&fixtures::fig5_tree()));
    }

    #[test]
    fn validator_rejects_bad_arity() {
        let a = DiffNode::leaf(Label::ColExpr, "a");
        assert!(DiffNode::try_new(NodeKind::Opt, vec![], vec![a.clone(), a.clone()]).is_err());
        assert!(DiffNode::try_new(NodeKind::Multi, vec![], vec![]).is_err());
        assert!(DiffNode::try_new(NodeKind::Any, vec![], vec![]).is_err());
        assert!(DiffNode::try_new(NodeKind::All, vec![], vec![DiffNode::absent()]).is_err());
        assert!(DiffNode::try_new(NodeKind::Any, vec![], vec![a.clone(), DiffNode::absent()]).is_ok());
        fixtures::fig5_tree().validate().unwrap();
    }

    #[test]
    fn json_round_trip_and_absent_encoding() {
        let t = DiffNode::any(vec![DiffNode::leaf(Label::ColExpr, "a"), DiffNode::absent()]);
        let v = serde_json::to_value(&*t).unwrap();
        assert_eq!(v["kind"], "ANY");
        assert_eq!(v["children"][1], serde_json::json!({"kind": "ABSENT"}));
        let back: DiffNode = serde_json::from_value(v).unwrap();
        assert_eq!(back.digest(), t.digest());
        let bad = serde_json::json!({"kind": "OPT", "children": []});
        assert!(serde_json::from_value::<DiffNode>(bad).is_err());
    }
}
