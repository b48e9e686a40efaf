use std::sync::Arc;

use super::align::align;
use super::{Bindings, Rule, RuleId};
use crate::difftree::{DiffNode, Digest, NodeKind, Stamp};
use crate::sql::Label;

/// ANY over same-rooted ALL children becomes an ALL of per-slot ANYs.
pub struct Any2All;

impl Rule for Any2All {
    fn id(&self) -> RuleId {
        RuleId::Any2All
    }

    fn matches(&self, n: &DiffNode) -> Vec<Bindings> {
        if self.accepts(n, &Bindings::None) {
            vec![Bindings::None]
        } else {
            Vec::new()
        }
    }

    fn accepts(&self, n: &DiffNode, b: &Bindings) -> bool {
        if n.kind() != NodeKind::Any || *b != Bindings::None {
            return false;
        }
        let first = &n.children()[0];
        first.kind() == NodeKind::All
            && !first.payload().is_empty()
            && n.children()
                .iter()
                .all(|c| c.kind() == NodeKind::All && c.payload() == first.payload())
    }

    fn rewrite(&self, n: &DiffNode, _: &Bindings) -> Arc<DiffNode> {
        // canonical order so that hash-equal trees factor identically
        let mut kids: Vec<&Arc<DiffNode>> = n.children().iter().collect();
        kids.sort_by_key(|c| c.digest());
        let rows: Vec<&[Arc<DiffNode>]> = kids.iter().map(|c| c.children()).collect();
        let slots = align(&rows)
            .into_iter()
            .map(|entries| {
                let first = entries[0].as_ref().map(|e| e.digest());
                let uniform = first.is_some()
                    && entries.iter().all(|e| e.as_ref().map(|e| e.digest()) == first);
                if uniform {
                    entries[0].clone().unwrap()
                } else {
                    DiffNode::any(
                        entries
                            .into_iter()
                            .map(|e| e.unwrap_or_else(DiffNode::absent))
                            .collect(),
                    )
                }
            })
            .collect();
        DiffNode::all(n.children()[0].payload().to_vec(), slots)
    }
}

/// ALL with an ANY child becomes an ANY of ALLs, one per alternative.
pub struct All2Any;

impl Rule for All2Any {
    fn id(&self) -> RuleId {
        RuleId::All2Any
    }

    fn matches(&self, n: &DiffNode) -> Vec<Bindings> {
        if n.kind() != NodeKind::All {
            return Vec::new();
        }
        (0..n.children().len())
            .map(Bindings::Slot)
            .filter(|b| self.accepts(n, b))
            .collect()
    }

    fn accepts(&self, n: &DiffNode, b: &Bindings) -> bool {
        let Bindings::Slot(j) = *b else { return false };
        n.kind() == NodeKind::All
            && n.children()
                .get(j)
                .is_some_and(|c| c.kind() == NodeKind::Any && c.children().len() >= 2)
    }

    fn rewrite(&self, n: &DiffNode, b: &Bindings) -> Arc<DiffNode> {
        let Bindings::Slot(j) = *b else { unreachable!() };
        let alts = n.children()[j].children();
        DiffNode::any(
            alts.iter()
                .map(|alt| {
                    let mut kids = n.children().to_vec();
                    if alt.is_absent() {
                        kids.remove(j);
                    } else {
                        kids[j] = alt.clone();
                    }
                    DiffNode::all(n.payload().to_vec(), kids)
                })
                .collect(),
        )
    }
}

/// ANY{x, ∅} becomes OPT(x).
pub struct Any2Opt;

impl Rule for Any2Opt {
    fn id(&self) -> RuleId {
        RuleId::Any2Opt
    }

    fn matches(&self, n: &DiffNode) -> Vec<Bindings> {
        if self.accepts(n, &Bindings::None) {
            vec![Bindings::None]
        } else {
            Vec::new()
        }
    }

    fn accepts(&self, n: &DiffNode, b: &Bindings) -> bool {
        *b == Bindings::None
            && n.kind() == NodeKind::Any
            && n.children().len() == 2
            && n.children().iter().filter(|c| c.is_absent()).count() == 1
    }

    fn rewrite(&self, n: &DiffNode, _: &Bindings) -> Arc<DiffNode> {
        let x = n.children().iter().find(|c| !c.is_absent()).unwrap();
        DiffNode::opt(x.clone())
    }
}

/// OPT(x) becomes ANY{x, ∅}.
pub struct Opt2Any;

impl Rule for Opt2Any {
    fn id(&self) -> RuleId {
        RuleId::Opt2Any
    }

    fn matches(&self, n: &DiffNode) -> Vec<Bindings> {
        if self.accepts(n, &Bindings::None) {
            vec![Bindings::None]
        } else {
            Vec::new()
        }
    }

    fn accepts(&self, n: &DiffNode, b: &Bindings) -> bool {
        *b == Bindings::None && n.kind() == NodeKind::Opt
    }

    fn rewrite(&self, n: &DiffNode, _: &Bindings) -> Arc<DiffNode> {
        DiffNode::any(vec![n.children()[0].clone(), DiffNode::absent()])
    }
}

/// A nested ANY child is merged into its ANY parent.
pub struct AnyPull;

impl Rule for AnyPull {
    fn id(&self) -> RuleId {
        RuleId::AnyPull
    }

    fn matches(&self, n: &DiffNode) -> Vec<Bindings> {
        if n.kind() != NodeKind::Any {
            return Vec::new();
        }
        (0..n.children().len())
            .map(Bindings::Child)
            .filter(|b| self.accepts(n, b))
            .collect()
    }

    fn accepts(&self, n: &DiffNode, b: &Bindings) -> bool {
        let Bindings::Child(j) = *b else { return false };
        if n.kind() != NodeKind::Any || n.children().len() < 2 {
            return false;
        }
        let Some(inner) = n.children().get(j) else {
            return false;
        };
        inner.kind() == NodeKind::Any
            && inner.children().iter().all(|g| {
                n.children()
                    .iter()
                    .enumerate()
                    .all(|(i, o)| i == j || o.digest() != g.digest())
            })
    }

    fn rewrite(&self, n: &DiffNode, b: &Bindings) -> Arc<DiffNode> {
        let Bindings::Child(j) = *b else { unreachable!() };
        let mut kids = Vec::with_capacity(n.children().len() + 4);
        for (i, c) in n.children().iter().enumerate() {
            if i == j {
                kids.extend(c.children().iter().cloned());
            } else {
                kids.push(c.clone());
            }
        }
        DiffNode::any(kids)
    }
}

/// A group of an ANY's children is pushed down into a nested ANY.
///
/// Enumerated groups are the classes of children sharing an alignment key,
/// which sets up Any2All on the nested node; any proper subset of two or more
/// children is accepted when given explicitly.
pub struct AnyPush;

impl AnyPush {
    fn nested_digest(n: &DiffNode, group: &[usize]) -> Digest {
        DiffNode::any(group.iter().map(|&i| n.children()[i].clone()).collect()).digest()
    }
}

impl Rule for AnyPush {
    fn id(&self) -> RuleId {
        RuleId::AnyPush
    }

    fn matches(&self, n: &DiffNode) -> Vec<Bindings> {
        if n.kind() != NodeKind::Any {
            return Vec::new();
        }
        let mut classes: Vec<(Label, Vec<usize>)> = Vec::new();
        for (i, c) in n.children().iter().enumerate() {
            if c.is_absent() {
                continue;
            }
            if let Some(k) = c.align_key() {
                match classes.iter_mut().find(|(l, _)| *l == k) {
                    Some((_, v)) => v.push(i),
                    None => classes.push((k, vec![i])),
                }
            }
        }
        classes
            .into_iter()
            .map(|(_, g)| Bindings::Group(g))
            .filter(|b| self.accepts(n, b))
            .collect()
    }

    fn accepts(&self, n: &DiffNode, b: &Bindings) -> bool {
        let Bindings::Group(g) = b else { return false };
        let len = n.children().len();
        if n.kind() != NodeKind::Any
            || g.len() < 2
            || g.len() >= len
            || !g.windows(2).all(|w| w[0] < w[1])
            || g.last().is_some_and(|&l| l >= len)
        {
            return false;
        }
        let d = Self::nested_digest(n, g);
        n.children()
            .iter()
            .enumerate()
            .all(|(i, c)| g.contains(&i) || c.digest() != d)
    }

    fn rewrite(&self, n: &DiffNode, b: &Bindings) -> Arc<DiffNode> {
        let Bindings::Group(g) = b else { unreachable!() };
        let nested = DiffNode::any(g.iter().map(|&i| n.children()[i].clone()).collect());
        let mut kids = Vec::with_capacity(n.children().len() - g.len() + 1);
        for (i, c) in n.children().iter().enumerate() {
            if i == g[0] {
                kids.push(nested.clone());
            } else if !g.contains(&i) {
                kids.push(c.clone());
            }
        }
        DiffNode::any(kids)
    }
}

/// Consecutive ALL children that agree up to leaf values become a MULTI over
/// one template whose differing leaves are collected into ANY domains. Runs of
/// bare leaves (such as a range's two bounds) are not matched.
pub struct Multi;

#[derive(PartialEq, Eq)]
enum Shape {
    Leaf(Label),
    All(Vec<Stamp>, Vec<Shape>),
    Exact(Digest),
}

fn leaf_domain_label(n: &DiffNode) -> Option<Label> {
    if let Some(s) = n.leaf_stamp() {
        return Some(s.label);
    }
    if n.kind() == NodeKind::Any {
        let mut label = None;
        for c in n.children() {
            let l = c.leaf_stamp()?.label;
            if label.is_some_and(|p| p != l) {
                return None;
            }
            label = Some(l);
        }
        return label;
    }
    None
}

fn shape(n: &DiffNode) -> Shape {
    if let Some(l) = leaf_domain_label(n) {
        Shape::Leaf(l)
    } else if n.kind() == NodeKind::All {
        Shape::All(n.payload().to_vec(), n.children().iter().map(|c| shape(c)).collect())
    } else {
        Shape::Exact(n.digest())
    }
}

fn merge(copies: &[&Arc<DiffNode>]) -> Arc<DiffNode> {
    let head = copies[0];
    if leaf_domain_label(head).is_some() {
        let mut leaves: Vec<Arc<DiffNode>> = Vec::new();
        for c in copies {
            let items: Vec<Arc<DiffNode>> = if c.kind() == NodeKind::Any {
                c.children().to_vec()
            } else {
                vec![(*c).clone()]
            };
            for l in items {
                if !leaves.iter().any(|x| x.digest() == l.digest()) {
                    leaves.push(l);
                }
            }
        }
        return if leaves.len() == 1 {
            leaves.pop().unwrap()
        } else {
            DiffNode::any(leaves)
        };
    }
    if head.kind() == NodeKind::All {
        let kids = (0..head.children().len())
            .map(|i| {
                let col: Vec<&Arc<DiffNode>> = copies.iter().map(|c| &c.children()[i]).collect();
                merge(&col)
            })
            .collect();
        return DiffNode::all(head.payload().to_vec(), kids);
    }
    head.clone()
}

impl Rule for Multi {
    fn id(&self) -> RuleId {
        RuleId::Multi
    }

    fn matches(&self, n: &DiffNode) -> Vec<Bindings> {
        if n.kind() != NodeKind::All || n.children().len() < 2 {
            return Vec::new();
        }
        let shapes: Vec<Option<Shape>> = n
            .children()
            .iter()
            .map(|c| match shape(c) {
                s @ Shape::All(..) => Some(s),
                _ => None,
            })
            .collect();
        let mut out = Vec::new();
        let mut start = 0;
        while start < shapes.len() {
            let mut end = start + 1;
            if shapes[start].is_some() {
                while end < shapes.len() && shapes[end] == shapes[start] {
                    end += 1;
                }
                if end - start >= 2 {
                    out.push(Bindings::Run {
                        start,
                        len: end - start,
                    });
                }
            }
            start = end;
        }
        out
    }

    fn accepts(&self, n: &DiffNode, b: &Bindings) -> bool {
        let Bindings::Run { start, len } = *b else {
            return false;
        };
        if n.kind() != NodeKind::All || len < 2 || start + len > n.children().len() {
            return false;
        }
        let run = &n.children()[start..start + len];
        let s0 = shape(&run[0]);
        if !matches!(s0, Shape::All(..)) {
            return false;
        }
        run[1..].iter().all(|c| shape(c) == s0)
    }

    fn rewrite(&self, n: &DiffNode, b: &Bindings) -> Arc<DiffNode> {
        let Bindings::Run { start, len } = *b else {
            unreachable!()
        };
        let run: Vec<&Arc<DiffNode>> = n.children()[start..start + len].iter().collect();
        let template = merge(&run);
        let mut kids = n.children()[..start].to_vec();
        kids.push(DiffNode::multi(template));
        kids.extend_from_slice(&n.children()[start + len..]);
        DiffNode::all(n.payload().to_vec(), kids)
    }
}
