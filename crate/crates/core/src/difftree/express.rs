use super::choice::{ChoiceAssignment, Selection};
use super::node::{DiffNode, NodeKind, Path};
use crate::sql::Ast;

type Cont<'a> = &'a mut dyn FnMut(&mut Matcher, usize) -> bool;

/// Backtracking matcher of a DiffTree against an AST forest. Continuations
/// return `true` to stop the search.
struct Matcher {
    acc: ChoiceAssignment,
}

fn extend(path: &Path, i: usize) -> Path {
    let mut p = Vec::with_capacity(path.len() + 1);
    p.extend_from_slice(path);
    p.push(i);
    p
}

impl Matcher {
    fn restore(&mut self, path: &Path, old: Option<Selection>) {
        match old {
            Some(s) => {
                self.acc.set(path.clone(), s);
            }
            None => {
                self.acc.remove(path);
            }
        }
    }

    fn node(&mut self, n: &DiffNode, path: &Path, items: &[Ast], pos: usize, k: Cont) -> bool {
        match n.kind() {
            NodeKind::All => {
                let payload = n.payload();
                if payload.is_empty() {
                    return self.seq(n.children(), 0, path, items, pos, k);
                }
                let Some(item) = items.get(pos) else {
                    return false;
                };
                let mut cur = item;
                for (j, s) in payload.iter().enumerate() {
                    if !s.matches(cur) {
                        return false;
                    }
                    if j + 1 < payload.len() {
                        if cur.children.len() != 1 {
                            return false;
                        }
                        cur = &cur.children[0];
                    }
                }
                let kids = &cur.children;
                let target = kids.len();
                self.seq(n.children(), 0, path, kids, 0, &mut |m, end| {
                    end == target && k(m, pos + 1)
                })
            }
            NodeKind::Any => {
                for (i, c) in n.children().iter().enumerate() {
                    let old = self.acc.set(path.clone(), Selection::Any(i));
                    let stop = self.node(c, &extend(path, i), items, pos, &mut *k);
                    self.restore(path, old);
                    if stop {
                        return true;
                    }
                }
                false
            }
            NodeKind::Opt => {
                let old = self.acc.set(path.clone(), Selection::Opt(true));
                let stop = self.node(&n.children()[0], &extend(path, 0), items, pos, &mut *k);
                if stop {
                    self.restore(path, old);
                    return true;
                }
                self.acc.set(path.clone(), Selection::Opt(false));
                let stop = k(self, pos);
                self.restore(path, old);
                stop
            }
            NodeKind::Multi => self.multi(n, path, items, pos, 0, k),
            NodeKind::Absent => k(self, pos),
        }
    }

    fn multi(
        &mut self,
        n: &DiffNode,
        path: &Path,
        items: &[Ast],
        pos: usize,
        copies: usize,
        k: Cont,
    ) -> bool {
        let old = self.acc.set(path.clone(), Selection::Multi(copies));
        let stop = k(self, pos);
        self.restore(path, old);
        if stop {
            return true;
        }
        if pos >= items.len() {
            return false;
        }
        // each copy must consume at least one item, which bounds the count
        self.node(
            &n.children()[0],
            &extend(path, copies),
            items,
            pos,
            &mut |m, end| end > pos && m.multi(n, path, items, end, copies + 1, &mut *k),
        )
    }

    fn seq(
        &mut self,
        nodes: &[std::sync::Arc<DiffNode>],
        i: usize,
        path: &Path,
        items: &[Ast],
        pos: usize,
        k: Cont,
    ) -> bool {
        if i == nodes.len() {
            return k(self, pos);
        }
        self.node(&nodes[i], &extend(path, i), items, pos, &mut |m, end| {
            m.seq(nodes, i + 1, path, items, end, &mut *k)
        })
    }
}

/// All assignments under which `tree` instantiates to `q`, up to `cap`.
/// The flag is `false` when the cap truncated the enumeration.
pub fn witnesses(tree: &DiffNode, q: &Ast, cap: usize) -> (Vec<ChoiceAssignment>, bool) {
    let mut out: Vec<ChoiceAssignment> = Vec::new();
    let mut m = Matcher {
        acc: ChoiceAssignment::new(),
    };
    let items = std::slice::from_ref(q);
    let truncated = m.node(tree, &Vec::new(), items, 0, &mut |m, end| {
        if end == 1 && !out.contains(&m.acc) {
            out.push(m.acc.clone());
        }
        out.len() >= cap
    });
    (out, !truncated)
}

/// A witnessing assignment if `q` is expressible by `tree`.
pub fn expressible(tree: &DiffNode, q: &Ast) -> Option<ChoiceAssignment> {
    witnesses(tree, q, 1).0.pop()
}
