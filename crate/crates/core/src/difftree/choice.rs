use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::node::{DiffNode, NodeKind, Path, Stamp};
use super::DiffTreeError;
use crate::sql::Ast;

/// A choice made at one choice node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Index of the chosen ANY child.
    Any(usize),
    /// Whether the OPT child is present.
    Opt(bool),
    /// Number of MULTI copies.
    Multi(usize),
}

/// Choices keyed by instance path.
///
/// An instance path is a static path except that the step below a MULTI node
/// is the copy index rather than the (always zero) child index, so choice
/// nodes inside different copies have distinct keys.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<ChoiceEntry>", into = "Vec<ChoiceEntry>")]
pub struct ChoiceAssignment(BTreeMap<Path, Selection>);

#[derive(Serialize, Deserialize)]
struct ChoiceEntry {
    path: Path,
    selection: Selection,
}

impl From<Vec<ChoiceEntry>> for ChoiceAssignment {
    fn from(v: Vec<ChoiceEntry>) -> Self {
        ChoiceAssignment(v.into_iter().map(|e| (e.path, e.selection)).collect())
    }
}

impl From<ChoiceAssignment> for Vec<ChoiceEntry> {
    fn from(c: ChoiceAssignment) -> Self {
        c.0.into_iter()
            .map(|(path, selection)| ChoiceEntry { path, selection })
            .collect()
    }
}

impl ChoiceAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, path: &[usize]) -> Option<Selection> {
        self.0.get(path).copied()
    }

    pub fn set(&mut self, path: Path, sel: Selection) -> Option<Selection> {
        self.0.insert(path, sel)
    }

    pub fn remove(&mut self, path: &[usize]) -> Option<Selection> {
        self.0.remove(path)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Path, &Selection)> {
        self.0.iter()
    }

    /// Drop entries below `prefix` (exclusive).
    pub fn remove_below(&mut self, prefix: &[usize]) {
        self.0
            .retain(|p, _| !(p.len() > prefix.len() && p.starts_with(prefix)));
    }
}

impl FromIterator<(Path, Selection)> for ChoiceAssignment {
    fn from_iter<T: IntoIterator<Item = (Path, Selection)>>(iter: T) -> Self {
        ChoiceAssignment(iter.into_iter().collect())
    }
}

/// Map an instance path back to the static path of the node it addresses.
/// Returns `None` if the path leaves the tree.
pub fn static_path(tree: &DiffNode, instance: &[usize]) -> Option<Path> {
    let mut cur = tree;
    let mut out = Vec::with_capacity(instance.len());
    for &step in instance {
        let idx = if cur.kind() == NodeKind::Multi { 0 } else { step };
        cur = cur.children().get(idx)?;
        out.push(idx);
    }
    Some(out)
}

/// Resolve every reachable choice node and build the query.
pub fn instantiate(tree: &DiffNode, choices: &ChoiceAssignment) -> Result<Ast, DiffTreeError> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    inst(tree, &mut path, choices, &mut out)?;
    match out.len() {
        1 => Ok(out.pop().unwrap()),
        n => Err(DiffTreeError::NotAQuery(n)),
    }
}

/// Instantiate a subtree to the AST forest it emits (possibly empty).
pub fn instantiate_forest(
    node: &DiffNode,
    choices: &ChoiceAssignment,
) -> Result<Vec<Ast>, DiffTreeError> {
    let mut out = Vec::new();
    inst(node, &mut Vec::new(), choices, &mut out)?;
    Ok(out)
}

fn wrap(payload: &[Stamp], kids: Vec<Ast>, out: &mut Vec<Ast>) {
    match payload.split_last() {
        None => out.extend(kids),
        Some((last, outer)) => {
            let mut node = Ast {
                label: last.label,
                value: last.value.clone(),
                children: kids,
            };
            for s in outer.iter().rev() {
                node = Ast {
                    label: s.label,
                    value: s.value.clone(),
                    children: vec![node],
                };
            }
            out.push(node);
        }
    }
}

fn inst(
    node: &DiffNode,
    path: &mut Path,
    choices: &ChoiceAssignment,
    out: &mut Vec<Ast>,
) -> Result<(), DiffTreeError> {
    let lookup = |path: &Path| {
        choices
            .get(path)
            .ok_or_else(|| DiffTreeError::MissingChoice(path.clone()))
    };
    let invalid = |path: &Path| DiffTreeError::InvalidChoice(path.clone());
    match node.kind() {
        NodeKind::All => {
            let mut kids = Vec::new();
            for (i, c) in node.children().iter().enumerate() {
                path.push(i);
                inst(c, path, choices, &mut kids)?;
                path.pop();
            }
            wrap(node.payload(), kids, out);
        }
        NodeKind::Any => match lookup(path)? {
            Selection::Any(i) if i < node.children().len() => {
                path.push(i);
                inst(&node.children()[i], path, choices, out)?;
                path.pop();
            }
            _ => return Err(invalid(path)),
        },
        NodeKind::Opt => match lookup(path)? {
            Selection::Opt(true) => {
                path.push(0);
                inst(&node.children()[0], path, choices, out)?;
                path.pop();
            }
            Selection::Opt(false) => {}
            _ => return Err(invalid(path)),
        },
        NodeKind::Multi => match lookup(path)? {
            Selection::Multi(m) => {
                for j in 0..m {
                    path.push(j);
                    inst(&node.children()[0], path, choices, out)?;
                    path.pop();
                }
            }
            _ => return Err(invalid(path)),
        },
        NodeKind::Absent => {}
    }
    Ok(())
}

/// Instance paths of the choice nodes reachable under `choices`, in
/// pre-order. Unassigned choice nodes are reported but not descended into.
pub fn reachable_choices(tree: &DiffNode, choices: &ChoiceAssignment) -> Vec<Path> {
    fn go(n: &DiffNode, path: &mut Path, choices: &ChoiceAssignment, out: &mut Vec<Path>) {
        let visit = |idx_child: usize, step: usize, path: &mut Path, out: &mut Vec<Path>| {
            path.push(step);
            go(&n.children()[idx_child], path, choices, out);
            path.pop();
        };
        match n.kind() {
            NodeKind::All => {
                for i in 0..n.children().len() {
                    visit(i, i, path, out);
                }
            }
            NodeKind::Any => {
                out.push(path.clone());
                if let Some(Selection::Any(i)) = choices.get(path) {
                    if i < n.children().len() {
                        visit(i, i, path, out);
                    }
                }
            }
            NodeKind::Opt => {
                out.push(path.clone());
                if let Some(Selection::Opt(true)) = choices.get(path) {
                    visit(0, 0, path, out);
                }
            }
            NodeKind::Multi => {
                out.push(path.clone());
                if let Some(Selection::Multi(m)) = choices.get(path) {
                    for j in 0..m {
                        visit(0, j, path, out);
                    }
                }
            }
            NodeKind::Absent => {}
        }
    }
    let mut out = Vec::new();
    go(tree, &mut Vec::new(), choices, &mut out);
    out
}

/// Default selection for a choice node that has none yet.
pub fn default_selection(node: &DiffNode) -> Option<Selection> {
    match node.kind() {
        NodeKind::Any => Some(Selection::Any(
            node.children()
                .iter()
                .position(|c| !c.is_absent())
                .unwrap_or(0),
        )),
        NodeKind::Opt => Some(Selection::Opt(true)),
        NodeKind::Multi => Some(Selection::Multi(1)),
        _ => None,
    }
}

/// Fill defaults for reachable choice nodes lacking a selection.
pub fn complete_defaults(tree: &DiffNode, choices: &mut ChoiceAssignment) {
    loop {
        let missing: Vec<Path> = reachable_choices(tree, choices)
            .into_iter()
            .filter(|p| choices.get(p).is_none())
            .collect();
        if missing.is_empty() {
            return;
        }
        for p in missing {
            let sp = static_path(tree, &p).expect("reachable path is in tree");
            let node = tree.get(&sp).expect("reachable path is in tree");
            if let Some(sel) = default_selection(node) {
                choices.set(p, sel);
            }
        }
    }
}
