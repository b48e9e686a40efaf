use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::DiffTreeError;
use crate::sql::{Ast, Label, QueryLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeKind {
    All,
    Any,
    Opt,
    Multi,
    /// The empty subtree. Only legal as a child of ANY.
    Absent,
}

impl NodeKind {
    fn tag(self) -> u8 {
        match self {
            NodeKind::All => 1,
            NodeKind::Any => 2,
            NodeKind::Opt => 3,
            NodeKind::Multi => 4,
            NodeKind::Absent => 5,
        }
    }
}

/// One AST node's label and optional leaf token, without its children.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stamp {
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

impl Stamp {
    pub fn of(ast: &Ast) -> Self {
        Stamp {
            label: ast.label,
            value: ast.value.clone(),
        }
    }

    pub fn matches(&self, ast: &Ast) -> bool {
        self.label == ast.label && self.value == ast.value
    }
}

/// Canonical 256-bit digest of a DiffTree, invariant under ANY-child order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short(&self) -> String {
        hex::encode(&self.0[..6])
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.short())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))?;
        Ok(Digest(arr))
    }
}

pub type Path = Vec<usize>;

/// Immutable DiffTree node. Children are shared between trees; the digest is
/// computed once at construction.
#[derive(Clone, PartialEq, Eq)]
pub struct DiffNode {
    kind: NodeKind,
    payload: Vec<Stamp>,
    children: Vec<Arc<DiffNode>>,
    digest: Digest,
}

impl fmt::Debug for DiffNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::render(self))
    }
}

fn compute_digest(kind: NodeKind, payload: &[Stamp], children: &[Arc<DiffNode>]) -> Digest {
    let mut h = Sha256::new();
    h.update([kind.tag()]);
    h.update((payload.len() as u32).to_le_bytes());
    for s in payload {
        h.update(s.label.as_str().as_bytes());
        match &s.value {
            Some(v) => {
                h.update([1u8]);
                h.update((v.len() as u32).to_le_bytes());
                h.update(v.as_bytes());
            }
            None => h.update([0u8]),
        }
    }
    h.update((children.len() as u32).to_le_bytes());
    if kind == NodeKind::Any {
        let mut ds: Vec<Digest> = children.iter().map(|c| c.digest).collect();
        ds.sort_unstable();
        for d in ds {
            h.update(d.0);
        }
    } else {
        for c in children {
            h.update(c.digest.0);
        }
    }
    Digest(h.finalize().into())
}

impl DiffNode {
    fn build(kind: NodeKind, payload: Vec<Stamp>, children: Vec<Arc<DiffNode>>) -> Arc<Self> {
        let digest = compute_digest(kind, &payload, &children);
        Arc::new(DiffNode {
            kind,
            payload,
            children,
            digest,
        })
    }

    pub fn all(payload: Vec<Stamp>, children: Vec<Arc<DiffNode>>) -> Arc<Self> {
        Self::build(NodeKind::All, payload, children)
    }

    pub fn leaf(label: Label, value: impl Into<String>) -> Arc<Self> {
        Self::all(
            vec![Stamp {
                label,
                value: Some(value.into()),
            }],
            Vec::new(),
        )
    }

    /// ANY over `children`, dropping digest duplicates (first occurrence wins).
    ///
    /// Panics on an empty child list.
    pub fn any(children: Vec<Arc<DiffNode>>) -> Arc<Self> {
        assert!(!children.is_empty(), "ANY needs at least one child");
        let mut seen: Vec<Digest> = Vec::with_capacity(children.len());
        let mut kept = Vec::with_capacity(children.len());
        for c in children {
            if !seen.contains(&c.digest) {
                seen.push(c.digest);
                kept.push(c);
            }
        }
        Self::build(NodeKind::Any, Vec::new(), kept)
    }

    pub fn opt(child: Arc<DiffNode>) -> Arc<Self> {
        Self::build(NodeKind::Opt, Vec::new(), vec![child])
    }

    pub fn multi(child: Arc<DiffNode>) -> Arc<Self> {
        Self::build(NodeKind::Multi, Vec::new(), vec![child])
    }

    pub fn absent() -> Arc<Self> {
        Self::build(NodeKind::Absent, Vec::new(), Vec::new())
    }

    /// Checked constructor: enforces arity, placement and distinctness rules
    /// for a single node (children are assumed valid).
    pub fn try_new(
        kind: NodeKind,
        payload: Vec<Stamp>,
        children: Vec<Arc<DiffNode>>,
    ) -> Result<Arc<Self>, DiffTreeError> {
        check_local(kind, &payload, &children, &[])?;
        Ok(Self::build(kind, payload, children))
    }

    /// Rebuild this node with new children, keeping kind and payload.
    pub fn with_children(&self, children: Vec<Arc<DiffNode>>) -> Arc<Self> {
        match self.kind {
            NodeKind::Any => Self::any(children),
            _ => Self::build(self.kind, self.payload.clone(), children),
        }
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn payload(&self) -> &[Stamp] {
        &self.payload
    }

    pub fn children(&self) -> &[Arc<DiffNode>] {
        &self.children
    }

    pub fn digest(&self) -> Digest {
        self.digest
    }

    pub fn is_choice(&self) -> bool {
        matches!(self.kind, NodeKind::Any | NodeKind::Opt | NodeKind::Multi)
    }

    pub fn is_absent(&self) -> bool {
        self.kind == NodeKind::Absent
    }

    /// ALL node standing for a single token-bearing AST leaf.
    pub fn is_leaf(&self) -> bool {
        self.kind == NodeKind::All
            && self.children.is_empty()
            && self.payload.len() == 1
            && self.payload[0].value.is_some()
    }

    pub fn leaf_stamp(&self) -> Option<&Stamp> {
        self.is_leaf().then(|| &self.payload[0])
    }

    /// Label used to align sibling subtrees: the root label for ALL nodes,
    /// the shared label of an ANY's non-empty alternatives, or the wrapped
    /// child's label for OPT/MULTI.
    pub fn align_key(&self) -> Option<Label> {
        match self.kind {
            NodeKind::All => self.payload.first().map(|s| s.label),
            NodeKind::Opt | NodeKind::Multi => self.children[0].align_key(),
            NodeKind::Any => {
                let mut key = None;
                for c in self.children.iter().filter(|c| !c.is_absent()) {
                    let k = c.align_key()?;
                    match key {
                        None => key = Some(k),
                        Some(prev) if prev != k => return None,
                        _ => {}
                    }
                }
                key
            }
            NodeKind::Absent => None,
        }
    }

    pub fn get(&self, path: &[usize]) -> Option<&DiffNode> {
        let mut cur = self;
        for &i in path {
            cur = cur.children.get(i)?;
        }
        Some(cur)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn contains_choice(&self) -> bool {
        self.is_choice() || self.children.iter().any(|c| c.contains_choice())
    }

    pub fn choice_count(&self) -> usize {
        usize::from(self.is_choice()) + self.children.iter().map(|c| c.choice_count()).sum::<usize>()
    }

    /// Pre-order walk with static paths.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&[usize], &'a DiffNode)) {
        fn go<'a>(n: &'a DiffNode, path: &mut Path, f: &mut impl FnMut(&[usize], &'a DiffNode)) {
            f(path, n);
            for (i, c) in n.children.iter().enumerate() {
                path.push(i);
                go(c, path, f);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), f);
    }

    /// Static paths of all choice nodes in pre-order.
    pub fn choice_paths(&self) -> Vec<Path> {
        let mut out = Vec::new();
        self.walk(&mut |p, n| {
            if n.is_choice() {
                out.push(p.to_vec());
            }
        });
        out
    }

    /// Full structural validation of the subtree.
    pub fn validate(&self) -> Result<(), DiffTreeError> {
        let mut res = Ok(());
        self.walk(&mut |p, n| {
            if res.is_ok() {
                res = check_local(n.kind, &n.payload, &n.children, p);
            }
        });
        res?;
        if self.is_absent() {
            return Err(DiffTreeError::Invalid {
                path: Vec::new(),
                reason: "ABSENT cannot be the root".into(),
            });
        }
        Ok(())
    }
}

fn check_local(
    kind: NodeKind,
    payload: &[Stamp],
    children: &[Arc<DiffNode>],
    path: &[usize],
) -> Result<(), DiffTreeError> {
    let bad = |reason: String| {
        Err(DiffTreeError::Invalid {
            path: path.to_vec(),
            reason,
        })
    };
    if kind != NodeKind::All && !payload.is_empty() {
        return bad(format!("{kind:?} node cannot carry a payload"));
    }
    for s in payload {
        if s.label.is_leaf() != s.value.is_some() {
            return bad(format!("stamp {} has inconsistent value", s.label));
        }
    }
    if let Some(last) = payload.last() {
        if last.label.is_leaf() && !children.is_empty() {
            return bad(format!("leaf {} cannot have children", last.label));
        }
    }
    match kind {
        NodeKind::Opt | NodeKind::Multi if children.len() != 1 => {
            bad(format!("{kind:?} needs exactly one child, has {}", children.len()))
        }
        NodeKind::Any if children.is_empty() => bad("ANY needs at least one child".into()),
        NodeKind::Absent if !children.is_empty() => bad("ABSENT cannot have children".into()),
        _ => {
            if kind != NodeKind::Any && children.iter().any(|c| c.is_absent()) {
                return bad(format!("ABSENT child under {kind:?}"));
            }
            if kind == NodeKind::Any {
                for (i, c) in children.iter().enumerate() {
                    if children[..i].iter().any(|o| o.digest == c.digest) {
                        return bad(format!("duplicate ANY child at {i}"));
                    }
                }
            }
            Ok(())
        }
    }
}

/// Replace the node at `path`, rebuilding the spine. Returns `None` if the
/// path does not exist.
pub fn replace_at(
    root: &Arc<DiffNode>,
    path: &[usize],
    new: Arc<DiffNode>,
) -> Option<Arc<DiffNode>> {
    match path.split_first() {
        None => Some(new),
        Some((&i, rest)) => {
            let child = root.children.get(i)?;
            let replaced = replace_at(child, rest, new)?;
            let mut kids = root.children.clone();
            kids[i] = replaced;
            Some(root.with_children(kids))
        }
    }
}

/// An AST is a DiffTree whose nodes are all ALL.
pub fn lift(ast: &Ast) -> Arc<DiffNode> {
    DiffNode::all(
        vec![Stamp::of(ast)],
        ast.children.iter().map(lift).collect(),
    )
}

/// The search's start state: an ANY over the distinct queries of the log.
pub fn initial_difftree(log: &QueryLog) -> Arc<DiffNode> {
    DiffNode::any(log.distinct().into_iter().map(lift).collect())
}

/// Canonical digest of a tree.
pub fn canonical_hash(tree: &DiffNode) -> Digest {
    tree.digest()
}
