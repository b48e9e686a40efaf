//! Interface cost: per-widget appropriateness M, usefulness U over
//! consecutive log queries, and the screen-size gate.
//!
//! `C(W, Q) = Σ M(w) + λ · Σ U(q_i, q_{i+1}, W)`, or INVALID when the widget
//! tree does not fit the screen.

mod context;
mod model;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::difftree::{static_path, witnesses, ChoiceAssignment, DiffNode, Path, Selection};
use crate::sql::{to_sql, Ast, QueryLog};
use crate::widgets::{Extent, InterfaceSpec, Screen, SizeClass, ValueType, WidgetKind, WidgetNode};

pub use context::CostContext;
pub use model::{
    bucket, ConfigError, CostModel, LengthPenalty, MRow, SizePenalty, DEFAULT_COST_MODEL_TOML,
    PRICED_KINDS,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error("query is not expressible by the interface: {0}")]
    Inexpressible(String),
    #[error("cost model has no entry for {0}")]
    MissingEntry(WidgetKind),
    #[error("{0} widgets carry no appropriateness score")]
    NotPriced(WidgetKind),
    #[error("choice node at {0:?} has no widget")]
    Unbound(Path),
}

/// A total cost, or INVALID when the layout exceeds the screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Total {
    Finite(f64),
    Invalid,
}

impl Total {
    /// The cost with INVALID as +∞.
    pub fn value(self) -> f64 {
        match self {
            Total::Finite(v) => v,
            Total::Invalid => f64::INFINITY,
        }
    }

    pub fn is_valid(self) -> bool {
        matches!(self, Total::Finite(_))
    }
}

impl fmt::Display for Total {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Total::Finite(v) => write!(f, "{v:.3}"),
            Total::Invalid => f.write_str("INVALID"),
        }
    }
}

impl Serialize for Total {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Total::Finite(v) => s.serialize_f64(*v),
            Total::Invalid => s.serialize_str("INVALID"),
        }
    }
}

impl<'de> Deserialize<'de> for Total {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Total::Finite(v)),
            Raw::Str(s) if s == "INVALID" => Ok(Total::Invalid),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad total {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MTerm {
    pub binding_path: Path,
    pub kind: WidgetKind,
    pub size_class: Option<SizeClass>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UTerm {
    /// Log positions of the pair.
    pub from: usize,
    pub to: usize,
    /// Instance paths of the changed choices in the minimizing witness pair.
    pub changed: Vec<Path>,
    /// Edges of the widget subtree connecting the changed widgets.
    pub edges: usize,
    /// λ · U for the pair.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub total: Total,
    pub m_terms: Vec<MTerm>,
    pub u_terms: Vec<UTerm>,
    pub valid: bool,
    pub extent: Extent,
    pub screen: Screen,
}

impl CostBreakdown {
    pub fn m_sum(&self) -> f64 {
        self.m_terms.iter().map(|t| t.score).sum()
    }

    pub fn u_sum(&self) -> f64 {
        self.u_terms.iter().map(|t| t.score).sum()
    }
}

/// How one choice differs between two witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Delta {
    Pick(usize, usize),
    Toggle,
    Copies(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Change {
    pub instance: Path,
    pub static_path: Path,
    pub delta: Delta,
}

/// Choices set in both assignments with different selections.
pub(crate) fn change_set(tree: &DiffNode, a: &ChoiceAssignment, b: &ChoiceAssignment) -> Vec<Change> {
    let mut out = Vec::new();
    for (p, sa) in a.iter() {
        let Some(sb) = b.get(p) else { continue };
        let delta = match (*sa, sb) {
            (x, y) if x == y => continue,
            (Selection::Any(i), Selection::Any(j)) => Delta::Pick(i, j),
            (Selection::Multi(i), Selection::Multi(j)) => Delta::Copies(i.abs_diff(j)),
            _ => Delta::Toggle,
        };
        out.push(Change {
            instance: p.clone(),
            static_path: static_path(tree, p).expect("witness path is in the tree"),
            delta,
        });
    }
    out
}

/// Cost of making one change with a widget of `kind` over `domain`.
pub(crate) fn interaction_cost(model: &CostModel, kind: WidgetKind, domain: &[String], d: Delta) -> f64 {
    match d {
        Delta::Copies(n) => model.interact(WidgetKind::Adder) * n as f64,
        Delta::Pick(i, j) if kind == WidgetKind::Textbox => {
            let len = |k: usize| domain.get(k).map_or(0, |s| s.chars().count());
            model.interact(kind) * len(i).max(len(j)) as f64
        }
        _ => model.interact(kind),
    }
}

/// Parent links of a widget tree in pre-order, and the node bound to each
/// static path.
#[derive(Debug, Clone, Default)]
pub(crate) struct WidgetIndex {
    parent: Vec<usize>,
    by_binding: HashMap<Path, usize>,
}

impl WidgetIndex {
    pub fn new(root: Option<&WidgetNode>) -> Self {
        let mut ix = WidgetIndex::default();
        if let Some(r) = root {
            ix.add(r, usize::MAX);
        }
        ix
    }

    fn add(&mut self, w: &WidgetNode, parent: usize) {
        let me = self.parent.len();
        self.parent.push(parent);
        if let Some(p) = &w.binding_path {
            self.by_binding.insert(p.clone(), me);
        }
        for c in &w.children {
            self.add(c, me);
        }
    }

    pub fn node(&self, static_path: &[usize]) -> Option<usize> {
        self.by_binding.get(static_path).copied()
    }

    /// Edge count of the minimal subtree connecting `marked`.
    pub fn steiner_edges(&self, marked: &[usize]) -> usize {
        let mut cnt = vec![0usize; self.parent.len()];
        let mut total = 0;
        for &m in marked {
            if cnt[m] == 0 {
                cnt[m] = 1;
                total += 1;
            }
        }
        if total <= 1 {
            return 0;
        }
        // children follow their parent in pre-order
        for v in (1..cnt.len()).rev() {
            let p = self.parent[v];
            cnt[p] += cnt[v];
        }
        (1..cnt.len()).filter(|&v| cnt[v] > 0 && cnt[v] < total).count()
    }
}

/// One witness pair's change set and its connecting edge count.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub changes: Vec<Change>,
    pub edges: usize,
}

pub(crate) fn query_witnesses(
    tree: &DiffNode,
    q: &Ast,
    cap: usize,
) -> Result<Vec<ChoiceAssignment>, CostError> {
    let (w, _) = witnesses(tree, q, cap);
    if w.is_empty() {
        return Err(CostError::Inexpressible(to_sql(q).unwrap_or_default()));
    }
    Ok(w)
}

/// Distinct change sets over all witness pairs of `qa` and `qb`.
pub(crate) fn candidates(
    tree: &DiffNode,
    index: &WidgetIndex,
    wa: &[ChoiceAssignment],
    wb: &[ChoiceAssignment],
) -> Result<Vec<Candidate>, CostError> {
    let mut out: Vec<Candidate> = Vec::new();
    for a in wa {
        for b in wb {
            let changes = change_set(tree, a, b);
            if out.iter().any(|c| c.changes == changes) {
                continue;
            }
            let mut marked = Vec::with_capacity(changes.len());
            for c in &changes {
                marked.push(
                    index
                        .node(&c.static_path)
                        .ok_or_else(|| CostError::Unbound(c.static_path.clone()))?,
                );
            }
            let edges = index.steiner_edges(&marked);
            out.push(Candidate { changes, edges });
        }
    }
    Ok(out)
}

/// Minimum score over candidates, given each bound widget's kind and domain.
pub(crate) fn best_candidate<'a>(
    model: &CostModel,
    cands: &[Candidate],
    widget: impl Fn(&[usize]) -> (WidgetKind, &'a [String]),
) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in cands.iter().enumerate() {
        let mut s = model.edge_cost * c.edges as f64;
        for ch in &c.changes {
            let (kind, domain) = widget(&ch.static_path);
            s += interaction_cost(model, kind, domain, ch.delta);
        }
        if s < best.1 {
            best = (i, s);
        }
    }
    best
}

/// Appropriateness of one interaction widget or adder.
pub fn appropriateness(w: &WidgetNode, model: &CostModel) -> Result<f64, CostError> {
    if !w.kind.is_interaction() && w.kind != WidgetKind::Adder {
        return Err(CostError::NotPriced(w.kind));
    }
    model.m_score(
        w.kind,
        w.size_class,
        w.value_type.unwrap_or(ValueType::Subtree),
        &w.domain,
    )
}

fn bound_lookup<'a>(
    root: Option<&'a WidgetNode>,
) -> impl Fn(&[usize]) -> (WidgetKind, &'a [String]) + 'a {
    move |sp: &[usize]| {
        let w = root.and_then(|r| r.find_binding(sp)).expect("change maps to a bound widget");
        (w.kind, w.domain.as_slice())
    }
}

fn pair_score(
    spec: &InterfaceSpec,
    index: &WidgetIndex,
    model: &CostModel,
    wa: &[ChoiceAssignment],
    wb: &[ChoiceAssignment],
) -> Result<(Candidate, f64), CostError> {
    let cands = candidates(&spec.difftree, index, wa, wb)?;
    let (i, s) = best_candidate(model, &cands, bound_lookup(spec.widget_tree.as_ref()));
    Ok((cands[i].clone(), s))
}

/// Effort to move from `qa` to `qb` through the interface: interaction cost
/// of every changed widget plus `edge_cost` per edge connecting them,
/// minimized over witness pairs.
pub fn usefulness(qa: &Ast, qb: &Ast, spec: &InterfaceSpec, model: &CostModel) -> Result<f64, CostError> {
    let index = WidgetIndex::new(spec.widget_tree.as_ref());
    let wa = query_witnesses(&spec.difftree, qa, model.witness_cap)?;
    let wb = query_witnesses(&spec.difftree, qb, model.witness_cap)?;
    Ok(pair_score(spec, &index, model, &wa, &wb)?.1)
}

/// Full cost of a spec over a log, from scratch.
pub fn total_cost(spec: &InterfaceSpec, log: &QueryLog, model: &CostModel) -> Result<CostBreakdown, CostError> {
    let index = WidgetIndex::new(spec.widget_tree.as_ref());
    let mut m_terms = Vec::new();
    for w in spec.bound_widgets() {
        m_terms.push(MTerm {
            binding_path: w.binding_path.clone().unwrap_or_default(),
            kind: w.kind,
            size_class: w.size_class,
            score: appropriateness(w, model)?,
        });
    }
    let mut wit: HashMap<&Ast, Vec<ChoiceAssignment>> = HashMap::new();
    for q in log.iter() {
        if !wit.contains_key(q) {
            wit.insert(q, query_witnesses(&spec.difftree, q, model.witness_cap)?);
        }
    }
    let mut u_terms = Vec::new();
    for (i, (qa, qb)) in log.pairs().enumerate() {
        let (cand, s) = pair_score(spec, &index, model, &wit[qa], &wit[qb])?;
        u_terms.push(UTerm {
            from: i,
            to: i + 1,
            changed: cand.changes.into_iter().map(|c| c.instance).collect(),
            edges: cand.edges,
            score: model.lambda * s,
        });
    }
    let extent = spec.extent();
    let valid = spec.fits();
    let mut b = CostBreakdown {
        total: Total::Invalid,
        m_terms,
        u_terms,
        valid,
        extent,
        screen: spec.screen,
    };
    if valid {
        b.total = Total::Finite(b.m_sum() + b.u_sum());
    }
    Ok(b)
}

#[cfg(test)]
mod tests;
