use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::extent::{layout_extent, Extent};
use super::{candidate_widgets, WidgetNode, OPT_DOMAIN};
use crate::difftree::{
    complete_defaults, default_selection, expressible, instantiate, reachable_choices, static_path,
    ChoiceAssignment, DiffNode, NodeKind, Path, Selection,
};
use crate::sql::{check_query, to_sql, Ast};

/// Output screen size in character cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Screen {
    pub width: u32,
    pub height: u32,
}

impl Screen {
    pub fn extent(self) -> Extent {
        Extent::new(self.width, self.height)
    }
}

impl fmt::Display for Screen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Screen {
    type Err = String;

    /// Parses `WxH`, e.g. `100x40`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|e| format!("bad screen dimension {v:?}: {e}"))
        };
        Ok(Screen {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

/// The emitted interface: widget tree, the DiffTree it binds, and the
/// current query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSpec {
    pub screen: Screen,
    pub widget_tree: Option<WidgetNode>,
    pub difftree: Arc<DiffNode>,
    pub current_choices: ChoiceAssignment,
    pub current_query_sql: String,
    pub current_query_ast: Ast,
    /// Opaque placeholder for the result view.
    pub visualization: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("query is not expressible by the interface: {0}")]
    Inexpressible(String),
    #[error("choice node at {0:?} has no widget")]
    Unbound(Path),
    #[error("choice node at {0:?} is bound by more than one widget")]
    DuplicateBinding(Path),
    #[error("widget binds {0:?}, which is not a choice node of the tree")]
    UnknownBinding(Path),
    #[error("widget {kind} cannot bind the node at {path:?}")]
    IncompatibleWidget { kind: String, path: Path },
    #[error("layout of {}x{} does not fit the {screen} screen", extent.width, extent.height)]
    DoesNotFit { extent: Extent, screen: Screen },
    #[error("current query does not match the current choices: {0}")]
    CurrentQuery(String),
}

impl InterfaceSpec {
    /// A spec whose current query is `initial`.
    pub fn new(
        difftree: Arc<DiffNode>,
        widget_tree: Option<WidgetNode>,
        screen: Screen,
        initial: &Ast,
    ) -> Result<Self, SpecError> {
        let mut choices = expressible(&difftree, initial)
            .ok_or_else(|| SpecError::Inexpressible(to_sql(initial).unwrap_or_default()))?;
        complete_defaults(&difftree, &mut choices);
        Ok(InterfaceSpec {
            screen,
            widget_tree,
            difftree,
            current_choices: choices,
            current_query_sql: to_sql(initial).map_err(|e| SpecError::CurrentQuery(e.to_string()))?,
            current_query_ast: initial.clone(),
            visualization: serde_json::json!({ "type": "table" }),
        })
    }

    pub fn extent(&self) -> Extent {
        self.widget_tree.as_ref().map(layout_extent).unwrap_or_default()
    }

    pub fn fits(&self) -> bool {
        self.extent().fits(self.screen.extent())
    }

    pub fn bound_widgets(&self) -> Vec<&WidgetNode> {
        self.widget_tree.as_ref().map(|w| w.bound()).unwrap_or_default()
    }

    /// Widgets that carry an appropriateness term.
    pub fn interaction_widgets(&self) -> Vec<&WidgetNode> {
        self.bound_widgets()
            .into_iter()
            .filter(|w| w.kind.is_interaction())
            .collect()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Check bindings, screen fit and the current query.
    pub fn validate(&self) -> Result<(), SpecError> {
        let choice_paths = self.difftree.choice_paths();
        let bound = self.bound_widgets();
        for w in &bound {
            let p = w.binding_path.as_ref().unwrap();
            let node = self
                .difftree
                .get(p)
                .filter(|n| n.is_choice())
                .ok_or_else(|| SpecError::UnknownBinding(p.clone()))?;
            let ok = candidate_widgets(node)
                .map(|c| c.iter().any(|c| c.kind == w.kind))
                .unwrap_or(false);
            if !ok {
                return Err(SpecError::IncompatibleWidget {
                    kind: w.kind.to_string(),
                    path: p.clone(),
                });
            }
        }
        for p in &choice_paths {
            match bound.iter().filter(|w| w.binding_path.as_ref() == Some(p)).count() {
                0 => return Err(SpecError::Unbound(p.clone())),
                1 => {}
                _ => return Err(SpecError::DuplicateBinding(p.clone())),
            }
        }
        if !self.fits() {
            return Err(SpecError::DoesNotFit {
                extent: self.extent(),
                screen: self.screen,
            });
        }
        let q = instantiate(&self.difftree, &self.current_choices)
            .map_err(|e| SpecError::CurrentQuery(e.to_string()))?;
        if q != self.current_query_ast {
            return Err(SpecError::CurrentQuery("AST differs".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InteractError {
    #[error("no reachable choice node at {0:?}")]
    PathInvalid(Path),
    #[error("no widget is bound to {0:?}")]
    NoWidget(Path),
    #[error("{value:?} is not in the widget's domain {domain:?}")]
    OutOfDomain {
        path: Path,
        value: String,
        domain: Vec<String>,
    },
    #[error("interaction would produce an invalid query: {0}")]
    InvalidQuery(String),
}

fn match_domain(domain: &[String], u: &str) -> Option<usize> {
    if let Some(i) = domain.iter().position(|d| d == u) {
        return Some(i);
    }
    let lower = u.to_lowercase();
    let mut hits = domain
        .iter()
        .enumerate()
        .filter(|(_, d)| d.to_lowercase() == lower);
    match (hits.next(), hits.next()) {
        (Some((i, _)), None) => Some(i),
        _ => None,
    }
}

/// Apply one interaction: set the choice at instance path `widget_path` from
/// the user's selection `u` and re-instantiate the current query.
///
/// Selections are domain display strings for ANY widgets, `on`/`off` for OPT
/// widgets and `add`/`remove` for adders.
pub fn apply_widget(
    spec: &InterfaceSpec,
    widget_path: &[usize],
    u: &str,
) -> Result<InterfaceSpec, InteractError> {
    let tree = &spec.difftree;
    let invalid = || InteractError::PathInvalid(widget_path.to_vec());
    if !reachable_choices(tree, &spec.current_choices)
        .iter()
        .any(|p| p == widget_path)
    {
        return Err(invalid());
    }
    let sp = static_path(tree, widget_path).ok_or_else(invalid)?;
    let node = tree.get(&sp).ok_or_else(invalid)?;
    let w = spec
        .widget_tree
        .as_ref()
        .and_then(|t| t.find_binding(&sp))
        .ok_or_else(|| InteractError::NoWidget(sp.clone()))?;
    let ood = || InteractError::OutOfDomain {
        path: widget_path.to_vec(),
        value: u.to_string(),
        domain: w.domain.clone(),
    };
    let sel = match node.kind() {
        NodeKind::Opt => match u.trim().to_lowercase().as_str() {
            "on" | "true" => Selection::Opt(true),
            "off" | "false" => Selection::Opt(false),
            _ => return Err(ood()),
        },
        NodeKind::Multi => {
            let cur = match spec.current_choices.get(widget_path) {
                Some(Selection::Multi(m)) => m,
                _ => 0,
            };
            match u.trim().to_lowercase().as_str() {
                "add" => Selection::Multi(cur + 1),
                "remove" if cur > 0 => Selection::Multi(cur - 1),
                _ => return Err(ood()),
            }
        }
        NodeKind::Any => Selection::Any(match_domain(&w.domain, u.trim()).ok_or_else(ood)?),
        _ => return Err(invalid()),
    };
    let mut choices = spec.current_choices.clone();
    choices.set(widget_path.to_vec(), sel);
    let mut probe = choices.clone();
    complete_defaults(tree, &mut probe);
    let q = match valid_query(tree, &probe) {
        Ok(q) => {
            choices = probe;
            q
        }
        Err(e) => {
            let mut budget = REPAIR_BUDGET;
            fill_valid(tree, &mut choices, &mut budget).ok_or(InteractError::InvalidQuery(e))?
        }
    };
    let sql = to_sql(&q).map_err(|e| InteractError::InvalidQuery(e.to_string()))?;
    Ok(InterfaceSpec {
        current_choices: choices,
        current_query_sql: sql,
        current_query_ast: q,
        ..spec.clone()
    })
}

const REPAIR_BUDGET: usize = 512;

fn valid_query(tree: &DiffNode, choices: &ChoiceAssignment) -> Result<Ast, String> {
    let q = instantiate(tree, choices).map_err(|e| e.to_string())?;
    check_query(&q).map_err(|e| e.to_string())?;
    Ok(q)
}

// Selections to try for a newly reachable choice node, default first.
fn alternatives(node: &DiffNode) -> Vec<Selection> {
    let mut out: Vec<Selection> = default_selection(node).into_iter().collect();
    let rest: Vec<Selection> = match node.kind() {
        NodeKind::Any => (0..node.children().len()).map(Selection::Any).collect(),
        NodeKind::Opt => vec![Selection::Opt(true), Selection::Opt(false)],
        NodeKind::Multi => (1..=3).map(Selection::Multi).collect(),
        _ => Vec::new(),
    };
    for s in rest {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

// Depth-first search over selections of unset reachable choices for one that
// instantiates to a valid query. A branch switched on by an interaction may
// need more than its defaults, e.g. two conjuncts under an AND.
fn fill_valid(tree: &DiffNode, choices: &mut ChoiceAssignment, budget: &mut usize) -> Option<Ast> {
    let missing = reachable_choices(tree, choices)
        .into_iter()
        .find(|p| choices.get(p).is_none());
    let Some(p) = missing else {
        *budget = budget.checked_sub(1)?;
        return valid_query(tree, choices).ok();
    };
    let node = tree.get(&static_path(tree, &p)?)?;
    for sel in alternatives(node) {
        choices.set(p.clone(), sel);
        if let Some(q) = fill_valid(tree, choices, budget) {
            return Some(q);
        }
        if *budget == 0 {
            break;
        }
    }
    choices.remove(&p);
    None
}

/// Per-widget state for a UI: which instances are live and their values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetState {
    pub binding_path: Path,
    /// Instance path to send back in interactions; `None` when disabled.
    pub instance_path: Option<Path>,
    pub enabled: bool,
    pub value: Option<String>,
}

pub fn widget_states(spec: &InterfaceSpec) -> Vec<WidgetState> {
    let reachable = reachable_choices(&spec.difftree, &spec.current_choices);
    let mut out = Vec::new();
    for w in spec.bound_widgets() {
        let sp = w.binding_path.clone().unwrap();
        let mut any = false;
        for ip in &reachable {
            if static_path(&spec.difftree, ip).as_ref() != Some(&sp) {
                continue;
            }
            any = true;
            let value = spec.current_choices.get(ip).map(|s| match s {
                Selection::Any(i) => w.domain.get(i).cloned().unwrap_or_default(),
                Selection::Opt(b) => OPT_DOMAIN[usize::from(!b)].to_string(),
                Selection::Multi(m) => m.to_string(),
            });
            out.push(WidgetState {
                binding_path: sp.clone(),
                instance_path: Some(ip.clone()),
                enabled: true,
                value,
            });
        }
        if !any {
            out.push(WidgetState {
                binding_path: sp,
                instance_path: None,
                enabled: false,
                value: None,
            });
        }
    }
    out
}
