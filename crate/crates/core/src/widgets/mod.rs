//! Widget catalog, widget trees and their construction from DiffTrees.
//!
//! Every choice node of a DiffTree is bound by exactly one widget: an
//! interaction widget for ANY and OPT nodes, an adder for MULTI nodes. ALL
//! nodes with two or more choice-bearing children become a horizontal or
//! vertical layout; the orientation is part of the assignment.

mod assign;
mod extent;
mod spec;

use serde::{Deserialize, Serialize};

use crate::difftree::{
    complete_defaults, instantiate_forest, render, ChoiceAssignment, DiffNode, NodeKind, Path,
};
use crate::sql::{fragment, Label};

pub use assign::{
    assign_widgets_exhaustive, assign_widgets_random, build_widget_tree, AssignmentSpace,
    LayoutSkeleton, WidgetAssignment,
};
pub use extent::{interaction_extent, layout_extent, Extent, MAX_LABEL_CELLS};
pub use spec::{
    apply_widget, widget_states, InteractError, InterfaceSpec, Screen, SpecError, WidgetState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidgetKind {
    Label,
    Textbox,
    Dropdown,
    Slider,
    RangeSlider,
    Checkboxes,
    RadioButtons,
    Buttons,
    Toggle,
    Horizontal,
    Vertical,
    Tabs,
    Adder,
}

impl WidgetKind {
    pub const INTERACTION: [WidgetKind; 9] = [
        WidgetKind::Label,
        WidgetKind::Textbox,
        WidgetKind::Dropdown,
        WidgetKind::Slider,
        WidgetKind::RangeSlider,
        WidgetKind::Checkboxes,
        WidgetKind::RadioButtons,
        WidgetKind::Buttons,
        WidgetKind::Toggle,
    ];

    pub fn is_interaction(self) -> bool {
        !matches!(
            self,
            WidgetKind::Horizontal | WidgetKind::Vertical | WidgetKind::Tabs | WidgetKind::Adder
        )
    }

    /// Widgets that lay out one control per domain item.
    pub fn is_enumerated(self) -> bool {
        matches!(
            self,
            WidgetKind::RadioButtons | WidgetKind::Buttons | WidgetKind::Checkboxes
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            WidgetKind::Label => "label",
            WidgetKind::Textbox => "textbox",
            WidgetKind::Dropdown => "dropdown",
            WidgetKind::Slider => "slider",
            WidgetKind::RangeSlider => "range_slider",
            WidgetKind::Checkboxes => "checkboxes",
            WidgetKind::RadioButtons => "radio_buttons",
            WidgetKind::Buttons => "buttons",
            WidgetKind::Toggle => "toggle",
            WidgetKind::Horizontal => "horizontal",
            WidgetKind::Vertical => "vertical",
            WidgetKind::Tabs => "tabs",
            WidgetKind::Adder => "adder",
        }
    }
}

impl std::fmt::Display for WidgetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    pub fn factor(self) -> f64 {
        match self {
            SizeClass::Small => 1.0,
            SizeClass::Medium => 1.5,
            SizeClass::Large => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Vertical,
    Horizontal,
}

impl Orientation {
    pub fn kind(self) -> WidgetKind {
        match self {
            Orientation::Vertical => WidgetKind::Vertical,
            Orientation::Horizontal => WidgetKind::Horizontal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueType {
    Numeric,
    String,
    Subtree,
}

/// A widget kind and size picked for one choice node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WidgetChoice {
    pub kind: WidgetKind,
    pub size: Option<SizeClass>,
}

/// The alternatives a choice node offers, as display strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub items: Vec<String>,
    pub vtype: ValueType,
}

pub const OPT_DOMAIN: [&str; 2] = ["on", "off"];
pub const ADDER_DOMAIN: [&str; 2] = ["add", "remove"];

/// Display string of one ANY alternative: the leaf token, `(none)` for the
/// empty alternative, otherwise the SQL text of its default instantiation.
pub fn display(n: &DiffNode) -> String {
    if n.is_absent() {
        return "(none)".into();
    }
    if let Some(s) = n.leaf_stamp() {
        return match s.label {
            Label::AggExpr => "count(*)".into(),
            _ => s.value.clone().unwrap_or_default(),
        };
    }
    let mut c = ChoiceAssignment::new();
    complete_defaults(n, &mut c);
    match instantiate_forest(n, &c) {
        Ok(forest) => forest.iter().map(fragment).collect::<Vec<_>>().join(" "),
        Err(_) => render(n),
    }
}

pub fn domain_of(n: &DiffNode) -> Domain {
    match n.kind() {
        NodeKind::Any => {
            let mut items: Vec<String> = Vec::with_capacity(n.children().len());
            for c in n.children() {
                let base = display(c);
                let mut item = base.clone();
                let mut k = 2;
                while items.contains(&item) {
                    item = format!("{base} #{k}");
                    k += 1;
                }
                items.push(item);
            }
            Domain {
                items,
                vtype: value_type(n),
            }
        }
        NodeKind::Opt => Domain {
            items: OPT_DOMAIN.iter().map(|s| s.to_string()).collect(),
            vtype: ValueType::Subtree,
        },
        NodeKind::Multi => Domain {
            items: ADDER_DOMAIN.iter().map(|s| s.to_string()).collect(),
            vtype: ValueType::Subtree,
        },
        _ => Domain {
            items: Vec::new(),
            vtype: ValueType::Subtree,
        },
    }
}

fn value_type(n: &DiffNode) -> ValueType {
    let mut leaves = n.children().iter().filter(|c| !c.is_absent()).peekable();
    if leaves.peek().is_none() {
        return ValueType::Subtree;
    }
    let mut numeric = true;
    for c in leaves {
        match c.leaf_stamp() {
            Some(s) => numeric &= s.label == Label::NumExpr,
            None => return ValueType::Subtree,
        }
    }
    if numeric {
        ValueType::Numeric
    } else {
        ValueType::String
    }
}

fn same_label_leaves(n: &DiffNode) -> bool {
    let mut label = None;
    n.children().iter().all(|c| match c.leaf_stamp() {
        Some(s) => {
            let ok = label.is_none_or(|l| l == s.label);
            label = Some(s.label);
            ok
        }
        None => false,
    })
}

// Between predicates over one column with literal numeric bounds.
fn range_domain(n: &DiffNode) -> bool {
    let mut col = None;
    n.children().iter().all(|c| {
        let ok = c.kind() == NodeKind::All
            && c.payload().len() == 1
            && c.payload()[0].label == Label::Between
            && c.children().len() == 3
            && c.children()[1..]
                .iter()
                .all(|b| b.leaf_stamp().is_some_and(|s| s.label == Label::NumExpr));
        if !ok {
            return false;
        }
        let d = c.children()[0].digest();
        let same = col.is_none_or(|x| x == d);
        col = Some(d);
        same
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WidgetError {
    #[error("node at {0:?} is not a choice node")]
    NotAChoice(Path),
    #[error("assignment space of {size} exceeds the bound {bound}")]
    SpaceTooLarge { size: u128, bound: u128 },
}

/// Widget kinds and sizes that suit a choice node's domain.
pub fn candidate_widgets(node: &DiffNode) -> Result<Vec<WidgetChoice>, WidgetError> {
    let sized = |kinds: &[WidgetKind]| {
        kinds
            .iter()
            .flat_map(|&kind| {
                SizeClass::ALL.iter().map(move |&s| WidgetChoice {
                    kind,
                    size: Some(s),
                })
            })
            .collect::<Vec<_>>()
    };
    match node.kind() {
        NodeKind::Any => {
            let n = node.children().len();
            if n == 1 {
                return Ok(vec![WidgetChoice {
                    kind: WidgetKind::Label,
                    size: Some(SizeClass::Small),
                }]);
            }
            let has_absent = node.children().iter().any(|c| c.is_absent());
            let mut kinds = vec![
                WidgetKind::Dropdown,
                WidgetKind::RadioButtons,
                WidgetKind::Buttons,
            ];
            if !has_absent && value_type(node) == ValueType::Numeric {
                kinds.push(WidgetKind::Slider);
            }
            if !has_absent && range_domain(node) {
                kinds.push(WidgetKind::RangeSlider);
            }
            if !has_absent && same_label_leaves(node) {
                kinds.push(WidgetKind::Textbox);
            }
            // on/off switches only fit a subtree that is present or absent
            if n == 2 && has_absent {
                kinds.push(WidgetKind::Checkboxes);
                kinds.push(WidgetKind::Toggle);
            }
            Ok(sized(&kinds))
        }
        NodeKind::Opt => Ok(sized(&[WidgetKind::Toggle, WidgetKind::Checkboxes])),
        NodeKind::Multi => Ok(vec![WidgetChoice {
            kind: WidgetKind::Adder,
            size: None,
        }]),
        _ => Err(WidgetError::NotAChoice(Vec::new())),
    }
}

/// A node of a widget tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetNode {
    pub kind: WidgetKind,
    pub size_class: Option<SizeClass>,
    /// Static path of the bound choice node (interaction widgets and adders).
    pub binding_path: Option<Path>,
    pub domain: Vec<String>,
    pub value_type: Option<ValueType>,
    pub extent: Extent,
    pub children: Vec<WidgetNode>,
}

impl WidgetNode {
    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a WidgetNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    /// Widgets bound to a choice node (interaction widgets and adders), in
    /// pre-order.
    pub fn bound(&self) -> Vec<&WidgetNode> {
        let mut out = Vec::new();
        self.walk(&mut |w| {
            if w.binding_path.is_some() {
                out.push(w);
            }
        });
        out
    }

    pub fn find_binding(&self, path: &[usize]) -> Option<&WidgetNode> {
        let mut found = None;
        self.walk(&mut |w| {
            if found.is_none() && w.binding_path.as_deref() == Some(path) {
                found = Some(w);
            }
        });
        found
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(|c| c.count()).sum::<usize>()
    }
}

#[cfg(test)]
mod tests;
