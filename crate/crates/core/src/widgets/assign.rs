use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::extent::{interaction_extent, layout_extent, Extent};
use super::{
    candidate_widgets, display, domain_of, Orientation, SizeClass, WidgetChoice, WidgetError,
    WidgetKind, WidgetNode,
};
use crate::difftree::{DiffNode, NodeKind, Path};

/// Widget choices keyed by the static path of their choice node, plus the
/// orientation of every layout point.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WidgetAssignment {
    pub widgets: BTreeMap<Path, WidgetChoice>,
    pub layouts: BTreeMap<Path, Orientation>,
}

/// Every choice node's candidate widgets and every layout point of a tree.
#[derive(Debug, Clone)]
pub struct AssignmentSpace {
    pub slots: Vec<(Path, Vec<WidgetChoice>)>,
    pub layout_points: Vec<Path>,
}

fn is_layout_point(n: &DiffNode) -> bool {
    match n.kind() {
        NodeKind::All => n.children().iter().filter(|c| c.contains_choice()).count() >= 2,
        NodeKind::Opt | NodeKind::Any => n.children().iter().any(|c| c.contains_choice()),
        _ => false,
    }
}

impl AssignmentSpace {
    pub fn of(tree: &DiffNode) -> Self {
        let mut slots = Vec::new();
        let mut layout_points = Vec::new();
        tree.walk(&mut |p, n| {
            if n.is_choice() {
                let c = candidate_widgets(n).expect("choice node has candidates");
                slots.push((p.to_vec(), c));
            }
            if is_layout_point(n) {
                layout_points.push(p.to_vec());
            }
        });
        AssignmentSpace {
            slots,
            layout_points,
        }
    }

    /// Number of distinct assignments, saturating.
    pub fn size(&self) -> u128 {
        let mut s: u128 = 1;
        for (_, c) in &self.slots {
            s = s.saturating_mul(c.len() as u128);
        }
        for _ in &self.layout_points {
            s = s.saturating_mul(2);
        }
        s
    }

    pub fn random<R: Rng>(&self, rng: &mut R) -> WidgetAssignment {
        let mut a = WidgetAssignment::default();
        for (p, c) in &self.slots {
            a.widgets.insert(p.clone(), c[rng.random_range(0..c.len())]);
        }
        for p in &self.layout_points {
            let o = if rng.random_bool(0.5) {
                Orientation::Horizontal
            } else {
                Orientation::Vertical
            };
            a.layouts.insert(p.clone(), o);
        }
        a
    }

    /// The `idx`-th assignment in mixed-radix order (first slot fastest).
    pub fn nth(&self, mut idx: u128) -> WidgetAssignment {
        let mut a = WidgetAssignment::default();
        for (p, c) in &self.slots {
            let r = c.len() as u128;
            a.widgets.insert(p.clone(), c[(idx % r) as usize]);
            idx /= r;
        }
        for p in &self.layout_points {
            let o = if idx.is_multiple_of(2) {
                Orientation::Vertical
            } else {
                Orientation::Horizontal
            };
            a.layouts.insert(p.clone(), o);
            idx /= 2;
        }
        a
    }

    /// Candidate index per slot and orientation per layout point; entries
    /// missing from `a` (or not among the candidates) take the defaults.
    pub fn indices_of(&self, a: &WidgetAssignment) -> (Vec<usize>, Vec<Orientation>) {
        let sel = self
            .slots
            .iter()
            .map(|(p, c)| {
                a.widgets
                    .get(p)
                    .and_then(|w| c.iter().position(|x| x == w))
                    .unwrap_or(0)
            })
            .collect();
        let orient = self
            .layout_points
            .iter()
            .map(|p| a.layouts.get(p).copied().unwrap_or(Orientation::Vertical))
            .collect();
        (sel, orient)
    }

    pub fn assignment_from(&self, sel: &[usize], orient: &[Orientation]) -> WidgetAssignment {
        WidgetAssignment {
            widgets: self
                .slots
                .iter()
                .zip(sel)
                .map(|((p, c), &i)| (p.clone(), c[i]))
                .collect(),
            layouts: self.layout_points.iter().cloned().zip(orient.iter().copied()).collect(),
        }
    }

    pub fn check_bound(&self, bound: u128) -> Result<u128, WidgetError> {
        let size = self.size();
        if size > bound {
            Err(WidgetError::SpaceTooLarge { size, bound })
        } else {
            Ok(size)
        }
    }
}

/// One random widget tree for `tree`, reproducible from `seed`.
pub fn assign_widgets_random(tree: &DiffNode, seed: u64) -> (WidgetAssignment, Option<WidgetNode>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = AssignmentSpace::of(tree).random(&mut rng);
    let w = build_widget_tree(tree, &a);
    (a, w)
}

/// Every widget tree for `tree`, when the space is within `bound`.
pub fn assign_widgets_exhaustive(
    tree: &Arc<DiffNode>,
    bound: u128,
) -> Result<impl Iterator<Item = (WidgetAssignment, Option<WidgetNode>)>, WidgetError> {
    let space = AssignmentSpace::of(tree);
    let size = space.check_bound(bound)?;
    let tree = tree.clone();
    Ok((0..size).map(move |i| {
        let a = space.nth(i);
        let w = build_widget_tree(&tree, &a);
        (a, w)
    }))
}

fn extend(path: &[usize], i: usize) -> Path {
    let mut p = path.to_vec();
    p.push(i);
    p
}

fn layout(kind: WidgetKind, children: Vec<WidgetNode>) -> WidgetNode {
    let mut w = WidgetNode {
        kind,
        size_class: None,
        binding_path: None,
        domain: Vec::new(),
        value_type: None,
        extent: Default::default(),
        children,
    };
    w.extent = layout_extent(&w);
    w
}

fn bound_widget(n: &DiffNode, path: &[usize], a: &WidgetAssignment) -> WidgetNode {
    let choice = a.widgets.get(path).copied().unwrap_or_else(|| {
        candidate_widgets(n).expect("choice node")[0]
    });
    let dom = domain_of(n);
    WidgetNode {
        kind: choice.kind,
        size_class: choice.size,
        binding_path: Some(path.to_vec()),
        extent: interaction_extent(choice.kind, choice.size, &dom.items),
        domain: dom.items,
        value_type: Some(dom.vtype),
        children: Vec::new(),
    }
}

/// The widget tree for `tree` under an assignment; `None` if the tree has
/// no choice nodes. Missing assignment entries take the first candidate and
/// vertical layouts.
pub fn build_widget_tree(tree: &DiffNode, a: &WidgetAssignment) -> Option<WidgetNode> {
    build(tree, &[], a)
}

fn build(n: &DiffNode, path: &[usize], a: &WidgetAssignment) -> Option<WidgetNode> {
    let orient = || {
        a.layouts
            .get(path)
            .copied()
            .unwrap_or(Orientation::Vertical)
            .kind()
    };
    match n.kind() {
        NodeKind::All => {
            let mut kids: Vec<WidgetNode> = n
                .children()
                .iter()
                .enumerate()
                .filter_map(|(i, c)| build(c, &extend(path, i), a))
                .collect();
            match kids.len() {
                0 => None,
                1 => kids.pop(),
                _ => Some(layout(orient(), kids)),
            }
        }
        NodeKind::Opt => {
            let w = bound_widget(n, path, a);
            match build(&n.children()[0], &extend(path, 0), a) {
                None => Some(w),
                Some(inner) => Some(layout(orient(), vec![w, inner])),
            }
        }
        NodeKind::Any => {
            let w = bound_widget(n, path, a);
            let alts: Vec<WidgetNode> = n
                .children()
                .iter()
                .enumerate()
                .filter_map(|(i, c)| build(c, &extend(path, i), a))
                .collect();
            if alts.is_empty() {
                Some(w)
            } else {
                Some(layout(orient(), vec![w, layout(WidgetKind::Tabs, alts)]))
            }
        }
        NodeKind::Multi => {
            let tmpl = &n.children()[0];
            let inner = build(tmpl, &extend(path, 0), a).unwrap_or_else(|| {
                let domain = vec![display(tmpl)];
                WidgetNode {
                    kind: WidgetKind::Label,
                    size_class: Some(SizeClass::Small),
                    binding_path: None,
                    extent: interaction_extent(WidgetKind::Label, None, &domain),
                    domain,
                    value_type: None,
                    children: Vec::new(),
                }
            });
            let dom = domain_of(n);
            let mut w = WidgetNode {
                kind: WidgetKind::Adder,
                size_class: None,
                binding_path: Some(path.to_vec()),
                domain: dom.items,
                value_type: Some(dom.vtype),
                extent: Default::default(),
                children: vec![inner],
            };
            w.extent = layout_extent(&w);
            Some(w)
        }
        NodeKind::Absent => None,
    }
}

#[derive(Debug, Clone)]
enum Sk {
    Bound(usize),
    Fixed(Extent),
    /// Layout at a layout point (index into `layout_points`), or tabs.
    Layout(Option<usize>, Vec<Sk>),
    Adder(Box<Sk>),
}

/// The shape of every widget tree of one DiffTree, for computing extents
/// from slot and layout-point indices without building the tree.
#[derive(Debug, Clone)]
pub struct LayoutSkeleton {
    root: Option<Sk>,
    /// Extent of each candidate of each slot, aligned with
    /// `AssignmentSpace::slots`.
    choice_extents: Vec<Vec<Extent>>,
    points: usize,
}

/// Points not dominated in both width and height, sorted by width; the
/// first of equal points is kept.
fn pareto<T>(mut v: Vec<(Extent, T)>) -> Vec<(Extent, T)> {
    v.sort_by_key(|(e, _)| (e.width, e.height));
    let mut out: Vec<(Extent, T)> = Vec::new();
    for (e, t) in v {
        if out.last().is_none_or(|(l, _)| e.height < l.height) {
            out.push((e, t));
        }
    }
    out
}

impl LayoutSkeleton {
    pub fn new(tree: &DiffNode, space: &AssignmentSpace) -> Self {
        let slot_ix: BTreeMap<&[usize], usize> = space
            .slots
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (p.as_slice(), i))
            .collect();
        let layout_ix: BTreeMap<&[usize], usize> = space
            .layout_points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_slice(), i))
            .collect();
        let choice_extents = space
            .slots
            .iter()
            .map(|(p, cands)| {
                let dom = domain_of(tree.get(p).expect("slot path is in the tree"));
                cands
                    .iter()
                    .map(|c| interaction_extent(c.kind, c.size, &dom.items))
                    .collect()
            })
            .collect();
        let root = skeleton(tree, &[], &slot_ix, &layout_ix);
        LayoutSkeleton {
            root,
            choice_extents,
            points: space.layout_points.len(),
        }
    }

    /// Root extent for candidate `sel[i]` at slot `i` and orientation
    /// `orient[j]` at layout point `j`.
    pub fn extent(&self, sel: &[usize], orient: &[Orientation]) -> Extent {
        self.root
            .as_ref()
            .map_or(Extent::default(), |r| self.eval(r, sel, orient))
    }

    /// Orientations under which the root fits `screen`, or `None` if no
    /// orientation does. A slot with `sel[i] == None` is counted at the
    /// smallest width and height among its candidates, so `None` for a
    /// partial selection means no completion fits either.
    pub fn fitting_orientation(&self, sel: &[Option<usize>], screen: Extent) -> Option<Vec<Orientation>> {
        let Some(r) = &self.root else {
            return Some(vec![Orientation::Vertical; self.points]);
        };
        let front = self.front(r, sel);
        let (_, set) = front.into_iter().find(|(e, _)| e.fits(screen))?;
        let mut orient = vec![Orientation::Vertical; self.points];
        for (j, o) in set {
            orient[j] = o;
        }
        Some(orient)
    }

    fn slot_extent(&self, i: usize, sel: &[Option<usize>]) -> Extent {
        let cands = &self.choice_extents[i];
        match sel[i] {
            Some(c) => cands[c],
            None => Extent::new(
                cands.iter().map(|e| e.width).min().unwrap_or(0),
                cands.iter().map(|e| e.height).min().unwrap_or(0),
            ),
        }
    }

    /// Pareto front of (extent, orientations below `s`).
    fn front(&self, s: &Sk, sel: &[Option<usize>]) -> Vec<(Extent, Vec<(usize, Orientation)>)> {
        match s {
            Sk::Bound(i) => vec![(self.slot_extent(*i, sel), Vec::new())],
            Sk::Fixed(e) => vec![(*e, Vec::new())],
            Sk::Adder(child) => {
                let row = interaction_extent(WidgetKind::Adder, None, &[]);
                self.front(child, sel)
                    .into_iter()
                    .map(|(c, o)| (Extent::new(c.width.max(row.width), c.height + row.height), o))
                    .collect()
            }
            Sk::Layout(point, kids) => {
                let fronts: Vec<_> = kids.iter().map(|k| self.front(k, sel)).collect();
                let stack = |horizontal: bool, tag: Option<usize>| {
                    let mut acc = vec![(Extent::default(), Vec::new())];
                    for f in &fronts {
                        let mut next = Vec::with_capacity(acc.len() * f.len());
                        for (a, ao) in &acc {
                            for (b, bo) in f {
                                let e = if horizontal {
                                    Extent::new(a.width + b.width, a.height.max(b.height))
                                } else {
                                    Extent::new(a.width.max(b.width), a.height + b.height)
                                };
                                let mut o: Vec<(usize, Orientation)> = ao.clone();
                                o.extend_from_slice(bo);
                                next.push((e, o));
                            }
                        }
                        acc = pareto(next);
                    }
                    if let Some(j) = tag {
                        let o = if horizontal {
                            Orientation::Horizontal
                        } else {
                            Orientation::Vertical
                        };
                        for (_, v) in &mut acc {
                            v.push((j, o));
                        }
                    }
                    acc
                };
                match point {
                    None => {
                        // tabs: the widest and tallest alternative plus a tab row
                        let mut acc = vec![(Extent::default(), Vec::new())];
                        for f in &fronts {
                            let mut next = Vec::new();
                            for (a, ao) in &acc {
                                for (b, bo) in f {
                                    let mut o: Vec<(usize, Orientation)> = ao.clone();
                                    o.extend_from_slice(bo);
                                    next.push((
                                        Extent::new(a.width.max(b.width), a.height.max(b.height)),
                                        o,
                                    ));
                                }
                            }
                            acc = pareto(next);
                        }
                        acc.into_iter()
                            .map(|(e, o)| (Extent::new(e.width, e.height + 1), o))
                            .collect()
                    }
                    Some(j) => {
                        let mut both = stack(false, Some(*j));
                        both.extend(stack(true, Some(*j)));
                        pareto(both)
                    }
                }
            }
        }
    }

    fn eval(&self, s: &Sk, sel: &[usize], orient: &[Orientation]) -> Extent {
        match s {
            Sk::Bound(i) => self.choice_extents[*i][sel[*i]],
            Sk::Fixed(e) => *e,
            Sk::Adder(child) => {
                let c = self.eval(child, sel, orient);
                let row = interaction_extent(WidgetKind::Adder, None, &[]);
                Extent::new(c.width.max(row.width), c.height + row.height)
            }
            Sk::Layout(point, kids) => {
                let (mut w, mut h, mut sw, mut sh) = (0u32, 0u32, 0u32, 0u32);
                for k in kids {
                    let e = self.eval(k, sel, orient);
                    w = w.max(e.width);
                    h = h.max(e.height);
                    sw += e.width;
                    sh += e.height;
                }
                match point.map(|j| orient[j]) {
                    None => Extent::new(w, h + 1),
                    Some(Orientation::Vertical) => Extent::new(w, sh),
                    Some(Orientation::Horizontal) => Extent::new(sw, h),
                }
            }
        }
    }
}

fn skeleton(
    n: &DiffNode,
    path: &[usize],
    slots: &BTreeMap<&[usize], usize>,
    layouts: &BTreeMap<&[usize], usize>,
) -> Option<Sk> {
    let layout = |kids: Vec<Sk>| Sk::Layout(Some(layouts[path]), kids);
    match n.kind() {
        NodeKind::All => {
            let mut kids: Vec<Sk> = n
                .children()
                .iter()
                .enumerate()
                .filter_map(|(i, c)| skeleton(c, &extend(path, i), slots, layouts))
                .collect();
            match kids.len() {
                0 => None,
                1 => kids.pop(),
                _ => Some(layout(kids)),
            }
        }
        NodeKind::Opt => {
            let w = Sk::Bound(slots[path]);
            match skeleton(&n.children()[0], &extend(path, 0), slots, layouts) {
                None => Some(w),
                Some(inner) => Some(layout(vec![w, inner])),
            }
        }
        NodeKind::Any => {
            let w = Sk::Bound(slots[path]);
            let alts: Vec<Sk> = n
                .children()
                .iter()
                .enumerate()
                .filter_map(|(i, c)| skeleton(c, &extend(path, i), slots, layouts))
                .collect();
            if alts.is_empty() {
                Some(w)
            } else {
                Some(layout(vec![w, Sk::Layout(None, alts)]))
            }
        }
        NodeKind::Multi => {
            let tmpl = &n.children()[0];
            let inner = skeleton(tmpl, &extend(path, 0), slots, layouts).unwrap_or_else(|| {
                Sk::Fixed(interaction_extent(WidgetKind::Label, None, &[display(tmpl)]))
            });
            Some(Sk::Adder(Box::new(inner)))
        }
        NodeKind::Absent => None,
    }
}
