use std::cell::Cell;
use std::collections::HashMap;
use std::sync::Arc;

use super::{
    candidates, interaction_cost, query_witnesses, Candidate, CostBreakdown, CostError, CostModel,
    Delta, MTerm, Total, UTerm, WidgetIndex,
};
use crate::difftree::{ChoiceAssignment, DiffNode, Path};
use crate::sql::{Ast, QueryLog};
use crate::widgets::{
    build_widget_tree, domain_of, AssignmentSpace, Extent, LayoutSkeleton, Orientation, Screen,
    WidgetAssignment, WidgetChoice, WidgetNode,
};

#[derive(Debug, Clone)]
struct Slot {
    domain: Vec<String>,
    /// M score per candidate.
    m: Vec<f64>,
}

/// A candidate change set with changes as (slot, delta).
#[derive(Debug, Clone)]
struct PairCand {
    changes: Vec<(usize, Delta)>,
    edges: usize,
    full: Candidate,
}

/// Cost evaluation for one DiffTree under changing widget assignments.
///
/// Witnesses, change sets and connecting edges do not depend on widget kinds
/// or layout, so they are computed once; after a single binding changes only
/// its M term and the U terms of the pairs that touch it are recomputed.
#[derive(Debug, Clone)]
pub struct CostContext {
    model: CostModel,
    tree: Arc<DiffNode>,
    screen: Screen,
    space: AssignmentSpace,
    skeleton: LayoutSkeleton,
    slots: Vec<Slot>,
    slot_of: HashMap<Path, usize>,
    layout_of: HashMap<Path, usize>,
    pairs: Vec<Vec<PairCand>>,
    /// Pairs whose candidates change each slot.
    touches: Vec<Vec<usize>>,
    sel: Vec<usize>,
    orient: Vec<Orientation>,
    /// Chosen candidate and raw U score per pair.
    u: Vec<(usize, f64)>,
    /// Root extent, recomputed lazily after a change.
    extent: Cell<Option<Extent>>,
}

impl CostContext {
    /// Evaluation context for `tree` with the first candidate of every slot
    /// and vertical layouts.
    pub fn new(
        tree: Arc<DiffNode>,
        log: &QueryLog,
        model: &CostModel,
        screen: Screen,
    ) -> Result<Self, CostError> {
        let space = AssignmentSpace::of(&tree);
        let skeleton = LayoutSkeleton::new(&tree, &space);
        let mut slots = Vec::new();
        for (p, cands) in &space.slots {
            let d = domain_of(tree.get(p).expect("slot path is in the tree"));
            let m = cands
                .iter()
                .map(|c| model.m_score(c.kind, c.size, d.vtype, &d.items))
                .collect::<Result<Vec<_>, _>>()?;
            slots.push(Slot { domain: d.items, m });
        }
        let slot_of: HashMap<Path, usize> = space
            .slots
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (p.clone(), i))
            .collect();
        let layout_of = space
            .layout_points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let shape = build_widget_tree(&tree, &WidgetAssignment::default());
        let index = WidgetIndex::new(shape.as_ref());
        let mut wit: HashMap<&Ast, Vec<ChoiceAssignment>> = HashMap::new();
        for q in log.iter() {
            if !wit.contains_key(q) {
                wit.insert(q, query_witnesses(&tree, q, model.witness_cap)?);
            }
        }
        let mut pairs = Vec::new();
        let mut touches = vec![Vec::new(); slots.len()];
        for (i, (qa, qb)) in log.pairs().enumerate() {
            let cands: Vec<PairCand> = candidates(&tree, &index, &wit[qa], &wit[qb])?
                .into_iter()
                .map(|c| PairCand {
                    changes: c
                        .changes
                        .iter()
                        .map(|ch| (slot_of[&ch.static_path], ch.delta))
                        .collect(),
                    edges: c.edges,
                    full: c,
                })
                .collect();
            for c in &cands {
                for &(s, _) in &c.changes {
                    if touches[s].last() != Some(&i) {
                        touches[s].push(i);
                    }
                }
            }
            pairs.push(cands);
        }
        let mut ctx = CostContext {
            model: model.clone(),
            tree,
            screen,
            sel: vec![0; space.slots.len()],
            orient: vec![Orientation::Vertical; space.layout_points.len()],
            space,
            skeleton,
            slots,
            slot_of,
            layout_of,
            pairs,
            touches,
            u: Vec::new(),
            extent: Cell::new(None),
        };
        ctx.u = (0..ctx.pairs.len()).map(|i| ctx.u_of(i)).collect();
        Ok(ctx)
    }

    pub fn tree(&self) -> &Arc<DiffNode> {
        &self.tree
    }

    pub fn space(&self) -> &AssignmentSpace {
        &self.space
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn screen(&self) -> Screen {
        self.screen
    }

    pub fn selection(&self) -> (&[usize], &[Orientation]) {
        (&self.sel, &self.orient)
    }

    pub fn assignment(&self) -> WidgetAssignment {
        self.space.assignment_from(&self.sel, &self.orient)
    }

    fn u_of(&self, i: usize) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (ci, c) in self.pairs[i].iter().enumerate() {
            let mut s = self.model.edge_cost * c.edges as f64;
            for &(slot, d) in &c.changes {
                let kind = self.space.slots[slot].1[self.sel[slot]].kind;
                s += interaction_cost(&self.model, kind, &self.slots[slot].domain, d);
            }
            if s < best.1 {
                best = (ci, s);
            }
        }
        best
    }

    /// Replace the whole assignment and recompute every term.
    pub fn set_assignment(&mut self, a: &WidgetAssignment) {
        let (sel, orient) = self.space.indices_of(a);
        self.set_indices(&sel, &orient);
    }

    /// Set candidate indices and orientations and recompute every term.
    pub fn set_indices(&mut self, sel: &[usize], orient: &[Orientation]) {
        self.sel.copy_from_slice(sel);
        self.orient.copy_from_slice(orient);
        for i in 0..self.pairs.len() {
            self.u[i] = self.u_of(i);
        }
        self.extent.set(None);
    }

    /// Set candidate `choice` at slot index `slot`, updating only the
    /// affected terms.
    pub fn set_slot(&mut self, slot: usize, choice: usize) {
        if self.sel[slot] == choice {
            return;
        }
        self.sel[slot] = choice;
        for k in 0..self.touches[slot].len() {
            let i = self.touches[slot][k];
            self.u[i] = self.u_of(i);
        }
        self.extent.set(None);
    }

    pub fn set_orientation(&mut self, point: usize, o: Orientation) {
        if self.orient[point] != o {
            self.orient[point] = o;
            self.extent.set(None);
        }
    }

    /// Change one binding, given by static path and widget choice.
    pub fn set_widget(&mut self, path: &[usize], c: WidgetChoice) -> Result<(), CostError> {
        let slot = *self
            .slot_of
            .get(path)
            .ok_or_else(|| CostError::Unbound(path.to_vec()))?;
        let choice = self.space.slots[slot]
            .1
            .iter()
            .position(|x| *x == c)
            .ok_or(CostError::NotPriced(c.kind))?;
        self.set_slot(slot, choice);
        Ok(())
    }

    pub fn set_layout(&mut self, path: &[usize], o: Orientation) -> Result<(), CostError> {
        let point = *self
            .layout_of
            .get(path)
            .ok_or_else(|| CostError::Unbound(path.to_vec()))?;
        self.set_orientation(point, o);
        Ok(())
    }

    pub fn extent(&self) -> Extent {
        if let Some(e) = self.extent.get() {
            return e;
        }
        let e = self.skeleton.extent(&self.sel, &self.orient);
        self.extent.set(Some(e));
        e
    }

    pub fn fits(&self) -> bool {
        self.extent().fits(self.screen.extent())
    }

    /// Current total, +∞ when the layout does not fit.
    pub fn total(&self) -> f64 {
        if !self.fits() {
            return f64::INFINITY;
        }
        let m: f64 = self.sel.iter().enumerate().map(|(i, &c)| self.slots[i].m[c]).sum();
        let u: f64 = self.u.iter().map(|(_, s)| self.model.lambda * s).sum();
        m + u
    }

    /// Set `a` and return its total.
    pub fn evaluate(&mut self, a: &WidgetAssignment) -> f64 {
        self.set_assignment(a);
        self.total()
    }

    /// Exact minimum total by branch and bound over slots. Leaves the
    /// context at the minimizer (or at the first candidates with vertical
    /// layouts if nothing fits) and returns its total.
    pub fn minimize(&mut self) -> f64 {
        let n = self.slots.len();
        let screen = self.screen.extent();
        let order: Vec<Vec<usize>> = self
            .slots
            .iter()
            .map(|s| {
                let mut o: Vec<usize> = (0..s.m.len()).collect();
                o.sort_by(|&a, &b| s.m[a].total_cmp(&s.m[b]));
                o
            })
            .collect();
        let mut suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + self.slots[i].m[order[i][0]];
        }
        // cheapest interaction per change over all candidates of its slot
        let loose: Vec<Vec<Vec<f64>>> = self
            .pairs
            .iter()
            .map(|cands| {
                cands
                    .iter()
                    .map(|c| {
                        c.changes
                            .iter()
                            .map(|&(slot, d)| {
                                self.space.slots[slot]
                                    .1
                                    .iter()
                                    .map(|w| interaction_cost(&self.model, w.kind, &self.slots[slot].domain, d))
                                    .fold(f64::INFINITY, f64::min)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut b = Bnb {
            ctx: self,
            order,
            suffix,
            loose,
            screen,
            sel: vec![None; n],
            best: (f64::INFINITY, None),
        };
        b.descend(0, 0.0);
        match std::mem::take(&mut b.best).1 {
            Some((sel, orient)) => {
                self.set_indices(&sel, &orient);
                self.total()
            }
            None => {
                self.set_indices(&vec![0; n], &vec![Orientation::Vertical; self.orient.len()]);
                f64::INFINITY
            }
        }
    }

    pub fn widget_tree(&self) -> Option<WidgetNode> {
        build_widget_tree(&self.tree, &self.assignment())
    }

    pub fn breakdown(&self) -> CostBreakdown {
        let m_terms = self
            .sel
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let (p, cands) = &self.space.slots[i];
                MTerm {
                    binding_path: p.clone(),
                    kind: cands[c].kind,
                    size_class: cands[c].size,
                    score: self.slots[i].m[c],
                }
            })
            .collect();
        let u_terms = self
            .u
            .iter()
            .enumerate()
            .map(|(i, &(ci, s))| {
                let c = &self.pairs[i][ci].full;
                UTerm {
                    from: i,
                    to: i + 1,
                    changed: c.changes.iter().map(|ch| ch.instance.clone()).collect(),
                    edges: c.edges,
                    score: self.model.lambda * s,
                }
            })
            .collect();
        let valid = self.fits();
        let mut b = CostBreakdown {
            total: Total::Invalid,
            m_terms,
            u_terms,
            valid,
            extent: self.extent(),
            screen: self.screen,
        };
        if valid {
            b.total = Total::Finite(b.m_sum() + b.u_sum());
        }
        b
    }
}

type Optimum = (f64, Option<(Vec<usize>, Vec<Orientation>)>);

struct Bnb<'a> {
    ctx: &'a CostContext,
    order: Vec<Vec<usize>>,
    suffix: Vec<f64>,
    loose: Vec<Vec<Vec<f64>>>,
    screen: Extent,
    sel: Vec<Option<usize>>,
    best: Optimum,
}

impl Bnb<'_> {
    /// Lower bound on U over completions of the partial selection; exact
    /// once every slot is set.
    fn u_bound(&self) -> f64 {
        let c = self.ctx;
        let mut total = 0.0;
        for (i, cands) in c.pairs.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (ci, cand) in cands.iter().enumerate() {
                let mut s = c.model.edge_cost * cand.edges as f64;
                for (k, &(slot, d)) in cand.changes.iter().enumerate() {
                    s += match self.sel[slot] {
                        Some(x) => interaction_cost(&c.model, c.space.slots[slot].1[x].kind, &c.slots[slot].domain, d),
                        None => self.loose[i][ci][k],
                    };
                }
                best = best.min(s);
            }
            total += best;
        }
        c.model.lambda * total
    }

    fn descend(&mut self, depth: usize, m: f64) {
        let lb = m + self.suffix[depth] + self.u_bound();
        if lb >= self.best.0 {
            return;
        }
        let Some(orient) = self.ctx.skeleton.fitting_orientation(&self.sel, self.screen) else {
            return;
        };
        if depth == self.sel.len() {
            let sel = self.sel.iter().map(|x| x.expect("every slot is set")).collect();
            self.best = (lb, Some((sel, orient)));
            return;
        }
        for k in 0..self.order[depth].len() {
            let x = self.order[depth][k];
            self.sel[depth] = Some(x);
            self.descend(depth + 1, m + self.ctx.slots[depth].m[x]);
        }
        self.sel[depth] = None;
    }
}
