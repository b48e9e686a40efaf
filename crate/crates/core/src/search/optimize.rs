use rand::Rng;

use crate::cost::CostContext;
use crate::widgets::{Orientation, WidgetAssignment};

/// A widget assignment and its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub cost: f64,
    pub assignment: WidgetAssignment,
}

/// Lowest-cost of `k` random assignments, or `None` if none fits the screen.
/// Leaves `ctx` at the last sample.
pub fn sample_assignments<R: Rng>(ctx: &mut CostContext, k: usize, rng: &mut R) -> Option<Sample> {
    let radix: Vec<usize> = ctx.space().slots.iter().map(|(_, c)| c.len()).collect();
    let points = ctx.space().layout_points.len();
    let mut best: Option<Sample> = None;
    for _ in 0..k {
        let sel: Vec<usize> = radix.iter().map(|&r| rng.random_range(0..r)).collect();
        let orient: Vec<Orientation> = (0..points)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Orientation::Horizontal
                } else {
                    Orientation::Vertical
                }
            })
            .collect();
        ctx.set_indices(&sel, &orient);
        let cost = ctx.total();
        if cost.is_finite() && best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(Sample {
                cost,
                assignment: ctx.space().assignment_from(&sel, &orient),
            });
        }
    }
    best
}

/// Minimum total over every assignment. Leaves `ctx` at the minimizer and
/// returns its total (+∞ if nothing fits).
pub fn optimize_exhaustive(ctx: &mut CostContext) -> f64 {
    ctx.minimize()
}

/// Coordinate descent from `start`: change one slot or orientation at a time
/// while that lowers the total. Leaves `ctx` at the result and returns its
/// total.
pub fn optimize_descent(ctx: &mut CostContext, start: &WidgetAssignment) -> f64 {
    ctx.set_assignment(start);
    let radix: Vec<usize> = ctx.space().slots.iter().map(|(_, c)| c.len()).collect();
    let points = ctx.space().layout_points.len();
    let mut best = ctx.total();
    loop {
        let mut improved = false;
        for (slot, &r) in radix.iter().enumerate() {
            let mut keep = ctx.selection().0[slot];
            for c in 0..r {
                if c == keep {
                    continue;
                }
                ctx.set_slot(slot, c);
                let t = ctx.total();
                if t < best {
                    best = t;
                    keep = c;
                    improved = true;
                }
            }
            ctx.set_slot(slot, keep);
        }
        for j in 0..points {
            let cur = ctx.selection().1[j];
            let flip = match cur {
                Orientation::Vertical => Orientation::Horizontal,
                Orientation::Horizontal => Orientation::Vertical,
            };
            ctx.set_orientation(j, flip);
            let t = ctx.total();
            if t < best {
                best = t;
                improved = true;
            } else {
                ctx.set_orientation(j, cur);
            }
        }
        if !improved {
            return best;
        }
    }
}
