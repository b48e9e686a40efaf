//! Multi-way alignment of child sequences for Any2All.
//!
//! Rows are folded into a growing list of slots. Each new row is aligned
//! against the slots by a maximum-weight common subsequence (an item already
//! present in a slot scores 2, an item sharing the slot's alignment key scores
//! 1). Ties prefer the leftmost match. Unmatched slots and items that fall
//! between the same pair of anchors are paired positionally; whatever is left
//! over becomes an empty entry or a new slot.

use std::sync::Arc;

use crate::difftree::{DiffNode, Digest};
use crate::sql::Label;

struct Slot {
    key: Option<Label>,
    entries: Vec<Option<Arc<DiffNode>>>,
}

impl Slot {
    fn contains(&self, d: Digest) -> bool {
        self.entries.iter().flatten().any(|e| e.digest() == d)
    }

    fn score(&self, item: &DiffNode) -> u32 {
        if self.contains(item.digest()) {
            2
        } else if self.key.is_some() && self.key == item.align_key() {
            1
        } else {
            0
        }
    }
}

/// Align `rows` (child sequences). Returns the slots, each holding one
/// optional entry per row.
pub(crate) fn align(rows: &[&[Arc<DiffNode>]]) -> Vec<Vec<Option<Arc<DiffNode>>>> {
    let Some((first, rest)) = rows.split_first() else {
        return Vec::new();
    };
    let mut slots: Vec<Slot> = first
        .iter()
        .map(|c| Slot {
            key: c.align_key(),
            entries: vec![Some(c.clone())],
        })
        .collect();
    for (r, items) in rest.iter().enumerate() {
        let width = r + 1;
        slots = fold_row(slots, items, width);
    }
    slots.into_iter().map(|s| s.entries).collect()
}

fn fold_row(slots: Vec<Slot>, items: &[Arc<DiffNode>], width: usize) -> Vec<Slot> {
    let (s, t) = (slots.len(), items.len());
    // dp[i][j]: best score aligning slots[i..] with items[j..]
    let mut dp = vec![vec![0u32; t + 1]; s + 1];
    for i in (0..s).rev() {
        for j in (0..t).rev() {
            let sc = slots[i].score(&items[j]);
            let mut best = dp[i + 1][j].max(dp[i][j + 1]);
            if sc > 0 {
                best = best.max(sc + dp[i + 1][j + 1]);
            }
            dp[i][j] = best;
        }
    }
    let mut matches = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < s && j < t {
        let sc = slots[i].score(&items[j]);
        if sc > 0 && sc + dp[i + 1][j + 1] == dp[i][j] {
            matches.push((i, j));
            i += 1;
            j += 1;
        } else if dp[i + 1][j] == dp[i][j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    matches.push((s, t));

    let mut slots: Vec<Option<Slot>> = slots.into_iter().map(Some).collect();
    let mut out = Vec::with_capacity(s.max(t));
    let (mut si, mut ti) = (0, 0);
    for (mi, mj) in matches {
        let gap_slots = mi - si;
        let gap_items = mj - ti;
        let paired = gap_slots.min(gap_items);
        for k in 0..gap_slots {
            let mut slot = slots[si + k].take().unwrap();
            let entry = (k < paired).then(|| items[ti + k].clone());
            slot.entries.push(entry);
            out.push(slot);
        }
        for k in paired..gap_items {
            let item = &items[ti + k];
            let mut entries = vec![None; width];
            entries.push(Some(item.clone()));
            out.push(Slot {
                key: item.align_key(),
                entries,
            });
        }
        if mi < s {
            let mut slot = slots[mi].take().unwrap();
            slot.entries.push(Some(items[mj].clone()));
            out.push(slot);
        }
        si = mi + 1;
        ti = mj + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(l: Label, v: &str) -> Arc<DiffNode> {
        DiffNode::leaf(l, v)
    }

    fn shape(slots: &[Vec<Option<Arc<DiffNode>>>]) -> Vec<Vec<Option<String>>> {
        slots
            .iter()
            .map(|s| {
                s.iter()
                    .map(|e| e.as_ref().map(|n| n.payload()[0].value.clone().unwrap()))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn missing_tail_aligns_to_empty() {
        let a = vec![leaf(Label::ColExpr, "x"), leaf(Label::Table, "t"), leaf(Label::NumExpr, "1")];
        let b = vec![leaf(Label::ColExpr, "y"), leaf(Label::Table, "t")];
        let slots = align(&[&a, &b]);
        assert_eq!(
            shape(&slots),
            vec![
                vec![Some("x".into()), Some("y".into())],
                vec![Some("t".into()), Some("t".into())],
                vec![Some("1".into()), None],
            ]
        );
    }

    #[test]
    fn different_keys_in_same_gap_share_a_slot() {
        let a = vec![leaf(Label::ColExpr, "x"), leaf(Label::Table, "t")];
        let b = vec![leaf(Label::AggExpr, "count"), leaf(Label::Table, "t")];
        let slots = align(&[&a, &b]);
        assert_eq!(slots.len(), 2);
        assert_eq!(shape(&slots)[0], vec![Some("x".into()), Some("count".into())]);
    }

    #[test]
    fn identical_items_preferred_over_key_matches() {
        let bx = leaf(Label::NumExpr, "1");
        let by = leaf(Label::NumExpr, "2");
        let a = vec![bx.clone(), by.clone()];
        let b = vec![by.clone()];
        let slots = align(&[&a, &b]);
        assert_eq!(
            shape(&slots),
            vec![vec![Some("1".into()), None], vec![Some("2".into()), Some("2".into())]]
        );
    }
}
