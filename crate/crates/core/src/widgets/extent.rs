//! Widget extents in character cells.

use serde::{Deserialize, Serialize};

use super::{SizeClass, WidgetKind, WidgetNode};

/// Display strings longer than this are truncated when rendered.
pub const MAX_LABEL_CELLS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Extent {
    pub width: u32,
    pub height: u32,
}

impl Extent {
    pub fn new(width: u32, height: u32) -> Self {
        Extent { width, height }
    }

    pub fn fits(self, screen: Extent) -> bool {
        self.width <= screen.width && self.height <= screen.height
    }
}

fn scale(x: usize, size: Option<SizeClass>) -> u32 {
    let f = size.map_or(1.0, SizeClass::factor);
    (x as f64 * f).ceil() as u32
}

/// Extent of an interaction widget (or adder button row) from its kind, size
/// and domain.
pub fn interaction_extent(kind: WidgetKind, size: Option<SizeClass>, domain: &[String]) -> Extent {
    let n = domain.len().max(1);
    let l = domain
        .iter()
        .map(|s| s.chars().count().min(MAX_LABEL_CELLS))
        .max()
        .unwrap_or(0);
    let (w, h) = match kind {
        WidgetKind::Label => return Extent::new(l.max(1) as u32, 1),
        WidgetKind::Textbox => (l.max(6) + 2, 1),
        WidgetKind::Dropdown => (l + 4, 1),
        WidgetKind::Slider => (n * (l + 1) + 6, 2),
        WidgetKind::RangeSlider => (2 * l + 16, 2),
        WidgetKind::Checkboxes | WidgetKind::RadioButtons | WidgetKind::Buttons => (n * (l + 4), 1),
        WidgetKind::Toggle => (8, 1),
        WidgetKind::Adder => (6, 1),
        WidgetKind::Horizontal | WidgetKind::Vertical | WidgetKind::Tabs => (0, 0),
    };
    Extent::new(scale(w, size), scale(h, size))
}

/// Bounding box of a widget subtree.
pub fn layout_extent(w: &WidgetNode) -> Extent {
    let kids: Vec<Extent> = w.children.iter().map(layout_extent).collect();
    let max_w = kids.iter().map(|e| e.width).max().unwrap_or(0);
    let max_h = kids.iter().map(|e| e.height).max().unwrap_or(0);
    match w.kind {
        WidgetKind::Vertical => Extent::new(max_w, kids.iter().map(|e| e.height).sum()),
        WidgetKind::Horizontal => Extent::new(kids.iter().map(|e| e.width).sum(), max_h),
        WidgetKind::Tabs => Extent::new(max_w, max_h + 1),
        WidgetKind::Adder => {
            let row = interaction_extent(WidgetKind::Adder, None, &[]);
            Extent::new(max_w.max(row.width), max_h + row.height)
        }
        k => interaction_extent(k, w.size_class, &w.domain),
    }
}
