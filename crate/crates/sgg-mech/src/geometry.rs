//! Axis-aligned bounding-box arithmetic.
//!
//! Boxes use the corner `(x1, y1, x2, y2)` representation everywhere;
//! center-size form is never serialized. Zero-area boxes (points, lines)
//! are legal inputs and every 0/0 ratio is defined as 0, so degenerate
//! scenes never abort the pipeline.

use serde::{Deserialize, Serialize};

/// Axis-aligned box with a detection confidence and an optional category.
///
/// Invariants: `x1 <= x2`, `y1 <= y2`, `score` in `[0, 1]`. `category_id`
/// indexes the object vocabulary when the box comes from a detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub score: f64,
    pub category_id: Option<usize>,
}

impl BoundingBox {
    /// Box from corner coordinates with score 1.0 and no category.
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        debug_assert!(x1 <= x2 && y1 <= y2, "corners must be ordered");
        Self {
            x1,
            y1,
            x2,
            y2,
            score: 1.0,
            category_id: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&score));
        self.score = score;
        self
    }

    pub fn with_category(mut self, category_id: usize) -> Self {
        self.category_id = Some(category_id);
        self
    }

    pub fn from_coords(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// True when the two boxes have identical corner coordinates.
    pub fn same_coords(&self, other: &BoundingBox) -> bool {
        self.coords() == other.coords()
    }
}

/// Intersection over union of two boxes; 0 when the union has zero area.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (inter, union, _) = giou_terms(a, b);
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// The three areas behind GIoU: intersection, union, and the smallest
/// axis-aligned box enclosing both inputs.
pub fn giou_terms(a: &BoundingBox, b: &BoundingBox) -> (f64, f64, f64) {
    let iw = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let ih = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    let cw = a.x2.max(b.x2) - a.x1.min(b.x1);
    let ch = a.y2.max(b.y2) - a.y1.min(b.y1);
    (inter, union, cw * ch)
}
