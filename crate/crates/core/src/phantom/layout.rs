use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anatomical role of a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Background,
    Blade,
    Vein,
    /// Root body; galls are the swellings of infected roots.
    Root,
    Gall,
}

/// Pixel class used for labels and training filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Background,
    Healthy,
    Infected,
}

impl Class {
    pub fn id(self) -> usize {
        match self {
            Class::Background => 0,
            Class::Healthy => 1,
            Class::Infected => 2,
        }
    }

    pub fn from_id(id: usize) -> Result<Self> {
        match id {
            0 => Ok(Class::Background),
            1 => Ok(Class::Healthy),
            2 => Ok(Class::Infected),
            _ => Err(Error::Format(format!("unknown class id {id}"))),
        }
    }
}

/// Region geometry in pixel coordinates (pixel centres at integer positions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Full,
    /// Inclusive axis-aligned rectangle.
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    /// Pixels within `half_width` of the segment.
    Segment { x0: f64, y0: f64, x1: f64, y1: f64, half_width: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Full => true,
            Shape::Rect { x0, y0, x1, y1 } => x0 <= x1 && y0 <= y1,
            Shape::Ellipse { rx, ry, .. } => rx > 0.0 && ry > 0.0,
            Shape::Segment { half_width, .. } => half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("degenerate shape {self:?}")))
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Full => true,
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
            Shape::Ellipse { cx, cy, rx, ry } => ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0,
            Shape::Segment { x0, y0, x1, y1, half_width } => {
                let (dx, dy) = (x1 - x0, y1 - y0);
                let len2 = dx * dx + dy * dy;
                let t = if len2 > 0.0 { (((x - x0) * dx + (y - y0) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let (px, py) = (x0 + t * dx, y0 + t * dy);
                (x - px).powi(2) + (y - py).powi(2) <= half_width * half_width
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let e = Shape::Ellipse { cx: 5.0, cy: 5.0, rx: 2.0, ry: 1.0 };
        assert!(e.contains(6.9, 5.0));
        assert!(!e.contains(5.0, 6.5));
        let s = Shape::Segment { x0: 0.0, y0: 0.0, x1: 10.0, y1: 0.0, half_width: 0.5 };
        assert!(s.contains(4.0, 0.4));
        assert!(!s.contains(11.0, 0.0));
        assert!(Shape::Rect { x0: 1.0, y0: 1.0, x1: 2.0, y1: 2.0 }.contains(2.0, 1.0));
        assert!(Shape::Ellipse { cx: 0.0, cy: 0.0, rx: 0.0, ry: 1.0 }.validate().is_err());
    }

    #[test]
    fn class_ids() {
        for c in [Class::Background, Class::Healthy, Class::Infected] {
            assert_eq!(Class::from_id(c.id()).unwrap(), c);
        }
        assert!(Class::from_id(9).is_err());
    }
}
