//! Axis-aligned box arithmetic.
//!
//! Boxes use the MOT convention `(left, top, width, height)` in continuous
//! pixel space. Nothing here rounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-finite coordinates and non-positive sizes.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()) {
            return Err(Error::InvalidGeometry(format!("non-finite box {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "box must have positive width and height, got w={} h={}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }
}

fn intersection_area(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    iw * ih
}

/// Intersection over union of two valid boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(iou_unchecked(a, b))
}

/// IoU without validation; callers guarantee positive, finite boxes.
#[inline]
pub(crate) fn iou_unchecked(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    // Areas from the same edge differences as the intersection, so a box
    // compared with itself scores exactly 1.
    let extent = |b: &BoundingBox| (b.right() - b.x) * (b.bottom() - b.y);
    let union = extent(a) + extent(b) - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Grows a box about its center by `scale` times its size on every side.
///
/// The result has width `w * (1 + 2 * scale)` and height `h * (1 + 2 * scale)`.
pub fn expand(b: &BoundingBox, scale: f64) -> Result<BoundingBox> {
    if !scale.is_finite() || scale < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "expansion scale must be a non-negative finite number, got {scale}"
        )));
    }
    b.validate()?;
    Ok(expand_unchecked(b, scale))
}

#[inline]
fn expand_unchecked(b: &BoundingBox, scale: f64) -> BoundingBox {
    if scale == 0.0 {
        return *b;
    }
    BoundingBox {
        x: b.x - scale * b.w,
        y: b.y - scale * b.h,
        w: b.w * (1.0 + 2.0 * scale),
        h: b.h * (1.0 + 2.0 * scale),
    }
}

/// Expansion IoU: the IoU of both boxes after expanding each by `scale`.
pub fn eiou(a: &BoundingBox, b: &BoundingBox, scale: f64) -> Result<f64> {
    let ea = expand(a, scale)?;
    let eb = expand(b, scale)?;
    Ok(iou_unchecked(&ea, &eb))
}

#[inline]
pub(crate) fn eiou_unchecked(a: &BoundingBox, b: &BoundingBox, scale: f64) -> f64 {
    iou_unchecked(&expand_unchecked(a, scale), &expand_unchecked(b, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn identical_and_disjoint() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(
            iou(&bb(0.0, 0.0, 1.0, 1.0), &bb(5.0, 5.0, 1.0, 1.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn touching_edges_do_not_overlap() {
        assert_eq!(
            iou(&bb(0.0, 0.0, 1.0, 1.0), &bb(1.0, 0.0, 1.0, 1.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
        let degenerate = BoundingBox {
            x: 0.0,
            y: 0.0,
            w: 0.0,
            h: 2.0,
        };
        assert!(matches!(
            iou(&degenerate, &bb(0.0, 0.0, 1.0, 1.0)),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn expand_instantiation() {
        let b = bb(10.0, 10.0, 4.0, 6.0);
        assert_eq!(expand(&b, 0.0).unwrap(), b);
        assert_eq!(expand(&b, 0.5).unwrap(), bb(8.0, 7.0, 8.0, 12.0));
        assert!(matches!(expand(&b, -0.1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn eiou_reduces_to_iou_at_zero() {
        let a = bb(0.0, 0.0, 2.0, 2.0);
        let b = bb(1.0, 1.0, 2.0, 2.0);
        assert_eq!(eiou(&a, &b, 0.0).unwrap(), iou(&a, &b).unwrap());
        assert_eq!(eiou(&a, &a, 3.7).unwrap(), 1.0);
    }

    #[test]
    fn eiou_separated_unit_boxes() {
        // Expanded boxes (-1.5,-1.5,4,4) and (1.5,-1.5,4,4): overlap 1x4, union 28.
        let v = eiou(&bb(0.0, 0.0, 1.0, 1.0), &bb(3.0, 0.0, 1.0, 1.0), 1.5).unwrap();
        assert!((v - 1.0 / 7.0).abs() < 1e-12);
    }
}
