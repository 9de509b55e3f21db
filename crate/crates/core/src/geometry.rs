//! Shared geometric and identity types.
//!
//! Overlap is measured between axis-aligned bounding boxes with integer pixel
//! coordinates. Ratios are kept as exact rationals wherever a rule decision
//! depends on them, and rendered as `f64` only for reporting.

use std::fmt;

use image::{RgbImage, RgbaImage};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact non-negative fraction used for overlap ratios and interval bounds.
pub type Fraction = Ratio<u64>;

/// Axis-aligned rectangle; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: i64,
    pub y: i64,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: i64, y: i64, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidInput(format!(
                "rect must have positive extent, got {w}x{h}"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn right(&self) -> i64 {
        self.x + i64::from(self.w)
    }

    pub fn bottom(&self) -> i64 {
        self.y + i64::from(self.h)
    }

    /// Bounding-box centre, rounded toward the top-left.
    pub fn center(&self) -> (i64, i64) {
        (self.x + i64::from(self.w) / 2, self.y + i64::from(self.h) / 2)
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if w <= 0 || h <= 0 {
            0
        } else {
            (w as u64) * (h as u64)
        }
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    /// `true` when the rect lies fully inside a `width x height` canvas.
    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        self.x >= 0
            && self.y >= 0
            && self.right() <= i64::from(width)
            && self.bottom() <= i64::from(height)
    }

    pub fn to_xywh(&self) -> [i64; 4] {
        [self.x, self.y, i64::from(self.w), i64::from(self.h)]
    }
}

/// Exact overlap fraction `|a_j ∩ a_obj| / |a_j|`.
pub fn overlap_fraction(a_j: &Rect, a_obj: &Rect) -> Fraction {
    Fraction::new(a_j.intersection_area(a_obj), a_j.area())
}

/// Fraction of `a_j` covered by `a_obj`. Not symmetric unless the areas match.
pub fn rect_overlap_ratio(a_j: &Rect, a_obj: &Rect) -> f64 {
    a_j.intersection_area(a_obj) as f64 / a_j.area() as f64
}

pub fn fraction_to_f64(f: &Fraction) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}

/// Converts a decimal such as `0.45` to the exact fraction it denotes, using
/// nine decimal digits of precision.
pub fn fraction_from_decimal(value: f64) -> Result<Fraction> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidInput(format!(
            "expected a non-negative fraction, got {value}"
        )));
    }
    const SCALE: u64 = 1_000_000_000;
    let numer = (value * SCALE as f64).round() as u64;
    Ok(Fraction::new(numer, SCALE))
}

/// An object class token, e.g. `dog`, with its optional super-category.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectClass {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub super_category: Option<String>,
}

impl ObjectClass {
    pub fn new(name: &str) -> Result<Self> {
        Self::with_super_category(name, None)
    }

    pub fn with_super_category(name: &str, super_category: Option<&str>) -> Result<Self> {
        let name = name.trim().to_lowercase();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInput(format!(
                "class name must be a single non-empty word, got {name:?}"
            )));
        }
        Ok(Self {
            name,
            super_category: super_category.map(|s| s.trim().to_lowercase()),
        })
    }

    /// Super-category if known, otherwise the class name itself.
    pub fn category_key(&self) -> &str {
        self.super_category.as_deref().unwrap_or(&self.name)
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    cells: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            cells: vec![false; width as usize * height as usize],
        }
    }

    pub fn filled(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            cells: vec![true; width as usize * height as usize],
        }
    }

    pub fn from_cells(width: u32, height: u32, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != width as usize * height as usize {
            return Err(Error::InvalidInput(format!(
                "mask of {width}x{height} needs {} cells, got {}",
                width as usize * height as usize,
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            cells,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.cells[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let idx = y as usize * self.width as usize + x as usize;
        self.cells[idx] = value;
    }

    pub fn count(&self) -> u64 {
        self.cells.iter().filter(|&&c| c).count() as u64
    }

    /// Tight bounding box of the set cells, if any.
    pub fn extent(&self) -> Option<Rect> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    any = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        any.then(|| Rect {
            x: i64::from(x0),
            y: i64::from(y0),
            w: x1 - x0 + 1,
            h: y1 - y0 + 1,
        })
    }

    /// Sub-mask covering `rect`; cells outside `self` read as unset.
    pub fn crop(&self, rect: &Rect) -> Mask {
        let mut out = Mask::new(rect.w, rect.h);
        for dy in 0..rect.h {
            for dx in 0..rect.w {
                let sx = rect.x + i64::from(dx);
                let sy = rect.y + i64::from(dy);
                if sx >= 0 && sy >= 0 && sx < i64::from(self.width) && sy < i64::from(self.height)
                {
                    out.set(dx, dy, self.get(sx as u32, sy as u32));
                }
            }
        }
        out
    }
}

/// A segmented object crop ready for insertion.
#[derive(Debug, Clone)]
pub struct ObjectInstance {
    pub id: String,
    pub class: ObjectClass,
    pub pixels: RgbaImage,
    pub mask: Mask,
    pub bbox_in_source: Rect,
    pub area: u64,
}

impl ObjectInstance {
    /// Builds an instance, deriving `area` from the mask.
    pub fn new(
        id: impl Into<String>,
        class: ObjectClass,
        pixels: RgbaImage,
        mask: Mask,
        bbox_in_source: Rect,
    ) -> Result<Self> {
        if pixels.dimensions() != (mask.width(), mask.height()) {
            return Err(Error::InvalidInput(format!(
                "pixels are {:?} but mask is {}x{}",
                pixels.dimensions(),
                mask.width(),
                mask.height()
            )));
        }
        let area = mask.count();
        Ok(Self {
            id: id.into(),
            class,
            pixels,
            mask,
            bbox_in_source,
            area,
        })
    }

    /// Rebuilds an instance from an RGBA crop whose alpha channel carries the mask.
    pub fn from_rgba(
        id: impl Into<String>,
        class: ObjectClass,
        pixels: RgbaImage,
        bbox_in_source: Rect,
    ) -> Result<Self> {
        let (w, h) = pixels.dimensions();
        let cells = pixels.pixels().map(|p| p.0[3] > 0).collect();
        let mask = Mask::from_cells(w, h, cells)?;
        Self::new(id, class, pixels, mask, bbox_in_source)
    }

    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }
}

/// Where a background's object boxes came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    GroundTruth,
    Detector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundObject {
    pub class: ObjectClass,
    pub bbox: Rect,
    pub area: u64,
}

/// An annotated image that objects are inserted into.
#[derive(Debug, Clone)]
pub struct BackgroundImage {
    pub id: String,
    pub pixels: RgbImage,
    pub objects: Vec<BackgroundObject>,
    pub provenance: Provenance,
}

impl BackgroundImage {
    pub fn new(id: impl Into<String>, pixels: RgbImage, objects: Vec<BackgroundObject>) -> Result<Self> {
        let id = id.into();
        let (w, h) = pixels.dimensions();
        if let Some(bad) = objects.iter().find(|o| !o.bbox.fits_within(w, h)) {
            return Err(Error::InvalidInput(format!(
                "background {id}: object {} bbox {:?} exceeds {w}x{h}",
                bad.class, bad.bbox
            )));
        }
        Ok(Self {
            id,
            pixels,
            objects,
            provenance: Provenance::GroundTruth,
        })
    }

    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }

    pub fn image_area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// Index of the object with the largest area; ties go to the lowest index.
    pub fn largest_object(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, o) in self.objects.iter().enumerate() {
            match best {
                Some(b) if self.objects[b].area >= o.area => {}
                _ => best = Some(i),
            }
        }
        best
    }
}

/// Target band for the overlap ratio of the largest background object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioInterval {
    pub index: usize,
    pub lower: Fraction,
    pub upper: Fraction,
    pub lower_open: bool,
    pub degenerate_zero: bool,
}

impl RatioInterval {
    pub fn zero() -> Self {
        Self {
            index: 0,
            lower: Fraction::from_integer(0),
            upper: Fraction::from_integer(0),
            lower_open: false,
            degenerate_zero: true,
        }
    }

    /// Half-open interval `(lower, upper]`.
    pub fn open_closed(index: usize, lower: Fraction, upper: Fraction) -> Result<Self> {
        if lower >= upper || upper > Fraction::from_integer(1) {
            return Err(Error::InvalidInput(format!(
                "interval bounds must satisfy 0 <= {lower} < {upper} <= 1"
            )));
        }
        Ok(Self {
            index,
            lower,
            upper,
            lower_open: true,
            degenerate_zero: false,
        })
    }

    pub fn contains(&self, r: &Fraction) -> bool {
        if self.degenerate_zero {
            *r.numer() == 0
        } else {
            self.lower < *r && *r <= self.upper
        }
    }

    pub fn lower_f64(&self) -> f64 {
        fraction_to_f64(&self.lower)
    }

    pub fn upper_f64(&self) -> f64 {
        fraction_to_f64(&self.upper)
    }
}

impl fmt::Display for RatioInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degenerate_zero {
            write!(f, "[0]")
        } else {
            write!(f, "({}, {}]", self.lower_f64(), self.upper_f64())
        }
    }
}

/// Membership of an `f64` ratio in an interval.
pub fn ratio_in_interval(r: f64, iv: &RatioInterval) -> bool {
    if iv.degenerate_zero {
        r == 0.0
    } else {
        iv.lower_f64() < r && r <= iv.upper_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x: i64, y: i64, w: u32, h: u32) -> Rect {
        Rect::new(x, y, w, h).unwrap()
    }

    #[test]
    fn overlap_disjoint_is_zero() {
        assert_eq!(rect_overlap_ratio(&rect(0, 0, 10, 10), &rect(20, 20, 5, 5)), 0.0);
    }

    #[test]
    fn overlap_contained_is_one() {
        assert_eq!(rect_overlap_ratio(&rect(2, 2, 4, 4), &rect(0, 0, 100, 100)), 1.0);
    }

    #[test]
    fn overlap_quarter() {
        // clip to [5,10)x[5,10): 5*5 = 25 of 100
        assert_eq!(rect_overlap_ratio(&rect(0, 0, 10, 10), &rect(5, 5, 10, 10)), 0.25);
    }

    #[test]
    fn overlap_is_asymmetric_for_unequal_areas() {
        let small = rect(0, 0, 10, 10);
        let big = rect(0, 0, 20, 20);
        assert_eq!(rect_overlap_ratio(&small, &big), 1.0);
        assert_eq!(rect_overlap_ratio(&big, &small), 0.25);
    }

    #[test]
    fn touching_edges_do_not_overlap() {
        assert_eq!(rect(0, 0, 10, 10).intersection_area(&rect(10, 0, 10, 10)), 0);
    }

    #[test]
    fn zero_sized_rect_rejected() {
        assert!(Rect::new(0, 0, 0, 5).is_err());
        assert!(Rect::new(0, 0, 5, 0).is_err());
    }

    #[test]
    fn interval_membership() {
        let zero = RatioInterval::zero();
        assert!(ratio_in_interval(0.0, &zero));
        assert!(!ratio_in_interval(1e-9, &zero));

        let r = |n, d| Fraction::new(n, d);
        let first = RatioInterval::open_closed(1, r(0, 1), r(3, 20)).unwrap();
        let second = RatioInterval::open_closed(2, r(3, 20), r(3, 10)).unwrap();
        assert!(ratio_in_interval(0.15, &first));
        assert!(!ratio_in_interval(0.15, &second));
        assert!(!ratio_in_interval(0.0, &first));
        assert!(first.contains(&r(3, 20)));
        assert!(!second.contains(&r(3, 20)));
    }

    #[test]
    fn decimal_fraction_is_exact() {
        assert_eq!(fraction_from_decimal(0.45).unwrap(), Fraction::new(9, 20));
        assert!(fraction_from_decimal(-0.1).is_err());
    }

    #[test]
    fn class_name_must_be_single_word() {
        assert!(ObjectClass::new("hot dog").is_err());
        assert!(ObjectClass::new("").is_err());
        assert_eq!(ObjectClass::new(" Dog ").unwrap().name, "dog");
    }

    #[test]
    fn largest_object_ties_break_low() {
        let obj = |a| BackgroundObject {
            class: ObjectClass::new("dog").unwrap(),
            bbox: rect(0, 0, 1, 1),
            area: a,
        };
        let bg = BackgroundImage::new("b", RgbImage::new(4, 4), vec![obj(3), obj(5), obj(5)]).unwrap();
        assert_eq!(bg.largest_object(), Some(1));
    }

    #[test]
    fn mask_extent_and_crop() {
        let mut m = Mask::new(5, 5);
        m.set(1, 2, true);
        m.set(3, 4, true);
        assert_eq!(m.extent(), Some(rect(1, 2, 3, 3)));
        let c = m.crop(&rect(1, 2, 3, 3));
        assert_eq!(c.count(), 2);
        assert!(c.get(0, 0) && c.get(2, 2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_rect() -> impl Strategy<Value = Rect> {
            (-50i64..50, -50i64..50, 1u32..60, 1u32..60).prop_map(|(x, y, w, h)| Rect { x, y, w, h })
        }

        proptest! {
            #[test]
            fn overlap_bounds(a in arb_rect(), b in arb_rect()) {
                let r = rect_overlap_ratio(&a, &b);
                prop_assert!((0.0..=1.0).contains(&r));
                prop_assert_eq!(r == 1.0, b.contains_rect(&a));
                let disjoint = a.right() <= b.x || b.right() <= a.x || a.bottom() <= b.y || b.bottom() <= a.y;
                prop_assert_eq!(r == 0.0, disjoint);
            }

            #[test]
            fn exact_and_float_agree(a in arb_rect(), b in arb_rect()) {
                prop_assert_eq!(fraction_to_f64(&overlap_fraction(&a, &b)), rect_overlap_ratio(&a, &b));
            }
        }
    }
}
