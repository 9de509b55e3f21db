//! Pasting a resized object into a background.

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::tuning::TunedPlacement;
use crate::error::{Error, Result};
use crate::geometry::{BackgroundImage, ObjectInstance, Rect};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendMode {
    /// Mask cells are replaced outright.
    #[default]
    HardPaste,
    /// Mask cells on the mask border are mixed 50/50 with the background.
    Feather,
}

#[derive(Debug, Clone)]
pub struct SynthesizedImage {
    pub background_id: String,
    pub object_id: String,
    pub interval_index: usize,
    pub pixels: RgbImage,
    pub insertion_rect: Rect,
}

impl SynthesizedImage {
    pub fn id(&self) -> String {
        synthesized_id(&self.background_id, &self.object_id, self.interval_index)
    }
}

pub fn synthesized_id(background_id: &str, object_id: &str, interval: usize) -> String {
    format!("{background_id}__{object_id}__r{interval}")
}

/// Pastes `obj` with its top-left corner at `coord`. Only cells under the
/// object mask change.
pub fn composite(b: &BackgroundImage, obj: &ObjectInstance, coord: (i64, i64), mode: BlendMode) -> Result<RgbImage> {
    let rect = Rect {
        x: coord.0,
        y: coord.1,
        w: obj.width(),
        h: obj.height(),
    };
    if !rect.fits_within(b.width(), b.height()) {
        return Err(Error::OutOfBounds(rect.to_xywh()));
    }
    let mut out = b.pixels.clone();
    let (ox, oy) = (coord.0 as u32, coord.1 as u32);
    for dy in 0..obj.height() {
        for dx in 0..obj.width() {
            if !obj.mask.get(dx, dy) {
                continue;
            }
            let [r, g, bl, _] = obj.pixels.get_pixel(dx, dy).0;
            let target = out.get_pixel_mut(ox + dx, oy + dy);
            *target = match mode {
                BlendMode::Feather if on_mask_border(obj, dx, dy) => {
                    let mix = |a: u8, c: u8| (u16::from(a) + u16::from(c)).div_ceil(2) as u8;
                    Rgb([mix(target.0[0], r), mix(target.0[1], g), mix(target.0[2], bl)])
                }
                _ => Rgb([r, g, bl]),
            };
        }
    }
    Ok(out)
}

fn on_mask_border(obj: &ObjectInstance, x: u32, y: u32) -> bool {
    let (w, h) = (obj.width(), obj.height());
    x == 0
        || y == 0
        || x + 1 == w
        || y + 1 == h
        || !obj.mask.get(x - 1, y)
        || !obj.mask.get(x + 1, y)
        || !obj.mask.get(x, y - 1)
        || !obj.mask.get(x, y + 1)
}

/// Renders one synthesized image per placement of a tuned plan.
pub fn render_plan(b: &BackgroundImage, tuned: &TunedPlacement, mode: BlendMode) -> Result<Vec<SynthesizedImage>> {
    tuned
        .plan
        .placements
        .iter()
        .map(|p| {
            Ok(SynthesizedImage {
                background_id: b.id.clone(),
                object_id: tuned.object.id.clone(),
                interval_index: p.interval.index,
                pixels: composite(b, &tuned.object, p.coordinate, mode)?,
                insertion_rect: tuned.plan.insertion_rect(p),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BackgroundObject, Mask, ObjectClass};
    use image::{Rgba, RgbaImage};

    fn background() -> BackgroundImage {
        let px = RgbImage::from_fn(32, 24, |x, y| Rgb([(x * 2) as u8, (y * 2) as u8, 0]));
        let obj = BackgroundObject {
            class: ObjectClass::new("cat").unwrap(),
            bbox: Rect::new(0, 0, 8, 8).unwrap(),
            area: 64,
        };
        BackgroundImage::new("b", px, vec![obj]).unwrap()
    }

    fn object(mask: Mask) -> ObjectInstance {
        let (w, h) = (mask.width(), mask.height());
        let px = RgbaImage::from_fn(w, h, |x, y| {
            if mask.get(x, y) { Rgba([255, 255, 255, 255]) } else { Rgba([0, 0, 0, 0]) }
        });
        ObjectInstance::new("o", ObjectClass::new("dog").unwrap(), px, mask, Rect::new(0, 0, w, h).unwrap()).unwrap()
    }

    fn diff_count(a: &RgbImage, b: &RgbImage) -> usize {
        a.pixels().zip(b.pixels()).filter(|(p, q)| p != q).count()
    }

    #[test]
    fn transparent_object_leaves_background() {
        let b = background();
        let out = composite(&b, &object(Mask::new(5, 5)), (3, 3), BlendMode::HardPaste).unwrap();
        assert_eq!(out, b.pixels);
    }

    #[test]
    fn opaque_square_replaces_rectangle() {
        let b = background();
        let out = composite(&b, &object(Mask::filled(4, 3)), (10, 5), BlendMode::HardPaste).unwrap();
        for (x, y, p) in out.enumerate_pixels() {
            let inside = (10..14).contains(&x) && (5..8).contains(&y);
            if inside {
                assert_eq!(p.0, [255, 255, 255]);
            } else {
                assert_eq!(p, b.pixels.get_pixel(x, y));
            }
        }
        assert_eq!(diff_count(&out, &b.pixels), 12);
    }

    #[test]
    fn diff_count_equals_mask_cells() {
        let b = background();
        let mut m = Mask::new(6, 6);
        for (x, y) in [(0, 0), (1, 1), (2, 2), (5, 0), (3, 4)] {
            m.set(x, y, true);
        }
        let out = composite(&b, &object(m.clone()), (20, 10), BlendMode::HardPaste).unwrap();
        assert_eq!(diff_count(&out, &b.pixels) as u64, m.count());
    }

    #[test]
    fn feather_only_touches_masked_cells() {
        let b = background();
        let out = composite(&b, &object(Mask::filled(5, 5)), (2, 2), BlendMode::Feather).unwrap();
        assert!(diff_count(&out, &b.pixels) <= 25);
        // interior cell is pasted outright, border cell is mixed
        assert_eq!(out.get_pixel(4, 4).0, [255, 255, 255]);
        assert_ne!(out.get_pixel(2, 2).0, [255, 255, 255]);
    }

    #[test]
    fn out_of_bounds_rejected() {
        let b = background();
        let err = composite(&b, &object(Mask::filled(4, 4)), (30, 0), BlendMode::HardPaste).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds(_)));
        assert!(composite(&b, &object(Mask::filled(4, 4)), (-1, 0), BlendMode::HardPaste).is_err());
    }
}
