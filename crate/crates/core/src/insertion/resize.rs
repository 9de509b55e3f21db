//! Object resizing relative to the salient objects already in the background.

use image::{Rgba, RgbaImage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BackgroundImage, Mask, ObjectInstance};

/// Multipliers bounding the sampled area: `s ∈ [alpha·S(b), beta·S(b)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResizeParams {
    /// Used when the largest background object covers less than the threshold.
    pub small_objects: ScaleRange,
    /// Used when the largest background object covers at least the threshold.
    pub large_objects: ScaleRange,
    pub largest_object_threshold: f64,
}

impl Default for ResizeParams {
    fn default() -> Self {
        Self {
            small_objects: ScaleRange { alpha: 0.8, beta: 1.3 },
            large_objects: ScaleRange { alpha: 0.1, beta: 0.37 },
            largest_object_threshold: 0.40,
        }
    }
}

impl ResizeParams {
    pub fn validate(&self) -> Result<()> {
        for r in [self.small_objects, self.large_objects] {
            if !(r.alpha > 0.0 && r.alpha < r.beta && r.beta.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "scale range needs 0 < alpha < beta, got ({}, {})",
                    r.alpha, r.beta
                )));
            }
        }
        if !(self.largest_object_threshold > 0.0 && self.largest_object_threshold <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "largest_object_threshold must be in (0, 1], got {}",
                self.largest_object_threshold
            )));
        }
        Ok(())
    }

    /// Picks the scale range from `a_max / s_b`.
    pub fn range_for(&self, b: &BackgroundImage) -> Result<ScaleRange> {
        let largest = b
            .largest_object()
            .ok_or_else(|| Error::NoObjectsInBackground(b.id.clone()))?;
        let share = b.objects[largest].area as f64 / b.image_area() as f64;
        Ok(if share < self.largest_object_threshold {
            self.small_objects
        } else {
            self.large_objects
        })
    }
}

/// Softmax-weighted mean of the background object areas,
/// `Σ softmax(a_i / s_b)_i · a_i`.
pub fn background_size_score(b: &BackgroundImage) -> Result<f64> {
    if b.objects.is_empty() {
        return Err(Error::NoObjectsInBackground(b.id.clone()));
    }
    let areas: Vec<f64> = b.objects.iter().map(|o| o.area as f64).collect();
    Ok(softmax_weighted_area(&areas, b.image_area() as f64))
}

pub(crate) fn softmax_weighted_area(areas: &[f64], image_area: f64) -> f64 {
    let xs: Vec<f64> = areas.iter().map(|a| a / image_area).collect();
    let peak = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - peak).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().zip(areas).map(|(e, a)| e / z * a).sum()
}

/// A sampled target area together with the quantities that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaDraw {
    pub area: f64,
    pub score: f64,
    pub range: ScaleRange,
}

pub fn sample_area<R: Rng>(b: &BackgroundImage, params: &ResizeParams, rng: &mut R) -> Result<AreaDraw> {
    let range = params.range_for(b)?;
    let score = background_size_score(b)?;
    let area = rng.random_range(range.alpha * score..=range.beta * score);
    Ok(AreaDraw { area, score, range })
}

/// `(h', w') = (h·√(s/(h·w)), w·√(s/(h·w)))`, rounded to whole pixels (min 1).
pub fn scaled_dims(h: u32, w: u32, area: f64) -> (u32, u32) {
    let k = (area / (f64::from(h) * f64::from(w))).sqrt();
    let h2 = (f64::from(h) * k).round().max(1.0) as u32;
    let w2 = (f64::from(w) * k).round().max(1.0) as u32;
    (h2, w2)
}

/// Nearest-neighbour resample of pixels and mask with a shared index map.
pub fn resize_raster(obj: &ObjectInstance, new_h: u32, new_w: u32) -> Result<ObjectInstance> {
    let (w, h) = (obj.width(), obj.height());
    let src_x: Vec<u32> = (0..new_w)
        .map(|dx| (((f64::from(dx) + 0.5) * f64::from(w) / f64::from(new_w)) as u32).min(w - 1))
        .collect();
    let src_y: Vec<u32> = (0..new_h)
        .map(|dy| (((f64::from(dy) + 0.5) * f64::from(h) / f64::from(new_h)) as u32).min(h - 1))
        .collect();
    let mut pixels = RgbaImage::new(new_w, new_h);
    let mut mask = Mask::new(new_w, new_h);
    for dy in 0..new_h {
        for dx in 0..new_w {
            let (sx, sy) = (src_x[dx as usize], src_y[dy as usize]);
            let on = obj.mask.get(sx, sy);
            mask.set(dx, dy, on);
            let p = obj.pixels.get_pixel(sx, sy);
            pixels.put_pixel(dx, dy, if on { *p } else { Rgba([0, 0, 0, 0]) });
        }
    }
    ObjectInstance::new(obj.id.clone(), obj.class.clone(), pixels, mask, obj.bbox_in_source)
}

#[derive(Debug, Clone)]
pub struct ResizedObject {
    pub height: u32,
    pub width: u32,
    pub sampled_area: f64,
    pub object: ObjectInstance,
}

/// Draws a target area from `[alpha·S(b), beta·S(b)]` and rescales `obj` to it,
/// preserving aspect ratio.
pub fn resize_object(obj: &ObjectInstance, b: &BackgroundImage, params: &ResizeParams, rng_seed: u64) -> Result<ResizedObject> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let draw = sample_area(b, params, &mut rng)?;
    let (h2, w2) = scaled_dims(obj.height(), obj.width(), draw.area);
    if h2 > b.height() || w2 > b.width() {
        return Err(Error::ObjectLargerThanBackground {
            w: w2,
            h: h2,
            bg_w: b.width(),
            bg_h: b.height(),
        });
    }
    Ok(ResizedObject {
        height: h2,
        width: w2,
        sampled_area: draw.area,
        object: resize_raster(obj, h2, w2)?,
    })
}
