//! Label-preserving pixel transforms for the same-caption baseline.

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "magnitude", rename_all = "snake_case")]
pub enum BaselineTransform {
    /// Box filter of odd side 3, 5 or 7; edges replicated.
    Blur(u32),
    /// Added to every channel, in [-64, 64].
    Brightness(i32),
    /// Scale about mid-grey 128, in [0.5, 1.5].
    Contrast(f64),
    /// Horizontal shear about the centre row, in [-0.2, 0.2]; edges replicated.
    Shear(f64),
}

impl BaselineTransform {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Blur(_) => "blur",
            Self::Brightness(_) => "brightness",
            Self::Contrast(_) => "contrast",
            Self::Shear(_) => "shear",
        }
    }

    /// Parses a kind name and magnitude as given on the command line.
    pub fn from_kind(kind: &str, magnitude: f64) -> Result<Self> {
        let t = match kind {
            "blur" => {
                if magnitude.fract() != 0.0 {
                    return Err(bad("blur", magnitude, "3, 5 or 7"));
                }
                Self::Blur(magnitude as u32)
            }
            "brightness" => {
                if magnitude.fract() != 0.0 {
                    return Err(bad("brightness", magnitude, "integer in [-64, 64]"));
                }
                Self::Brightness(magnitude as i32)
            }
            "contrast" => Self::Contrast(magnitude),
            "shear" => Self::Shear(magnitude),
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown transform {other}; expected blur, brightness, contrast or shear"
                )))
            }
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Blur(k) if !matches!(k, 3 | 5 | 7) => Err(bad("blur", k as f64, "3, 5 or 7")),
            Self::Brightness(d) if !(-64..=64).contains(&d) => Err(bad("brightness", d as f64, "integer in [-64, 64]")),
            Self::Contrast(f) if !(0.5..=1.5).contains(&f) => Err(bad("contrast", f, "[0.5, 1.5]")),
            Self::Shear(f) if !(-0.2..=0.2).contains(&f) => Err(bad("shear", f, "[-0.2, 0.2]")),
            _ => Ok(()),
        }
    }

    /// File-name suffix such as `blur5` or `shear-0.1`.
    pub fn tag(&self) -> String {
        match *self {
            Self::Blur(k) => format!("blur{k}"),
            Self::Brightness(d) => format!("brightness{d}"),
            Self::Contrast(f) => format!("contrast{f}"),
            Self::Shear(f) => format!("shear{f}"),
        }
    }
}

fn bad(kind: &'static str, magnitude: f64, range: &'static str) -> Error {
    Error::BadMagnitude { kind, magnitude, range }
}

fn map_channels(img: &RgbImage, f: impl Fn(u8) -> u8) -> RgbImage {
    let mut out = img.clone();
    for p in out.pixels_mut() {
        p.0 = p.0.map(&f);
    }
    out
}

fn box_blur(img: &RgbImage, k: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    let r = (k / 2) as i64;
    let n = k * k;
    RgbImage::from_fn(w, h, |x, y| {
        let mut sum = [0u32; 3];
        for dy in -r..=r {
            let sy = (y as i64 + dy).clamp(0, h as i64 - 1) as u32;
            for dx in -r..=r {
                let sx = (x as i64 + dx).clamp(0, w as i64 - 1) as u32;
                let p = img.get_pixel(sx, sy).0;
                for c in 0..3 {
                    sum[c] += p[c] as u32;
                }
            }
        }
        Rgb(sum.map(|s| ((s + n / 2) / n) as u8))
    })
}

fn shear(img: &RgbImage, factor: f64) -> RgbImage {
    let (w, h) = img.dimensions();
    let centre = (h as f64 - 1.0) / 2.0;
    RgbImage::from_fn(w, h, |x, y| {
        let sx = (x as f64 + factor * (y as f64 - centre)).round();
        let sx = sx.clamp(0.0, w as f64 - 1.0) as u32;
        *img.get_pixel(sx, y)
    })
}

/// Applies `t`; output has the input's dimensions.
pub fn baseline_transform(img: &RgbImage, t: BaselineTransform) -> Result<RgbImage> {
    t.validate()?;
    Ok(match t {
        BaselineTransform::Blur(k) => box_blur(img, k),
        BaselineTransform::Brightness(d) => map_channels(img, |v| (v as i32 + d).clamp(0, 255) as u8),
        BaselineTransform::Contrast(f) => {
            map_channels(img, |v| ((v as f64 - 128.0) * f + 128.0).round().clamp(0.0, 255.0) as u8)
        }
        BaselineTransform::Shear(f) => shear(img, f),
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn noise(w: u32, h: u32, seed: u64) -> RgbImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RgbImage::from_fn(w, h, |_, _| Rgb([rng.random(), rng.random(), rng.random()]))
    }

    #[test]
    fn neutral_magnitudes_are_identity() {
        let img = noise(17, 11, 1);
        assert_eq!(baseline_transform(&img, BaselineTransform::Brightness(0)).unwrap(), img);
        assert_eq!(baseline_transform(&img, BaselineTransform::Contrast(1.0)).unwrap(), img);
        assert_eq!(baseline_transform(&img, BaselineTransform::Shear(0.0)).unwrap(), img);
    }

    #[test]
    fn blur_twice_differs_from_once() {
        let img = noise(16, 16, 2);
        let once = baseline_transform(&img, BaselineTransform::Blur(3)).unwrap();
        let twice = baseline_transform(&once, BaselineTransform::Blur(3)).unwrap();
        assert_ne!(once, twice);
    }

    #[test]
    fn blur_of_flat_image_is_flat() {
        let img = RgbImage::from_pixel(9, 5, Rgb([10, 20, 30]));
        assert_eq!(baseline_transform(&img, BaselineTransform::Blur(7)).unwrap(), img);
    }

    #[test]
    fn shear_keeps_dimensions_and_centre_row() {
        let img = noise(20, 9, 3);
        let out = baseline_transform(&img, BaselineTransform::Shear(0.2)).unwrap();
        assert_eq!(out.dimensions(), img.dimensions());
        for x in 0..20 {
            assert_eq!(out.get_pixel(x, 4), img.get_pixel(x, 4));
        }
        assert_eq!(out.get_pixel(19, 8), img.get_pixel(19, 8));
    }

    #[test]
    fn brightness_saturates() {
        let img = RgbImage::from_pixel(2, 2, Rgb([250, 3, 128]));
        let out = baseline_transform(&img, BaselineTransform::Brightness(10)).unwrap();
        assert_eq!(out.get_pixel(0, 0).0, [255, 13, 138]);
        let out = baseline_transform(&img, BaselineTransform::Brightness(-10)).unwrap();
        assert_eq!(out.get_pixel(0, 0).0, [240, 0, 118]);
    }

    #[test]
    fn out_of_range_magnitudes_rejected() {
        let img = noise(4, 4, 4);
        for t in [
            BaselineTransform::Blur(4),
            BaselineTransform::Brightness(65),
            BaselineTransform::Contrast(1.6),
            BaselineTransform::Shear(-0.3),
        ] {
            assert!(matches!(baseline_transform(&img, t), Err(Error::BadMagnitude { .. })), "{t:?}");
        }
        assert!(matches!(BaselineTransform::from_kind("blur", 3.5), Err(Error::BadMagnitude { .. })));
        assert!(matches!(BaselineTransform::from_kind("zoom", 1.0), Err(Error::InvalidInput(_))));
        assert_eq!(BaselineTransform::from_kind("contrast", 0.5).unwrap(), BaselineTransform::Contrast(0.5));
    }
}
