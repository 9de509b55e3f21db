//! COCO-style instance annotations and mask decoding.

use serde::{Deserialize, Serialize};

use crate::geometry::Mask;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
pub struct CocoDataset {
    #[serde(default)]
    pub images: Vec<CocoImage>,
    #[serde(default)]
    pub annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    pub categories: Vec<CocoCategory>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub segmentation: Segmentation,
    #[serde(default)]
    pub area: f64,
    pub bbox: [f64; 4],
    #[serde(default)]
    pub iscrowd: u8,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
    #[serde(default)]
    pub supercategory: Option<String>,
}

/// Polygon list or run-length encoding, as found in COCO `segmentation`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Segmentation {
    Polygons(Vec<Vec<f64>>),
    Rle(Rle),
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct Rle {
    /// `[height, width]`
    pub size: [u32; 2],
    pub counts: RleCounts,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum RleCounts {
    Raw(Vec<u32>),
    Compressed(String),
}

impl Segmentation {
    /// Rasterizes into a `width x height` row-major mask.
    pub fn to_mask(&self, width: u32, height: u32) -> Mask {
        match self {
            Segmentation::Polygons(polys) => rasterize_polygons(polys, width, height),
            Segmentation::Rle(rle) => decode_rle(rle, width, height),
        }
    }

    pub fn is_rle(&self) -> bool {
        matches!(self, Segmentation::Rle(_))
    }
}

/// Even-odd fill sampled at pixel centres `(x + 0.5, y + 0.5)`.
///
/// All rings of the instance contribute to the same parity count, so holes
/// expressed as inner rings are respected.
pub fn rasterize_polygons(polys: &[Vec<f64>], width: u32, height: u32) -> Mask {
    let mut mask = Mask::new(width, height);
    let rings: Vec<Vec<(f64, f64)>> = polys
        .iter()
        .filter(|p| p.len() >= 6)
        .map(|p| p.chunks_exact(2).map(|c| (c[0], c[1])).collect())
        .collect();
    if rings.is_empty() {
        return mask;
    }
    let mut crossings: Vec<f64> = Vec::new();
    for y in 0..height {
        let cy = f64::from(y) + 0.5;
        crossings.clear();
        for ring in &rings {
            let n = ring.len();
            for i in 0..n {
                let (x0, y0) = ring[i];
                let (x1, y1) = ring[(i + 1) % n];
                // half-open rule on y avoids double counting shared vertices
                if (y0 <= cy && cy < y1) || (y1 <= cy && cy < y0) {
                    crossings.push(x0 + (cy - y0) * (x1 - x0) / (y1 - y0));
                }
            }
        }
        crossings.sort_by(f64::total_cmp);
        for span in crossings.chunks_exact(2) {
            // pixel x is inside when span[0] <= x + 0.5 < span[1]
            let start = (span[0] - 0.5).ceil().max(0.0);
            let end = (span[1] - 0.5).ceil().min(f64::from(width));
            let mut x = start;
            while x < end {
                mask.set(x as u32, y, true);
                x += 1.0;
            }
        }
    }
    mask
}

/// Decodes the LEB128-like string form used by the COCO API.
pub fn decompress_counts(s: &str) -> Vec<u32> {
    let bytes = s.as_bytes();
    let mut counts: Vec<u32> = Vec::new();
    let mut p = 0usize;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0u32;
        loop {
            let c = i64::from(bytes[p]) - 48;
            x |= (c & 0x1f) << (5 * k);
            let more = c & 0x20 != 0;
            p += 1;
            k += 1;
            if !more {
                if c & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
            if p >= bytes.len() {
                break;
            }
        }
        if counts.len() > 2 {
            x += i64::from(counts[counts.len() - 2]);
        }
        counts.push(x.max(0) as u32);
    }
    counts
}

/// Encodes counts in the COCO string form; inverse of [`decompress_counts`].
pub fn compress_counts(counts: &[u32]) -> String {
    let mut out = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let mut x = i64::from(c);
        if i > 2 {
            x -= i64::from(counts[i - 2]);
        }
        loop {
            let mut c = x & 0x1f;
            x >>= 5;
            let more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                c |= 0x20;
            }
            out.push((c as u8 + 48) as char);
            if !more {
                break;
            }
        }
    }
    out
}

/// Decodes a column-major RLE into a row-major mask of the requested size.
pub fn decode_rle(rle: &Rle, width: u32, height: u32) -> Mask {
    let counts = match &rle.counts {
        RleCounts::Raw(c) => c.clone(),
        RleCounts::Compressed(s) => decompress_counts(s),
    };
    let [rh, rw] = rle.size;
    let total = rh as usize * rw as usize;
    let mut mask = Mask::new(width, height);
    let mut idx = 0usize;
    let mut value = false;
    for c in counts {
        let end = (idx + c as usize).min(total);
        if value {
            for flat in idx..end {
                let x = (flat / rh as usize) as u32;
                let y = (flat % rh as usize) as u32;
                if x < width && y < height {
                    mask.set(x, y, true);
                }
            }
        }
        idx = end;
        value = !value;
    }
    mask
}

/// Column-major run lengths of a row-major mask.
pub fn encode_rle(mask: &Mask) -> Rle {
    let (w, h) = (mask.width(), mask.height());
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for x in 0..w {
        for y in 0..h {
            let v = mask.get(x, y);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    Rle {
        size: [h, w],
        counts: RleCounts::Raw(counts),
    }
}
