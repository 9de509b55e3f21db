//! Overlap intervals, placement rules and the two-step location search.
//!
//! Step 1 draws random sizes and top-left coordinates until one placement
//! lands the largest background object's overlap in the highest interval.
//! Step 2 walks the line from the largest object's centre through that
//! placement, out to the last in-bounds position, and bisects along it for
//! each remaining interval.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::resize::{resize_raster, sample_area, scaled_dims, ResizeParams};
use crate::error::{Error, Result};
use crate::geometry::{
    fraction_to_f64, overlap_fraction, BackgroundImage, Fraction, ObjectInstance, RatioInterval, Rect,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningParams {
    /// Number of intervals, including the zero-overlap one.
    pub n: usize,
    pub ratio_max: Fraction,
    /// Step-1 patience: random (size, coordinate) attempts.
    pub c1: u32,
    /// Step-2 patience: bisection probes per interval.
    pub c2: u32,
    pub rng_seed: u64,
}

impl Default for TuningParams {
    fn default() -> Self {
        Self {
            n: 4,
            ratio_max: Fraction::new(9, 20),
            c1: 50,
            c2: 8,
            rng_seed: 0,
        }
    }
}

impl TuningParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("n must be >= 2, got {}", self.n)));
        }
        if *self.ratio_max.numer() == 0 || self.ratio_max > Fraction::from_integer(1) {
            return Err(Error::InvalidInput(format!("ratio_max must be in (0, 1], got {}", self.ratio_max)));
        }
        if self.c1 == 0 || self.c2 == 0 {
            return Err(Error::InvalidInput("c1 and c2 must be >= 1".into()));
        }
        Ok(())
    }
}

/// `[0]` followed by `(ratio_max·(i−1)/(n−1), ratio_max·i/(n−1)]` for `i = 1..n`.
pub fn compute_intervals(params: &TuningParams) -> Result<Vec<RatioInterval>> {
    params.validate()?;
    let steps = (params.n - 1) as u64;
    let mut out = Vec::with_capacity(params.n);
    out.push(RatioInterval::zero());
    for i in 1..params.n as u64 {
        let lower = params.ratio_max * Ratio::new(i - 1, steps);
        let upper = params.ratio_max * Ratio::new(i, steps);
        out.push(RatioInterval::open_closed(i as usize, lower, upper)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AchievedRatio {
    pub object_index: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleCheck {
    pub r1_ok: bool,
    pub r2_ok: bool,
    /// Exact `O_j` for every background object, in object order.
    pub ratios: Vec<Fraction>,
}

impl RuleCheck {
    pub fn ok(&self) -> bool {
        self.r1_ok && self.r2_ok
    }

    pub fn achieved(&self) -> Vec<AchievedRatio> {
        self.ratios
            .iter()
            .enumerate()
            .map(|(object_index, r)| AchievedRatio {
                object_index,
                ratio: fraction_to_f64(r),
            })
            .collect()
    }
}

/// R1: the largest object's overlap lies in `iv`. R2: every other object's
/// overlap is at most `iv.upper`; for the zero interval all overlaps are zero.
pub fn check_rules(b: &BackgroundImage, placed: &Rect, iv: &RatioInterval) -> RuleCheck {
    let ratios: Vec<Fraction> = b.objects.iter().map(|o| overlap_fraction(&o.bbox, placed)).collect();
    let largest = b.largest_object();
    let r1_ok = largest.is_none_or(|l| iv.contains(&ratios[l]));
    let r2_ok = ratios
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != largest)
        .all(|(_, r)| if iv.degenerate_zero { *r.numer() == 0 } else { *r <= iv.upper });
    RuleCheck { r1_ok, r2_ok, ratios }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub interval: RatioInterval,
    /// Top-left corner of the inserted object.
    pub coordinate: (i64, i64),
    pub achieved_ratios: Vec<AchievedRatio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementPlan {
    /// `(h', w')`
    pub object_new_size: (u32, u32),
    /// One placement per interval, ordered by interval index.
    pub placements: Vec<Placement>,
}

impl PlacementPlan {
    pub fn insertion_rect(&self, placement: &Placement) -> Rect {
        let (h, w) = self.object_new_size;
        Rect {
            x: placement.coordinate.0,
            y: placement.coordinate.1,
            w,
            h,
        }
    }
}

/// A complete plan plus the object raster at the planned size.
#[derive(Debug, Clone)]
pub struct TunedPlacement {
    pub plan: PlacementPlan,
    pub object: ObjectInstance,
}

/// Searches one insertion coordinate per overlap interval.
///
/// Fails with [`Error::Step1Exhausted`] when no random placement satisfies
/// the top interval within `c1` attempts, or [`Error::IntervalUnsatisfiable`]
/// listing the intervals the line search could not serve. Callers respond to
/// either by drawing a new (background, object) pair.
pub fn tune_locations(
    b: &BackgroundImage,
    obj: &ObjectInstance,
    tp: &TuningParams,
    rp: &ResizeParams,
) -> Result<TunedPlacement> {
    rp.validate()?;
    let intervals = compute_intervals(tp)?;
    let largest = b
        .largest_object()
        .ok_or_else(|| Error::NoObjectsInBackground(b.id.clone()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(tp.rng_seed);
    let top = intervals[tp.n - 1];

    // step 1
    let mut found: Option<((u32, u32), Rect, RuleCheck)> = None;
    for _ in 0..tp.c1 {
        let draw = sample_area(b, rp, &mut rng)?;
        let (h, w) = scaled_dims(obj.height(), obj.width(), draw.area);
        if h > b.height() || w > b.width() {
            continue;
        }
        let x = rng.random_range(0..=i64::from(b.width() - w));
        let y = rng.random_range(0..=i64::from(b.height() - h));
        let rect = Rect { x, y, w, h };
        let check = check_rules(b, &rect, &top);
        if check.ok() {
            found = Some(((h, w), rect, check));
            break;
        }
    }
    let ((h, w), start, start_check) = found.ok_or(Error::Step1Exhausted(tp.c1))?;

    let mut placements = vec![Placement {
        interval: top,
        coordinate: (start.x, start.y),
        achieved_ratios: start_check.achieved(),
    }];

    // step 2
    let line = SearchLine::new(b, largest, (w, h), (start.x, start.y));
    let mut failed = Vec::new();
    for iv in intervals[..tp.n - 1].iter().rev() {
        match line.bisect(b, iv, tp.c2) {
            Some((coord, check)) => placements.push(Placement {
                interval: *iv,
                coordinate: coord,
                achieved_ratios: check.achieved(),
            }),
            None => failed.push(iv.index),
        }
    }
    if !failed.is_empty() {
        failed.sort_unstable();
        return Err(Error::IntervalUnsatisfiable(failed));
    }
    placements.sort_by_key(|p| p.interval.index);

    Ok(TunedPlacement {
        plan: PlacementPlan {
            object_new_size: (h, w),
            placements,
        },
        object: resize_raster(obj, h, w)?,
    })
}

/// The ray `origin + t·dir` in top-left coordinate space, `t ∈ [t_start, t_bound]`.
struct SearchLine {
    origin: (f64, f64),
    dir: (f64, f64),
    t_start: f64,
    t_bound: f64,
    size: (u32, u32),
}

impl SearchLine {
    fn new(b: &BackgroundImage, largest: usize, (w, h): (u32, u32), start: (i64, i64)) -> Self {
        let max_x = f64::from(b.width() - w);
        let max_y = f64::from(b.height() - h);
        // centre the inserted box on the largest object's bbox centre
        let (cx, cy) = b.objects[largest].bbox.center();
        let ax = (cx as f64 - f64::from(w / 2)).clamp(0.0, max_x);
        let ay = (cy as f64 - f64::from(h / 2)).clamp(0.0, max_y);
        let (sx, sy) = (start.0 as f64, start.1 as f64);

        let (dir, t_start) = if (sx, sy) == (ax, ay) {
            // start sits on the centre: head for the farther horizontal edge
            let dx = if ax <= max_x / 2.0 { 1.0 } else { -1.0 };
            ((dx, 0.0), 0.0)
        } else {
            ((sx - ax, sy - ay), 1.0)
        };
        let axis_limit = |a: f64, d: f64, max: f64| {
            if d > 0.0 {
                (max - a) / d
            } else if d < 0.0 {
                -a / d
            } else {
                f64::INFINITY
            }
        };
        let t_bound = axis_limit(ax, dir.0, max_x)
            .min(axis_limit(ay, dir.1, max_y))
            .max(t_start);
        Self {
            origin: (ax, ay),
            dir,
            t_start,
            t_bound,
            size: (w, h),
        }
    }

    fn point(&self, t: f64) -> (i64, i64) {
        (
            (self.origin.0 + t * self.dir.0).round() as i64,
            (self.origin.1 + t * self.dir.1).round() as i64,
        )
    }

    /// Bisects between the step-1 point (overlap too high for every lower
    /// interval) and the boundary. Probes that satisfy R1 but not R2 move
    /// outward.
    fn bisect(&self, b: &BackgroundImage, iv: &RatioInterval, max_probes: u32) -> Option<((i64, i64), RuleCheck)> {
        let largest = b.largest_object()?;
        let (mut lo, mut hi) = (self.t_start, self.t_bound);
        for _ in 0..max_probes {
            let mid = 0.5 * (lo + hi);
            let coord = self.point(mid);
            let rect = Rect {
                x: coord.0,
                y: coord.1,
                w: self.size.0,
                h: self.size.1,
            };
            let check = check_rules(b, &rect, iv);
            if check.ok() {
                return Some((coord, check));
            }
            let o = check.ratios[largest];
            let too_far = !iv.degenerate_zero && o <= iv.lower;
            if too_far {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        None
    }
}
