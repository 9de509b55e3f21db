//! Object pool and background corpus built from COCO-style segmentation
//! annotations.
//!
//! Layout written by [`build_pool`]:
//!
//! ```text
//! <pool>/<class>/<id>.png    RGBA crop, alpha = mask
//! <pool>/<class>/<id>.json   sidecar {"id","class","area","source_image","bbox"}
//! <pool>/manifest.json
//! ```

pub mod coco;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgba, RgbaImage};
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BackgroundImage, BackgroundObject, ObjectClass, ObjectInstance, Provenance, Rect};
use crate::io::{read_json, write_json_pretty};

pub use coco::{CocoDataset, Segmentation};

/// Which classes survive ingestion. Multi-word names never do.
#[derive(Debug, Clone, Default)]
pub enum ClassFilter {
    #[default]
    AllSingleWord,
    Only(BTreeSet<String>),
}

impl ClassFilter {
    pub fn only<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        ClassFilter::Only(names.into_iter().map(|s| s.as_ref().trim().to_lowercase()).collect())
    }

    fn admits(&self, name: &str) -> bool {
        match self {
            ClassFilter::AllSingleWord => true,
            ClassFilter::Only(set) => set.contains(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedInstance {
    pub annotation_id: u64,
    pub class: ObjectClass,
    pub segmentation: Segmentation,
    pub bbox: Rect,
    pub area: u64,
}

/// All retained instances of one source image.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub image_path: PathBuf,
    pub width: u32,
    pub height: u32,
    pub instances: Vec<AnnotatedInstance>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default)]
pub struct Ingestion {
    pub records: Vec<AnnotationRecord>,
    /// Annotations dropped because their class name has more than one word.
    pub dropped_multi_word: usize,
    /// Annotations dropped by the class filter.
    pub dropped_filtered: usize,
}

impl Ingestion {
    pub fn instance_count(&self) -> usize {
        self.records.iter().map(|r| r.instances.len()).sum()
    }
}

/// Reads a COCO annotation file, keeping single-word classes admitted by
/// `filter`. Records come back ordered by image id.
pub fn ingest_annotations(annotation_file: &Path, image_dir: &Path, filter: &ClassFilter) -> Result<Ingestion> {
    let dataset: CocoDataset = read_json(annotation_file)?;
    ingest_dataset(&dataset, image_dir, filter)
}

pub fn ingest_dataset(dataset: &CocoDataset, image_dir: &Path, filter: &ClassFilter) -> Result<Ingestion> {
    let categories: HashMap<u64, &coco::CocoCategory> = dataset.categories.iter().map(|c| (c.id, c)).collect();
    let images: HashMap<u64, &coco::CocoImage> = dataset.images.iter().map(|i| (i.id, i)).collect();

    let mut out = Ingestion::default();
    let mut grouped: BTreeMap<u64, Vec<AnnotatedInstance>> = BTreeMap::new();
    for ann in &dataset.annotations {
        let cat = categories.get(&ann.category_id).ok_or_else(|| Error::Parse {
            path: image_dir.to_path_buf(),
            message: format!("annotation {} references unknown category {}", ann.id, ann.category_id),
        })?;
        let name = cat.name.trim().to_lowercase();
        if name.split_whitespace().count() != 1 {
            out.dropped_multi_word += 1;
            continue;
        }
        if !filter.admits(&name) {
            out.dropped_filtered += 1;
            continue;
        }
        let image = images.get(&ann.image_id).ok_or_else(|| Error::Parse {
            path: image_dir.to_path_buf(),
            message: format!("annotation {} references unknown image {}", ann.id, ann.image_id),
        })?;
        let class = ObjectClass::with_super_category(&name, cat.supercategory.as_deref())?;
        grouped.entry(ann.image_id).or_default().push(AnnotatedInstance {
            annotation_id: ann.id,
            class,
            segmentation: ann.segmentation.clone(),
            bbox: bbox_to_rect(ann.bbox, image.width, image.height)?,
            area: ann.area.round().max(0.0) as u64,
        });
    }
    if out.dropped_multi_word > 0 {
        warn!("dropped {} annotation(s) with multi-word class names", out.dropped_multi_word);
    }

    for (image_id, mut instances) in grouped {
        let image = images[&image_id];
        let image_path = image_dir.join(&image.file_name);
        if !image_path.is_file() {
            return Err(Error::MissingImage(image_path));
        }
        instances.sort_by_key(|i| i.annotation_id);
        out.records.push(AnnotationRecord {
            image_id: image_id.to_string(),
            image_path,
            width: image.width,
            height: image.height,
            instances,
            provenance: Provenance::GroundTruth,
        });
    }
    Ok(out)
}

/// Integer rect covering a float COCO `[x, y, w, h]` box, clamped to the image.
pub fn bbox_to_rect(bbox: [f64; 4], width: u32, height: u32) -> Result<Rect> {
    let [x, y, w, h] = bbox;
    let x0 = x.floor().clamp(0.0, f64::from(width)) as i64;
    let y0 = y.floor().clamp(0.0, f64::from(height)) as i64;
    let x1 = (x + w).ceil().clamp(0.0, f64::from(width)) as i64;
    let y1 = (y + h).ceil().clamp(0.0, f64::from(height)) as i64;
    if x1 <= x0 || y1 <= y0 {
        return Err(Error::InvalidInput(format!("degenerate bbox {bbox:?}")));
    }
    Rect::new(x0, y0, (x1 - x0) as u32, (y1 - y0) as u32)
}

pub fn object_id(record: &AnnotationRecord, instance: &AnnotatedInstance) -> String {
    format!("{}_{}", record.image_id, instance.annotation_id)
}

/// Loads the record's source image and cuts out one instance.
pub fn extract_object(record: &AnnotationRecord, instance_index: usize) -> Result<ObjectInstance> {
    let source = load_rgb(&record.image_path)?;
    extract_object_from(&source, record, instance_index)
}

/// Cuts one instance out of an already-loaded source image. The crop spans the
/// annotation bbox; cells outside the mask are fully transparent.
pub fn extract_object_from(source: &image::RgbImage, record: &AnnotationRecord, instance_index: usize) -> Result<ObjectInstance> {
    let inst = record.instances.get(instance_index).ok_or_else(|| {
        Error::InvalidInput(format!(
            "instance index {instance_index} out of range for image {} ({} instances)",
            record.image_id,
            record.instances.len()
        ))
    })?;
    let id = object_id(record, inst);
    let full = inst.segmentation.to_mask(record.width, record.height);
    let extent = full.extent().ok_or_else(|| Error::MaskEmpty(id.clone()))?;
    let b = inst.bbox;
    let edge_gap = [
        (extent.x - b.x).abs(),
        (extent.y - b.y).abs(),
        (extent.right() - b.right()).abs(),
        (extent.bottom() - b.bottom()).abs(),
    ];
    if edge_gap.iter().any(|&d| d > 1) {
        return Err(Error::BBoxMismatch {
            id,
            bbox: b.to_xywh(),
            extent: extent.to_xywh(),
        });
    }

    let mask = full.crop(&b);
    let mut pixels = RgbaImage::new(b.w, b.h);
    for (dx, dy, px) in pixels.enumerate_pixels_mut() {
        if mask.get(dx, dy) {
            let sx = (b.x + i64::from(dx)) as u32;
            let sy = (b.y + i64::from(dy)) as u32;
            if sx < source.width() && sy < source.height() {
                let [r, g, bl] = source.get_pixel(sx, sy).0;
                *px = Rgba([r, g, bl, 255]);
                continue;
            }
        }
        *px = Rgba([0, 0, 0, 0]);
    }
    let obj = ObjectInstance::new(id.clone(), inst.class.clone(), pixels, mask, b)?;
    if obj.area == 0 {
        return Err(Error::MaskEmpty(id));
    }
    Ok(obj)
}

/// Per-instance sidecar written next to each crop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub id: String,
    pub class: String,
    pub area: u64,
    pub source_image: String,
    pub bbox: [i64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: String,
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub super_category: Option<String>,
    /// Crop path relative to the pool root.
    pub path: String,
    pub area: u64,
    pub source_image: String,
    pub bbox: [i64; 4],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolManifest {
    pub entries: Vec<PoolEntry>,
    pub class_index: BTreeMap<String, Vec<String>>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl PoolManifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn load(pool_dir: &Path) -> Result<Self> {
        let mut manifest: PoolManifest = read_json(&pool_dir.join(Self::FILE_NAME))?;
        manifest.root = pool_dir.to_path_buf();
        let mut seen = BTreeSet::new();
        for e in &manifest.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate pool id {}", e.id)));
            }
            let p = manifest.root.join(&e.path);
            if !p.is_file() {
                return Err(Error::MissingImage(p));
            }
        }
        Ok(manifest)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load_object(&self, entry: &PoolEntry) -> Result<ObjectInstance> {
        let pixels = image::open(self.root.join(&entry.path))?.to_rgba8();
        let class = ObjectClass::with_super_category(&entry.class, entry.super_category.as_deref())?;
        let [x, y, w, h] = entry.bbox;
        let bbox = Rect::new(x, y, w as u32, h as u32)?;
        ObjectInstance::from_rgba(entry.id.clone(), class, pixels, bbox)
    }
}

#[derive(Debug, Clone, Default)]
pub struct PoolBuild {
    pub manifest: PoolManifest,
    /// Instances skipped because their mask was empty or inconsistent.
    pub skipped: Vec<String>,
}

/// Writes one RGBA crop and sidecar per instance plus the manifest. File names
/// derive from ids only, so rebuilding from the same input reproduces the
/// same bytes.
pub fn build_pool(records: &[AnnotationRecord], out_dir: &Path) -> Result<PoolBuild> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for record in records {
        if record.instances.is_empty() {
            continue;
        }
        let source = load_rgb(&record.image_path)?;
        for (idx, inst) in record.instances.iter().enumerate() {
            let obj = match extract_object_from(&source, record, idx) {
                Ok(o) => o,
                Err(e @ (Error::MaskEmpty(_) | Error::BBoxMismatch { .. })) => {
                    warn!("skipping instance: {e}");
                    skipped.push(object_id(record, inst));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let class_dir = out_dir.join(&obj.class.name);
            fs::create_dir_all(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
            let rel = format!("{}/{}.png", obj.class.name, obj.id);
            obj.pixels.save(out_dir.join(&rel))?;
            let sidecar = Sidecar {
                id: obj.id.clone(),
                class: obj.class.name.clone(),
                area: obj.area,
                source_image: record.image_id.clone(),
                bbox: obj.bbox_in_source.to_xywh(),
            };
            write_json_pretty(&class_dir.join(format!("{}.json", obj.id)), &sidecar)?;
            entries.push(PoolEntry {
                id: obj.id,
                class: obj.class.name,
                super_category: obj.class.super_category,
                path: rel,
                area: obj.area,
                source_image: record.image_id.clone(),
                bbox: sidecar.bbox,
            });
        }
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let mut class_index: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for e in &entries {
        class_index.entry(e.class.clone()).or_default().push(e.id.clone());
    }
    let manifest = PoolManifest {
        entries,
        class_index,
        root: out_dir.to_path_buf(),
    };
    write_json_pretty(&out_dir.join(PoolManifest::FILE_NAME), &manifest)?;
    Ok(PoolBuild { manifest, skipped })
}

/// On-disk descriptor of a background image and its object boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundEntry {
    pub id: String,
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
    pub objects: Vec<BackgroundObject>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl BackgroundEntry {
    pub fn from_record(record: &AnnotationRecord) -> Self {
        Self {
            id: record.image_id.clone(),
            path: record.image_path.clone(),
            width: record.width,
            height: record.height,
            objects: record
                .instances
                .iter()
                .map(|i| BackgroundObject {
                    class: i.class.clone(),
                    bbox: i.bbox,
                    area: i.area.max(1),
                })
                .collect(),
            provenance: record.provenance,
        }
    }

    pub fn load(&self) -> Result<BackgroundImage> {
        let pixels = load_rgb(&self.path)?;
        if pixels.dimensions() != (self.width, self.height) {
            return Err(Error::InvalidInput(format!(
                "background {} is {:?} on disk but annotated as {}x{}",
                self.id,
                pixels.dimensions(),
                self.width,
                self.height
            )));
        }
        let mut bg = BackgroundImage::new(self.id.clone(), pixels, self.objects.clone())?;
        bg.provenance = self.provenance;
        Ok(bg)
    }
}

pub const BACKGROUNDS_FILE: &str = "backgrounds.json";

/// Background descriptors for every record that kept at least one object.
pub fn background_index(records: &[AnnotationRecord]) -> Vec<BackgroundEntry> {
    records
        .iter()
        .filter(|r| !r.instances.is_empty())
        .map(BackgroundEntry::from_record)
        .collect()
}

pub fn write_backgrounds(path: &Path, entries: &[BackgroundEntry]) -> Result<()> {
    write_json_pretty(path, &entries)
}

pub fn load_backgrounds(path: &Path) -> Result<Vec<BackgroundEntry>> {
    read_json(path)
}

/// Picks `(background index, object index)` uniformly, driven only by `seed`.
pub fn sample_indices(backgrounds: usize, objects: usize, seed: u64) -> Result<(usize, usize)> {
    if objects == 0 {
        return Err(Error::EmptyPool);
    }
    if backgrounds == 0 {
        return Err(Error::EmptyBackgrounds);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = rng.random_range(0..backgrounds);
    let o = rng.random_range(0..objects);
    Ok((b, o))
}

pub fn sample_pair<'a>(
    pool: &'a PoolManifest,
    backgrounds: &'a [BackgroundEntry],
    seed: u64,
) -> Result<(&'a BackgroundEntry, &'a PoolEntry)> {
    let (b, o) = sample_indices(backgrounds.len(), pool.entries.len(), seed)?;
    Ok((&backgrounds[b], &pool.entries[o]))
}

pub(crate) fn load_rgb(path: &Path) -> Result<image::RgbImage> {
    if !path.is_file() {
        return Err(Error::MissingImage(path.to_path_buf()));
    }
    Ok(image::open(path)?.to_rgb8())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::coco::{CocoAnnotation, CocoCategory, CocoImage, Rle, RleCounts};
    use image::{Rgb, RgbImage};

    fn category(id: u64, name: &str) -> CocoCategory {
        CocoCategory {
            id,
            name: name.into(),
            supercategory: Some("animal".into()),
        }
    }

    fn square(id: u64, image_id: u64, category_id: u64, x: f64, y: f64, s: f64) -> CocoAnnotation {
        CocoAnnotation {
            id,
            image_id,
            category_id,
            segmentation: Segmentation::Polygons(vec![vec![x, y, x + s, y, x + s, y + s, x, y + s]]),
            area: s * s,
            bbox: [x, y, s, s],
            iscrowd: 0,
        }
    }

    fn write_image(dir: &Path, name: &str, w: u32, h: u32) {
        let img = RgbImage::from_fn(w, h, |x, y| Rgb([(x * 7 % 256) as u8, (y * 3 % 256) as u8, 90]));
        img.save(dir.join(name)).unwrap();
    }

    fn dataset() -> CocoDataset {
        CocoDataset {
            images: vec![
                CocoImage { id: 1, file_name: "1.png".into(), width: 64, height: 48 },
                CocoImage { id: 2, file_name: "2.png".into(), width: 64, height: 48 },
            ],
            annotations: vec![
                square(10, 1, 1, 2.0, 2.0, 10.0),
                square(11, 1, 2, 20.0, 20.0, 8.0),
                square(12, 2, 1, 5.0, 5.0, 12.0),
                square(13, 1, 1, 30.0, 5.0, 6.0),
            ],
            categories: vec![category(1, "dog"), category(2, "hot dog")],
        }
    }

    #[test]
    fn multi_word_classes_are_dropped() {
        let dir = tempfile::tempdir().unwrap();
        write_image(dir.path(), "1.png", 64, 48);
        write_image(dir.path(), "2.png", 64, 48);
        let ing = ingest_dataset(&dataset(), dir.path(), &ClassFilter::AllSingleWord).unwrap();
        assert_eq!(ing.dropped_multi_word, 1);
        assert!(ing.records.iter().flat_map(|r| &r.instances).all(|i| i.class.name == "dog"));
        // three dog instances grouped under two image ids
        assert_eq!(ing.records.len(), 2);
        assert_eq!(ing.instance_count(), 3);
        assert_eq!(ing.records[0].image_id, "1");
        assert_eq!(ing.records[0].instances.len(), 2);
    }

    #[test]
    fn empty_annotations_give_empty_result() {
        let ds = CocoDataset::default();
        let ing = ingest_dataset(&ds, Path::new("."), &ClassFilter::AllSingleWord).unwrap();
        assert!(ing.records.is_empty());
    }

    #[test]
    fn missing_image_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_image(dir.path(), "1.png", 64, 48);
        let err = ingest_dataset(&dataset(), dir.path(), &ClassFilter::AllSingleWord).unwrap_err();
        assert!(matches!(err, Error::MissingImage(p) if p.ends_with("2.png")));
    }

    #[test]
    fn malformed_json_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("bad.json");
        fs::write(&f, "{ not json").unwrap();
        let err = ingest_annotations(&f, dir.path(), &ClassFilter::AllSingleWord).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn class_filter_restricts() {
        let dir = tempfile::tempdir().unwrap();
        write_image(dir.path(), "1.png", 64, 48);
        write_image(dir.path(), "2.png", 64, 48);
        let ing = ingest_dataset(&dataset(), dir.path(), &ClassFilter::only(["cat"])).unwrap();
        assert!(ing.records.is_empty());
        assert_eq!(ing.dropped_filtered, 3);
    }

    fn record_with(seg: Segmentation, bbox: Rect, w: u32, h: u32) -> AnnotationRecord {
        AnnotationRecord {
            image_id: "7".into(),
            image_path: PathBuf::from("unused.png"),
            width: w,
            height: h,
            instances: vec![AnnotatedInstance {
                annotation_id: 3,
                class: ObjectClass::new("dog").unwrap(),
                segmentation: seg,
                bbox,
                area: 0,
            }],
            provenance: Provenance::GroundTruth,
        }
    }

    #[test]
    fn full_rectangle_mask_is_opaque() {
        let src = RgbImage::from_pixel(20, 20, Rgb([10, 20, 30]));
        let rec = record_with(
            Segmentation::Polygons(vec![vec![4.0, 4.0, 14.0, 4.0, 14.0, 12.0, 4.0, 12.0]]),
            Rect::new(4, 4, 10, 8).unwrap(),
            20,
            20,
        );
        let obj = extract_object_from(&src, &rec, 0).unwrap();
        assert_eq!(obj.area, 80);
        assert!(obj.pixels.pixels().all(|p| p.0 == [10, 20, 30, 255]));
        assert_eq!(obj.id, "7_3");
    }

    #[test]
    fn l_shaped_mask_has_transparent_corner() {
        let src = RgbImage::from_pixel(10, 10, Rgb([200, 0, 0]));
        // L: full left column strip plus bottom strip of a 6x6 box
        let poly = vec![0.0, 0.0, 2.0, 0.0, 2.0, 4.0, 6.0, 4.0, 6.0, 6.0, 0.0, 6.0];
        let rec = record_with(Segmentation::Polygons(vec![poly]), Rect::new(0, 0, 6, 6).unwrap(), 10, 10);
        let obj = extract_object_from(&src, &rec, 0).unwrap();
        assert_eq!(obj.pixels.get_pixel(5, 0).0[3], 0);
        assert_eq!(obj.pixels.get_pixel(0, 0).0[3], 255);
        assert_eq!(obj.area, 2 * 6 + 4 * 2);
    }

    #[test]
    fn rle_area_is_exact() {
        // 30x30 box whose mask is the first 500 column-major cells
        let w = 40;
        let h = 30;
        let rle = Rle {
            size: [h, w],
            counts: RleCounts::Raw(vec![0, 500, w * h - 500]),
        };
        let rec = record_with(Segmentation::Rle(rle), Rect::new(0, 0, 17, 30).unwrap(), w, h);
        let src = RgbImage::new(w, h);
        let obj = extract_object_from(&src, &rec, 0).unwrap();
        assert_eq!(obj.area, 500);
    }

    #[test]
    fn empty_mask_rejected() {
        let rec = record_with(Segmentation::Polygons(vec![]), Rect::new(0, 0, 4, 4).unwrap(), 10, 10);
        let err = extract_object_from(&RgbImage::new(10, 10), &rec, 0).unwrap_err();
        assert!(matches!(err, Error::MaskEmpty(_)));
    }

    #[test]
    fn inconsistent_bbox_rejected() {
        let rec = record_with(
            Segmentation::Polygons(vec![vec![0.0, 0.0, 4.0, 0.0, 4.0, 4.0, 0.0, 4.0]]),
            Rect::new(0, 0, 9, 9).unwrap(),
            10,
            10,
        );
        let err = extract_object_from(&RgbImage::new(10, 10), &rec, 0).unwrap_err();
        assert!(matches!(err, Error::BBoxMismatch { .. }));
    }

    #[test]
    fn pool_build_is_deterministic() {
        let src = tempfile::tempdir().unwrap();
        write_image(src.path(), "1.png", 64, 48);
        write_image(src.path(), "2.png", 64, 48);
        let ing = ingest_dataset(&dataset(), src.path(), &ClassFilter::AllSingleWord).unwrap();

        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let built = build_pool(&ing.records, a.path()).unwrap();
        build_pool(&ing.records, b.path()).unwrap();
        assert_eq!(built.manifest.len(), 3);
        assert_eq!(built.manifest.class_index["dog"].len(), 3);

        let read = |d: &Path, rel: &str| fs::read(d.join(rel)).unwrap();
        assert_eq!(read(a.path(), "manifest.json"), read(b.path(), "manifest.json"));
        for e in &built.manifest.entries {
            assert_eq!(read(a.path(), &e.path), read(b.path(), &e.path));
            let sidecar: Sidecar = read_json(&a.path().join(format!("dog/{}.json", e.id))).unwrap();
            assert_eq!(sidecar.area, e.area);
        }

        let loaded = PoolManifest::load(a.path()).unwrap();
        let obj = loaded.load_object(&loaded.entries[0]).unwrap();
        assert_eq!(obj.area, loaded.entries[0].area);
    }

    #[test]
    fn empty_records_give_empty_manifest() {
        let out = tempfile::tempdir().unwrap();
        let built = build_pool(&[], out.path()).unwrap();
        assert!(built.manifest.is_empty());
        assert!(out.path().join("manifest.json").is_file());
    }

    #[test]
    fn sampling_is_seeded() {
        assert_eq!(sample_indices(1, 1, 9).unwrap(), (0, 0));
        assert_eq!(sample_indices(50, 70, 42).unwrap(), sample_indices(50, 70, 42).unwrap());
        assert!(matches!(sample_indices(3, 0, 1), Err(Error::EmptyPool)));
        assert!(matches!(sample_indices(0, 3, 1), Err(Error::EmptyBackgrounds)));
    }

    #[test]
    fn sampling_reaches_every_object() {
        let mut seen = [false; 2];
        for seed in 0..1000 {
            seen[sample_indices(1, 2, seed).unwrap().1] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
