//! Synthetic annotated corpus and helpers for driving the `capmorph` binary.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use image::{Rgb, RgbImage};
use serde_json::{json, Value};

pub const CLASSES: [(&str, &str); 6] = [
    ("dog", "animal"),
    ("cat", "animal"),
    ("horse", "animal"),
    ("sheep", "animal"),
    ("cow", "animal"),
    ("bird", "animal"),
];

const MULTI_WORD: (&str, &str) = ("traffic light", "outdoor");

pub const WIDTH: u32 = 96;
pub const HEIGHT: u32 = 72;

/// xorshift64*; enough to scatter fixture shapes deterministically.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1)
    }

    pub fn next(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn range(&mut self, lo: u32, hi: u32) -> u32 {
        lo + (self.next() % u64::from(hi - lo + 1)) as u32
    }
}

pub struct World {
    pub root: PathBuf,
    pub annotations: PathBuf,
    pub images: PathBuf,
    pub ground_truth: PathBuf,
    /// Image id → single-word classes annotated in it.
    pub classes: BTreeMap<String, Vec<String>>,
}

/// Writes `n_images` PNGs with 1-3 rectangular objects each plus COCO
/// instance and caption annotation files. Background pixels have even red
/// channels and object pixels odd ones.
pub fn build_world(root: &Path, n_images: u64, seed: u64) -> World {
    let images_dir = root.join("images");
    fs::create_dir_all(&images_dir).unwrap();
    let mut rng = Lcg::new(seed);
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut captions = Vec::new();
    let mut classes: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut ann_id = 100;
    for image_id in 1..=n_images {
        let mut img = RgbImage::from_fn(WIDTH, HEIGHT, |x, y| {
            let v = rng.next();
            Rgb([(v as u8 & 0x7E) + (x as u8 % 8) * 2, (v >> 8) as u8 / 2 + y as u8, 40])
        });
        let n_objects = rng.range(1, 3);
        let mut names = Vec::new();
        for k in 0..n_objects {
            let (name, _) = if image_id % 4 == 0 && k == 0 {
                MULTI_WORD
            } else {
                CLASSES[rng.range(0, CLASSES.len() as u32 - 1) as usize]
            };
            let w = rng.range(14, 36);
            let h = rng.range(12, 30);
            let x = rng.range(0, WIDTH - w);
            let y = rng.range(0, HEIGHT - h);
            let colour = Rgb([(rng.range(0, 127) * 2 + 1) as u8, rng.range(0, 255) as u8, rng.range(0, 255) as u8]);
            for dy in 0..h {
                for dx in 0..w {
                    img.put_pixel(x + dx, y + dy, colour);
                }
            }
            let (x, y, w, h) = (f64::from(x), f64::from(y), f64::from(w), f64::from(h));
            annotations.push(json!({
                "id": ann_id,
                "image_id": image_id,
                "category_id": category_id(name),
                "segmentation": [[x, y, x + w, y, x + w, y + h, x, y + h]],
                "area": w * h,
                "bbox": [x, y, w, h],
                "iscrowd": 0,
            }));
            ann_id += 1;
            if !name.contains(' ') {
                names.push(name.to_string());
            }
        }
        let file_name = format!("{image_id:06}.png");
        img.save(images_dir.join(&file_name)).unwrap();
        images.push(json!({"id": image_id, "file_name": file_name, "width": WIDTH, "height": HEIGHT}));
        captions.push(json!({"id": image_id * 10, "image_id": image_id, "caption": describe(&names, None)}));
        classes.insert(image_id.to_string(), names);
    }
    let mut categories: Vec<Value> = CLASSES
        .iter()
        .map(|(n, s)| json!({"id": category_id(n), "name": n, "supercategory": s}))
        .collect();
    categories.push(json!({"id": category_id(MULTI_WORD.0), "name": MULTI_WORD.0, "supercategory": MULTI_WORD.1}));
    let annotations_path = root.join("instances.json");
    fs::write(
        &annotations_path,
        serde_json::to_string_pretty(&json!({"images": images, "annotations": annotations, "categories": categories}))
            .unwrap(),
    )
    .unwrap();
    let gt_path = root.join("captions_gt.json");
    fs::write(&gt_path, serde_json::to_string_pretty(&json!({"images": [], "annotations": captions})).unwrap()).unwrap();
    World {
        root: root.to_path_buf(),
        annotations: annotations_path,
        images: images_dir,
        ground_truth: gt_path,
        classes,
    }
}

fn category_id(name: &str) -> u64 {
    CLASSES.iter().position(|(n, _)| *n == name).map(|i| i as u64 + 1).unwrap_or(99)
}

fn plural(name: &str) -> String {
    if name == "sheep" {
        name.to_string()
    } else {
        format!("{name}s")
    }
}

/// Caption naming every class of `names` with the right number, plus one
/// more instance of `inserted` when given.
pub fn describe(names: &[String], inserted: Option<&str>) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for n in names {
        *counts.entry(n.as_str()).or_default() += 1;
    }
    if let Some(i) = inserted {
        *counts.entry(i).or_default() += 1;
    }
    if counts.is_empty() {
        return "an empty field".to_string();
    }
    let parts: Vec<String> = counts
        .iter()
        .map(|(c, &k)| if k == 1 { format!("a {c}") } else { format!("two {}", plural(c)) })
        .collect();
    format!("{} in a field", parts.join(" and "))
}

pub fn write_config(root: &Path, extra: &str) -> PathBuf {
    let path = root.join("run.toml");
    fs::write(
        &path,
        format!("seed = 7\njobs = 2\nprovider = \"provider.toml\"\n{extra}\n[paths]\npool = \"pool\"\nout = \"out\"\ncache = \"cache\"\n"),
    )
    .unwrap();
    path
}

pub fn write_fixture_provider(root: &Path, by_image_id: &BTreeMap<String, String>) {
    fs::write(
        root.join("fixtures.json"),
        serde_json::to_string_pretty(&json!({"by_image_id": by_image_id})).unwrap(),
    )
    .unwrap();
    fs::write(root.join("provider.toml"), "id = \"mock\"\nkind = \"fixture\"\nfixtures = \"fixtures.json\"\n").unwrap();
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn capmorph(root: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_capmorph"))
        .args(args)
        .current_dir(root)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

pub fn read_jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// (background id, inserted class, synthesized image ids) per synthesized pair.
pub fn synthesized_pairs(out: &Path) -> Vec<(String, String, Vec<String>)> {
    let m = read_json(&out.join("synthesis.json"));
    m["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            (
                p["background"].as_str().unwrap().to_string(),
                p["object_class"].as_str().unwrap().to_string(),
                p["images"].as_array().unwrap().iter().map(|i| i.as_str().unwrap().to_string()).collect(),
            )
        })
        .collect()
}

/// Faithful captions for every background and synthesized image, except
/// the ids in `violate`, whose captions omit the inserted object or name
/// an extra class.
pub fn engineered_captions(world: &World, out: &Path, violate: &BTreeSet<String>) -> BTreeMap<String, String> {
    let mut captions = BTreeMap::new();
    for (bg, inserted, images) in synthesized_pairs(out) {
        let names = &world.classes[&bg];
        captions.insert(bg.clone(), describe(names, None));
        for id in images {
            let caption = if violate.contains(&id) && names.contains(&inserted) {
                // omission would go unnoticed when the class is already plural
                describe(names, Some(&inserted)).replace(" in a field", " and a clock in a meadow")
            } else if violate.contains(&id) {
                describe(names, None).replace(" in a field", " in a meadow")
            } else {
                describe(names, Some(&inserted))
            };
            captions.insert(id, caption);
        }
    }
    captions
}

/// Every regular file under `dir`, relative path → bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
