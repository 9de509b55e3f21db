//! Pipeline stages. Each stage reads and writes artifacts under an output
//! directory, so stages can be rerun and tested one at a time.
//!
//! Layout of `out/`:
//! - `synthesis.json`, `<bg>__<obj>__r<i>.png` + `.json` sidecars
//! - `backgrounds/<bg>.png`, `baseline.json`, `baseline/<bg>__<transform>.png`
//! - `captions.jsonl`
//! - `issues.jsonl` + `check.json`, or `baseline_issues.jsonl` + `baseline_check.json`
//! - `issues.labeled.jsonl`, `summary.json`
//! - `audit_report.jsonl`, `audit_summary.txt`

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, ClassLexicon, NounTagger};
use crate::audit::{audit_dataset, load_coco_captions, render_audit_summary, AuditOptions, AuditReport, AuditTuple};
use crate::error::{Error, Result};
use crate::geometry::{fraction_from_decimal, RatioInterval};
use crate::insertion::{
    compute_intervals, render_plan, tune_locations, AchievedRatio, BlendMode, ResizeParams, TuningParams,
};
use crate::io::{encode_png, read_json, read_jsonl, write_bytes, write_json_pretty, write_jsonl};
use crate::oracle::{
    baseline_transform, evaluate, make_baseline_issue, make_issue, BaselineTransform, OracleOptions, PairContext,
    Relation, SuspiciousIssue,
};
use crate::pool::{sample_indices, BackgroundEntry, PoolManifest};
use crate::provider::{caption_batch, content_hash, CaptionError, CaptionRequest, CaptionService};
use crate::report::{label_issue_file, summarize, LabelMerge, RunSummary};

pub const SYNTHESIS_FILE: &str = "synthesis.json";
pub const BASELINE_FILE: &str = "baseline.json";
pub const CAPTIONS_FILE: &str = "captions.jsonl";
pub const ISSUES_FILE: &str = "issues.jsonl";
pub const CHECK_FILE: &str = "check.json";
pub const BASELINE_ISSUES_FILE: &str = "baseline_issues.jsonl";
pub const BASELINE_CHECK_FILE: &str = "baseline_check.json";
pub const LABELED_ISSUES_FILE: &str = "issues.labeled.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const AUDIT_REPORT_FILE: &str = "audit_report.jsonl";
pub const AUDIT_SUMMARY_FILE: &str = "audit_summary.txt";

/// Derives the `k`-th child seed of `master` (splitmix64 finalizer).
pub fn derive_seed(master: u64, k: u64) -> u64 {
    let mut z = master ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub pool: PathBuf,
    /// Defaults to `<pool>/backgrounds.json`.
    pub backgrounds: Option<PathBuf>,
    pub out: PathBuf,
    pub cache: PathBuf,
    /// Defaults to the bundled lexicon.
    pub lexicon: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            pool: "pool".into(),
            backgrounds: None,
            out: "out".into(),
            cache: "cache".into(),
            lexicon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningConfig {
    pub n: usize,
    /// Decimal upper bound of the top interval, converted to an exact fraction.
    pub ratio_max: f64,
    pub c1: u32,
    pub c2: u32,
}

impl Default for TuningConfig {
    fn default() -> Self {
        let d = TuningParams::default();
        Self {
            n: d.n,
            ratio_max: 0.45,
            c1: d.c1,
            c2: d.c2,
        }
    }
}

impl TuningConfig {
    pub fn params(&self, rng_seed: u64) -> Result<TuningParams> {
        let p = TuningParams {
            n: self.n,
            ratio_max: fraction_from_decimal(self.ratio_max)?,
            c1: self.c1,
            c2: self.c2,
            rng_seed,
        };
        p.validate()?;
        Ok(p)
    }
}

fn default_baseline() -> Vec<BaselineTransform> {
    vec![
        BaselineTransform::Blur(3),
        BaselineTransform::Brightness(32),
        BaselineTransform::Contrast(1.2),
        BaselineTransform::Shear(0.1),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub tuning: TuningConfig,
    pub resize: ResizeParams,
    /// Provider config file (TOML or JSON).
    pub provider: Option<PathBuf>,
    pub seed: u64,
    /// Parallel workers for image stages; 0 uses every core.
    pub jobs: usize,
    pub max_in_flight: usize,
    /// Background-object pairs to synthesize.
    pub pairs: usize,
    /// Sampling attempts allowed per requested pair before giving up.
    pub attempts_per_pair: usize,
    pub blend: BlendMode,
    pub relaxed_mr1: bool,
    pub audit_super_categories: bool,
    pub baseline: Vec<BaselineTransform>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: PathsConfig::default(),
            tuning: TuningConfig::default(),
            resize: ResizeParams::default(),
            provider: None,
            seed: 0,
            jobs: 0,
            max_in_flight: 4,
            pairs: 1000,
            attempts_per_pair: 20,
            blend: BlendMode::HardPaste,
            relaxed_mr1: false,
            audit_super_categories: true,
            baseline: default_baseline(),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_relative_to(base);
        Ok(cfg)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.pool);
        fix(&mut self.paths.out);
        fix(&mut self.paths.cache);
        for p in [&mut self.paths.backgrounds, &mut self.paths.lexicon, &mut self.provider]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn backgrounds_path(&self) -> PathBuf {
        self.paths
            .backgrounds
            .clone()
            .unwrap_or_else(|| self.paths.pool.join(crate::pool::BACKGROUNDS_FILE))
    }

    pub fn lexicon(&self) -> Result<ClassLexicon> {
        match &self.paths.lexicon {
            Some(p) => ClassLexicon::load(p),
            None => Ok(ClassLexicon::builtin()),
        }
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
    }
}

/// Sidecar written next to every synthesized image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSidecar {
    pub id: String,
    pub background: String,
    pub object: String,
    pub object_class: String,
    pub interval: usize,
    pub coordinate: (i64, i64),
    pub achieved_ratios: Vec<AchievedRatio>,
    /// `(height, width)` of the resized object.
    pub size: (u32, u32),
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub background: String,
    pub object: String,
    pub object_class: String,
    pub seed: u64,
    pub images: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisManifest {
    pub seed: u64,
    pub intervals: Vec<RatioInterval>,
    pub attempts: usize,
    pub rejected_infeasible: usize,
    pub rejected_duplicate: usize,
    pub pairs: Vec<PairRecord>,
    /// Background id → `backgrounds/<id>.png`.
    pub backgrounds: BTreeMap<String, String>,
}

impl SynthesisManifest {
    pub fn load(out: &Path) -> Result<Self> {
        read_json(&out.join(SYNTHESIS_FILE))
    }

    pub fn sidecars(&self, out: &Path) -> Result<Vec<SynthSidecar>> {
        self.pairs
            .iter()
            .flat_map(|p| p.images.iter())
            .map(|id| read_json(&out.join(format!("{id}.json"))))
            .collect()
    }
}

pub fn background_file(id: &str) -> String {
    format!("backgrounds/{id}.png")
}

/// Encoded synthesized images with their sidecars, plus the encoded background.
type RenderedPair = (Vec<(SynthSidecar, Vec<u8>)>, Vec<u8>);

struct Attempt {
    background: usize,
    object: usize,
    seed: u64,
    outcome: Option<RenderedPair>,
}

fn is_infeasible(e: &Error) -> bool {
    matches!(
        e,
        Error::Step1Exhausted(_)
            | Error::IntervalUnsatisfiable(_)
            | Error::ObjectLargerThanBackground { .. }
            | Error::NoObjectsInBackground(_)
    )
}

fn run_attempt(
    pool: &PoolManifest,
    backgrounds: &[BackgroundEntry],
    cfg: &PipelineConfig,
    k: u64,
) -> Result<Attempt> {
    let seed = derive_seed(cfg.seed, k);
    let (bi, oi) = sample_indices(backgrounds.len(), pool.entries.len(), seed)?;
    let mut attempt = Attempt {
        background: bi,
        object: oi,
        seed,
        outcome: None,
    };
    let entry = &backgrounds[bi];
    let pool_entry = &pool.entries[oi];
    let bg = entry.load()?;
    let obj = pool.load_object(pool_entry)?;
    let tp = cfg.tuning.params(derive_seed(seed, 1))?;
    let tuned = match tune_locations(&bg, &obj, &tp, &cfg.resize) {
        Ok(t) => t,
        Err(e) if is_infeasible(&e) => {
            info!("pair {} + {} infeasible ({e}); resampling", entry.id, pool_entry.id);
            return Ok(attempt);
        }
        Err(e) => return Err(e),
    };
    let mut images = Vec::new();
    for (syn, placement) in render_plan(&bg, &tuned, cfg.blend)?.into_iter().zip(&tuned.plan.placements) {
        let sidecar = SynthSidecar {
            id: syn.id(),
            background: entry.id.clone(),
            object: pool_entry.id.clone(),
            object_class: pool_entry.class.clone(),
            interval: syn.interval_index,
            coordinate: placement.coordinate,
            achieved_ratios: placement.achieved_ratios.clone(),
            size: tuned.plan.object_new_size,
            seed,
        };
        images.push((sidecar, encode_png(&syn.pixels)?));
    }
    images.sort_by_key(|(s, _)| s.interval);
    attempt.outcome = Some((images, encode_png(&bg.pixels)?));
    Ok(attempt)
}

/// Samples `cfg.pairs` distinct (background, object) pairs and writes one
/// image per overlap interval for each. Pairs whose placement search fails
/// are redrawn. Output depends only on the inputs and `cfg.seed`.
pub fn synthesize(pool: &PoolManifest, backgrounds: &[BackgroundEntry], cfg: &PipelineConfig) -> Result<SynthesisManifest> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if backgrounds.is_empty() {
        return Err(Error::EmptyBackgrounds);
    }
    let intervals = compute_intervals(&cfg.tuning.params(0)?)?;
    cfg.resize.validate()?;
    let combos = backgrounds.len().saturating_mul(pool.len());
    if cfg.pairs > combos {
        return Err(Error::InvalidInput(format!(
            "{} pairs requested but only {combos} distinct (background, object) pairs exist",
            cfg.pairs
        )));
    }
    let out = &cfg.paths.out;
    let threads = cfg.thread_pool()?;
    let chunk = threads.current_num_threads().max(1) * 4;
    let max_attempts = cfg.pairs.saturating_mul(cfg.attempts_per_pair.max(1));

    let mut manifest = SynthesisManifest {
        seed: cfg.seed,
        intervals,
        attempts: 0,
        rejected_infeasible: 0,
        rejected_duplicate: 0,
        pairs: Vec::new(),
        backgrounds: BTreeMap::new(),
    };
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut next = 0usize;
    while manifest.pairs.len() < cfg.pairs && next < max_attempts {
        let end = (next + chunk).min(max_attempts);
        let batch: Vec<Result<Attempt>> =
            threads.install(|| (next..end).into_par_iter().map(|k| run_attempt(pool, backgrounds, cfg, k as u64)).collect());
        for attempt in batch {
            if manifest.pairs.len() == cfg.pairs {
                break;
            }
            manifest.attempts += 1;
            let attempt = attempt?;
            let Some((images, bg_png)) = attempt.outcome else {
                manifest.rejected_infeasible += 1;
                continue;
            };
            if !used.insert((attempt.background, attempt.object)) {
                manifest.rejected_duplicate += 1;
                continue;
            }
            let entry = &backgrounds[attempt.background];
            let rel = background_file(&entry.id);
            if manifest.backgrounds.insert(entry.id.clone(), rel.clone()).is_none() {
                write_bytes(&out.join(&rel), &bg_png)?;
            }
            let mut ids = Vec::new();
            for (sidecar, png) in images {
                write_bytes(&out.join(format!("{}.png", sidecar.id)), &png)?;
                write_json_pretty(&out.join(format!("{}.json", sidecar.id)), &sidecar)?;
                ids.push(sidecar.id);
            }
            let object = &pool.entries[attempt.object];
            manifest.pairs.push(PairRecord {
                background: entry.id.clone(),
                object: object.id.clone(),
                object_class: object.class.clone(),
                seed: attempt.seed,
                images: ids,
            });
        }
        next = end;
    }
    if manifest.pairs.len() < cfg.pairs {
        return Err(Error::InvalidInput(format!(
            "only {} of {} pairs could be synthesized after {} attempts",
            manifest.pairs.len(),
            cfg.pairs,
            manifest.attempts
        )));
    }
    info!(
        "synthesized {} pairs in {} attempts ({} infeasible, {} duplicate)",
        manifest.pairs.len(),
        manifest.attempts,
        manifest.rejected_infeasible,
        manifest.rejected_duplicate
    );
    write_json_pretty(&out.join(SYNTHESIS_FILE), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub id: String,
    pub background: String,
    pub transform: BaselineTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineManifest {
    pub seed: u64,
    pub entries: Vec<BaselineEntry>,
    pub backgrounds: BTreeMap<String, String>,
}

impl BaselineManifest {
    pub fn load(out: &Path) -> Result<Self> {
        read_json(&out.join(BASELINE_FILE))
    }
}

/// Applies every configured transform to `cfg.pairs` backgrounds drawn
/// without replacement.
pub fn synthesize_baseline(backgrounds: &[BackgroundEntry], cfg: &PipelineConfig) -> Result<BaselineManifest> {
    if backgrounds.is_empty() {
        return Err(Error::EmptyBackgrounds);
    }
    if cfg.baseline.is_empty() {
        return Err(Error::InvalidInput("no baseline transforms configured".into()));
    }
    for t in &cfg.baseline {
        t.validate()?;
    }
    let mut order: Vec<usize> = (0..backgrounds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    order.truncate(cfg.pairs);
    order.sort_unstable();
    let out = &cfg.paths.out;
    let threads = cfg.thread_pool()?;
    type Rendered = (String, Vec<u8>, Vec<(BaselineEntry, Vec<u8>)>);
    let rendered: Vec<Result<Rendered>> = threads.install(|| {
        order
            .par_iter()
            .map(|&i| {
                let entry = &backgrounds[i];
                let bg = entry.load()?;
                let mut variants = Vec::new();
                for t in &cfg.baseline {
                    let img = baseline_transform(&bg.pixels, *t)?;
                    let id = format!("{}__{}", entry.id, t.tag());
                    variants.push((
                        BaselineEntry {
                            id,
                            background: entry.id.clone(),
                            transform: *t,
                        },
                        encode_png(&img)?,
                    ));
                }
                Ok((entry.id.clone(), encode_png(&bg.pixels)?, variants))
            })
            .collect()
    });
    let mut manifest = BaselineManifest {
        seed: cfg.seed,
        entries: Vec::new(),
        backgrounds: BTreeMap::new(),
    };
    for r in rendered {
        let (bg_id, bg_png, variants) = r?;
        let rel = background_file(&bg_id);
        write_bytes(&out.join(&rel), &bg_png)?;
        manifest.backgrounds.insert(bg_id, rel);
        for (entry, png) in variants {
            write_bytes(&out.join(format!("baseline/{}.png", entry.id)), &png)?;
            manifest.entries.push(entry);
        }
    }
    write_json_pretty(&out.join(BASELINE_FILE), &manifest)?;
    Ok(manifest)
}

/// Every image the caption stage should describe, as `(image id, path)`.
pub fn caption_targets(out: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut targets: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut found = false;
    if out.join(SYNTHESIS_FILE).is_file() {
        found = true;
        let m = SynthesisManifest::load(out)?;
        for (id, rel) in &m.backgrounds {
            targets.insert(id.clone(), out.join(rel));
        }
        for id in m.pairs.iter().flat_map(|p| &p.images) {
            targets.insert(id.clone(), out.join(format!("{id}.png")));
        }
    }
    if out.join(BASELINE_FILE).is_file() {
        found = true;
        let m = BaselineManifest::load(out)?;
        for (id, rel) in &m.backgrounds {
            targets.insert(id.clone(), out.join(rel));
        }
        for e in &m.entries {
            targets.insert(e.id.clone(), out.join(format!("baseline/{}.png", e.id)));
        }
    }
    if !found {
        return Err(Error::InvalidInput(format!(
            "{} has neither {SYNTHESIS_FILE} nor {BASELINE_FILE}; run synthesize first",
            out.display()
        )));
    }
    Ok(targets.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub image_id: String,
    pub hash: String,
    pub provider_id: String,
    pub caption: String,
    pub from_cache: bool,
    pub latency_ms: u64,
    /// Unix milliseconds.
    pub retrieved_at: u64,
}

#[derive(Debug)]
pub struct CaptionRun {
    pub records: Vec<CaptionRecord>,
    pub failures: Vec<(String, CaptionError)>,
}

impl CaptionRun {
    pub fn requests_made(&self) -> usize {
        self.records.iter().filter(|r| !r.from_cache).count()
    }
}

/// Captions every background and synthesized image and writes `captions.jsonl`.
pub fn caption_images(out: &Path, service: &CaptionService, max_in_flight: usize) -> Result<CaptionRun> {
    let targets = caption_targets(out)?;
    let mut reqs = Vec::with_capacity(targets.len());
    for (id, path) in &targets {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        reqs.push(CaptionRequest::new(id.clone(), bytes)?);
    }
    let results = caption_batch(service, &reqs, max_in_flight)?;
    let mut run = CaptionRun {
        records: Vec::new(),
        failures: Vec::new(),
    };
    for (req, r) in reqs.iter().zip(results) {
        match r {
            Ok(c) => run.records.push(CaptionRecord {
                image_id: c.image_id,
                hash: req.content_hash(),
                provider_id: c.provider_id,
                caption: c.caption,
                from_cache: c.from_cache,
                latency_ms: c.latency_ms,
                retrieved_at: c.retrieved_at,
            }),
            Err(e) => {
                warn!("captioning {} failed: {e}", req.image_id);
                run.failures.push((req.image_id.clone(), e));
            }
        }
    }
    write_jsonl(&out.join(CAPTIONS_FILE), &run.records)?;
    Ok(run)
}

/// Captions keyed by image content hash.
pub struct CaptionIndex {
    by_hash: HashMap<String, CaptionRecord>,
    pub provider_id: String,
}

impl CaptionIndex {
    pub fn load(out: &Path) -> Result<Self> {
        let records: Vec<CaptionRecord> = read_jsonl(&out.join(CAPTIONS_FILE))?;
        let provider_id = records.first().map(|r| r.provider_id.clone()).unwrap_or_else(|| "unknown".into());
        Ok(Self {
            by_hash: records.into_iter().map(|r| (r.hash.clone(), r)).collect(),
            provider_id,
        })
    }

    /// Caption of the image file at `path`.
    pub fn caption_for(&self, id: &str, path: &Path) -> Result<&str> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.by_hash
            .get(&content_hash(&bytes))
            .map(|r| r.caption.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("no caption for image {id}; run caption first")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub provider_id: String,
    pub relation: Relation,
    pub pairs_per_interval: Vec<usize>,
    pub suspicious: usize,
}

#[derive(Debug, Clone)]
pub struct CheckRun {
    pub summary: CheckSummary,
    pub issues: Vec<SuspiciousIssue>,
}

/// Evaluates both metamorphic relations on every (background, synthesized)
/// caption pair and writes `issues.jsonl` and `check.json`.
pub fn check(out: &Path, lexicon: &ClassLexicon, tagger: &dyn NounTagger, options: OracleOptions) -> Result<CheckRun> {
    let manifest = SynthesisManifest::load(out)?;
    let captions = CaptionIndex::load(out)?;
    let mut pairs_per_interval = vec![0usize; manifest.intervals.len()];
    let mut issues = Vec::new();
    for pair in &manifest.pairs {
        let bg_path = out.join(background_file(&pair.background));
        let bg_caption = captions.caption_for(&pair.background, &bg_path)?;
        let bg = analyze(bg_caption, lexicon, tagger);
        let inserted = lexicon.canonicalize(&pair.object_class).unwrap_or(&pair.object_class).to_string();
        for id in &pair.images {
            let sidecar: SynthSidecar = read_json(&out.join(format!("{id}.json")))?;
            let syn_caption = captions.caption_for(id, &out.join(format!("{id}.png")))?;
            let syn = analyze(syn_caption, lexicon, tagger);
            let slot = pairs_per_interval.get_mut(sidecar.interval).ok_or_else(|| {
                Error::InvalidInput(format!("{id}: interval {} outside the run's intervals", sidecar.interval))
            })?;
            *slot += 1;
            let ctx = PairContext {
                background_id: &pair.background,
                synthesized_id: id,
                interval: sidecar.interval,
                inserted_class: &inserted,
            };
            if let Some(issue) = make_issue(&ctx, &bg, &syn, evaluate(&bg, &syn, &inserted, options)) {
                issues.push(issue);
            }
        }
    }
    let summary = CheckSummary {
        provider_id: captions.provider_id.clone(),
        relation: Relation::Metamorphic,
        pairs_per_interval,
        suspicious: issues.len(),
    };
    write_jsonl(&out.join(ISSUES_FILE), &issues)?;
    write_json_pretty(&out.join(CHECK_FILE), &summary)?;
    Ok(CheckRun { summary, issues })
}

/// Same-caption relation over the baseline transforms; writes
/// `baseline_issues.jsonl` and `baseline_check.json`.
pub fn check_baseline_run(out: &Path) -> Result<CheckRun> {
    let manifest = BaselineManifest::load(out)?;
    let captions = CaptionIndex::load(out)?;
    let mut issues = Vec::new();
    for e in &manifest.entries {
        let orig = captions.caption_for(&e.background, &out.join(background_file(&e.background)))?;
        let transformed = captions.caption_for(&e.id, &out.join(format!("baseline/{}.png", e.id)))?;
        issues.extend(make_baseline_issue(&e.background, &e.id, orig, transformed));
    }
    let summary = CheckSummary {
        provider_id: captions.provider_id.clone(),
        relation: Relation::SameCaption,
        pairs_per_interval: vec![manifest.entries.len()],
        suspicious: issues.len(),
    };
    write_jsonl(&out.join(BASELINE_ISSUES_FILE), &issues)?;
    write_json_pretty(&out.join(BASELINE_CHECK_FILE), &summary)?;
    Ok(CheckRun { summary, issues })
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    pub summary: RunSummary,
    pub merge: Option<LabelMerge>,
}

/// Merges human labels into the issue file and computes per-interval
/// precision; writes `issues.labeled.jsonl` and `summary.json`.
pub fn eval(out: &Path, labels: Option<&Path>, partial: bool, baseline: bool) -> Result<EvalRun> {
    let (issue_file, check_file) = if baseline {
        (BASELINE_ISSUES_FILE, BASELINE_CHECK_FILE)
    } else {
        (ISSUES_FILE, CHECK_FILE)
    };
    let check: CheckSummary = read_json(&out.join(check_file))?;
    let labeled = out.join(LABELED_ISSUES_FILE);
    let merge = match labels {
        Some(l) => Some(label_issue_file(&out.join(issue_file), l, &labeled)?),
        None => {
            let issues: Vec<SuspiciousIssue> = read_jsonl(&out.join(issue_file))?;
            write_jsonl(&labeled, &issues)?;
            None
        }
    };
    let issues: Vec<SuspiciousIssue> = read_jsonl(&labeled)?;
    let summary = summarize(&check.provider_id, &check.pairs_per_interval, &issues, partial)?;
    write_json_pretty(&out.join(SUMMARY_FILE), &summary)?;
    Ok(EvalRun { summary, merge })
}

pub fn load_summary(out: &Path) -> Result<RunSummary> {
    read_json(&out.join(SUMMARY_FILE))
}

/// Audits ground-truth captions of every background that was synthesized,
/// pairing each with each of its synthesized images.
pub fn audit(
    out: &Path,
    ground_truth: &Path,
    source: &str,
    lexicon: &ClassLexicon,
    tagger: &dyn NounTagger,
    options: AuditOptions,
) -> Result<AuditReport> {
    let manifest = SynthesisManifest::load(out)?;
    let captions = CaptionIndex::load(out)?;
    let mut gt_by_image: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for r in load_coco_captions(ground_truth, source)? {
        gt_by_image.entry(r.image_id.clone()).or_default().push(r);
    }
    let mut tuples = Vec::new();
    for pair in &manifest.pairs {
        let Some(gts) = gt_by_image.get(&pair.background) else {
            warn!("no ground-truth captions for background {}", pair.background);
            continue;
        };
        let bg_caption = captions.caption_for(&pair.background, &out.join(background_file(&pair.background)))?;
        let bg = analyze(bg_caption, lexicon, tagger);
        for id in &pair.images {
            let syn = analyze(captions.caption_for(id, &out.join(format!("{id}.png")))?, lexicon, tagger);
            for gt in gts {
                tuples.push(AuditTuple {
                    background: bg.clone(),
                    synthesized: syn.clone(),
                    ground_truth: gt.clone(),
                });
            }
        }
    }
    let report = audit_dataset(&tuples, lexicon, tagger, options);
    write_jsonl(&out.join(AUDIT_REPORT_FILE), &report.flags)?;
    write_bytes(&out.join(AUDIT_SUMMARY_FILE), render_audit_summary(&report).as_bytes())?;
    Ok(report)
}
