//! Label-error detection for caption datasets.
//!
//! Classes that a captioner reports both before and after an insertion are
//! taken as reliably present in the background; a ground-truth caption that
//! omits any of them is flagged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, class_set, CaptionAnalysis, ClassLexicon, NounTagger};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption_id: Option<String>,
    pub caption: String,
    pub source: String,
}

impl GroundTruthRecord {
    pub fn new(image_id: impl Into<String>, caption: impl Into<String>, source: impl Into<String>) -> Result<Self> {
        let caption = caption.into();
        if caption.trim().is_empty() {
            return Err(Error::InvalidInput("ground-truth caption is empty".into()));
        }
        Ok(Self {
            image_id: image_id.into(),
            caption_id: None,
            caption,
            source: source.into(),
        })
    }
}

#[derive(Deserialize)]
struct CocoCaptions {
    annotations: Vec<CocoCaption>,
}

#[derive(Deserialize)]
struct CocoCaption {
    id: serde_json::Value,
    image_id: serde_json::Value,
    caption: String,
}

fn id_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Reads a COCO caption annotation file; empty captions are skipped.
pub fn load_coco_captions(path: &Path, source: &str) -> Result<Vec<GroundTruthRecord>> {
    let file: CocoCaptions = crate::io::read_json(path)?;
    let mut records: Vec<GroundTruthRecord> = file
        .annotations
        .iter()
        .filter(|a| !a.caption.trim().is_empty())
        .map(|a| GroundTruthRecord {
            image_id: id_string(&a.image_id),
            caption_id: Some(id_string(&a.id)),
            caption: a.caption.trim().to_string(),
            source: source.to_string(),
        })
        .collect();
    records.sort_by(|a, b| (&a.image_id, &a.caption_id).cmp(&(&b.image_id, &b.caption_id)));
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Compare at super-category level on both sides.
    pub super_categories: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { super_categories: true }
    }
}

fn lift(classes: BTreeSet<String>, lexicon: &ClassLexicon, options: AuditOptions) -> BTreeSet<String> {
    if options.super_categories {
        classes.iter().map(|c| lexicon.category_of(c).to_string()).collect()
    } else {
        classes
    }
}

/// Classes named in both captions, lifted to super-categories when enabled.
pub fn invariant_set(
    bg: &CaptionAnalysis,
    syn: &CaptionAnalysis,
    lexicon: &ClassLexicon,
    options: AuditOptions,
) -> BTreeSet<String> {
    let common = class_set(bg).intersection(&class_set(syn)).cloned().collect();
    lift(common, lexicon, options)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagReason {
    /// The label names no lexicon class at all.
    NoKnownClass,
    /// The label names other classes but misses an invariant one.
    MissingCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelFlag {
    pub image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption_id: Option<String>,
    pub caption: String,
    pub source: String,
    pub invariant: BTreeSet<String>,
    pub label_classes: BTreeSet<String>,
    pub missing: BTreeSet<String>,
    pub reason: FlagReason,
}

pub fn audit_label(
    bg: &CaptionAnalysis,
    syn: &CaptionAnalysis,
    gt: &GroundTruthRecord,
    lexicon: &ClassLexicon,
    tagger: &dyn NounTagger,
    options: AuditOptions,
) -> Option<LabelFlag> {
    let invariant = invariant_set(bg, syn, lexicon, options);
    if invariant.is_empty() {
        return None;
    }
    let gt_analysis = analyze(&gt.caption, lexicon, tagger);
    let label_classes = lift(class_set(&gt_analysis), lexicon, options);
    let missing: BTreeSet<String> = invariant.difference(&label_classes).cloned().collect();
    if missing.is_empty() {
        return None;
    }
    Some(LabelFlag {
        image_id: gt.image_id.clone(),
        caption_id: gt.caption_id.clone(),
        caption: gt.caption.clone(),
        source: gt.source.clone(),
        reason: if label_classes.is_empty() {
            FlagReason::NoKnownClass
        } else {
            FlagReason::MissingCategory
        },
        invariant,
        label_classes,
        missing,
    })
}

#[derive(Debug, Clone)]
pub struct AuditTuple {
    pub background: CaptionAnalysis,
    pub synthesized: CaptionAnalysis,
    pub ground_truth: GroundTruthRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tuples: usize,
    pub flags: Vec<LabelFlag>,
    /// Flags per missing (super-)category.
    pub per_category: BTreeMap<String, usize>,
    pub per_reason: BTreeMap<FlagReason, usize>,
    /// Images whose every audited caption was flagged.
    pub all_captions_flagged: Vec<String>,
}

pub fn audit_dataset(
    tuples: &[AuditTuple],
    lexicon: &ClassLexicon,
    tagger: &dyn NounTagger,
    options: AuditOptions,
) -> AuditReport {
    let mut report = AuditReport {
        tuples: tuples.len(),
        ..Default::default()
    };
    let mut per_image: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for t in tuples {
        let flag = audit_label(&t.background, &t.synthesized, &t.ground_truth, lexicon, tagger, options);
        let counts = per_image.entry(t.ground_truth.image_id.as_str()).or_default();
        counts.0 += 1;
        if let Some(flag) = flag {
            counts.1 += 1;
            for c in &flag.missing {
                *report.per_category.entry(c.clone()).or_default() += 1;
            }
            *report.per_reason.entry(flag.reason).or_default() += 1;
            report.flags.push(flag);
        }
    }
    report.all_captions_flagged = per_image
        .into_iter()
        .filter(|(_, (total, flagged))| total == flagged)
        .map(|(id, _)| id.to_string())
        .collect();
    report
}

/// Plain-text summary table.
pub fn render_audit_summary(report: &AuditReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "audited captions: {}", report.tuples);
    let _ = writeln!(s, "flagged captions: {}", report.flags.len());
    let _ = writeln!(s, "images with every caption flagged: {}", report.all_captions_flagged.len());
    if !report.per_category.is_empty() {
        let _ = writeln!(s, "\n{:<20} {:>7}", "missing category", "flags");
        for (c, n) in &report.per_category {
            let _ = writeln!(s, "{c:<20} {n:>7}");
        }
    }
    if !report.per_reason.is_empty() {
        let _ = writeln!(s, "\n{:<20} {:>7}", "reason", "flags");
        for (r, n) in &report.per_reason {
            let name = serde_json::to_value(r).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let _ = writeln!(s, "{name:<20} {n:>7}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::analysis::{analyze_with_lexicon, LexiconTagger};

    fn setup() -> (ClassLexicon, LexiconTagger) {
        let lex = ClassLexicon::builtin();
        (lex.clone(), LexiconTagger::new(lex))
    }

    fn gt(caption: &str) -> GroundTruthRecord {
        GroundTruthRecord::new("42", caption, "coco").unwrap()
    }

    #[test]
    fn invariant_set_examples() {
        let (lex, t) = setup();
        let bg = analyze_with_lexicon("a dog catching a frisbee", &t);
        let syn = analyze_with_lexicon("a dog and a cat", &t);
        let class_level = AuditOptions { super_categories: false };
        assert_eq!(invariant_set(&bg, &syn, &lex, class_level), BTreeSet::from(["dog".to_string()]));
        assert_eq!(invariant_set(&bg, &syn, &lex, AuditOptions::default()), BTreeSet::from(["animal".to_string()]));
        let other = analyze_with_lexicon("a bus", &t);
        assert!(invariant_set(&bg, &other, &lex, class_level).is_empty());
        assert_eq!(invariant_set(&bg, &bg, &lex, class_level), class_set(&bg));
    }

    #[test]
    fn audit_label_examples() {
        let (lex, t) = setup();
        let bg = analyze_with_lexicon("a dog on a couch", &t);
        let syn = analyze_with_lexicon("a dog and a clock", &t);
        let opts = AuditOptions::default();
        assert!(audit_label(&bg, &syn, &gt("a cat sleeping"), &lex, &t, opts).is_none());
        let flag = audit_label(&bg, &syn, &gt("a person at a table"), &lex, &t, opts).unwrap();
        assert_eq!(flag.missing, BTreeSet::from(["animal".to_string()]));
        assert_eq!(flag.reason, FlagReason::MissingCategory);
        let flag = audit_label(&bg, &syn, &gt("a at sitting on a table"), &lex, &t, opts).unwrap();
        assert_eq!(flag.reason, FlagReason::NoKnownClass);
    }

    #[test]
    fn empty_ground_truth_rejected() {
        assert!(GroundTruthRecord::new("1", "  ", "coco").is_err());
    }

    #[test]
    fn dataset_report_counts() {
        let (lex, t) = setup();
        assert_eq!(audit_dataset(&[], &lex, &t, AuditOptions::default()), AuditReport::default());
        let tuple = |img: &str, caption: &str| AuditTuple {
            background: analyze_with_lexicon("a dog on a bed", &t),
            synthesized: analyze_with_lexicon("a dog on a bed with a cup", &t),
            ground_truth: GroundTruthRecord::new(img, caption, "coco").unwrap(),
        };
        let tuples = vec![
            tuple("1", "a puppy on a bed"),
            tuple("1", "a at on a bed"),
            tuple("2", "a bed"),
            tuple("2", "an empty room"),
        ];
        let report = audit_dataset(&tuples, &lex, &t, AuditOptions::default());
        assert_eq!(report.flags.len(), 3);
        assert_eq!(report.per_category["animal"], 3);
        assert_eq!(report.per_reason[&FlagReason::NoKnownClass], 1);
        assert_eq!(report.per_reason[&FlagReason::MissingCategory], 2);
        assert_eq!(report.all_captions_flagged, ["2"]);
        let summary = render_audit_summary(&report);
        assert!(summary.contains("flagged captions: 3"));
    }

    #[test]
    fn coco_caption_loading() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("captions.json");
        std::fs::write(
            &path,
            r#"{"images":[],"annotations":[{"id":7,"image_id":3,"caption":" A dog. "},{"id":8,"image_id":3,"caption":""}]}"#,
        )
        .unwrap();
        let recs = load_coco_captions(&path, "coco2017").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].image_id, "3");
        assert_eq!(recs[0].caption_id.as_deref(), Some("7"));
        assert_eq!(recs[0].caption, "A dog.");
    }

    const WORDS: [&str; 8] = ["dog", "cat", "person", "bus", "cup", "bed", "table", "sheep"];

    fn caption() -> impl Strategy<Value = String> {
        prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..4).prop_map(|w| {
            if w.is_empty() {
                "nothing here".to_string()
            } else {
                w.iter().map(|x| format!("a {x}")).collect::<Vec<_>>().join(" and ")
            }
        })
    }

    proptest! {
        #[test]
        fn enlarging_label_never_adds_flag(bg in caption(), syn in caption(), label in caption(), extra in caption(), sup in any::<bool>()) {
            let (lex, t) = setup();
            let opts = AuditOptions { super_categories: sup };
            let (bg, syn) = (analyze_with_lexicon(&bg, &t), analyze_with_lexicon(&syn, &t));
            let before = audit_label(&bg, &syn, &gt(&label), &lex, &t, opts);
            let after = audit_label(&bg, &syn, &gt(&format!("{label} and {extra}")), &lex, &t, opts);
            if before.is_none() {
                prop_assert!(after.is_none());
            }
        }

        #[test]
        fn empty_invariant_never_flags(label in caption()) {
            let (lex, t) = setup();
            let bg = analyze_with_lexicon("a dog", &t);
            let syn = analyze_with_lexicon("a bus", &t);
            prop_assert!(audit_label(&bg, &syn, &gt(&label), &lex, &t, AuditOptions::default()).is_none());
        }

        #[test]
        fn identity_mapping_reproduces_class_level(bg in caption(), syn in caption(), label in caption()) {
            let (lex, t) = setup();
            let identity = ClassLexicon::from_file(crate::analysis::LexiconFile {
                classes: lex.classes().map(|c| crate::analysis::LexiconClassEntry {
                    name: c.name.clone(),
                    super_category: None,
                    singular: None,
                    plurals: lex.plurals(&c.name).to_vec(),
                }).collect(),
                synonyms: lex.synonyms().clone(),
                pluralia_tantum: vec!["scissors".into()],
            }).unwrap();
            let (bg, syn) = (analyze_with_lexicon(&bg, &t), analyze_with_lexicon(&syn, &t));
            let lifted = audit_label(&bg, &syn, &gt(&label), &identity, &t, AuditOptions { super_categories: true });
            let plain = audit_label(&bg, &syn, &gt(&label), &lex, &t, AuditOptions { super_categories: false });
            prop_assert_eq!(lifted, plain);
        }
    }
}
