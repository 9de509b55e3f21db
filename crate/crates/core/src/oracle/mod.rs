//! Metamorphic relations over caption pairs and the suspicious issues they raise.

mod transform;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::{class_set, CaptionAnalysis, Form};
use crate::provider::normalize_caption;

pub use transform::{baseline_transform, BaselineTransform};

pub const ISSUE_SCHEMA: &str = "issue/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    ExtraClass,
    MissingClass,
    MissingInserted,
    FormChanged,
    InsertedWrongForm,
}

impl ViolationKind {
    /// Kinds belonging to the class-set relation; the rest concern number.
    pub fn is_class_set(self) -> bool {
        matches!(self, Self::ExtraClass | Self::MissingClass | Self::MissingInserted)
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ExtraClass => "extra_class",
            Self::MissingClass => "missing_class",
            Self::MissingInserted => "missing_inserted",
            Self::FormChanged => "form_changed",
            Self::InsertedWrongForm => "inserted_wrong_form",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationDetail {
    pub kind: ViolationKind,
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<String>,
}

impl ViolationDetail {
    fn new(kind: ViolationKind, class: &str, expected: Option<String>, observed: Option<String>) -> Self {
        Self {
            kind,
            class: class.to_string(),
            expected,
            observed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MRVerdict {
    pub mr1_violated: bool,
    pub mr2_violated: bool,
    pub details: Vec<ViolationDetail>,
}

impl MRVerdict {
    pub fn from_details(mr1: Vec<ViolationDetail>, mr2: Vec<ViolationDetail>) -> Self {
        let mut details = mr1;
        details.extend(mr2);
        Self {
            mr1_violated: details.iter().any(|d| d.kind.is_class_set()),
            mr2_violated: details.iter().any(|d| !d.kind.is_class_set()),
            details,
        }
    }

    pub fn is_violation(&self) -> bool {
        self.mr1_violated || self.mr2_violated
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.details.iter().any(|d| d.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Ignore classes that appear only in the synthesized caption.
    pub relaxed_mr1: bool,
}

/// Class-set relation: the synthesized caption names exactly the background
/// classes plus the inserted one.
pub fn check_mr1(bg: &CaptionAnalysis, syn: &CaptionAnalysis, inserted: &str) -> Vec<ViolationDetail> {
    check_mr1_with(bg, syn, inserted, OracleOptions::default())
}

pub fn check_mr1_with(
    bg: &CaptionAnalysis,
    syn: &CaptionAnalysis,
    inserted: &str,
    options: OracleOptions,
) -> Vec<ViolationDetail> {
    let bg_set = class_set(bg);
    let syn_set = class_set(syn);
    let mut out = Vec::new();
    if !syn_set.contains(inserted) {
        out.push(ViolationDetail::new(
            ViolationKind::MissingInserted,
            inserted,
            Some("present".into()),
            Some("absent".into()),
        ));
    }
    for class in bg_set.difference(&syn_set).filter(|c| c.as_str() != inserted) {
        out.push(ViolationDetail::new(
            ViolationKind::MissingClass,
            class,
            Some("present".into()),
            Some("absent".into()),
        ));
    }
    if !options.relaxed_mr1 {
        for class in syn_set.difference(&bg_set).filter(|c| c.as_str() != inserted) {
            out.push(ViolationDetail::new(
                ViolationKind::ExtraClass,
                class,
                Some("absent".into()),
                Some("present".into()),
            ));
        }
    }
    out
}

fn form_of(a: &CaptionAnalysis, class: &str) -> Option<Form> {
    a.mentions.get(class).map(|m| m.form)
}

/// Number relation: shared classes keep their form; the inserted class is
/// singular when new to the image and plural when it joins existing ones.
///
/// Exempt forms never violate. An inserted class missing from the
/// synthesized caption is left to the class-set relation.
pub fn check_mr2(bg: &CaptionAnalysis, syn: &CaptionAnalysis, inserted: &str) -> Vec<ViolationDetail> {
    let mut out = Vec::new();
    for (class, bg_mention) in &bg.mentions {
        if class == inserted {
            continue;
        }
        let Some(syn_form) = form_of(syn, class) else {
            continue;
        };
        if bg_mention.form == Form::Exempt || syn_form == Form::Exempt {
            continue;
        }
        if bg_mention.form != syn_form {
            out.push(ViolationDetail::new(
                ViolationKind::FormChanged,
                class,
                Some(bg_mention.form.to_string()),
                Some(syn_form.to_string()),
            ));
        }
    }
    let expected = if bg.mentions.contains_key(inserted) {
        Form::Plural
    } else {
        Form::Singular
    };
    if let Some(observed) = form_of(syn, inserted) {
        if observed != Form::Exempt && observed != expected {
            out.push(ViolationDetail::new(
                ViolationKind::InsertedWrongForm,
                inserted,
                Some(expected.to_string()),
                Some(observed.to_string()),
            ));
        }
    }
    out
}

pub fn evaluate(bg: &CaptionAnalysis, syn: &CaptionAnalysis, inserted: &str, options: OracleOptions) -> MRVerdict {
    MRVerdict::from_details(check_mr1_with(bg, syn, inserted, options), check_mr2(bg, syn, inserted))
}

/// Same-caption relation for label-preserving transforms: true when suspicious.
pub fn check_baseline(orig_caption: &str, transformed_caption: &str) -> bool {
    normalize_caption(orig_caption) != normalize_caption(transformed_caption)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryHint {
    Classification,
    Recognition,
    SingularPlural,
}

impl fmt::Display for CategoryHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Classification => "classification",
            Self::Recognition => "recognition",
            Self::SingularPlural => "singular_plural",
        })
    }
}

/// Heuristic error categories for a violating verdict.
pub fn categorize(verdict: &MRVerdict) -> BTreeSet<CategoryHint> {
    let extra = verdict.has(ViolationKind::ExtraClass);
    let missing = verdict.has(ViolationKind::MissingClass) || verdict.has(ViolationKind::MissingInserted);
    let mut hints = BTreeSet::new();
    if extra {
        hints.insert(CategoryHint::Classification);
    } else if missing {
        hints.insert(CategoryHint::Recognition);
    }
    if verdict.mr2_violated {
        hints.insert(CategoryHint::SingularPlural);
    }
    hints
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Metamorphic,
    SameCaption,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionPair {
    pub background: String,
    pub synthesized: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanLabel {
    pub error: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspiciousIssue {
    pub schema: String,
    pub id: String,
    pub relation: Relation,
    pub background_id: String,
    pub synthesized_id: String,
    pub interval: usize,
    pub captions: CaptionPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inserted_class: Option<String>,
    pub verdict: MRVerdict,
    pub category_hints: BTreeSet<CategoryHint>,
    /// A caption used some class in both forms; its form was read as plural.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub form_conflict: bool,
    #[serde(default)]
    pub human_label: Option<HumanLabel>,
}

/// Identifies the synthesized image and the captions under comparison.
#[derive(Debug, Clone)]
pub struct PairContext<'a> {
    pub background_id: &'a str,
    pub synthesized_id: &'a str,
    pub interval: usize,
    pub inserted_class: &'a str,
}

/// Builds an issue when the verdict has at least one violation.
pub fn make_issue(
    ctx: &PairContext<'_>,
    bg: &CaptionAnalysis,
    syn: &CaptionAnalysis,
    verdict: MRVerdict,
) -> Option<SuspiciousIssue> {
    if !verdict.is_violation() {
        return None;
    }
    Some(SuspiciousIssue {
        schema: ISSUE_SCHEMA.to_string(),
        id: ctx.synthesized_id.to_string(),
        relation: Relation::Metamorphic,
        background_id: ctx.background_id.to_string(),
        synthesized_id: ctx.synthesized_id.to_string(),
        interval: ctx.interval,
        captions: CaptionPair {
            background: bg.caption.clone(),
            synthesized: syn.caption.clone(),
        },
        inserted_class: Some(ctx.inserted_class.to_string()),
        category_hints: categorize(&verdict),
        verdict,
        form_conflict: bg.has_conflict() || syn.has_conflict(),
        human_label: None,
    })
}

/// Builds a same-caption issue when the normalized captions differ.
pub fn make_baseline_issue(
    background_id: &str,
    transformed_id: &str,
    orig_caption: &str,
    transformed_caption: &str,
) -> Option<SuspiciousIssue> {
    if !check_baseline(orig_caption, transformed_caption) {
        return None;
    }
    Some(SuspiciousIssue {
        schema: ISSUE_SCHEMA.to_string(),
        id: transformed_id.to_string(),
        relation: Relation::SameCaption,
        background_id: background_id.to_string(),
        synthesized_id: transformed_id.to_string(),
        interval: 0,
        captions: CaptionPair {
            background: orig_caption.to_string(),
            synthesized: transformed_caption.to_string(),
        },
        inserted_class: None,
        verdict: MRVerdict::default(),
        category_hints: BTreeSet::new(),
        form_conflict: false,
        human_label: None,
    })
}
