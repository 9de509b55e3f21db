//! Precision against human labels, per-interval run statistics and rendering.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{CategoryHint, HumanLabel, SuspiciousIssue};

/// Erroneous over labeled issues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precision {
    pub erroneous: usize,
    pub labeled: usize,
}

impl Precision {
    pub fn value(&self) -> Option<f64> {
        (self.labeled > 0).then(|| self.erroneous as f64 / self.labeled as f64)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(p) => write!(f, "{}/{} = {p:.4}", self.erroneous, self.labeled),
            None => f.write_str("n/a"),
        }
    }
}

fn unlabeled_ids(issues: &[SuspiciousIssue]) -> Vec<String> {
    issues.iter().filter(|i| i.human_label.is_none()).map(|i| i.id.clone()).collect()
}

/// Precision over `issues`; every issue must carry a human label.
pub fn precision(issues: &[SuspiciousIssue]) -> Result<Precision> {
    let missing = unlabeled_ids(issues);
    if !missing.is_empty() {
        return Err(Error::UnlabeledIssues(missing));
    }
    Ok(precision_partial(issues))
}

/// Precision over the labeled subset only.
pub fn precision_partial(issues: &[SuspiciousIssue]) -> Precision {
    let labels: Vec<&HumanLabel> = issues.iter().filter_map(|i| i.human_label.as_ref()).collect();
    Precision {
        erroneous: labels.iter().filter(|l| l.error).count(),
        labeled: labels.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub interval: usize,
    pub pairs: usize,
    pub suspicious: usize,
    pub labeled: usize,
    pub erroneous: usize,
    pub precision: Option<f64>,
}

impl IntervalStats {
    fn new(interval: usize, pairs: usize) -> Self {
        Self {
            interval,
            pairs,
            suspicious: 0,
            labeled: 0,
            erroneous: 0,
            precision: None,
        }
    }

    fn finish(&mut self) {
        self.precision = Precision {
            erroneous: self.erroneous,
            labeled: self.labeled,
        }
        .value();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub provider_id: String,
    pub intervals: Vec<IntervalStats>,
    pub overall: IntervalStats,
    pub categories: BTreeMap<CategoryHint, usize>,
    /// Precision covers only the labeled subset of issues.
    #[serde(default)]
    pub partial: bool,
}

impl RunSummary {
    pub fn empty(provider_id: &str) -> Self {
        let mut overall = IntervalStats::new(0, 0);
        overall.finish();
        Self {
            provider_id: provider_id.to_string(),
            intervals: Vec::new(),
            overall,
            categories: BTreeMap::new(),
            partial: false,
        }
    }
}

/// Aggregates issues per interval. `pairs_per_interval[i]` is the number of
/// caption pairs compared at interval `i`. Unlabeled issues are an error
/// unless `partial` is set.
pub fn summarize(
    provider_id: &str,
    pairs_per_interval: &[usize],
    issues: &[SuspiciousIssue],
    partial: bool,
) -> Result<RunSummary> {
    if !partial {
        let missing = unlabeled_ids(issues);
        if !missing.is_empty() {
            return Err(Error::UnlabeledIssues(missing));
        }
    }
    let mut intervals: Vec<IntervalStats> = pairs_per_interval
        .iter()
        .enumerate()
        .map(|(i, &p)| IntervalStats::new(i, p))
        .collect();
    let mut categories = BTreeMap::new();
    for issue in issues {
        let Some(stats) = intervals.get_mut(issue.interval) else {
            return Err(Error::InvalidInput(format!(
                "issue {} has interval {} but the run has {} interval(s)",
                issue.id,
                issue.interval,
                pairs_per_interval.len()
            )));
        };
        stats.suspicious += 1;
        if let Some(label) = &issue.human_label {
            stats.labeled += 1;
            stats.erroneous += label.error as usize;
        }
        for hint in &issue.category_hints {
            *categories.entry(*hint).or_default() += 1;
        }
    }
    let mut overall = IntervalStats::new(0, 0);
    for s in &mut intervals {
        if s.suspicious > s.pairs {
            return Err(Error::InvalidInput(format!(
                "interval {} has {} issues but only {} pairs",
                s.interval, s.suspicious, s.pairs
            )));
        }
        s.finish();
        overall.pairs += s.pairs;
        overall.suspicious += s.suspicious;
        overall.labeled += s.labeled;
        overall.erroneous += s.erroneous;
    }
    overall.finish();
    Ok(RunSummary {
        provider_id: provider_id.to_string(),
        intervals,
        overall,
        categories,
        partial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Text,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::InvalidInput(format!("unknown report format {other}"))),
        }
    }
}

const PARTIAL_CAVEAT: &str = "precision computed over labeled issues only; unlabeled issues are excluded";

fn fmt_precision(p: Option<f64>) -> String {
    p.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

fn row_cells(label: &str, s: &IntervalStats) -> [String; 6] {
    [
        label.to_string(),
        s.pairs.to_string(),
        s.suspicious.to_string(),
        s.labeled.to_string(),
        s.erroneous.to_string(),
        fmt_precision(s.precision),
    ]
}

const HEADER: [&str; 6] = ["interval", "pairs", "suspicious", "labeled", "erroneous", "precision"];

pub fn render_report(summary: &RunSummary, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => render_text(summary),
        ReportFormat::Markdown => render_markdown(summary),
    }
}

fn rows(summary: &RunSummary) -> Vec<[String; 6]> {
    let mut rows: Vec<[String; 6]> = summary
        .intervals
        .iter()
        .map(|s| row_cells(&format!("ratio_{}", s.interval), s))
        .collect();
    if !summary.intervals.is_empty() {
        rows.push(row_cells("overall", &summary.overall));
    }
    rows
}

fn render_text(summary: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "provider: {}", summary.provider_id);
    let _ = writeln!(
        out,
        "{:<10} {:>8} {:>11} {:>8} {:>10} {:>10}",
        HEADER[0], HEADER[1], HEADER[2], HEADER[3], HEADER[4], HEADER[5]
    );
    for r in rows(summary) {
        let _ = writeln!(out, "{:<10} {:>8} {:>11} {:>8} {:>10} {:>10}", r[0], r[1], r[2], r[3], r[4], r[5]);
    }
    if !summary.categories.is_empty() {
        let _ = writeln!(out, "\n{:<16} {:>7}", "category", "issues");
        for (c, n) in &summary.categories {
            let _ = writeln!(out, "{:<16} {n:>7}", c.to_string());
        }
    }
    if summary.partial {
        let _ = writeln!(out, "\nnote: {PARTIAL_CAVEAT}");
    }
    out
}

fn render_markdown(summary: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Run report: {}\n", summary.provider_id);
    let _ = writeln!(out, "| {} |", HEADER.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(HEADER.len()));
    for r in rows(summary) {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    if !summary.categories.is_empty() {
        let _ = writeln!(out, "\n| category | issues |\n|---|---|");
        for (c, n) in &summary.categories {
            let _ = writeln!(out, "| {c} | {n} |");
        }
    }
    if summary.partial {
        let _ = writeln!(out, "\n> {PARTIAL_CAVEAT}");
    }
    out
}

/// One line of a labels file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub error: bool,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMerge {
    pub applied: usize,
    /// Ids labeled more than once; the last label was kept.
    pub duplicates: Vec<String>,
}

/// Attaches labels to issues by id. Labels naming unknown issues fail the
/// whole merge.
pub fn label_issues(issues: &mut [SuspiciousIssue], labels: &[LabelRecord]) -> Result<LabelMerge> {
    let index: HashMap<String, usize> = issues.iter().enumerate().map(|(i, x)| (x.id.clone(), i)).collect();
    let mut unknown: Vec<String> = labels
        .iter()
        .filter(|l| !index.contains_key(&l.id))
        .map(|l| l.id.clone())
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(Error::UnknownIssueId(unknown));
    }
    let mut last: BTreeMap<&str, &LabelRecord> = BTreeMap::new();
    let mut merge = LabelMerge::default();
    for l in labels {
        if last.insert(l.id.as_str(), l).is_some() && !merge.duplicates.contains(&l.id) {
            log::warn!("issue {} labeled more than once; keeping the last label", l.id);
            merge.duplicates.push(l.id.clone());
        }
    }
    for (id, l) in last {
        issues[index[id]].human_label = Some(HumanLabel {
            error: l.error,
            notes: l.notes.clone(),
        });
        merge.applied += 1;
    }
    Ok(merge)
}

/// File form of [`label_issues`]: reads issues and labels JSONL, writes the merged issues.
pub fn label_issue_file(issue_file: &Path, labels_file: &Path, out: &Path) -> Result<LabelMerge> {
    let mut issues: Vec<SuspiciousIssue> = crate::io::read_jsonl(issue_file)?;
    let labels: Vec<LabelRecord> = crate::io::read_jsonl(labels_file)?;
    let merge = label_issues(&mut issues, &labels)?;
    crate::io::write_jsonl(out, &issues)?;
    Ok(merge)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;
    use crate::oracle::{CaptionPair, MRVerdict, Relation, ISSUE_SCHEMA};

    fn issue(id: &str, interval: usize, label: Option<bool>) -> SuspiciousIssue {
        SuspiciousIssue {
            schema: ISSUE_SCHEMA.into(),
            id: id.into(),
            relation: Relation::Metamorphic,
            background_id: "b".into(),
            synthesized_id: id.into(),
            interval,
            captions: CaptionPair {
                background: "a dog".into(),
                synthesized: "a dog".into(),
            },
            inserted_class: Some("cat".into()),
            verdict: MRVerdict {
                mr1_violated: true,
                ..Default::default()
            },
            category_hints: BTreeSet::from([CategoryHint::Recognition]),
            form_conflict: false,
            human_label: label.map(|error| HumanLabel { error, notes: String::new() }),
        }
    }

    #[test]
    fn precision_examples() {
        let p = precision(&[issue("a", 0, Some(true)), issue("b", 0, Some(false)), issue("c", 0, Some(true))]).unwrap();
        assert_eq!((p.erroneous, p.labeled), (2, 3));
        assert_eq!(precision(&[issue("a", 0, Some(true))]).unwrap().value(), Some(1.0));
        let many: Vec<_> = (0..20).map(|i| issue(&i.to_string(), 0, Some(i != 7))).collect();
        assert_eq!(precision(&many).unwrap().value(), Some(0.95));
    }

    #[test]
    fn unlabeled_issues_rejected_unless_partial() {
        let issues = [issue("a", 0, Some(true)), issue("b", 1, None)];
        match precision(&issues) {
            Err(Error::UnlabeledIssues(ids)) => assert_eq!(ids, ["b"]),
            other => panic!("{other:?}"),
        }
        assert!(summarize("p", &[5, 5], &issues, false).is_err());
        let s = summarize("p", &[5, 5], &issues, true).unwrap();
        assert_eq!(s.overall.labeled, 1);
        assert!(render_report(&s, ReportFormat::Text).contains("labeled issues only"));
    }

    #[test]
    fn summary_counts_per_interval() {
        let issues = [issue("a", 0, Some(true)), issue("b", 2, Some(false)), issue("c", 2, Some(true))];
        let s = summarize("p", &[4, 4, 4], &issues, false).unwrap();
        assert_eq!(s.intervals[2].precision, Some(0.5));
        assert_eq!(s.intervals[1].precision, None);
        assert_eq!(s.overall.pairs, 12);
        assert_eq!(s.overall.precision, Some(2.0 / 3.0));
        assert_eq!(s.categories[&CategoryHint::Recognition], 3);
        assert!(summarize("p", &[4], &issues, false).is_err());
    }

    #[test]
    fn renderings() {
        let empty = RunSummary::empty("p");
        let text = render_report(&empty, ReportFormat::Markdown);
        assert_eq!(text.lines().filter(|l| l.starts_with('|')).count(), 2);
        let s = summarize("p", &[3, 3], &[issue("a", 1, Some(true))], false).unwrap();
        let md = render_report(&s, ReportFormat::Markdown);
        assert!(md.contains("| ratio_0 |") && md.contains("| ratio_1 | 3 | 1 | 1 | 1 | 1.0000 |"));
        assert_eq!(md, render_report(&s, ReportFormat::Markdown));
        let back: RunSummary = serde_json::from_str(&render_report(&s, ReportFormat::Json)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn label_merging() {
        let mut issues = vec![issue("a", 0, None), issue("b", 0, None)];
        assert_eq!(label_issues(&mut issues, &[]).unwrap(), LabelMerge::default());
        assert!(issues.iter().all(|i| i.human_label.is_none()));
        let label = |id: &str, error: bool| LabelRecord { id: id.into(), error, notes: String::new() };
        let merge = label_issues(&mut issues, &[label("a", true), label("b", true), label("a", false)]).unwrap();
        assert_eq!(merge.duplicates, ["a"]);
        assert!(!issues[0].human_label.as_ref().unwrap().error);
        assert!(issues.iter().all(|i| i.human_label.is_some()));
        match label_issues(&mut issues, &[label("zz", true)]) {
            Err(Error::UnknownIssueId(ids)) => assert_eq!(ids, ["zz"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn label_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l, o) = (dir.path().join("i.jsonl"), dir.path().join("l.jsonl"), dir.path().join("o.jsonl"));
        crate::io::write_jsonl(&i, &[issue("a", 0, None)]).unwrap();
        std::fs::write(&l, "{\"id\":\"a\",\"error\":true,\"notes\":\"cow called horse\"}\n").unwrap();
        label_issue_file(&i, &l, &o).unwrap();
        let merged: Vec<SuspiciousIssue> = crate::io::read_jsonl(&o).unwrap();
        assert_eq!(merged[0].human_label.as_ref().unwrap().notes, "cow called horse");
    }

    proptest! {
        #[test]
        fn precision_ignores_order(labels in prop::collection::vec(any::<bool>(), 1..40), seed in any::<u64>()) {
            let issues: Vec<_> = labels.iter().enumerate().map(|(i, &e)| issue(&i.to_string(), 0, Some(e))).collect();
            let mut shuffled = issues.clone();
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(precision(&issues).unwrap(), precision(&shuffled).unwrap());
        }

        #[test]
        fn overall_is_pooled(assign in prop::collection::vec((0usize..4, any::<bool>()), 0..40)) {
            let issues: Vec<_> = assign.iter().enumerate().map(|(i, &(iv, e))| issue(&i.to_string(), iv, Some(e))).collect();
            let s = summarize("p", &[40; 4], &issues, false).unwrap();
            let err: usize = s.intervals.iter().map(|x| x.erroneous).sum();
            let lab: usize = s.intervals.iter().map(|x| x.labeled).sum();
            prop_assert_eq!(s.overall.precision, Precision { erroneous: err, labeled: lab }.value());
            for x in &s.intervals {
                prop_assert!(x.erroneous <= x.labeled && x.labeled <= x.suspicious && x.suspicious <= x.pairs);
            }
        }
    }
}
