//! Grading procedures: matching and quality resolution, the strength and
//! class protocols, bucket aggregation, mixed-evidence adjudication, B1
//! derivation, final grade assignment, tool label and bibliometric indices.
//!
//! Every function here is pure. Outputs never depend on the order of the
//! input study list: buckets sort their studies by id before anything is
//! counted or traced.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    BucketDirection, EvidenceBucket, EvidenceClass, GradeLevel, GradeResult, Label,
    MatchingVerdict, QualityVerdict, StrengthVerdict, StudyDirection, StudyRecord, ToolProfile,
};

token_enum! {
    #[derive(Default)]
    MatchingRule as "matching rule" {
        /// Every one of the seven fields must be present and true.
        #[default]
        StrictAll => "strict_all",
        /// Every reported field must be true; at least one must be reported.
        IgnoreMissing => "ignore_missing",
    }
}

token_enum! {
    #[derive(Default)]
    QualityRule as "quality rule" {
        /// Quality is an appraiser judgment; only `quality_override` counts.
        #[default]
        OverrideOnly => "override_only",
        /// High iff strictly more reported flags are true than false.
        MajorityOfFlags => "majority_of_flags",
    }
}

token_enum! {
    #[derive(Default)]
    TieFallback as "tie fallback" {
        /// A full tie resolves to mixed-negative and flags the bucket for review.
        #[default]
        ConservativeNegative => "conservative_negative",
        /// A full tie is an error that a human must adjudicate.
        FailWithReviewFlag => "fail_with_review_flag",
    }
}

/// Knobs for the places where the grading rules leave room for judgment.
/// Equivocal studies always count with the negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AppraisalPolicy {
    pub matching_rule: MatchingRule,
    pub quality_rule: QualityRule,
    pub final_tie_fallback: TieFallback,
}

impl AppraisalPolicy {
    /// Stable textual form recorded in justifications and reports.
    pub fn fingerprint(&self) -> String {
        format!(
            "matching={};quality={};equivocal=negative;tie={}",
            self.matching_rule, self.quality_rule, self.final_tie_fallback
        )
    }
}

impl fmt::Display for AppraisalPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fingerprint())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("study `{study_id}`: no matching_override and no matching fields reported")]
    UnresolvableMatching { study_id: String },
    #[error("study `{study_id}`: no quality_override under quality rule `override_only`")]
    UnresolvableQuality { study_id: String },
    #[error("evidence bucket is empty")]
    EmptyBucket,
    #[error("studies in one bucket must share tool and level: {detail}")]
    HeterogeneousBucket { detail: String },
    #[error("mixed protocol needs at least one positive and one non-positive study")]
    NotMixed,
    #[error("tool `{tool_id}` level {level}: evidence fully tied, adjudication required ({})", trace.join("; "))]
    AdjudicationRequired {
        tool_id: String,
        level: GradeLevel,
        trace: Vec<String>,
    },
    #[error("tool `{tool_id}` has no gradable evidence")]
    NoGradableEvidence { tool_id: String },
    #[error("study `{study_id}` belongs to tool `{found}`, not `{expected}`")]
    ToolMismatch {
        study_id: String,
        expected: String,
        found: String,
    },
    #[error("study `{study_id}`: {detail}")]
    InconsistentStudy { study_id: String, detail: String },
    #[error("reference year {reference_year} precedes tool year {tool_year}")]
    InvalidReferenceYear { reference_year: i32, tool_year: i32 },
}

fn check_tool(record: &StudyRecord, tool: &ToolProfile) -> Result<(), EngineError> {
    if record.tool_id != tool.id {
        return Err(EngineError::ToolMismatch {
            study_id: record.id.clone(),
            expected: tool.id.clone(),
            found: record.tool_id.clone(),
        });
    }
    Ok(())
}

pub fn resolve_matching(
    record: &StudyRecord,
    tool: &ToolProfile,
    policy: &AppraisalPolicy,
) -> Result<MatchingVerdict, EngineError> {
    check_tool(record, tool)?;
    if let Some(v) = record.matching_override {
        return Ok(v);
    }
    let fields = record.matching_fields.as_array();
    if fields.iter().all(Option::is_none) {
        return Err(EngineError::UnresolvableMatching {
            study_id: record.id.clone(),
        });
    }
    let matching = match policy.matching_rule {
        MatchingRule::StrictAll => fields.iter().all(|f| *f == Some(true)),
        MatchingRule::IgnoreMissing => fields.iter().flatten().all(|f| *f),
    };
    Ok(if matching {
        MatchingVerdict::Matching
    } else {
        MatchingVerdict::NonMatching
    })
}

pub fn resolve_quality(
    record: &StudyRecord,
    policy: &AppraisalPolicy,
) -> Result<QualityVerdict, EngineError> {
    if let Some(v) = record.quality_override {
        return Ok(v);
    }
    match policy.quality_rule {
        QualityRule::OverrideOnly => Err(EngineError::UnresolvableQuality {
            study_id: record.id.clone(),
        }),
        QualityRule::MajorityOfFlags => {
            let flags = record.quality_fields.as_array();
            let yes = flags.iter().filter(|f| **f == Some(true)).count();
            let no = flags.iter().filter(|f| **f == Some(false)).count();
            Ok(if yes > no {
                QualityVerdict::High
            } else {
                QualityVerdict::Low
            })
        }
    }
}

pub fn classify_strength(matching: MatchingVerdict, quality: QualityVerdict) -> StrengthVerdict {
    use MatchingVerdict::*;
    use QualityVerdict::*;
    match (matching, quality) {
        (Matching, High) => StrengthVerdict::Strong,
        (Matching, Low) | (NonMatching, High) => StrengthVerdict::Medium,
        (NonMatching, Low) => StrengthVerdict::Weak,
    }
}

pub fn classify_evidence_class(
    matching: MatchingVerdict,
    quality: QualityVerdict,
) -> EvidenceClass {
    use MatchingVerdict::*;
    use QualityVerdict::*;
    match (matching, quality) {
        (Matching, High) => EvidenceClass::A,
        (Matching, Low) | (NonMatching, High) => EvidenceClass::B,
        (NonMatching, Low) => EvidenceClass::C,
    }
}

/// A study with whatever appraisal verdicts could be resolved for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppraisedStudy {
    pub record: StudyRecord,
    pub matching: Option<MatchingVerdict>,
    pub quality: Option<QualityVerdict>,
    pub strength: Option<StrengthVerdict>,
}

/// Resolves matching, quality and strength for each record. Verdicts that
/// cannot be resolved under `policy` are left empty.
pub fn appraise_studies(
    tool: &ToolProfile,
    studies: &[StudyRecord],
    policy: &AppraisalPolicy,
) -> Vec<AppraisedStudy> {
    studies
        .iter()
        .map(|record| {
            let matching = resolve_matching(record, tool, policy).ok();
            let quality = resolve_quality(record, policy).ok();
            let strength = matching.zip(quality).map(|(m, q)| classify_strength(m, q));
            AppraisedStudy {
                record: record.clone(),
                matching,
                quality,
                strength,
            }
        })
        .collect()
}

fn resolve_class(
    record: &StudyRecord,
    tool: &ToolProfile,
    policy: &AppraisalPolicy,
) -> Result<EvidenceClass, EngineError> {
    let matching = resolve_matching(record, tool, policy)?;
    let quality = resolve_quality(record, policy)?;
    Ok(classify_evidence_class(matching, quality))
}

/// Positive and negative (negative or equivocal) counts per evidence class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassTally {
    positive: [usize; 3],
    negative: [usize; 3],
}

fn class_index(class: EvidenceClass) -> usize {
    match class {
        EvidenceClass::A => 0,
        EvidenceClass::B => 1,
        EvidenceClass::C => 2,
    }
}

impl ClassTally {
    pub fn add(&mut self, class: EvidenceClass, direction: StudyDirection) {
        let i = class_index(class);
        if direction.is_positive() {
            self.positive[i] += 1;
        } else {
            self.negative[i] += 1;
        }
    }

    pub fn positive(&self, class: EvidenceClass) -> usize {
        self.positive[class_index(class)]
    }

    pub fn negative(&self, class: EvidenceClass) -> usize {
        self.negative[class_index(class)]
    }

    fn scope(&self, classes: usize) -> (usize, usize) {
        (
            self.positive[..classes].iter().sum(),
            self.negative[..classes].iter().sum(),
        )
    }
}

impl FromIterator<(EvidenceClass, StudyDirection)> for ClassTally {
    fn from_iter<I: IntoIterator<Item = (EvidenceClass, StudyDirection)>>(iter: I) -> Self {
        let mut tally = ClassTally::default();
        for (class, direction) in iter {
            tally.add(class, direction);
        }
        tally
    }
}

/// Direction reached by the mixed-evidence cascade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedOutcome {
    pub direction: BucketDirection,
    pub needs_review: bool,
    pub trace: Vec<String>,
}

/// The cascade on pre-classified counts.
///
/// Class A decides alone when it has a majority. Otherwise the scope widens
/// to A+B and then to A+B+C. A tie across every class falls back to
/// `fallback`. Under [`TieFallback::FailWithReviewFlag`] that tie is an
/// `Err` carrying the trace so far.
pub fn adjudicate(tally: &ClassTally, fallback: TieFallback) -> Result<MixedOutcome, Vec<String>> {
    let mut trace = vec![format!(
        "step 1: class A {}+/{}-, class B {}+/{}-, class C {}+/{}-",
        tally.positive[0],
        tally.negative[0],
        tally.positive[1],
        tally.negative[1],
        tally.positive[2],
        tally.negative[2],
    )];
    const SCOPES: [(&str, usize); 3] = [("class A", 1), ("classes A+B", 2), ("classes A+B+C", 3)];
    for (step, (name, width)) in SCOPES.iter().enumerate() {
        let step = step + 2;
        let (p, n) = tally.scope(*width);
        if p + n == 0 {
            trace.push(format!("step {step}: {name} empty, widening"));
            continue;
        }
        if p != n {
            let direction = if p > n {
                BucketDirection::MixedPositive
            } else {
                BucketDirection::MixedNegative
            };
            trace.push(format!(
                "step {step}: {name} {p} positive vs {n} negative/equivocal, direction {direction}"
            ));
            return Ok(MixedOutcome {
                direction,
                needs_review: false,
                trace,
            });
        }
        trace.push(format!("step {step}: {name} tied {p}-{n}, widening"));
    }
    match fallback {
        TieFallback::ConservativeNegative => {
            trace.push(
                "step 5: full tie, reported criteria must be compared by hand; \
                 defaulting to mixed_negative and flagging for review"
                    .to_string(),
            );
            Ok(MixedOutcome {
                direction: BucketDirection::MixedNegative,
                needs_review: true,
                trace,
            })
        }
        TieFallback::FailWithReviewFlag => {
            trace.push("step 5: full tie, adjudication required".to_string());
            Err(trace)
        }
    }
}

/// Resolves a conflicting set of studies with the mixed-evidence cascade.
pub fn mixed_protocol(
    studies: &[StudyRecord],
    tool: &ToolProfile,
    policy: &AppraisalPolicy,
) -> Result<MixedOutcome, EngineError> {
    let any_positive = studies.iter().any(|s| s.direction.is_positive());
    let any_negative = studies.iter().any(|s| !s.direction.is_positive());
    if !(any_positive && any_negative) {
        return Err(EngineError::NotMixed);
    }
    let mut tally = ClassTally::default();
    for s in studies {
        tally.add(resolve_class(s, tool, policy)?, s.direction);
    }
    adjudicate(&tally, policy.final_tie_fallback).map_err(|trace| {
        EngineError::AdjudicationRequired {
            tool_id: tool.id.clone(),
            level: studies
                .first()
                .and_then(|s| s.level)
                .unwrap_or(GradeLevel::C0),
            trace,
        }
    })
}

fn build_bucket(
    tool: &ToolProfile,
    level: GradeLevel,
    mut studies: Vec<StudyRecord>,
    policy: &AppraisalPolicy,
) -> Result<EvidenceBucket, EngineError> {
    if studies.is_empty() {
        return Err(EngineError::EmptyBucket);
    }
    studies.sort_by(|a, b| a.id.cmp(&b.id));
    let positives = studies.iter().filter(|s| s.direction.is_positive()).count();
    let total = studies.len();
    let (direction, needs_review, adjudication_trace) = if positives == total {
        (
            BucketDirection::Positive,
            false,
            vec![format!("all {total} studies positive")],
        )
    } else if positives == 0 {
        (
            BucketDirection::Negative,
            false,
            vec![format!("all {total} studies negative or equivocal")],
        )
    } else {
        let outcome = mixed_protocol(&studies, tool, policy).map_err(|e| match e {
            EngineError::AdjudicationRequired { tool_id, trace, .. } => {
                EngineError::AdjudicationRequired {
                    tool_id,
                    level,
                    trace,
                }
            }
            other => other,
        })?;
        (outcome.direction, outcome.needs_review, outcome.trace)
    };
    Ok(EvidenceBucket {
        tool_id: tool.id.clone(),
        level,
        studies,
        derived_from: Vec::new(),
        direction,
        needs_review,
        adjudication_trace,
    })
}

/// Aggregates the studies of one tool at one level into a bucket.
pub fn aggregate_bucket(
    studies: &[StudyRecord],
    tool: &ToolProfile,
    policy: &AppraisalPolicy,
) -> Result<EvidenceBucket, EngineError> {
    let first = studies.first().ok_or(EngineError::EmptyBucket)?;
    let level = first
        .level
        .ok_or_else(|| EngineError::HeterogeneousBucket {
            detail: format!("study `{}` carries no level", first.id),
        })?;
    for s in studies {
        check_tool(s, tool)?;
        if s.level != Some(level) {
            return Err(EngineError::HeterogeneousBucket {
                detail: format!(
                    "study `{}` has level {}, expected {level}",
                    s.id,
                    s.level.map_or("none", |l| l.token())
                ),
            });
        }
    }
    build_bucket(tool, level, studies.to_vec(), policy)
}

/// Combines qualifying B2 and B3 buckets into the derived B1 bucket.
pub fn derive_b1(
    b2: Option<&EvidenceBucket>,
    b3: Option<&EvidenceBucket>,
) -> Option<EvidenceBucket> {
    let (b2, b3) = (b2?, b3?);
    if !(b2.direction.qualifies() && b3.direction.qualifies()) {
        return None;
    }
    let direction =
        if b2.direction == BucketDirection::Positive && b3.direction == BucketDirection::Positive {
            BucketDirection::Positive
        } else {
            BucketDirection::MixedPositive
        };
    Some(EvidenceBucket {
        tool_id: b2.tool_id.clone(),
        level: GradeLevel::B1,
        studies: Vec::new(),
        derived_from: vec![GradeLevel::B2, GradeLevel::B3],
        direction,
        needs_review: b2.needs_review || b3.needs_review,
        adjudication_trace: vec![format!(
            "derived from B2 ({}) and B3 ({}), direction {direction}",
            b2.direction, b3.direction
        )],
    })
}

fn describe_bucket(b: &EvidenceBucket) -> String {
    if b.derived_from.is_empty() {
        let n = b.studies.len();
        format!(
            "{} ({}, {n} {})",
            b.level,
            b.direction,
            if n == 1 { "study" } else { "studies" }
        )
    } else {
        format!("{} ({}, derived from B2 and B3)", b.level, b.direction)
    }
}

/// Grades one tool from its studies.
///
/// External validations form a single bucket: C1 when two or more distinct
/// studies exist, C2 for exactly one. Development records without a level
/// are metadata and do not count as evidence.
pub fn assign_grade(
    tool: &ToolProfile,
    studies: &[StudyRecord],
    policy: &AppraisalPolicy,
) -> Result<GradeResult, EngineError> {
    let mut by_level: BTreeMap<GradeLevel, Vec<StudyRecord>> = BTreeMap::new();
    let mut external: Vec<StudyRecord> = Vec::new();
    for s in studies {
        check_tool(s, tool)?;
        let Some(level) = s.level else { continue };
        match level {
            GradeLevel::C0 | GradeLevel::B1 => {
                return Err(EngineError::InconsistentStudy {
                    study_id: s.id.clone(),
                    detail: format!("level {level} is never carried by a raw study"),
                })
            }
            GradeLevel::C1 | GradeLevel::C2 => external.push(s.clone()),
            _ => by_level.entry(level).or_default().push(s.clone()),
        }
    }
    if !external.is_empty() {
        let distinct: BTreeSet<&str> = external.iter().map(|s| s.id.as_str()).collect();
        let level = if distinct.len() >= 2 {
            GradeLevel::C1
        } else {
            GradeLevel::C2
        };
        by_level.insert(level, external);
    }
    if by_level.is_empty() {
        return Err(EngineError::NoGradableEvidence {
            tool_id: tool.id.clone(),
        });
    }

    let mut buckets = by_level
        .into_iter()
        .map(|(level, group)| build_bucket(tool, level, group, policy))
        .collect::<Result<Vec<_>, _>>()?;
    let find = |lvl: GradeLevel| buckets.iter().find(|b| b.level == lvl);
    if let Some(b1) = derive_b1(find(GradeLevel::B2), find(GradeLevel::B3)) {
        buckets.push(b1);
    }
    buckets.sort_by_key(|b| std::cmp::Reverse(b.level));

    let supporting = buckets.iter().position(|b| b.direction.qualifies());
    let considered = &buckets[..supporting.map_or(buckets.len(), |i| i + 1)];
    let needs_review = considered.iter().any(|b| b.needs_review);
    let failed: Vec<String> = buckets[..supporting.unwrap_or(buckets.len())]
        .iter()
        .map(describe_bucket)
        .collect();

    let mut justification = format!("Policy {}. ", policy.fingerprint());
    let (final_grade, direction, supporting_bucket) = match supporting {
        Some(i) => {
            let b = &buckets[i];
            justification.push_str(&format!(
                "Graded {} on the {} bucket ({}).",
                b.level,
                b.level,
                describe_bucket(b)
            ));
            if failed.is_empty() {
                justification.push_str(" No higher bucket exists.");
            } else {
                justification.push_str(&format!(
                    " Higher buckets without positive evidence: {}.",
                    failed.join(", ")
                ));
            }
            (b.level, b.direction, Some(b.clone()))
        }
        None => {
            justification.push_str(&format!(
                "Graded C0: no bucket carries positive or mixed-positive evidence. Buckets considered: {}.",
                failed.join(", ")
            ));
            (GradeLevel::C0, buckets[0].direction, None)
        }
    };
    if needs_review {
        justification.push_str(" A tied bucket was resolved conservatively and needs review.");
    }

    let mut result = GradeResult {
        tool_id: tool.id.clone(),
        final_grade,
        direction,
        supporting_bucket,
        tool_label: None,
        justification,
        needs_review,
        all_buckets: buckets,
    };
    result.tool_label = tool_label(&result);
    Ok(result)
}

/// `"Grade {level} - {word}"` for the most frequent label among the
/// positive studies of the supporting bucket.
pub fn tool_label(result: &GradeResult) -> Option<String> {
    if result.final_grade == GradeLevel::C0 {
        return None;
    }
    let bucket = result.supporting_bucket.as_ref()?;
    let sources: Vec<&EvidenceBucket> = if bucket.derived_from.is_empty() {
        vec![bucket]
    } else {
        bucket
            .derived_from
            .iter()
            .filter_map(|lvl| result.bucket(*lvl))
            .collect()
    };
    let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
    for study in sources
        .iter()
        .flat_map(|b| &b.studies)
        .filter(|s| s.direction.is_positive())
    {
        for label in &study.label {
            *counts.entry(*label).or_default() += 1;
        }
    }
    let (best, _) = counts
        .into_iter()
        .min_by_key(|(label, count)| (std::cmp::Reverse(*count), label.priority()))?;
    Some(format!("Grade {} - {}", result.final_grade, best.word()))
}

/// Checks the grade/bucket coupling rules on a finished result.
pub fn check_result_invariants(result: &GradeResult) -> Result<(), String> {
    let first_qualifying = GradeLevel::SCAN_ORDER
        .iter()
        .filter_map(|lvl| result.bucket(*lvl))
        .find(|b| b.direction.qualifies());
    match (result.final_grade, first_qualifying) {
        (GradeLevel::C0, None) => {
            if result.direction.qualifies() {
                return Err(format!(
                    "{}: C0 paired with direction {}",
                    result.tool_id, result.direction
                ));
            }
            Ok(())
        }
        (GradeLevel::C0, Some(b)) => Err(format!(
            "{}: graded C0 although bucket {} qualifies",
            result.tool_id, b.level
        )),
        (grade, Some(b)) if b.level == grade => {
            let supporting = result
                .supporting_bucket
                .as_ref()
                .ok_or_else(|| format!("{}: missing supporting bucket", result.tool_id))?;
            if supporting.level != grade || !result.direction.qualifies() {
                return Err(format!(
                    "{}: grade {grade} not backed by a qualifying supporting bucket",
                    result.tool_id
                ));
            }
            Ok(())
        }
        (grade, _) => Err(format!(
            "{}: grade {grade} does not match the qualifying-bucket scan",
            result.tool_id
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BibliometricIndices {
    /// Average annual citations.
    pub citation_index: f64,
    /// Average annual studies.
    pub publication_index: f64,
    /// Citations times studies.
    pub literature_index: u64,
}

/// Age counts the publication year itself, so a tool published in
/// `reference_year` has age 1.
pub fn compute_indices(
    tool: &ToolProfile,
    reference_year: i32,
) -> Result<BibliometricIndices, EngineError> {
    if reference_year < tool.year {
        return Err(EngineError::InvalidReferenceYear {
            reference_year,
            tool_year: tool.year,
        });
    }
    let age = f64::from(reference_year - tool.year + 1);
    Ok(BibliometricIndices {
        citation_index: tool.tool_citations as f64 / age,
        publication_index: tool.studies_count as f64 / age,
        literature_index: tool.tool_citations * tool.studies_count,
    })
}
