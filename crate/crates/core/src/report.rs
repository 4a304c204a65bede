//! Detailed tool reports and per-study evidence summaries.
//!
//! Markdown output is plain CommonMark tables. Colour codes become the
//! textual tags `[POSITIVE]`, `[NEGATIVE]` and `[IMPORTANT]`. Rendering is
//! deterministic: the only time-dependent field is the optional
//! `generated_at` stamp supplied by the caller.

use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::{AppraisalPolicy, AppraisedStudy, BibliometricIndices};
use crate::model::{
    BucketDirection, GradeLevel, GradeResult, InputSource, InputType, MatchingVerdict, Phase,
    QualityVerdict, StrengthVerdict, StudyDirection, StudyType, ToolProfile,
};

/// Placeholder for absent values.
pub const ABSENT: &str = "—";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    MarkdownTable4,
    MarkdownTable3Legacy,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportBody {
    Text(String),
    Structured(serde_json::Value),
}

impl ReportBody {
    /// Markdown text, or pretty-printed JSON for structured bodies.
    pub fn to_text(&self) -> String {
        match self {
            ReportBody::Text(t) => t.clone(),
            ReportBody::Structured(v) => {
                let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedReport {
    pub tool_id: String,
    pub format: ReportFormat,
    pub body: ReportBody,
    pub generated_at: Option<DateTime<Utc>>,
    pub engine_policy: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("format {format:?} is not supported for the {document}")]
    FormatUnsupported {
        format: ReportFormat,
        document: &'static str,
    },
    #[error("study `{study_id}` has no resolved strength of evidence")]
    UnresolvedStrength { study_id: String },
    #[error("grade result belongs to `{result}`, not tool `{tool}`")]
    ToolMismatch { tool: String, result: String },
}

/// Caller-supplied rendering context.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderOptions {
    pub policy: AppraisalPolicy,
    pub generated_at: Option<DateTime<Utc>>,
}

/// Structured body of a detailed report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailedReportData {
    pub tool: ToolProfile,
    pub result: GradeResult,
    pub indices: BibliometricIndices,
}

pub fn phase_text(phase: Phase) -> &'static str {
    match phase {
        Phase::BeforeImplementation => "Before Implementation",
        Phase::PlanningForImplementation => "Planning for Implementation",
        Phase::AfterImplementation => "After Implementation",
    }
}

pub fn study_type_text(t: StudyType) -> &'static str {
    match t {
        StudyType::Development => "Development",
        StudyType::InternalValidation => "Internal Validation",
        StudyType::ExternalValidation => "External Validation",
        StudyType::Usability => "Usability",
        StudyType::PotentialEffect => "Potential Effect",
        StudyType::PostImplementationImpact => "Post-Implementation Impact",
    }
}

pub fn study_direction_text(d: StudyDirection) -> &'static str {
    match d {
        StudyDirection::Positive => "Positive",
        StudyDirection::Equivocal => "Equivocal",
        StudyDirection::Negative => "Negative",
    }
}

pub fn bucket_direction_text(d: BucketDirection) -> &'static str {
    match d {
        BucketDirection::Positive => "Positive Evidence",
        BucketDirection::Negative => "Negative Evidence",
        BucketDirection::MixedPositive => "Mixed Evidence Supporting Positive Conclusion",
        BucketDirection::MixedNegative => "Mixed Evidence Supporting Negative Conclusion",
    }
}

pub fn matching_text(m: MatchingVerdict) -> &'static str {
    match m {
        MatchingVerdict::Matching => "Matching",
        MatchingVerdict::NonMatching => "Non-Matching",
    }
}

pub fn quality_text(q: QualityVerdict) -> &'static str {
    match q {
        QualityVerdict::High => "High Quality",
        QualityVerdict::Low => "Low Quality",
    }
}

pub fn strength_text(s: StrengthVerdict) -> &'static str {
    match s {
        StrengthVerdict::Strong => "Strong Evidence",
        StrengthVerdict::Medium => "Medium Evidence",
        StrengthVerdict::Weak => "Weak Evidence",
    }
}

fn direction_tag(d: BucketDirection) -> &'static str {
    if d.qualifies() {
        "[POSITIVE]"
    } else {
        "[NEGATIVE]"
    }
}

fn tagged_direction(d: BucketDirection, needs_review: bool) -> String {
    let mut s = format!("{} {}", direction_tag(d), bucket_direction_text(d));
    if needs_review {
        s.push_str(" [IMPORTANT] needs review");
    }
    s
}

/// Escapes a value for a single Markdown table cell.
fn cell(value: &str) -> String {
    if value.is_empty() {
        return ABSENT.to_string();
    }
    value
        .replace('\\', "\\\\")
        .replace('|', "\\|")
        .replace(['\r', '\n'], " ")
}

fn opt_cell(value: Option<&str>) -> String {
    value.map_or_else(|| ABSENT.to_string(), cell)
}

fn yes_no(v: bool) -> &'static str {
    if v {
        "Yes"
    } else {
        "No"
    }
}

fn input_source_text(t: &ToolProfile) -> String {
    t.input_source
        .iter()
        .map(|s| match s {
            InputSource::Clinical => "Clinical",
            InputSource::NonClinical => "Non-Clinical",
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn input_type_text(t: &ToolProfile) -> String {
    t.input_type
        .iter()
        .map(|s| match s {
            InputType::Objective => "Objective",
            InputType::Subjective => "Subjective",
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn category_text(t: &ToolProfile) -> &'static str {
    use crate::model::ToolCategory::*;
    match t.category {
        Diagnostic => "Diagnostic",
        Therapeutic => "Therapeutic",
        Prognostic => "Prognostic",
        Preventive => "Preventive",
    }
}

fn automation_text(t: &ToolProfile) -> &'static str {
    match t.automation {
        crate::model::Automation::Manual => "Manual",
        crate::model::Automation::Automated => "Automated",
    }
}

/// Field rows of the tool information block, in report order.
pub const TABLE4_INFO_FIELDS: [&str; 28] = [
    "Name",
    "Author",
    "Country",
    "Year",
    "Category",
    "Intended use",
    "Intended user",
    "Clinical area",
    "Target Population",
    "Target Outcome",
    "Action",
    "Input source",
    "Input type",
    "Local context",
    "Methodology",
    "Internal Validation",
    "Dedicated Support",
    "Endorsement",
    "Automation Flag",
    "Tool Citations",
    "Studies",
    "Authors No",
    "Sample Size",
    "Journal Name",
    "Journal Rank",
    "Citation Index",
    "Publication Index",
    "Literature Index",
];

/// Rows following the grade ladder, in report order.
pub const TABLE4_OUTCOME_FIELDS: [&str; 6] = [
    "Final Grade",
    "Tool Label",
    "Direction of Evidence",
    "Justification",
    "Evidence Summary",
    "Findings Codes",
];

/// Ladder rows from the lowest rung upwards.
pub const LADDER: [GradeLevel; 10] = [
    GradeLevel::C0,
    GradeLevel::C3,
    GradeLevel::C2,
    GradeLevel::C1,
    GradeLevel::B3,
    GradeLevel::B2,
    GradeLevel::B1,
    GradeLevel::A3,
    GradeLevel::A2,
    GradeLevel::A1,
];

fn info_values(tool: &ToolProfile, indices: &BibliometricIndices) -> Vec<String> {
    vec![
        cell(&tool.name),
        cell(&tool.author),
        cell(&tool.country),
        tool.year.to_string(),
        category_text(tool).to_string(),
        cell(&tool.intended_use),
        cell(&tool.intended_user),
        cell(&tool.clinical_area),
        cell(&tool.target_population),
        cell(&tool.target_outcome),
        cell(&tool.action),
        cell(&input_source_text(tool)),
        cell(&input_type_text(tool)),
        yes_no(tool.local_context).to_string(),
        cell(&tool.methodology),
        cell(&tool.internal_validation_method),
        opt_cell(tool.dedicated_support.as_deref()),
        opt_cell(tool.endorsement.as_deref()),
        automation_text(tool).to_string(),
        tool.tool_citations.to_string(),
        tool.studies_count.to_string(),
        tool.authors_count.to_string(),
        tool.sample_size.to_string(),
        cell(&tool.journal_name),
        format!("{:.2}", tool.journal_rank),
        format!("{:.2}", indices.citation_index),
        format!("{:.2}", indices.publication_index),
        indices.literature_index.to_string(),
    ]
}

fn phase_heading(phase: Phase) -> &'static str {
    match phase {
        Phase::BeforeImplementation => "Phase C: Before implementation. Is it possible?",
        Phase::PlanningForImplementation => {
            "Phase B: Planning for implementation. Is it practicable?"
        }
        Phase::AfterImplementation => "Phase A: After implementation. Is it desirable?",
    }
}

fn bucket_studies_text(result: &GradeResult, level: GradeLevel) -> String {
    match result.bucket(level) {
        None => ABSENT.to_string(),
        Some(b) if !b.derived_from.is_empty() => {
            let sources: Vec<&str> = b.derived_from.iter().map(|l| l.token()).collect();
            format!("derived from {}", sources.join(" + "))
        }
        Some(b) => {
            let ids: Vec<String> = b
                .studies
                .iter()
                .map(|s| format!("{} ({})", s.id, study_direction_text(s.direction)))
                .collect();
            cell(&ids.join(", "))
        }
    }
}

fn bucket_direction_cell(result: &GradeResult, level: GradeLevel) -> String {
    result.bucket(level).map_or_else(
        || ABSENT.to_string(),
        |b| tagged_direction(b.direction, b.needs_review),
    )
}

fn header(out: &mut String, title: &str, tool: &ToolProfile, opts: &RenderOptions) {
    let _ = writeln!(out, "# {title}: {}", cell(&tool.name));
    out.push('\n');
    let _ = writeln!(out, "Engine policy: `{}`", opts.policy.fingerprint());
    if let Some(at) = opts.generated_at {
        let _ = writeln!(
            out,
            "Generated at: {}",
            at.to_rfc3339_opts(SecondsFormat::Secs, true)
        );
    }
    out.push('\n');
}

fn evidence_summary_line(result: &GradeResult) -> String {
    let mut parts = Vec::new();
    for b in &result.all_buckets {
        if b.derived_from.is_empty() {
            parts.push(format!(
                "{}: {} {}",
                b.level,
                b.studies.len(),
                if b.studies.len() == 1 {
                    "study"
                } else {
                    "studies"
                }
            ));
        }
    }
    if parts.is_empty() {
        ABSENT.to_string()
    } else {
        cell(&parts.join("; "))
    }
}

fn render_table4(
    tool: &ToolProfile,
    result: &GradeResult,
    indices: &BibliometricIndices,
    opts: &RenderOptions,
) -> String {
    let mut out = String::new();
    header(&mut out, "GRASP Detailed Report", tool, opts);

    out.push_str("| Field | Value |\n|---|---|\n");
    for (field, value) in TABLE4_INFO_FIELDS.iter().zip(info_values(tool, indices)) {
        let _ = writeln!(out, "| {field} | {value} |");
    }
    out.push('\n');

    out.push_str("| Phase of Evaluation | Level of Evidence | Grade | Direction of Evidence | Evaluation Studies | Final Grade |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    let mut last_phase = None;
    for level in LADDER {
        let phase = level.phase();
        let phase_cell = if last_phase == Some(phase) {
            ""
        } else {
            phase_heading(phase)
        };
        last_phase = Some(phase);
        let mut level_cell = level.descriptor().to_string();
        if !level.evidence_label().is_empty() {
            let _ = write!(level_cell, " ({})", level.evidence_label());
        }
        let (direction, studies) = if level == GradeLevel::C0 {
            (ABSENT.to_string(), ABSENT.to_string())
        } else {
            (
                bucket_direction_cell(result, level),
                bucket_studies_text(result, level),
            )
        };
        let mark = if result.final_grade == level {
            format!("**[{level}]**")
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "| {phase_cell} | {level_cell} | {level} | {direction} | {studies} | {mark} |"
        );
    }
    out.push('\n');

    let values = [
        format!("Grade {}", result.final_grade),
        opt_cell(result.tool_label.as_deref()),
        tagged_direction(result.direction, result.needs_review),
        cell(&result.justification),
        evidence_summary_line(result),
        "[POSITIVE] Positive Findings / [NEGATIVE] Negative Findings / [IMPORTANT] Important Findings"
            .to_string(),
    ];
    out.push_str("| Field | Value |\n|---|---|\n");
    for (field, value) in TABLE4_OUTCOME_FIELDS.iter().zip(values) {
        let _ = writeln!(out, "| {field} | {value} |");
    }
    out
}

/// Rows of the original report ladder: (phase, descriptor, legacy grade, source level).
/// The original scheme ranked usability (its B1) above potential effect (its B2).
const LEGACY_LADDER: [(Phase, &str, &str, GradeLevel); 8] = [
    (
        Phase::BeforeImplementation,
        "Internal validation",
        "C3",
        GradeLevel::C3,
    ),
    (
        Phase::BeforeImplementation,
        "External validation",
        "C2",
        GradeLevel::C2,
    ),
    (
        Phase::BeforeImplementation,
        "External validation multiple times",
        "C1",
        GradeLevel::C1,
    ),
    (
        Phase::PlanningForImplementation,
        "Potential effect",
        "B2",
        GradeLevel::B2,
    ),
    (
        Phase::PlanningForImplementation,
        "Usability",
        "B1",
        GradeLevel::B3,
    ),
    (
        Phase::AfterImplementation,
        "Subjective studies",
        "A3",
        GradeLevel::A3,
    ),
    (
        Phase::AfterImplementation,
        "Observational studies",
        "A2",
        GradeLevel::A2,
    ),
    (
        Phase::AfterImplementation,
        "Experimental studies",
        "A1",
        GradeLevel::A1,
    ),
];

/// Grade under the original ladder, recomputed from the qualifying buckets.
pub fn legacy_grade(result: &GradeResult) -> &'static str {
    LEGACY_LADDER
        .iter()
        .rev()
        .find(|(_, _, _, source)| {
            result
                .bucket(*source)
                .is_some_and(|b| b.direction.qualifies())
        })
        .map_or("C0", |(_, _, legacy, _)| legacy)
}

fn legacy_phase_heading(phase: Phase) -> &'static str {
    match phase {
        Phase::BeforeImplementation => "Phase C: Before implementation. Is it possible?",
        Phase::PlanningForImplementation => "Phase B: During implementation. Is it practicable?",
        Phase::AfterImplementation => "Phase A: After implementation. Is it desirable?",
    }
}

fn render_table3(tool: &ToolProfile, result: &GradeResult, opts: &RenderOptions) -> String {
    let mut out = String::new();
    header(
        &mut out,
        "GRASP Detailed Report (original layout)",
        tool,
        opts,
    );

    let info = [
        ("Name", cell(&tool.name)),
        (
            "Authors/Year",
            cell(&format!("{}, {}, {}", tool.author, tool.country, tool.year)),
        ),
        ("Intended use", cell(&tool.intended_use)),
        ("Intended user", cell(&tool.intended_user)),
        ("Category", category_text(tool).to_string()),
        ("Clinical area", cell(&tool.clinical_area)),
        ("Target Population", cell(&tool.target_population)),
        ("Target Outcome", cell(&tool.target_outcome)),
        ("Action", cell(&tool.action)),
        ("Input source", cell(&input_source_text(tool))),
        ("Input type", cell(&input_type_text(tool))),
        ("Local context", yes_no(tool.local_context).to_string()),
        ("Methodology", cell(&tool.methodology)),
        ("Endorsement", opt_cell(tool.endorsement.as_deref())),
        ("Automation Flag", automation_text(tool).to_string()),
    ];
    out.push_str("| Field | Value |\n|---|---|\n");
    for (field, value) in info {
        let _ = writeln!(out, "| {field} | {value} |");
    }
    out.push('\n');

    let grade = legacy_grade(result);
    out.push_str("| Phase of Evaluation | Level of Evidence | Grade | Direction of Evidence | Evaluation Studies | Final Grade |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    let c0_mark = if grade == "C0" { "**[C0]**" } else { "" };
    let _ = writeln!(
        out,
        "| {} | Insufficient internal validation | C0 | {ABSENT} | {ABSENT} | {c0_mark} |",
        legacy_phase_heading(Phase::BeforeImplementation)
    );
    let mut last_phase = Some(Phase::BeforeImplementation);
    for (phase, descriptor, legacy, source) in &LEGACY_LADDER {
        let phase_cell = if last_phase == Some(*phase) {
            ""
        } else {
            legacy_phase_heading(*phase)
        };
        last_phase = Some(*phase);
        let mark = if grade == *legacy {
            format!("**[{legacy}]**")
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "| {phase_cell} | {descriptor} | {legacy} | {} | {} | {mark} |",
            bucket_direction_cell(result, *source),
            bucket_studies_text(result, *source)
        );
    }
    out.push('\n');

    let references: Vec<String> = result
        .all_buckets
        .iter()
        .flat_map(|b| &b.studies)
        .map(|s| {
            format!(
                "{} ({}, {}, {})",
                s.citation,
                phase_text(s.phase),
                s.level.map_or(ABSENT, |l| l.token()),
                study_direction_text(s.direction)
            )
        })
        .collect();
    let rows = [
        ("Final Grade", format!("Grade {grade}")),
        (
            "Direction of Evidence",
            tagged_direction(result.direction, result.needs_review),
        ),
        ("Justification", cell(&result.justification)),
        (
            "References",
            if references.is_empty() {
                ABSENT.to_string()
            } else {
                cell(&references.join("; "))
            },
        ),
        (
            "Label/Colour Code",
            "[POSITIVE] Positive Findings / [NEGATIVE] Negative Findings / [IMPORTANT] Important Findings".to_string(),
        ),
    ];
    out.push_str("| Field | Value |\n|---|---|\n");
    for (field, value) in rows {
        let _ = writeln!(out, "| {field} | {value} |");
    }
    out
}

pub fn render_detailed_report(
    tool: &ToolProfile,
    result: &GradeResult,
    indices: &BibliometricIndices,
    format: ReportFormat,
    opts: &RenderOptions,
) -> Result<RenderedReport, ReportError> {
    if result.tool_id != tool.id {
        return Err(ReportError::ToolMismatch {
            tool: tool.id.clone(),
            result: result.tool_id.clone(),
        });
    }
    let body = match format {
        ReportFormat::MarkdownTable4 => {
            ReportBody::Text(render_table4(tool, result, indices, opts))
        }
        ReportFormat::MarkdownTable3Legacy => ReportBody::Text(render_table3(tool, result, opts)),
        ReportFormat::Structured => ReportBody::Structured(
            serde_json::to_value(DetailedReportData {
                tool: tool.clone(),
                result: result.clone(),
                indices: *indices,
            })
            .expect("report data serializes"),
        ),
    };
    Ok(RenderedReport {
        tool_id: tool.id.clone(),
        format,
        body,
        generated_at: opts.generated_at,
        engine_policy: opts.policy.fingerprint(),
    })
}

/// Column headers of the evidence summary.
pub const SUMMARY_COLUMNS: [&str; 15] = [
    "Study",
    "Country",
    "Year",
    "Phase",
    "Type",
    "Level",
    "Tools",
    "Sample Size",
    "Data Collection",
    "Direction of Evidence",
    "Matching of Evidence",
    "Quality of Evidence",
    "Strength of Evidence",
    "Label",
    "Notes",
];

/// One row per study, ordered by publication year and then id.
pub fn render_evidence_summary(
    tool_id: &str,
    records: &[AppraisedStudy],
    format: ReportFormat,
    opts: &RenderOptions,
) -> Result<RenderedReport, ReportError> {
    let mut rows = records.to_vec();
    rows.sort_by(|a, b| (a.record.year, &a.record.id).cmp(&(b.record.year, &b.record.id)));
    for row in &rows {
        if row.strength.is_none() || row.matching.is_none() || row.quality.is_none() {
            return Err(ReportError::UnresolvedStrength {
                study_id: row.record.id.clone(),
            });
        }
    }
    let body = match format {
        ReportFormat::MarkdownTable3Legacy => {
            return Err(ReportError::FormatUnsupported {
                format,
                document: "evidence summary",
            })
        }
        ReportFormat::Structured => {
            ReportBody::Structured(serde_json::to_value(&rows).expect("rows serialize"))
        }
        ReportFormat::MarkdownTable4 => {
            let mut out = String::new();
            let _ = writeln!(out, "# Evidence Summary: {}", cell(tool_id));
            out.push('\n');
            let _ = writeln!(out, "| {} |", SUMMARY_COLUMNS.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(SUMMARY_COLUMNS.len()));
            for row in &rows {
                let r = &row.record;
                let labels: Vec<&str> = r.label.iter().map(|l| l.word()).collect();
                let data_collection = match r.quality_fields.data_collection_prospective {
                    Some(true) => "Prospective",
                    Some(false) => "Retrospective",
                    None => ABSENT,
                };
                let cells = [
                    cell(&r.citation),
                    cell(&r.country),
                    r.year.to_string(),
                    phase_text(r.phase).to_string(),
                    study_type_text(r.study_type).to_string(),
                    r.level.map_or(ABSENT, |l| l.token()).to_string(),
                    if r.comparative {
                        "Comparative Study"
                    } else {
                        "Single Tool"
                    }
                    .to_string(),
                    r.sample_size
                        .map_or_else(|| ABSENT.to_string(), |n| n.to_string()),
                    data_collection.to_string(),
                    study_direction_text(r.direction).to_string(),
                    // checked above
                    row.matching
                        .map(matching_text)
                        .unwrap_or(ABSENT)
                        .to_string(),
                    row.quality.map(quality_text).unwrap_or(ABSENT).to_string(),
                    row.strength
                        .map(strength_text)
                        .unwrap_or(ABSENT)
                        .to_string(),
                    if labels.is_empty() {
                        ABSENT.to_string()
                    } else {
                        labels.join(", ")
                    },
                    opt_cell(r.notes.as_deref()),
                ];
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
            ReportBody::Text(out)
        }
    };
    Ok(RenderedReport {
        tool_id: tool_id.to_string(),
        format,
        body,
        generated_at: opts.generated_at,
        engine_policy: opts.policy.fingerprint(),
    })
}
