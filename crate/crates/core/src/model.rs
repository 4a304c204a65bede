//! Domain types shared by the engine, the corpus format, the statistics and
//! the report renderers.
//!
//! Every enumeration has a lowercase wire token (`"equivocal"`,
//! `"post_implementation_impact"`, `"A1"`). Decoding is case-insensitive.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Raised when a wire token does not name any variant of an enumeration.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} token `{token}` (expected one of: {expected})")]
pub struct UnknownToken {
    pub kind: &'static str,
    pub token: String,
    pub expected: String,
}

macro_rules! token_enum {
    (
        $(#[$meta:meta])*
        $name:ident as $kind:literal {
            $( $(#[$vmeta:meta])* $variant:ident => $token:literal ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $( $(#[$vmeta])* $variant ),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::model::UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let trimmed = s.trim();
                $(
                    if trimmed.eq_ignore_ascii_case($token) {
                        return Ok($name::$variant);
                    }
                )+
                Err($crate::model::UnknownToken {
                    kind: $kind,
                    token: s.to_string(),
                    expected: [$($token),+].join(", "),
                })
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.token())
            }
        }

        impl ::serde::Serialize for $name {
            fn serialize<S: ::serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.token())
            }
        }

        impl<'de> ::serde::Deserialize<'de> for $name {
            fn deserialize<D: ::serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let raw = <String as ::serde::Deserialize>::deserialize(deserializer)?;
                raw.parse().map_err(::serde::de::Error::custom)
            }
        }
    };
}

token_enum! {
    /// Lifecycle stage of the published evidence.
    Phase as "phase" {
        BeforeImplementation => "before_implementation",
        PlanningForImplementation => "planning_for_implementation",
        AfterImplementation => "after_implementation",
    }
}

impl Phase {
    pub fn letter(self) -> char {
        match self {
            Phase::BeforeImplementation => 'C',
            Phase::PlanningForImplementation => 'B',
            Phase::AfterImplementation => 'A',
        }
    }
}

token_enum! {
    /// The grade ladder. Declaration order is the ordinal order, lowest first.
    GradeLevel as "grade" {
        C0 => "C0",
        C3 => "C3",
        C2 => "C2",
        C1 => "C1",
        B3 => "B3",
        B2 => "B2",
        B1 => "B1",
        A3 => "A3",
        A2 => "A2",
        A1 => "A1",
    }
}

impl GradeLevel {
    /// Levels in grading scan order (strongest first), excluding `C0`.
    pub const SCAN_ORDER: [GradeLevel; 9] = [
        GradeLevel::A1,
        GradeLevel::A2,
        GradeLevel::A3,
        GradeLevel::B1,
        GradeLevel::B2,
        GradeLevel::B3,
        GradeLevel::C1,
        GradeLevel::C2,
        GradeLevel::C3,
    ];

    /// Position on the 0..=9 ordinal scale used for rank statistics.
    pub fn ordinal_rank(self) -> u8 {
        match self {
            GradeLevel::C0 => 0,
            GradeLevel::C3 => 1,
            GradeLevel::C2 => 2,
            GradeLevel::C1 => 3,
            GradeLevel::B3 => 4,
            GradeLevel::B2 => 5,
            GradeLevel::B1 => 6,
            GradeLevel::A3 => 7,
            GradeLevel::A2 => 8,
            GradeLevel::A1 => 9,
        }
    }

    pub fn phase(self) -> Phase {
        match self {
            GradeLevel::C0 | GradeLevel::C3 | GradeLevel::C2 | GradeLevel::C1 => {
                Phase::BeforeImplementation
            }
            GradeLevel::B3 | GradeLevel::B2 | GradeLevel::B1 => Phase::PlanningForImplementation,
            GradeLevel::A3 | GradeLevel::A2 | GradeLevel::A1 => Phase::AfterImplementation,
        }
    }

    /// Level-of-evidence wording from the detailed report ladder.
    pub fn descriptor(self) -> &'static str {
        match self {
            GradeLevel::C0 => "Insufficient internal validation",
            GradeLevel::C3 => "Internal validation",
            GradeLevel::C2 => "External validation",
            GradeLevel::C1 => "External validation multiple times",
            GradeLevel::B3 => "Usability",
            GradeLevel::B2 => "Potential effect",
            GradeLevel::B1 => "Potential effect & Usability",
            GradeLevel::A3 => "Post-implementation impact: subjective studies",
            GradeLevel::A2 => "Post-implementation impact: observational studies",
            GradeLevel::A1 => "Post-implementation impact: experimental studies",
        }
    }

    /// "High/Medium/Low Evidence" for the validation rungs, empty elsewhere.
    pub fn evidence_label(self) -> &'static str {
        match self {
            GradeLevel::C1 => "High Evidence",
            GradeLevel::C2 => "Medium Evidence",
            GradeLevel::C3 => "Low Evidence",
            _ => "",
        }
    }
}

/// Grade for an ordinal rank, the inverse of [`GradeLevel::ordinal_rank`].
pub fn grade_from_rank(rank: u8) -> Option<GradeLevel> {
    GradeLevel::ALL
        .iter()
        .copied()
        .find(|g| g.ordinal_rank() == rank)
}

token_enum! {
    /// Conclusion of a single study.
    StudyDirection as "direction" {
        Positive => "positive",
        Equivocal => "equivocal",
        Negative => "negative",
    }
}

impl StudyDirection {
    pub fn is_positive(self) -> bool {
        self == StudyDirection::Positive
    }
}

token_enum! {
    /// Aggregated direction of one evidence bucket.
    BucketDirection as "bucket direction" {
        Positive => "positive",
        Negative => "negative",
        MixedPositive => "mixed_positive",
        MixedNegative => "mixed_negative",
    }
}

impl BucketDirection {
    /// Whether a bucket with this direction can support a grade.
    pub fn qualifies(self) -> bool {
        matches!(
            self,
            BucketDirection::Positive | BucketDirection::MixedPositive
        )
    }

    /// CamelCase name used in compact CLI rows.
    pub fn name(self) -> &'static str {
        match self {
            BucketDirection::Positive => "Positive",
            BucketDirection::Negative => "Negative",
            BucketDirection::MixedPositive => "MixedPositive",
            BucketDirection::MixedNegative => "MixedNegative",
        }
    }
}

token_enum! {
    MatchingVerdict as "matching verdict" {
        Matching => "matching",
        NonMatching => "non_matching",
    }
}

token_enum! {
    QualityVerdict as "quality verdict" {
        High => "high",
        Low => "low",
    }
}

token_enum! {
    StrengthVerdict as "strength" {
        Strong => "strong",
        Medium => "medium",
        Weak => "weak",
    }
}

token_enum! {
    /// Adjudication class used by the mixed-evidence cascade.
    EvidenceClass as "evidence class" {
        A => "A",
        B => "B",
        C => "C",
    }
}

token_enum! {
    ToolCategory as "category" {
        Diagnostic => "diagnostic",
        Therapeutic => "therapeutic",
        Prognostic => "prognostic",
        Preventive => "preventive",
    }
}

token_enum! {
    InputSource as "input source" {
        Clinical => "clinical",
        NonClinical => "non_clinical",
    }
}

token_enum! {
    InputType as "input type" {
        Objective => "objective",
        Subjective => "subjective",
    }
}

token_enum! {
    Automation as "automation" {
        Manual => "manual",
        Automated => "automated",
    }
}

token_enum! {
    StudyType as "study type" {
        Development => "development",
        InternalValidation => "internal_validation",
        ExternalValidation => "external_validation",
        Usability => "usability",
        PotentialEffect => "potential_effect",
        PostImplementationImpact => "post_implementation_impact",
    }
}

token_enum! {
    ImpactSubtype as "impact subtype" {
        Experimental => "experimental",
        Observational => "observational",
        Subjective => "subjective",
    }
}

impl ImpactSubtype {
    pub fn level(self) -> GradeLevel {
        match self {
            ImpactSubtype::Experimental => GradeLevel::A1,
            ImpactSubtype::Observational => GradeLevel::A2,
            ImpactSubtype::Subjective => GradeLevel::A3,
        }
    }
}

token_enum! {
    /// Finding label attached to a study.
    Label as "label" {
        Effectiveness => "effectiveness",
        Efficiency => "efficiency",
        Safety => "safety",
        Workflow => "workflow",
        Processes => "processes",
    }
}

impl Label {
    /// Tie-break priority for the tool label (lower wins).
    pub fn priority(self) -> u8 {
        match self {
            Label::Effectiveness => 0,
            Label::Safety => 1,
            Label::Efficiency => 2,
            Label::Workflow => 3,
            Label::Processes => 4,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Label::Effectiveness => "Effectiveness",
            Label::Efficiency => "Efficiency",
            Label::Safety => "Safety",
            Label::Workflow => "Workflow",
            Label::Processes => "Processes",
        }
    }
}

/// Identity, definition and bibliometric metadata of one predictive tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolProfile {
    pub id: String,
    pub name: String,
    pub author: String,
    pub country: String,
    pub year: i32,
    pub category: ToolCategory,
    pub intended_use: String,
    pub intended_user: String,
    pub clinical_area: String,
    pub target_population: String,
    pub target_outcome: String,
    pub action: String,
    pub input_source: BTreeSet<InputSource>,
    pub input_type: BTreeSet<InputType>,
    pub local_context: bool,
    pub methodology: String,
    pub internal_validation_method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dedicated_support: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endorsement: Option<String>,
    pub automation: Automation,
    pub tool_citations: u64,
    pub studies_count: u64,
    pub authors_count: u32,
    pub sample_size: u64,
    pub journal_name: String,
    pub journal_rank: f64,
}

/// Per-field agreement between a study's conditions and the tool's definition.
/// `None` means the study does not report the field.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingFields {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictive_task: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_outcome: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intended_user: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clinical_area: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_population: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_group: Option<bool>,
}

impl MatchingFields {
    pub const COUNT: usize = 7;

    pub fn all(value: bool) -> Self {
        MatchingFields::from_array([Some(value); Self::COUNT])
    }

    pub fn as_array(&self) -> [Option<bool>; Self::COUNT] {
        [
            self.predictive_task,
            self.target_outcome,
            self.intended_user,
            self.clinical_area,
            self.settings,
            self.target_population,
            self.age_group,
        ]
    }

    pub fn from_array(v: [Option<bool>; Self::COUNT]) -> Self {
        MatchingFields {
            predictive_task: v[0],
            target_outcome: v[1],
            intended_user: v[2],
            clinical_area: v[3],
            settings: v[4],
            target_population: v[5],
            age_group: v[6],
        }
    }
}

/// Study quality indicators. `None` means not assessed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityFields {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size_adequate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_collection_prospective: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods_adequate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub institute_credible: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_site: Option<bool>,
}

impl QualityFields {
    pub const COUNT: usize = 5;

    pub fn as_array(&self) -> [Option<bool>; Self::COUNT] {
        [
            self.sample_size_adequate,
            self.data_collection_prospective,
            self.methods_adequate,
            self.institute_credible,
            self.multi_site,
        ]
    }

    pub fn from_array(v: [Option<bool>; Self::COUNT]) -> Self {
        QualityFields {
            sample_size_adequate: v[0],
            data_collection_prospective: v[1],
            methods_adequate: v[2],
            institute_credible: v[3],
            multi_site: v[4],
        }
    }
}

/// One published study about a tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub id: String,
    pub tool_id: String,
    pub citation: String,
    pub country: String,
    pub year: i32,
    pub phase: Phase,
    pub study_type: StudyType,
    pub comparative: bool,
    /// Absent only on development records that report no performance
    /// measures; such records are metadata and never graded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<GradeLevel>,
    pub direction: StudyDirection,
    #[serde(default)]
    pub matching_fields: MatchingFields,
    #[serde(default)]
    pub quality_fields: QualityFields,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching_override: Option<MatchingVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_override: Option<QualityVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact_subtype: Option<ImpactSubtype>,
    #[serde(default)]
    pub label: BTreeSet<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl StudyRecord {
    /// The level this record contributes to, or `None` for metadata-only records.
    pub fn gradable_level(&self) -> Option<GradeLevel> {
        self.level
    }

    /// Checks the study-type/level/phase consistency table.
    pub fn consistency_problem(&self) -> Option<String> {
        use GradeLevel::*;
        use StudyType::*;

        if let Some(level) = self.level {
            if level.phase() != self.phase {
                return Some(format!(
                    "phase `{}` does not match level `{}` (phase `{}`)",
                    self.phase,
                    level,
                    level.phase()
                ));
            }
        }
        if self.impact_subtype.is_some() && self.study_type != PostImplementationImpact {
            return Some(format!(
                "impact_subtype is only valid for post_implementation_impact, not study_type `{}`",
                self.study_type
            ));
        }
        let allowed: &[GradeLevel] = match self.study_type {
            Development => {
                return match self.level {
                    None | Some(C3) => None,
                    Some(l) => Some(format!(
                        "study_type `development` requires level C3 or no level, found level `{l}`"
                    )),
                };
            }
            InternalValidation => &[C3],
            ExternalValidation => &[C2, C1],
            Usability => &[B3],
            PotentialEffect => &[B2],
            PostImplementationImpact => {
                let Some(subtype) = self.impact_subtype else {
                    return Some(
                        "study_type `post_implementation_impact` requires impact_subtype".into(),
                    );
                };
                return match self.level {
                    Some(l) if l == subtype.level() => None,
                    Some(l) => Some(format!(
                        "study_type `post_implementation_impact` with impact_subtype `{subtype}` requires level `{}`, found level `{l}`",
                        subtype.level()
                    )),
                    None => Some("level is required for study_type `post_implementation_impact`".into()),
                };
            }
        };
        match self.level {
            Some(l) if allowed.contains(&l) => None,
            Some(l) => Some(format!(
                "study_type `{}` is inconsistent with level `{l}` (allowed: {})",
                self.study_type,
                allowed
                    .iter()
                    .map(|g| g.token())
                    .collect::<Vec<_>>()
                    .join(", ")
            )),
            None => Some(format!(
                "level is required for study_type `{}`",
                self.study_type
            )),
        }
    }
}

/// All studies of one tool at one level, with their aggregated direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceBucket {
    pub tool_id: String,
    pub level: GradeLevel,
    pub studies: Vec<StudyRecord>,
    /// Source levels of a derived bucket (B1); empty for raw buckets.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derived_from: Vec<GradeLevel>,
    pub direction: BucketDirection,
    pub needs_review: bool,
    pub adjudication_trace: Vec<String>,
}

/// Outcome of grading one tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeResult {
    pub tool_id: String,
    pub final_grade: GradeLevel,
    pub direction: BucketDirection,
    pub supporting_bucket: Option<EvidenceBucket>,
    pub tool_label: Option<String>,
    pub justification: String,
    pub needs_review: bool,
    /// Every bucket, strongest level first.
    pub all_buckets: Vec<EvidenceBucket>,
}

impl GradeResult {
    pub fn bucket(&self, level: GradeLevel) -> Option<&EvidenceBucket> {
        self.all_buckets.iter().find(|b| b.level == level)
    }
}

/// Paired grade vectors from two raters with their rank agreement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterComparison {
    pub rater_a_name: String,
    pub rater_b_name: String,
    pub tool_ids: Vec<String>,
    pub grades_a: Vec<GradeLevel>,
    pub grades_b: Vec<GradeLevel>,
    pub rho: f64,
    pub p_value: f64,
    pub exact_agreement: usize,
}
