//! Builders for synthetic tools and studies, shared by unit tests,
//! integration tests and the property suites.

use std::collections::BTreeSet;

use crate::model::{
    Automation, EvidenceClass, GradeLevel, ImpactSubtype, InputSource, InputType, MatchingFields,
    MatchingVerdict, QualityFields, QualityVerdict, StudyDirection, StudyRecord, StudyType,
    ToolCategory, ToolProfile,
};

/// A tool with placeholder metadata, published in 2010.
pub fn tool(id: &str) -> ToolProfile {
    ToolProfile {
        id: id.to_string(),
        name: format!("Tool {id}"),
        author: "Author".into(),
        country: "Australia".into(),
        year: 2010,
        category: ToolCategory::Diagnostic,
        intended_use: "Predict the outcome".into(),
        intended_user: "Physician".into(),
        clinical_area: "Emergency medicine".into(),
        target_population: "Adults".into(),
        target_outcome: "Outcome".into(),
        action: "Refer".into(),
        input_source: BTreeSet::from([InputSource::Clinical]),
        input_type: BTreeSet::from([InputType::Objective]),
        local_context: false,
        methodology: "Logistic regression".into(),
        internal_validation_method: "Bootstrapping".into(),
        dedicated_support: None,
        endorsement: None,
        automation: Automation::Manual,
        tool_citations: 0,
        studies_count: 0,
        authors_count: 1,
        sample_size: 100,
        journal_name: "Journal".into(),
        journal_rank: 1.0,
    }
}

/// The (matching, quality) overrides that place a study in `class`.
pub fn class_overrides(class: EvidenceClass) -> (MatchingVerdict, QualityVerdict) {
    match class {
        EvidenceClass::A => (MatchingVerdict::Matching, QualityVerdict::High),
        EvidenceClass::B => (MatchingVerdict::Matching, QualityVerdict::Low),
        EvidenceClass::C => (MatchingVerdict::NonMatching, QualityVerdict::Low),
    }
}

/// The study type a raw record at `level` must carry.
pub fn study_type_for(level: GradeLevel) -> (StudyType, Option<ImpactSubtype>) {
    match level {
        GradeLevel::C3 => (StudyType::InternalValidation, None),
        GradeLevel::C2 | GradeLevel::C1 => (StudyType::ExternalValidation, None),
        GradeLevel::B3 => (StudyType::Usability, None),
        GradeLevel::B2 => (StudyType::PotentialEffect, None),
        GradeLevel::A3 => (
            StudyType::PostImplementationImpact,
            Some(ImpactSubtype::Subjective),
        ),
        GradeLevel::A2 => (
            StudyType::PostImplementationImpact,
            Some(ImpactSubtype::Observational),
        ),
        GradeLevel::A1 => (
            StudyType::PostImplementationImpact,
            Some(ImpactSubtype::Experimental),
        ),
        GradeLevel::C0 | GradeLevel::B1 => panic!("{level} is never the level of a raw study"),
    }
}

/// A consistent raw study at `level` whose overrides resolve to `class`.
pub fn study(
    id: &str,
    tool_id: &str,
    level: GradeLevel,
    direction: StudyDirection,
    class: EvidenceClass,
) -> StudyRecord {
    let (study_type, impact_subtype) = study_type_for(level);
    let (matching, quality) = class_overrides(class);
    StudyRecord {
        id: id.to_string(),
        tool_id: tool_id.to_string(),
        citation: format!("Study {id}"),
        country: "Australia".into(),
        year: 2015,
        phase: level.phase(),
        study_type,
        comparative: false,
        level: Some(level),
        direction,
        matching_fields: MatchingFields::default(),
        quality_fields: QualityFields::default(),
        matching_override: Some(matching),
        quality_override: Some(quality),
        impact_subtype,
        label: BTreeSet::new(),
        sample_size: None,
        notes: None,
    }
}
