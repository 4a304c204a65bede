//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use grasp::corpus::{Corpus, PolicyOverrides};
use grasp::engine::{MatchingRule, QualityRule, TieFallback};
use grasp::model::{
    Automation, EvidenceClass, GradeLevel, InputSource, InputType, Label, MatchingFields,
    MatchingVerdict, QualityFields, QualityVerdict, StudyDirection, StudyRecord, StudyType,
    ToolCategory, ToolProfile,
};
use grasp::testing::{class_overrides, study_type_for};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixture(name)).unwrap_or_else(|e| panic!("reading fixture {name}: {e}"))
}

pub const RAW_LEVELS: [GradeLevel; 8] = [
    GradeLevel::A1,
    GradeLevel::A2,
    GradeLevel::A3,
    GradeLevel::B2,
    GradeLevel::B3,
    GradeLevel::C1,
    GradeLevel::C2,
    GradeLevel::C3,
];

pub const CLASSES: [EvidenceClass; 3] = [EvidenceClass::A, EvidenceClass::B, EvidenceClass::C];

pub const DIRECTIONS: [StudyDirection; 3] = [
    StudyDirection::Positive,
    StudyDirection::Equivocal,
    StudyDirection::Negative,
];

const PIECES: &[&str] = &[
    "a", "Z", "0", " ", "-", "_", "\"", "\\", "/", "\n", "\t", "é", "ß", "—", "日本", "🙂", "{",
    "}", ",", ":", "[", "]", "\u{7f}", "\u{1}",
];

pub fn random_text<R: Rng>(rng: &mut R) -> String {
    let len = rng.gen_range(0..12);
    (0..len).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

fn random_bool_opt<R: Rng>(rng: &mut R) -> Option<bool> {
    match rng.gen_range(0..3) {
        0 => None,
        1 => Some(false),
        _ => Some(true),
    }
}

fn random_set<T: Copy + Ord, R: Rng>(rng: &mut R, all: &[T], nonempty: bool) -> BTreeSet<T> {
    loop {
        let set: BTreeSet<T> = all.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if !nonempty || !set.is_empty() {
            return set;
        }
    }
}

pub fn random_tool<R: Rng>(rng: &mut R, id: String) -> ToolProfile {
    ToolProfile {
        id,
        name: random_text(rng),
        author: random_text(rng),
        country: random_text(rng),
        year: rng.gen_range(1950..2025),
        category: *ToolCategory::ALL.choose(rng).unwrap(),
        intended_use: random_text(rng),
        intended_user: random_text(rng),
        clinical_area: random_text(rng),
        target_population: random_text(rng),
        target_outcome: random_text(rng),
        action: random_text(rng),
        input_source: random_set(rng, InputSource::ALL, true),
        input_type: random_set(rng, InputType::ALL, true),
        local_context: rng.gen(),
        methodology: random_text(rng),
        internal_validation_method: random_text(rng),
        dedicated_support: rng.gen_bool(0.5).then(|| random_text(rng)),
        endorsement: rng.gen_bool(0.5).then(|| random_text(rng)),
        automation: *Automation::ALL.choose(rng).unwrap(),
        tool_citations: rng.gen_range(0..1_000_000),
        studies_count: 0,
        authors_count: rng.gen_range(1..50),
        sample_size: rng.gen_range(1..1_000_000),
        journal_name: random_text(rng),
        journal_rank: if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen_range(0.0..100.0)
        },
    }
}

/// A record at `level` (or a metadata-only development record for `None`)
/// whose matching and quality resolve under every policy.
pub fn random_study<R: Rng>(
    rng: &mut R,
    id: String,
    tool_id: &str,
    level: Option<GradeLevel>,
) -> StudyRecord {
    let class = *CLASSES.choose(rng).unwrap();
    let (matching, quality) = class_overrides(class);
    let (study_type, impact_subtype, phase) = match level {
        Some(l) => {
            let (t, sub) = study_type_for(l);
            (t, sub, l.phase())
        }
        None => (
            StudyType::Development,
            None,
            grasp::model::Phase::BeforeImplementation,
        ),
    };
    // Full field vectors resolve under both matching rules.
    let use_fields = rng.gen_bool(0.4);
    let matching_fields = if use_fields {
        let mut v = [Some(true); MatchingFields::COUNT];
        if matching == MatchingVerdict::NonMatching {
            v[rng.gen_range(0..MatchingFields::COUNT)] = Some(false);
        }
        MatchingFields::from_array(v)
    } else {
        MatchingFields::from_array(std::array::from_fn(|_| random_bool_opt(rng)))
    };
    StudyRecord {
        id,
        tool_id: tool_id.to_string(),
        citation: random_text(rng),
        country: random_text(rng),
        year: rng.gen_range(1950..2025),
        phase,
        study_type,
        comparative: rng.gen(),
        level,
        direction: *DIRECTIONS.choose(rng).unwrap(),
        matching_fields,
        quality_fields: QualityFields::from_array(std::array::from_fn(|_| random_bool_opt(rng))),
        matching_override: (!use_fields).then_some(matching),
        quality_override: Some(if rng.gen_bool(0.5) {
            quality
        } else {
            QualityVerdict::High
        }),
        impact_subtype,
        label: random_set(rng, Label::ALL, false),
        sample_size: rng.gen_bool(0.5).then(|| rng.gen_range(1..100_000)),
        notes: rng.gen_bool(0.3).then(|| random_text(rng)),
    }
}

/// A corpus that passes strict validation.
pub fn random_corpus<R: Rng>(rng: &mut R) -> Corpus {
    let mut corpus = Corpus::default();
    let n_tools = rng.gen_range(1..=4);
    let mut serial = 0;
    for t in 0..n_tools {
        let id = format!("tool-{t}-{}", rng.gen_range(0..1000));
        let mut tool = random_tool(rng, id.clone());
        let mut studies = Vec::new();
        let n_studies = rng.gen_range(0..=7);
        for _ in 0..n_studies {
            serial += 1;
            let level = if rng.gen_bool(0.1) {
                None
            } else {
                Some(*RAW_LEVELS.choose(rng).unwrap())
            };
            let study_id = format!("s{serial:03}-{}", random_text(rng));
            studies.push(random_study(rng, study_id, &id, level));
        }
        // External validations carry the level their count implies.
        let externals = studies
            .iter()
            .filter(|s| s.study_type == StudyType::ExternalValidation)
            .count();
        for s in studies.iter_mut() {
            if s.study_type == StudyType::ExternalValidation {
                s.level = Some(if externals >= 2 {
                    GradeLevel::C1
                } else {
                    GradeLevel::C2
                });
            }
        }
        tool.studies_count = studies.len() as u64;
        corpus.tools.push(tool);
        corpus.studies.extend(studies);
    }
    if rng.gen_bool(0.5) {
        corpus.policy = Some(PolicyOverrides {
            matching_rule: rng
                .gen_bool(0.5)
                .then(|| *MatchingRule::ALL.choose(rng).unwrap()),
            quality_rule: rng
                .gen_bool(0.5)
                .then(|| *QualityRule::ALL.choose(rng).unwrap()),
            final_tie_fallback: rng
                .gen_bool(0.5)
                .then(|| *TieFallback::ALL.choose(rng).unwrap()),
        });
    }
    corpus.studies.shuffle(rng);
    corpus.tools.shuffle(rng);
    corpus
}
