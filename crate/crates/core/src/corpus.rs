//! The corpus file format (JSON) and the two CSV sheets.
//!
//! A corpus document has the top-level keys `schema_version`, `tools`,
//! `studies` and an optional `policy`. Enumerations use the lowercase
//! tokens from [`crate::model`] and decode case-insensitively. Canonical
//! form sorts tools and studies by id, keeps keys in declaration order and
//! indents with two spaces.
//!
//! Rater sheets are CSV with the header `tool_id,grade`; survey sheets use
//! `question_id,response`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::engine::{
    assign_grade, resolve_matching, resolve_quality, AppraisalPolicy, EngineError, MatchingRule,
    QualityRule, TieFallback,
};
use crate::model::{GradeLevel, GradeResult, StudyRecord, StudyType, ToolProfile};

pub const SCHEMA_VERSION: &str = "grasp-corpus/1";

/// Policy fields a corpus may pin; unset fields fall through to the defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching_rule: Option<MatchingRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_rule: Option<QualityRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_tie_fallback: Option<TieFallback>,
}

impl PolicyOverrides {
    /// Layers these overrides on top of `base`.
    pub fn apply(&self, base: AppraisalPolicy) -> AppraisalPolicy {
        AppraisalPolicy {
            matching_rule: self.matching_rule.unwrap_or(base.matching_rule),
            quality_rule: self.quality_rule.unwrap_or(base.quality_rule),
            final_tie_fallback: self.final_tie_fallback.unwrap_or(base.final_tie_fallback),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub schema_version: String,
    pub tools: Vec<ToolProfile>,
    pub studies: Vec<StudyRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyOverrides>,
}

impl Default for Corpus {
    fn default() -> Self {
        Corpus {
            schema_version: SCHEMA_VERSION.to_string(),
            tools: Vec::new(),
            studies: Vec::new(),
            policy: None,
        }
    }
}

impl Corpus {
    pub fn tool(&self, id: &str) -> Option<&ToolProfile> {
        self.tools.iter().find(|t| t.id == id)
    }

    pub fn studies_for(&self, tool_id: &str) -> Vec<StudyRecord> {
        self.studies
            .iter()
            .filter(|s| s.tool_id == tool_id)
            .cloned()
            .collect()
    }

    /// The corpus policy layered over the defaults.
    pub fn policy(&self) -> AppraisalPolicy {
        self.policy
            .unwrap_or_default()
            .apply(AppraisalPolicy::default())
    }

    /// Grades every tool under `policy`, in tool id order.
    pub fn grade_all(
        &self,
        policy: &AppraisalPolicy,
    ) -> Vec<(String, Result<GradeResult, EngineError>)> {
        let mut tools: Vec<&ToolProfile> = self.tools.iter().collect();
        tools.sort_by(|a, b| a.id.cmp(&b.id));
        tools
            .into_iter()
            .map(|t| {
                (
                    t.id.clone(),
                    assign_grade(t, &self.studies_for(&t.id), policy),
                )
            })
            .collect()
    }

    /// Sorts tools and studies by id.
    pub fn canonicalize(&mut self) {
        self.tools.sort_by(|a, b| a.id.cmp(&b.id));
        self.studies.sort_by(|a, b| a.id.cmp(&b.id));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Unknown fields and soft inconsistencies are errors.
    #[default]
    Strict,
    /// Unknown fields and soft inconsistencies become warnings.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("reference error at `{path}`: unknown tool `{tool_id}`")]
    Reference { path: String, tool_id: String },
    #[error("consistency error at `{path}`: {message}")]
    Consistency { path: String, message: String },
    #[error("line {line}: unknown grade `{token}`")]
    UnknownGrade { line: usize, token: String },
    #[error("line {line}: tool `{tool_id}` listed twice")]
    DuplicateTool { line: usize, tool_id: String },
    #[error("line {line}: response `{value}` outside 1..=5")]
    OutOfRange { line: usize, value: String },
}

/// A decoded document plus the warnings collected in lenient mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub corpus: Corpus,
    pub warnings: Vec<String>,
}

fn syntax_at(text: &str, offset: usize, message: String) -> CorpusError {
    let before = &text.as_bytes()[..offset.min(text.len())];
    let line = before.iter().filter(|b| **b == b'\n').count() + 1;
    let column = offset
        - before
            .iter()
            .rposition(|b| *b == b'\n')
            .map_or(0, |p| p + 1)
        + 1;
    CorpusError::Syntax {
        line,
        column,
        message,
    }
}

fn to_utf8(bytes: &[u8]) -> Result<&str, CorpusError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let valid = e.valid_up_to();
        // The valid prefix is UTF-8 by construction.
        let prefix = std::str::from_utf8(&bytes[..valid]).unwrap_or_default();
        syntax_at(prefix, valid, "invalid UTF-8".to_string())
    })
}

fn json_error(path: String, err: &serde_json::Error) -> CorpusError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => CorpusError::Schema {
            path: if path.is_empty() || path == "." {
                "$".to_string()
            } else {
                path
            },
            message: strip_position(&err.to_string()),
        },
        Category::Syntax | Category::Eof | Category::Io => CorpusError::Syntax {
            line: err.line(),
            column: err.column(),
            message: strip_position(&err.to_string()),
        },
    }
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

/// Renders an ignored-field path in the same `tools[0].name` style that
/// schema errors use.
fn field_path(path: &serde_ignored::Path<'_>) -> String {
    use serde_ignored::Path;
    match path {
        Path::Root => String::new(),
        Path::Seq { parent, index } => format!("{}[{index}]", field_path(parent)),
        Path::Map { parent, key } => {
            let head = field_path(parent);
            if head.is_empty() {
                key.clone()
            } else {
                format!("{head}.{key}")
            }
        }
        Path::Some { parent }
        | Path::NewtypeStruct { parent }
        | Path::NewtypeVariant { parent } => field_path(parent),
    }
}

/// Decodes syntax and schema only; semantic checks live in [`check_corpus`].
pub fn decode_corpus(bytes: &[u8], mode: ParseMode) -> Result<Decoded, CorpusError> {
    let text = to_utf8(bytes)?;
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let corpus: Corpus = {
        let mut on_unknown = |path: serde_ignored::Path<'_>| unknown.push(field_path(&path));
        let ignoring = serde_ignored::Deserializer::new(&mut de, &mut on_unknown);
        serde_path_to_error::deserialize(ignoring)
            .map_err(|e| json_error(e.path().to_string(), e.inner()))?
    };
    de.end().map_err(|e| json_error(String::new(), &e))?;

    if corpus.schema_version != SCHEMA_VERSION {
        return Err(CorpusError::Schema {
            path: "schema_version".into(),
            message: format!(
                "expected `{SCHEMA_VERSION}`, found `{}`",
                corpus.schema_version
            ),
        });
    }
    let mut warnings = Vec::new();
    for path in unknown {
        match mode {
            ParseMode::Strict => {
                return Err(CorpusError::Schema {
                    path,
                    message: "unknown field".into(),
                })
            }
            ParseMode::Lenient => warnings.push(format!("ignoring unknown field `{path}`")),
        }
    }
    Ok(Decoded { corpus, warnings })
}

/// Every violation found in a decoded corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusCheck {
    pub errors: Vec<CorpusError>,
    pub warnings: Vec<String>,
}

impl CorpusCheck {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Checks ids, references, the study-type/level table and verdict
/// resolvability under `policy`. In strict mode the declared study counts
/// and the C1/C2 split must also agree with the attached records; lenient
/// mode downgrades those two to warnings.
pub fn check_corpus(corpus: &Corpus, mode: ParseMode, policy: &AppraisalPolicy) -> CorpusCheck {
    let mut check = CorpusCheck::default();
    let soft = |check: &mut CorpusCheck, path: String, message: String| match mode {
        ParseMode::Strict => check
            .errors
            .push(CorpusError::Consistency { path, message }),
        ParseMode::Lenient => check.warnings.push(format!("{path}: {message}")),
    };

    let mut tool_ids: HashMap<&str, usize> = HashMap::new();
    for (i, t) in corpus.tools.iter().enumerate() {
        if t.id.is_empty() {
            check.errors.push(CorpusError::Schema {
                path: format!("tools[{i}].id"),
                message: "empty id".into(),
            });
        }
        if let Some(first) = tool_ids.insert(&t.id, i) {
            check.errors.push(CorpusError::Schema {
                path: format!("tools[{i}].id"),
                message: format!("duplicate tool id `{}` (first at tools[{first}])", t.id),
            });
        }
        if t.authors_count == 0 {
            check.errors.push(CorpusError::Schema {
                path: format!("tools[{i}].authors_count"),
                message: "must be positive".into(),
            });
        }
        if t.sample_size == 0 {
            check.errors.push(CorpusError::Schema {
                path: format!("tools[{i}].sample_size"),
                message: "must be positive".into(),
            });
        }
        if !(t.journal_rank.is_finite() && t.journal_rank >= 0.0) {
            check.errors.push(CorpusError::Schema {
                path: format!("tools[{i}].journal_rank"),
                message: "must be a non-negative number".into(),
            });
        }
    }

    let mut study_ids: HashMap<&str, usize> = HashMap::new();
    let mut attached: BTreeMap<&str, u64> = BTreeMap::new();
    let mut external: BTreeMap<&str, Vec<(usize, &StudyRecord)>> = BTreeMap::new();
    for (i, s) in corpus.studies.iter().enumerate() {
        if s.id.is_empty() {
            check.errors.push(CorpusError::Schema {
                path: format!("studies[{i}].id"),
                message: "empty id".into(),
            });
        }
        if let Some(first) = study_ids.insert(&s.id, i) {
            check.errors.push(CorpusError::Schema {
                path: format!("studies[{i}].id"),
                message: format!("duplicate study id `{}` (first at studies[{first}])", s.id),
            });
        }
        if s.sample_size == Some(0) {
            check.errors.push(CorpusError::Schema {
                path: format!("studies[{i}].sample_size"),
                message: "must be positive".into(),
            });
        }
        let Some(&tool_index) = tool_ids.get(s.tool_id.as_str()) else {
            check.errors.push(CorpusError::Reference {
                path: format!("studies[{i}].tool_id"),
                tool_id: s.tool_id.clone(),
            });
            continue;
        };
        let tool = &corpus.tools[tool_index];
        *attached.entry(tool.id.as_str()).or_default() += 1;
        if let Some(problem) = s.consistency_problem() {
            check.errors.push(CorpusError::Consistency {
                path: format!("studies[{i}]"),
                message: problem,
            });
        }
        if s.study_type == StudyType::ExternalValidation {
            external.entry(tool.id.as_str()).or_default().push((i, s));
        }
        if let Err(e) = resolve_matching(s, tool, policy) {
            check.errors.push(CorpusError::Consistency {
                path: format!("studies[{i}].matching_fields"),
                message: e.to_string(),
            });
        }
        if let Err(e) = resolve_quality(s, policy) {
            check.errors.push(CorpusError::Consistency {
                path: format!("studies[{i}].quality_override"),
                message: e.to_string(),
            });
        }
    }

    for (i, t) in corpus.tools.iter().enumerate() {
        let n = attached.get(t.id.as_str()).copied().unwrap_or(0);
        if t.studies_count != n {
            soft(
                &mut check,
                format!("tools[{i}].studies_count"),
                format!("declares {} studies but {n} are attached", t.studies_count),
            );
        }
    }
    for records in external.values() {
        let distinct: BTreeSet<&str> = records.iter().map(|(_, s)| s.id.as_str()).collect();
        let expected = if distinct.len() >= 2 {
            GradeLevel::C1
        } else {
            GradeLevel::C2
        };
        for (i, s) in records {
            if let Some(level) = s.level {
                if level != expected {
                    soft(
                        &mut check,
                        format!("studies[{i}].level"),
                        format!(
                            "{} external validation(s) for tool `{}` imply level {expected}, found {level}",
                            distinct.len(),
                            s.tool_id
                        ),
                    );
                }
            }
        }
    }
    check
}

/// Decodes, validates and canonicalizes a corpus document. Returns the
/// first error; use [`decode_corpus`] with [`check_corpus`] for the full list.
pub fn parse_corpus(bytes: &[u8], mode: ParseMode) -> Result<Corpus, CorpusError> {
    Ok(parse_corpus_with_warnings(bytes, mode)?.corpus)
}

pub fn parse_corpus_with_warnings(bytes: &[u8], mode: ParseMode) -> Result<Decoded, CorpusError> {
    let Decoded {
        mut corpus,
        mut warnings,
    } = decode_corpus(bytes, mode)?;
    let check = check_corpus(&corpus, mode, &corpus.policy());
    if let Some(first) = check.errors.into_iter().next() {
        return Err(first);
    }
    warnings.extend(check.warnings);
    corpus.canonicalize();
    Ok(Decoded { corpus, warnings })
}

/// Canonical serialization, newline-terminated.
pub fn emit_corpus(corpus: &Corpus) -> String {
    let mut canonical = corpus.clone();
    canonical.canonicalize();
    let mut out = serde_json::to_string_pretty(&canonical).expect("corpus values always serialize");
    out.push('\n');
    out
}

/// One rater's grades keyed by tool id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaterSheet {
    pub rater_name: String,
    pub grades: BTreeMap<String, GradeLevel>,
}

fn read_sheet(
    bytes: &[u8],
    header: [&str; 2],
) -> Result<Vec<(usize, String, String)>, CorpusError> {
    let text = to_utf8(bytes)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut saw_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            CorpusError::Syntax {
                line,
                column: 1,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if !saw_header {
            let found: Vec<&str> = record.iter().collect();
            if found.len() != 2
                || !found[0].eq_ignore_ascii_case(header[0])
                || !found[1].eq_ignore_ascii_case(header[1])
            {
                return Err(CorpusError::Syntax {
                    line,
                    column: 1,
                    message: format!("expected header `{},{}`", header[0], header[1]),
                });
            }
            saw_header = true;
            continue;
        }
        if record.len() != 2 {
            return Err(CorpusError::Syntax {
                line,
                column: 1,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        rows.push((line, record[0].to_string(), record[1].to_string()));
    }
    if !saw_header {
        return Err(CorpusError::Syntax {
            line: 1,
            column: 1,
            message: format!("missing header `{},{}`", header[0], header[1]),
        });
    }
    Ok(rows)
}

/// Parses a `tool_id,grade` sheet. Grade tokens are case-insensitive.
pub fn parse_rater_sheet(rater_name: &str, bytes: &[u8]) -> Result<RaterSheet, CorpusError> {
    let mut grades = BTreeMap::new();
    for (line, tool_id, token) in read_sheet(bytes, ["tool_id", "grade"])? {
        let grade = token
            .parse::<GradeLevel>()
            .map_err(|_| CorpusError::UnknownGrade {
                line,
                token: token.clone(),
            })?;
        if grades.insert(tool_id.clone(), grade).is_some() {
            return Err(CorpusError::DuplicateTool { line, tool_id });
        }
    }
    Ok(RaterSheet {
        rater_name: rater_name.to_string(),
        grades,
    })
}

/// Parses a `question_id,response` sheet with responses 1 through 5.
pub fn parse_survey_sheet(bytes: &[u8]) -> Result<Vec<(String, u8)>, CorpusError> {
    read_sheet(bytes, ["question_id", "response"])?
        .into_iter()
        .map(|(line, question, value)| match value.parse::<u8>() {
            Ok(v @ 1..=5) => Ok((question, v)),
            _ => Err(CorpusError::OutOfRange { line, value }),
        })
        .collect()
}
