//! Grades clinical predictive tools from structured records of their
//! published evidence.
//!
//! Each study about a tool is placed on a level of the grade ladder
//! (`C3` internal validation up to `A1` experimental post-implementation
//! impact). Studies at the same level form a bucket whose direction is
//! positive, negative, or mixed; conflicting buckets are resolved by the
//! mixed-evidence cascade, which ranks studies by how well they match the
//! tool's definition and by their quality. The final grade is the
//! highest level whose bucket supports a positive conclusion, or `C0`.
//!
//! ```
//! use grasp::engine::{assign_grade, AppraisalPolicy};
//! use grasp::model::{EvidenceClass, GradeLevel, StudyDirection};
//! use grasp::testing::{study, tool};
//!
//! let t = tool("demo");
//! let studies = vec![
//!     study("s1", "demo", GradeLevel::C3, StudyDirection::Positive, EvidenceClass::A),
//!     study("s2", "demo", GradeLevel::B3, StudyDirection::Negative, EvidenceClass::B),
//! ];
//! let result = assign_grade(&t, &studies, &AppraisalPolicy::default()).unwrap();
//! assert_eq!(result.final_grade, GradeLevel::C3);
//! ```
//!
//! Modules:
//! * [`model`] domain types and the ordinal grade scale
//! * [`engine`] grading procedures
//! * [`stats`] rank correlation, permutation test, Likert summaries
//! * [`corpus`] the JSON corpus format and the CSV sheets
//! * [`report`] detailed reports and evidence summaries

#[macro_use]
pub mod model;

pub mod corpus;
pub mod engine;
pub mod report;
pub mod stats;
pub mod testing;

pub use corpus::{Corpus, CorpusError, ParseMode};
pub use engine::{assign_grade, AppraisalPolicy, EngineError};
pub use model::{GradeLevel, GradeResult, StudyRecord, ToolProfile};
