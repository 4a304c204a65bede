// Walks a conflicting evidence bucket through the mixed-evidence cascade.

use grasp::engine::{assign_grade, AppraisalPolicy, TieFallback};
use grasp::model::{EvidenceClass, GradeLevel, StudyDirection};
use grasp::testing::{study, tool};

fn main() {
    let t = tool("demo");
    // Class A is split one-one, so class B decides.
    let studies = vec![
        study(
            "a-pos",
            "demo",
            GradeLevel::A2,
            StudyDirection::Positive,
            EvidenceClass::A,
        ),
        study(
            "a-neg",
            "demo",
            GradeLevel::A2,
            StudyDirection::Negative,
            EvidenceClass::A,
        ),
        study(
            "b-pos",
            "demo",
            GradeLevel::A2,
            StudyDirection::Positive,
            EvidenceClass::B,
        ),
        study(
            "c-neg",
            "demo",
            GradeLevel::A2,
            StudyDirection::Equivocal,
            EvidenceClass::C,
        ),
        study(
            "iv",
            "demo",
            GradeLevel::C3,
            StudyDirection::Positive,
            EvidenceClass::B,
        ),
    ];
    let result = assign_grade(&t, &studies, &AppraisalPolicy::default()).expect("gradable");
    let bucket = result.bucket(GradeLevel::A2).expect("A2 bucket");
    println!("A2 bucket: {}", bucket.direction.name());
    for step in &bucket.adjudication_trace {
        println!("  {step}");
    }
    println!(
        "final grade: {} ({})",
        result.final_grade,
        result.direction.name()
    );

    // A full tie needs a human unless the conservative fallback is chosen.
    let tied = &studies[..2];
    let conservative = assign_grade(&t, tied, &AppraisalPolicy::default()).expect("gradable");
    println!(
        "tie, conservative: {} needs_review={}",
        conservative.final_grade, conservative.needs_review
    );
    let strict = AppraisalPolicy {
        final_tie_fallback: TieFallback::FailWithReviewFlag,
        ..AppraisalPolicy::default()
    };
    match assign_grade(&t, tied, &strict) {
        Ok(r) => println!("tie, strict: {}", r.final_grade),
        Err(e) => println!("tie, strict: {e}"),
    }
}
