// Per-question Likert means and agreement labels for a survey sheet.

use std::path::PathBuf;

use grasp::corpus::parse_survey_sheet;
use grasp::stats::summarize_survey;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run(&args)
}

fn run(args: &[String]) -> Result<(), Box<dyn std::error::Error>> {
    let path = args
        .first()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/survey.csv"));
    let summary = summarize_survey(&parse_survey_sheet(&std::fs::read(path)?)?)?;
    for q in &summary.questions {
        println!(
            "{:<4} n={:<3} {:.2} {}",
            q.question_id,
            q.n,
            q.mean_score,
            q.label.meaning()
        );
    }
    println!(
        "overall      {:.2} {}",
        summary.overall_mean,
        summary.overall_label.meaning()
    );
    Ok(())
}
