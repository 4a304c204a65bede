// Renders the detailed report and evidence summary for one tool.
//
// ```sh
// cargo run -p grasp --example detailed_report [tool_id] [--legacy]
// ```

use std::path::PathBuf;

use grasp::corpus::{parse_corpus, ParseMode};
use grasp::engine::{appraise_studies, assign_grade, compute_indices};
use grasp::report::{render_detailed_report, render_evidence_summary, RenderOptions, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run(&args)
}

fn run(args: &[String]) -> Result<(), Box<dyn std::error::Error>> {
    let legacy = args.iter().any(|a| a == "--legacy");
    let tool_id = args
        .iter()
        .find(|a| !a.starts_with("--"))
        .map_or("ottawa-knee", String::as_str);

    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/grasp8.json");
    let corpus = parse_corpus(&std::fs::read(path)?, ParseMode::Strict)?;
    let tool = corpus
        .tool(tool_id)
        .ok_or(format!("unknown tool `{tool_id}`"))?;
    let studies = corpus.studies_for(tool_id);
    let policy = corpus.policy();
    let result = assign_grade(tool, &studies, &policy)?;
    let reference_year = studies
        .iter()
        .map(|s| s.year)
        .chain([tool.year])
        .max()
        .unwrap_or(tool.year);
    let indices = compute_indices(tool, reference_year)?;
    let opts = RenderOptions {
        policy,
        generated_at: None,
    };

    let format = if legacy {
        ReportFormat::MarkdownTable3Legacy
    } else {
        ReportFormat::MarkdownTable4
    };
    print!(
        "{}",
        render_detailed_report(tool, &result, &indices, format, &opts)?
            .body
            .to_text()
    );
    if !legacy {
        println!();
        let rows = appraise_studies(tool, &studies, &policy);
        print!(
            "{}",
            render_evidence_summary(tool_id, &rows, ReportFormat::MarkdownTable4, &opts)?
                .body
                .to_text()
        );
    }
    Ok(())
}
