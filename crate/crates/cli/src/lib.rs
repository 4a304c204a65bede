//! The `grasp` command line. [`run`] does all the work so it can be driven
//! from tests with in-memory streams; `main.rs` only wires up stdio.
//!
//! Exit codes: 0 success, 1 validation or grading failure, 2 usage error,
//! 3 internal invariant breach. Standard output carries data only.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use grasp::corpus::{
    check_corpus, decode_corpus, parse_rater_sheet, parse_survey_sheet, Corpus, ParseMode,
    PolicyOverrides, RaterSheet,
};
use grasp::engine::{
    appraise_studies, check_result_invariants, compute_indices, AppraisalPolicy, EngineError,
    MatchingRule, QualityRule, TieFallback,
};
use grasp::report::{render_detailed_report, render_evidence_summary, RenderOptions, ReportFormat};
use grasp::stats::{compare_raters, summarize_survey};
use grasp::GradeResult;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "grasp",
    version,
    about = "Grade clinical predictive tools from published evidence"
)]
struct Cli {
    /// Output format for standard output.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Reject unknown fields and soft inconsistencies (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,
    /// Downgrade unknown fields and soft inconsistencies to warnings.
    #[arg(long, global = true)]
    lenient: bool,
    /// Stamp reports and structured output with the current time.
    #[arg(long, global = true)]
    stamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Structured,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grade every tool in a corpus.
    Grade {
        corpus: PathBuf,
        /// Only grade this tool.
        #[arg(long)]
        tool: Option<String>,
        /// Also write a detailed report per tool into this directory.
        #[arg(long, value_name = "DIR")]
        report: Option<PathBuf>,
        #[command(flatten)]
        grading: GradingArgs,
    },
    /// Compare two rater sheets.
    Raters { sheet_a: PathBuf, sheet_b: PathBuf },
    /// Summarize a Likert survey sheet.
    Survey { responses: PathBuf },
    /// Validate a corpus and list every violation.
    Validate { corpus: PathBuf },
    /// Render the detailed report and evidence summary of one tool.
    Report {
        corpus: PathBuf,
        #[arg(long)]
        tool: String,
        /// Use the original report layout.
        #[arg(long)]
        legacy: bool,
        #[command(flatten)]
        grading: GradingArgs,
    },
}

#[derive(Debug, Args)]
struct GradingArgs {
    /// Reference year for the bibliometric indices; defaults to the latest
    /// year among the tool and its studies.
    #[arg(long)]
    reference_year: Option<i32>,
    #[arg(long, value_parser = parse_token::<MatchingRule>)]
    matching_rule: Option<MatchingRule>,
    #[arg(long, value_parser = parse_token::<QualityRule>)]
    quality_rule: Option<QualityRule>,
    #[arg(long, value_parser = parse_token::<TieFallback>)]
    tie_fallback: Option<TieFallback>,
}

fn parse_token<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

impl GradingArgs {
    /// Flags over corpus policy over defaults.
    fn policy(&self, corpus: &Corpus) -> AppraisalPolicy {
        PolicyOverrides {
            matching_rule: self.matching_rule,
            quality_rule: self.quality_rule,
            final_tie_fallback: self.tie_fallback,
        }
        .apply(corpus.policy())
    }
}

/// A failed command: exit code plus diagnostic lines.
#[derive(Debug)]
struct Failure {
    code: i32,
    lines: Vec<String>,
}

impl Failure {
    fn new(code: i32, line: impl Into<String>) -> Self {
        Failure {
            code,
            lines: vec![line.into()],
        }
    }
}

struct Ctx<'a> {
    format: OutputFormat,
    mode: ParseMode,
    stamp: Option<DateTime<Utc>>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn warn(&mut self, message: &str) {
        let _ = writeln!(self.err, "warning: {message}");
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let mut ctx = Ctx {
        format: cli.format,
        mode: if cli.lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        },
        stamp: cli.stamp.then(Utc::now),
        out,
        err,
    };
    let result = match &cli.command {
        Command::Grade {
            corpus,
            tool,
            report,
            grading,
        } => cmd_grade(
            &mut ctx,
            corpus,
            tool.as_deref(),
            report.as_deref(),
            grading,
        ),
        Command::Raters { sheet_a, sheet_b } => cmd_raters(&mut ctx, sheet_a, sheet_b),
        Command::Survey { responses } => cmd_survey(&mut ctx, responses),
        Command::Validate { corpus } => cmd_validate(&mut ctx, corpus),
        Command::Report {
            corpus,
            tool,
            legacy,
            grading,
        } => cmd_report(&mut ctx, corpus, tool, *legacy, grading),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            for line in &failure.lines {
                let _ = writeln!(ctx.err, "error: {line}");
            }
            failure.code
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| {
        Failure::new(
            EXIT_FAILURE,
            format!("cannot read `{}`: {e}", path.display()),
        )
    })
}

/// Decodes and validates a corpus, printing warnings; any violation fails.
fn load_corpus(
    ctx: &mut Ctx<'_>,
    path: &Path,
    policy_flags: Option<&GradingArgs>,
) -> Result<Corpus, Failure> {
    let decoded = decode_corpus(&read(path)?, ctx.mode)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    for w in &decoded.warnings {
        ctx.warn(w);
    }
    let mut corpus = decoded.corpus;
    let policy = policy_flags.map_or_else(|| corpus.policy(), |g| g.policy(&corpus));
    let check = check_corpus(&corpus, ctx.mode, &policy);
    for w in &check.warnings {
        ctx.warn(w);
    }
    if !check.is_ok() {
        return Err(Failure {
            code: EXIT_FAILURE,
            lines: check
                .errors
                .iter()
                .map(|e| format!("{}: {e}", path.display()))
                .collect(),
        });
    }
    // Paths in diagnostics refer to file order, so sort only afterwards.
    corpus.canonicalize();
    Ok(corpus)
}

fn write_out(ctx: &mut Ctx<'_>, text: &str) -> Result<(), Failure> {
    ctx.out
        .write_all(text.as_bytes())
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot write output: {e}")))
}

fn write_json(ctx: &mut Ctx<'_>, value: serde_json::Value) -> Result<(), Failure> {
    let value = match (ctx.stamp, value) {
        (Some(at), serde_json::Value::Object(mut map)) => {
            map.insert(
                "generated_at".into(),
                serde_json::Value::String(at.to_rfc3339()),
            );
            serde_json::Value::Object(map)
        }
        (Some(at), other) => serde_json::json!({ "generated_at": at.to_rfc3339(), "data": other }),
        (None, other) => other,
    };
    let mut text = serde_json::to_string_pretty(&value).expect("json values serialize");
    text.push('\n');
    write_out(ctx, &text)
}

fn default_reference_year(corpus: &Corpus, tool_id: &str, tool_year: i32) -> i32 {
    corpus
        .studies_for(tool_id)
        .iter()
        .map(|s| s.year)
        .chain([tool_year])
        .max()
        .unwrap_or(tool_year)
}

fn invariant_failure(e: String) -> Failure {
    Failure::new(EXIT_INVARIANT, format!("internal invariant breached: {e}"))
}

fn grade_row(r: &GradeResult) -> String {
    format!(
        "{} {} {} label={} needs_review={}",
        r.tool_id,
        r.final_grade,
        r.direction.name(),
        r.tool_label
            .as_deref()
            .map_or_else(|| "-".to_string(), |l| format!("\"{l}\"")),
        r.needs_review
    )
}

fn cmd_grade(
    ctx: &mut Ctx<'_>,
    path: &Path,
    only: Option<&str>,
    report_dir: Option<&Path>,
    grading: &GradingArgs,
) -> Result<(), Failure> {
    let corpus = load_corpus(ctx, path, Some(grading))?;
    let policy = grading.policy(&corpus);
    if let Some(id) = only {
        if corpus.tool(id).is_none() {
            return Err(Failure::new(EXIT_FAILURE, format!("unknown tool `{id}`")));
        }
    }
    if let Some(dir) = report_dir {
        std::fs::create_dir_all(dir).map_err(|e| {
            Failure::new(
                EXIT_FAILURE,
                format!("cannot create `{}`: {e}", dir.display()),
            )
        })?;
    }

    let mut results = Vec::new();
    let mut errors = Vec::new();
    for (id, graded) in corpus.grade_all(&policy) {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        match graded {
            Ok(r) => {
                check_result_invariants(&r).map_err(invariant_failure)?;
                if r.needs_review {
                    ctx.warn(&format!(
                        "{id}: tied evidence resolved conservatively, needs review"
                    ));
                }
                results.push(r);
            }
            Err(e) => errors.push(format!("{id}: {e}")),
        }
    }

    if let Some(dir) = report_dir {
        for r in &results {
            let tool = corpus.tool(&r.tool_id).expect("graded tools exist");
            let year = grading
                .reference_year
                .unwrap_or_else(|| default_reference_year(&corpus, &tool.id, tool.year));
            let doc = render_tool(ctx, &corpus, tool, r, year, false, &policy)?;
            let ext = if ctx.format == OutputFormat::Structured {
                "json"
            } else {
                "md"
            };
            let file = dir.join(format!("{}.{ext}", r.tool_id));
            std::fs::write(&file, doc).map_err(|e| {
                Failure::new(
                    EXIT_FAILURE,
                    format!("cannot write `{}`: {e}", file.display()),
                )
            })?;
        }
    }

    match ctx.format {
        OutputFormat::Text => {
            let mut text = String::new();
            if let Some(at) = ctx.stamp {
                text.push_str(&format!("# generated_at {}\n", at.to_rfc3339()));
            }
            for r in &results {
                text.push_str(&grade_row(r));
                text.push('\n');
            }
            write_out(ctx, &text)?;
        }
        OutputFormat::Structured => write_json(
            ctx,
            serde_json::json!({ "policy": policy.fingerprint(), "results": results }),
        )?,
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_FAILURE,
            lines: errors,
        })
    }
}

/// The full document for one tool: detailed report plus, for the current
/// layout, the evidence summary.
fn render_tool(
    ctx: &Ctx<'_>,
    corpus: &Corpus,
    tool: &grasp::ToolProfile,
    result: &GradeResult,
    reference_year: i32,
    legacy: bool,
    policy: &AppraisalPolicy,
) -> Result<String, Failure> {
    let indices = compute_indices(tool, reference_year)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", tool.id)))?;
    let opts = RenderOptions {
        policy: *policy,
        generated_at: ctx.stamp,
    };
    let report_failure =
        |e: grasp::report::ReportError| Failure::new(EXIT_FAILURE, format!("{}: {e}", tool.id));
    let rows = appraise_studies(tool, &corpus.studies_for(&tool.id), policy);
    if ctx.format == OutputFormat::Structured {
        let report =
            render_detailed_report(tool, result, &indices, ReportFormat::Structured, &opts)
                .map_err(report_failure)?;
        let summary = render_evidence_summary(&tool.id, &rows, ReportFormat::Structured, &opts)
            .map_err(report_failure)?;
        let value = serde_json::json!({ "report": report, "evidence_summary": summary });
        let mut text = serde_json::to_string_pretty(&value).expect("json values serialize");
        text.push('\n');
        return Ok(text);
    }
    let format = if legacy {
        ReportFormat::MarkdownTable3Legacy
    } else {
        ReportFormat::MarkdownTable4
    };
    let mut text = render_detailed_report(tool, result, &indices, format, &opts)
        .map_err(report_failure)?
        .body
        .to_text();
    if !legacy {
        text.push('\n');
        text.push_str(
            &render_evidence_summary(&tool.id, &rows, ReportFormat::MarkdownTable4, &opts)
                .map_err(report_failure)?
                .body
                .to_text(),
        );
    }
    Ok(text)
}

fn cmd_report(
    ctx: &mut Ctx<'_>,
    path: &Path,
    tool_id: &str,
    legacy: bool,
    grading: &GradingArgs,
) -> Result<(), Failure> {
    let corpus = load_corpus(ctx, path, Some(grading))?;
    let policy = grading.policy(&corpus);
    let tool = corpus
        .tool(tool_id)
        .ok_or_else(|| Failure::new(EXIT_FAILURE, format!("unknown tool `{tool_id}`")))?;
    let result = grasp::assign_grade(tool, &corpus.studies_for(tool_id), &policy)
        .map_err(|e: EngineError| Failure::new(EXIT_FAILURE, format!("{tool_id}: {e}")))?;
    check_result_invariants(&result).map_err(invariant_failure)?;
    if result.needs_review {
        ctx.warn(&format!(
            "{tool_id}: tied evidence resolved conservatively, needs review"
        ));
    }
    let year = grading
        .reference_year
        .unwrap_or_else(|| default_reference_year(&corpus, tool_id, tool.year));
    let doc = render_tool(ctx, &corpus, tool, &result, year, legacy, &policy)?;
    write_out(ctx, &doc)
}

fn rater_sheet(path: &Path) -> Result<RaterSheet, Failure> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "rater".into());
    parse_rater_sheet(&name, &read(path)?)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn cmd_raters(ctx: &mut Ctx<'_>, a: &Path, b: &Path) -> Result<(), Failure> {
    let (a, b) = (rater_sheet(a)?, rater_sheet(b)?);
    let ids_a: BTreeSet<&String> = a.grades.keys().collect();
    let ids_b: BTreeSet<&String> = b.grades.keys().collect();
    if ids_a != ids_b {
        let only_a: Vec<&str> = ids_a.difference(&ids_b).map(|s| s.as_str()).collect();
        let only_b: Vec<&str> = ids_b.difference(&ids_a).map(|s| s.as_str()).collect();
        return Err(Failure::new(
            EXIT_FAILURE,
            format!(
                "rater sheets cover different tools (only in {}: [{}]; only in {}: [{}])",
                a.rater_name,
                only_a.join(", "),
                b.rater_name,
                only_b.join(", ")
            ),
        ));
    }
    let ids: Vec<String> = a.grades.keys().cloned().collect();
    let grades_a: Vec<_> = ids.iter().map(|id| a.grades[id]).collect();
    let grades_b: Vec<_> = ids.iter().map(|id| b.grades[id]).collect();
    let cmp = compare_raters(&a.rater_name, &b.rater_name, &ids, &grades_a, &grades_b)
        .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    match ctx.format {
        OutputFormat::Text => write_out(ctx, &format!("{}\n", cmp.summary_line())),
        OutputFormat::Structured => write_json(
            ctx,
            serde_json::to_value(&cmp).expect("comparison serializes"),
        ),
    }
}

fn cmd_survey(ctx: &mut Ctx<'_>, path: &Path) -> Result<(), Failure> {
    let responses = parse_survey_sheet(&read(path)?)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    let summary =
        summarize_survey(&responses).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    match ctx.format {
        OutputFormat::Text => {
            let mut text = String::new();
            for q in &summary.questions {
                text.push_str(&format!(
                    "{} {:.2} {}\n",
                    q.question_id,
                    q.mean_score,
                    q.label.meaning()
                ));
            }
            text.push_str(&format!(
                "overall {:.2} {}\n",
                summary.overall_mean,
                summary.overall_label.meaning()
            ));
            write_out(ctx, &text)
        }
        OutputFormat::Structured => write_json(
            ctx,
            serde_json::to_value(&summary).expect("summary serializes"),
        ),
    }
}

fn cmd_validate(ctx: &mut Ctx<'_>, path: &Path) -> Result<(), Failure> {
    let corpus = load_corpus(ctx, path, None)?;
    match ctx.format {
        OutputFormat::Text => write_out(
            ctx,
            &format!(
                "OK: {} tools, {} studies\n",
                corpus.tools.len(),
                corpus.studies.len()
            ),
        ),
        OutputFormat::Structured => write_json(
            ctx,
            serde_json::json!({
                "ok": true,
                "tools": corpus.tools.len(),
                "studies": corpus.studies.len(),
            }),
        ),
    }
}
