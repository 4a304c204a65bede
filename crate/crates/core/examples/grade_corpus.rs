// Grades every tool in a corpus file.
//
// ```sh
// cargo run -p grasp --example grade_corpus [path/to/corpus.json]
// ```

use std::path::PathBuf;

use grasp::corpus::{parse_corpus, ParseMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run(&args)
}

fn run(args: &[String]) -> Result<(), Box<dyn std::error::Error>> {
    let path = args
        .first()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/grasp8.json"));
    let corpus = parse_corpus(&std::fs::read(&path)?, ParseMode::Strict)?;
    let policy = corpus.policy();
    println!("policy: {}", policy.fingerprint());
    for (tool_id, result) in corpus.grade_all(&policy) {
        match result {
            Ok(r) => println!(
                "{tool_id:<12} {} {:<14} {}",
                r.final_grade,
                r.direction.name(),
                r.tool_label.as_deref().unwrap_or("-")
            ),
            Err(e) => println!("{tool_id:<12} error: {e}"),
        }
    }
    Ok(())
}
