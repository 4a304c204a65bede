// Parses a corpus, validates it and prints its canonical form.
//
// ```sh
// cargo run -p grasp --example corpus_roundtrip [corpus.json] [--lenient]
// ```

use std::path::PathBuf;

use grasp::corpus::{
    check_corpus, emit_corpus, parse_corpus, parse_corpus_with_warnings, ParseMode,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run(&args)
}

fn run(args: &[String]) -> Result<(), Box<dyn std::error::Error>> {
    let mode = if args.iter().any(|a| a == "--lenient") {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };
    let path = args
        .iter()
        .find(|a| !a.starts_with("--"))
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/grasp8.json"));

    let decoded = parse_corpus_with_warnings(&std::fs::read(&path)?, mode)?;
    for w in &decoded.warnings {
        eprintln!("warning: {w}");
    }
    let check = check_corpus(&decoded.corpus, mode, &decoded.corpus.policy());
    for w in &check.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(e) = check.errors.first() {
        return Err(e.clone().into());
    }

    let canonical = emit_corpus(&decoded.corpus);
    let again = parse_corpus(canonical.as_bytes(), ParseMode::Strict)?;
    assert_eq!(again, decoded.corpus, "parse(emit(c)) must equal c");
    assert_eq!(
        emit_corpus(&again),
        canonical,
        "canonical form is a fixed point"
    );
    print!("{canonical}");
    Ok(())
}
