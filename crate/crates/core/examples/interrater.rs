// Spearman correlation and exact permutation p-values between rater sheets.
//
// ```sh
// cargo run -p grasp --example interrater [a.csv b.csv]
// ```

use std::path::{Path, PathBuf};

use grasp::corpus::{parse_rater_sheet, RaterSheet};
use grasp::stats::compare_raters;

fn load(path: &Path) -> Result<RaterSheet, Box<dyn std::error::Error>> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("rater");
    Ok(parse_rater_sheet(name, &std::fs::read(path)?)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run(&args)
}

fn run(args: &[String]) -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let args: Vec<PathBuf> = args.iter().map(PathBuf::from).collect();
    let pairs = if args.len() == 2 {
        vec![(args[0].clone(), args[1].clone())]
    } else {
        let f = |n: &str| fixtures.join(n);
        vec![
            (f("r1.csv"), f("authors.csv")),
            (f("r2.csv"), f("authors.csv")),
            (f("r1.csv"), f("r2.csv")),
        ]
    };
    for (a, b) in pairs {
        let (a, b) = (load(&a)?, load(&b)?);
        let ids: Vec<String> = a.grades.keys().cloned().collect();
        let grades_b = ids
            .iter()
            .map(|id| {
                b.grades
                    .get(id)
                    .copied()
                    .ok_or(format!("{} lacks {id}", b.rater_name))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let grades_a: Vec<_> = ids.iter().map(|id| a.grades[id]).collect();
        let cmp = compare_raters(&a.rater_name, &b.rater_name, &ids, &grades_a, &grades_b)?;
        println!(
            "{} vs {}: {}",
            a.rater_name,
            b.rater_name,
            cmp.summary_line()
        );
    }
    Ok(())
}
