//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion before asserting, so `cargo test --test acceptance -- --nocapture`
//! gives a readable scorecard.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use grasp::corpus::{
    check_corpus, emit_corpus, parse_corpus, parse_rater_sheet, parse_survey_sheet, ParseMode,
};
use grasp::engine::{
    assign_grade, classify_evidence_class, classify_strength, compute_indices, mixed_protocol,
    AppraisalPolicy, EngineError, TieFallback,
};
use grasp::model::{
    BucketDirection, EvidenceClass, GradeLevel, MatchingVerdict, QualityVerdict, StrengthVerdict,
    StudyDirection, StudyRecord,
};
use grasp::stats::{compare_raters, permutation_count, summarize_survey, AgreementLabel};
use grasp::testing::{study, tool};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{read_fixture, CLASSES, DIRECTIONS};

fn verdict(criterion: u32, title: &str, ok: bool, detail: &str) {
    println!(
        "criterion {criterion} [{}] {title}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

// ---------------------------------------------------------------------------
// 1. Interrater reproduction

const RHO_TOLERANCE: f64 = 0.0005;
const P_THRESHOLD: f64 = 0.001;

#[test]
fn criterion_1_interrater_reproduction() {
    let start = Instant::now();
    let sheet =
        |name: &str| parse_rater_sheet(name, &read_fixture(&format!("{name}.csv"))).unwrap();
    let (r1, r2, authors) = (sheet("r1"), sheet("r2"), sheet("authors"));

    let mut lines = Vec::new();
    let mut ok = true;
    for (a, b, expected) in [
        (&r1, &authors, 0.994),
        (&r2, &authors, 0.994),
        (&r1, &r2, 0.988),
    ] {
        let ids: Vec<String> = a.grades.keys().cloned().collect();
        assert_eq!(ids, b.grades.keys().cloned().collect::<Vec<_>>());
        let ga: Vec<GradeLevel> = ids.iter().map(|id| a.grades[id]).collect();
        let gb: Vec<GradeLevel> = ids.iter().map(|id| b.grades[id]).collect();
        let cmp = compare_raters(&a.rater_name, &b.rater_name, &ids, &ga, &gb).unwrap();
        let ranks = |g: &[GradeLevel]| {
            g.iter()
                .map(|x| f64::from(x.ordinal_rank()))
                .collect::<Vec<_>>()
        };
        let count = permutation_count(&ranks(&ga), &ranks(&gb)).unwrap();
        let this_ok = (cmp.rho - expected).abs() <= RHO_TOLERANCE
            && cmp.p_value < P_THRESHOLD
            && count.total == 40_320;
        ok &= this_ok;
        lines.push(format!(
            "{} vs {}: rho={:.5} (target {expected}) p={:.2e} ({}/{})",
            a.rater_name, b.rater_name, cmp.rho, cmp.p_value, count.extreme, count.total
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    verdict(
        1,
        "interrater reproduction",
        ok,
        &format!("{}; {elapsed:?}", lines.join("; ")),
    );
    assert!(ok, "{lines:?} in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 2. Grade reproduction

#[test]
fn criterion_2_grade_reproduction() {
    let corpus = parse_corpus(&read_fixture("grasp8.json"), ParseMode::Strict).unwrap();
    let policy = corpus.policy();
    let check = check_corpus(&corpus, ParseMode::Strict, &policy);
    assert!(
        check.is_ok(),
        "fixture fails strict validation: {:?}",
        check.errors
    );
    let authors = parse_rater_sheet("authors", &read_fixture("authors.csv")).unwrap();
    let expected = [
        ("centor", GradeLevel::B3),
        ("chalice", GradeLevel::B2),
        ("dietrich", GradeLevel::C0),
        ("lace", GradeLevel::C1),
        ("manuck", GradeLevel::C2),
        ("ottawa-knee", GradeLevel::A1),
        ("pecarn", GradeLevel::A2),
        ("taylor", GradeLevel::C3),
    ];
    // The sheet and the literal list must agree before either is trusted.
    assert_eq!(
        authors
            .grades
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .collect::<Vec<_>>(),
        expected.to_vec()
    );

    let graded = corpus.grade_all(&policy);
    let mut hits = 0;
    let mut misses = Vec::new();
    for ((id, result), (want_id, want)) in graded.iter().zip(expected) {
        assert_eq!(id, want_id);
        match result {
            Ok(r) if r.final_grade == want => hits += 1,
            Ok(r) => misses.push(format!("{id}: got {} want {want}", r.final_grade)),
            Err(e) => misses.push(format!("{id}: {e}")),
        }
    }
    let ok = hits == 8 && graded.len() == 8;
    verdict(
        2,
        "grade reproduction",
        ok,
        &format!("{hits}/8 exact {misses:?}"),
    );
    assert!(ok, "{misses:?}");
}

// ---------------------------------------------------------------------------
// 3. Likert reproduction

#[test]
fn criterion_3_likert_reproduction() {
    let responses = parse_survey_sheet(&read_fixture("survey.csv")).unwrap();
    let summary = summarize_survey(&responses).unwrap();
    use AgreementLabel::*;
    let expected = [
        ("4.87", StronglyAgree),
        ("4.44", StronglyAgree),
        ("4.68", StronglyAgree),
        ("4.61", StronglyAgree),
        ("2.97", Neither),
        ("4.78", StronglyAgree),
        ("4.16", SomewhatAgree),
        ("4.26", StronglyAgree),
    ];
    let mut ok = summary.questions.len() == expected.len();
    for (q, (mean, label)) in summary.questions.iter().zip(expected) {
        ok &= format!("{:.2}", q.mean_score) == mean && q.label == label;
    }
    ok &=
        format!("{:.2}", summary.overall_mean) == "4.35" && summary.overall_label == StronglyAgree;
    // The pair that separates the two agreeing bins.
    ok &= summary.questions[6].label.meaning() == "Somewhat Agree"
        && summary.questions[7].label.meaning() == "Strongly Agree";
    let got: Vec<String> = summary
        .questions
        .iter()
        .map(|q| format!("{:.2} {}", q.mean_score, q.label.meaning()))
        .collect();
    verdict(
        3,
        "likert reproduction",
        ok,
        &format!(
            "{}; overall {:.2} {}",
            got.join(", "),
            summary.overall_mean,
            summary.overall_label.meaning()
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 4. Strength and evidence-class truth tables

#[test]
fn criterion_4_protocol_truth_tables() {
    use MatchingVerdict::*;
    use QualityVerdict::*;
    let table = [
        (Matching, High, StrengthVerdict::Strong, EvidenceClass::A),
        (Matching, Low, StrengthVerdict::Medium, EvidenceClass::B),
        (NonMatching, High, StrengthVerdict::Medium, EvidenceClass::B),
        (NonMatching, Low, StrengthVerdict::Weak, EvidenceClass::C),
    ];
    let mut cells = 0;
    for (m, q, strength, class) in table {
        cells += usize::from(classify_strength(m, q) == strength);
        cells += usize::from(classify_evidence_class(m, q) == class);
    }
    let ok = cells == 8;
    verdict(4, "protocol truth tables", ok, &format!("{cells}/8 cells"));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 5. Cascade oracle

/// Weighted-sign evaluation of the cascade: with at most five studies every
/// per-class margin fits in a base-11 digit, so the sign of the weighted sum
/// is decided by the highest class whose margin is non-zero.
fn oracle(items: &[(EvidenceClass, StudyDirection)]) -> i64 {
    let margin = |class: EvidenceClass| -> i64 {
        items
            .iter()
            .filter(|(c, _)| *c == class)
            .map(|(_, d)| {
                if *d == StudyDirection::Positive {
                    1
                } else {
                    -1
                }
            })
            .sum()
    };
    (121 * margin(EvidenceClass::A) + 11 * margin(EvidenceClass::B) + margin(EvidenceClass::C))
        .signum()
}

#[test]
fn criterion_5_cascade_oracle_equivalence() {
    let start = Instant::now();
    let kinds: Vec<(EvidenceClass, StudyDirection)> = CLASSES
        .iter()
        .flat_map(|c| DIRECTIONS.iter().map(move |d| (*c, *d)))
        .collect();
    // Every sequence of up to five kinds, deduplicated to multisets.
    let mut multisets: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..5 {
        let mut next = Vec::new();
        for seq in &frontier {
            for k in 0..kinds.len() {
                let mut s = seq.clone();
                s.push(k);
                let mut key = s.clone();
                key.sort_unstable();
                multisets.insert(key);
                next.push(s);
            }
        }
        frontier = next;
    }

    let t = tool("t");
    let conservative = AppraisalPolicy::default();
    let strict_ties = AppraisalPolicy {
        final_tie_fallback: TieFallback::FailWithReviewFlag,
        ..AppraisalPolicy::default()
    };
    let (mut checked, mut not_mixed, mut mismatches) = (0usize, 0usize, Vec::new());
    for ms in &multisets {
        let items: Vec<_> = ms.iter().map(|&k| kinds[k]).collect();
        let studies: Vec<StudyRecord> = items
            .iter()
            .enumerate()
            .map(|(i, (c, d))| study(&format!("s{i}"), "t", GradeLevel::C3, *d, *c))
            .collect();
        let mixed = items.iter().any(|(_, d)| d.is_positive())
            && items.iter().any(|(_, d)| !d.is_positive());
        if !mixed {
            not_mixed += 1;
            if mixed_protocol(&studies, &t, &conservative) != Err(EngineError::NotMixed) {
                mismatches.push(format!("{items:?}: expected NotMixed"));
            }
            continue;
        }
        checked += 1;
        let want = oracle(&items);
        let lenient = mixed_protocol(&studies, &t, &conservative);
        let strict = mixed_protocol(&studies, &t, &strict_ties);
        let agrees = match want {
            1 => matches!((&lenient, &strict), (Ok(a), Ok(b))
                if a.direction == BucketDirection::MixedPositive && !a.needs_review && a == b),
            -1 => matches!((&lenient, &strict), (Ok(a), Ok(b))
                if a.direction == BucketDirection::MixedNegative && !a.needs_review && a == b),
            _ => {
                matches!(&lenient, Ok(a) if a.direction == BucketDirection::MixedNegative && a.needs_review)
                    && matches!(strict, Err(EngineError::AdjudicationRequired { .. }))
            }
        };
        if !agrees {
            mismatches.push(format!(
                "{items:?}: oracle {want}, got {lenient:?} / {strict:?}"
            ));
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && elapsed < Duration::from_secs(10);
    verdict(
        5,
        "cascade oracle equivalence",
        ok,
        &format!(
            "{checked} mixed multisets agree, {not_mixed} unmixed rejected, {} mismatches; {elapsed:?}",
            mismatches.len()
        ),
    );
    assert!(ok, "{:?}", &mismatches[..mismatches.len().min(5)]);
}

// ---------------------------------------------------------------------------
// 6. Monotonicity

/// Bucket slots. External validations share one slot; the engine settles
/// C1 against C2 from the study count.
const SLOTS: [GradeLevel; 7] = [
    GradeLevel::A1,
    GradeLevel::A2,
    GradeLevel::A3,
    GradeLevel::B2,
    GradeLevel::B3,
    GradeLevel::C2,
    GradeLevel::C3,
];

fn rank_of(result: Result<grasp::GradeResult, EngineError>) -> u8 {
    match result {
        Ok(r) => r.final_grade.ordinal_rank(),
        Err(EngineError::NoGradableEvidence { .. }) => 0,
        Err(e) => panic!("unexpected engine error: {e}"),
    }
}

/// All multisets of `(slot, class, direction)` with at most `max_total`
/// studies spread over at most `max_slots` slots, each slot holding at most
/// `max_per_slot` studies.
fn enumerate_corpora(max_total: usize, max_slots: usize, max_per_slot: usize) -> Vec<Vec<usize>> {
    let n_kinds = SLOTS.len() * 9;
    let mut out = vec![vec![]];
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(cur) = stack.pop() {
        if cur.len() == max_total {
            continue;
        }
        let from = cur.last().copied().unwrap_or(0);
        for k in from..n_kinds {
            let mut next = cur.clone();
            next.push(k);
            let slots: BTreeSet<usize> = next.iter().map(|k| k / 9).collect();
            let per_slot = next.iter().filter(|x| **x / 9 == k / 9).count();
            if slots.len() > max_slots || per_slot > max_per_slot {
                continue;
            }
            out.push(next.clone());
            stack.push(next);
        }
    }
    out
}

fn build(kinds: &[usize], id_base: usize) -> Vec<StudyRecord> {
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let level = SLOTS[k / 9];
            let class = CLASSES[(k % 9) / 3];
            let direction = DIRECTIONS[k % 3];
            study(
                &format!("s{:02}", id_base + i),
                "t",
                level,
                direction,
                class,
            )
        })
        .collect()
}

#[test]
fn criterion_6_monotonicity() {
    let start = Instant::now();
    let t = tool("t");
    let policy = AppraisalPolicy::default();
    let corpora = enumerate_corpora(4, 3, 4);
    let mut appended = 0usize;
    let mut counterexamples = Vec::new();
    for kinds in &corpora {
        let mut studies = build(kinds, 0);
        let before = rank_of(assign_grade(&t, &studies, &policy));
        for slot in SLOTS {
            for class in CLASSES {
                studies.push(study("s99", "t", slot, StudyDirection::Positive, class));
                let after = rank_of(assign_grade(&t, &studies, &policy));
                studies.pop();
                appended += 1;
                if after < before {
                    counterexamples
                        .push(format!("{kinds:?} + {slot}/{class}: {before} -> {after}"));
                }
            }
        }
    }
    let ok = counterexamples.is_empty();
    verdict(
        6,
        "monotonicity",
        ok,
        &format!(
            "{} corpora, {appended} appends, {} counterexamples; {:?}",
            corpora.len(),
            counterexamples.len(),
            start.elapsed()
        ),
    );
    assert!(ok, "{:?}", &counterexamples[..counterexamples.len().min(5)]);
}

// ---------------------------------------------------------------------------
// 7. Order independence

#[test]
fn criterion_7_order_independence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0de7);
    let t = tool("t");
    let mut differing = 0;
    for corpus_no in 0..1000 {
        let policy = AppraisalPolicy {
            final_tie_fallback: if corpus_no % 2 == 0 {
                TieFallback::ConservativeNegative
            } else {
                TieFallback::FailWithReviewFlag
            },
            ..AppraisalPolicy::default()
        };
        let n = rng.gen_range(1..=12);
        let mut studies: Vec<StudyRecord> = (0..n)
            .map(|i| {
                let level = *common::RAW_LEVELS.choose(&mut rng).unwrap();
                let mut s = study(
                    &format!("s{i:02}"),
                    "t",
                    level,
                    *DIRECTIONS.choose(&mut rng).unwrap(),
                    *CLASSES.choose(&mut rng).unwrap(),
                );
                s.label = common::random_study(&mut rng, String::new(), "t", Some(level)).label;
                s
            })
            .collect();
        let reference = assign_grade(&t, &studies, &policy);
        for _ in 0..10 {
            studies.shuffle(&mut rng);
            if assign_grade(&t, &studies, &policy) != reference {
                differing += 1;
            }
        }
    }
    let ok = differing == 0;
    verdict(
        7,
        "order independence",
        ok,
        &format!("1000 corpora x 10 permutations, {differing} differing results"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 8. Round-trip and parser robustness

fn mutate(rng: &mut ChaCha8Rng, bytes: &[u8]) -> Vec<u8> {
    let mut out = bytes.to_vec();
    for _ in 0..rng.gen_range(1..=4) {
        let at = rng.gen_range(0..out.len().max(1));
        match rng.gen_range(0..5) {
            0 if !out.is_empty() => out[at] ^= 1 << rng.gen_range(0..8),
            1 if !out.is_empty() => {
                out.remove(at);
            }
            2 => out.insert(at.min(out.len()), rng.gen()),
            3 => {
                let token: &[u8] = [
                    b"\"".as_slice(),
                    b"{",
                    b"]",
                    b"null",
                    b"-1",
                    b"\"zz\"",
                    b"1e999",
                ]
                .choose(rng)
                .unwrap();
                let at = at.min(out.len());
                out.splice(at..at, token.iter().copied());
            }
            _ => out.truncate(at),
        }
    }
    out
}

#[test]
fn criterion_8_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut round_trip_failures = 0;
    let mut fixed_point_failures = 0;
    for _ in 0..1000 {
        let mut corpus = common::random_corpus(&mut rng);
        let policy = corpus.policy();
        let check = check_corpus(&corpus, ParseMode::Strict, &policy);
        assert!(
            check.is_ok(),
            "generator produced an invalid corpus: {:?}",
            check.errors
        );
        let text = emit_corpus(&corpus);
        match parse_corpus(text.as_bytes(), ParseMode::Strict) {
            Ok(parsed) => {
                corpus.canonicalize();
                if parsed != corpus {
                    round_trip_failures += 1;
                }
                if emit_corpus(&parsed) != text {
                    fixed_point_failures += 1;
                }
            }
            Err(_) => round_trip_failures += 1,
        }
    }

    let fixture = read_fixture("grasp8.json");
    let (mut panics, mut accepted, mut rejected) = (0, 0, 0);
    for _ in 0..3000 {
        let bytes = mutate(&mut rng, &fixture);
        for mode in [ParseMode::Strict, ParseMode::Lenient] {
            match std::panic::catch_unwind(|| parse_corpus(&bytes, mode)) {
                Ok(Ok(_)) => accepted += 1,
                Ok(Err(_)) => rejected += 1,
                Err(_) => panics += 1,
            }
        }
    }
    let ok = round_trip_failures == 0 && fixed_point_failures == 0 && panics == 0;
    verdict(
        8,
        "round-trip",
        ok,
        &format!(
            "1000 corpora: {round_trip_failures} round-trip and {fixed_point_failures} fixed-point failures; \
             6000 fuzzed parses: {panics} panics, {rejected} typed errors, {accepted} accepted"
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 9. Bibliometric indices

/// (tool year, reference year, citations, studies, age, citation index,
/// publication index, literature index)
type IndexCase = (i32, i32, u64, u64, i32, f64, f64, u64);

const INDEX_CASES: [IndexCase; 20] = [
    (2010, 2010, 0, 0, 1, 0.0, 0.0, 0),
    (2010, 2010, 1, 1, 1, 1.0, 1.0, 1),
    (2010, 2010, 250, 3, 1, 250.0, 3.0, 750),
    (2009, 2010, 100, 4, 2, 50.0, 2.0, 400),
    (2000, 2019, 1500, 12, 20, 75.0, 0.6, 18000),
    (
        1981,
        2019,
        3000,
        40,
        39,
        76.92307692307692,
        1.0256410256410255,
        120000,
    ),
    (
        1995,
        2020,
        1047,
        27,
        26,
        40.26923076923077,
        1.0384615384615385,
        28269,
    ),
    (2016, 2019, 61, 5, 4, 15.25, 1.25, 305),
    (
        2009,
        2019,
        1800,
        35,
        11,
        163.63636363636363,
        3.1818181818181817,
        63000,
    ),
    (
        2011,
        2019,
        120,
        1,
        9,
        13.333333333333334,
        0.1111111111111111,
        120,
    ),
    (
        1993,
        2019,
        150,
        2,
        27,
        5.555555555555555,
        0.07407407407407407,
        300,
    ),
    (2010, 2019, 900, 18, 10, 90.0, 1.8, 16200),
    (
        2006,
        2019,
        600,
        11,
        14,
        42.857142857142854,
        0.7857142857142857,
        6600,
    ),
    (2018, 2018, 7, 2, 1, 7.0, 2.0, 14),
    (2017, 2019, 0, 3, 3, 0.0, 1.0, 0),
    (1970, 2019, 12345, 77, 50, 246.9, 1.54, 950565),
    (2015, 2021, 333, 7, 7, 47.57142857142857, 1.0, 2331),
    (2000, 2000, 99999, 1, 1, 99999.0, 1.0, 99999),
    (2012, 2019, 10, 0, 8, 1.25, 0.0, 0),
    (
        1990,
        2019,
        2999,
        29,
        30,
        99.96666666666667,
        0.9666666666666667,
        86971,
    ),
];

#[test]
fn criterion_9_index_formulas() {
    let mut exact = 0;
    for (year, reference, citations, studies, age, ci, pi, li) in INDEX_CASES {
        assert_eq!(reference - year + 1, age);
        let mut t = tool("t");
        t.year = year;
        t.tool_citations = citations;
        t.studies_count = studies;
        let got = compute_indices(&t, reference).unwrap();
        if got.citation_index == ci && got.publication_index == pi && got.literature_index == li {
            exact += 1;
        }
    }
    let mut t = tool("t");
    t.year = 2020;
    let rejects_future = matches!(
        compute_indices(&t, 2019),
        Err(EngineError::InvalidReferenceYear { .. })
    );
    let ok = exact == INDEX_CASES.len() && rejects_future;
    verdict(
        9,
        "index formulas",
        ok,
        &format!(
            "{exact}/{} exact, reference year before tool year rejected: {rejects_future}",
            INDEX_CASES.len()
        ),
    );
    assert!(ok);
}
