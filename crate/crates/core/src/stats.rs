//! Ordinal statistics: tie-corrected Spearman correlation, the exact
//! permutation test, interrater comparison and Likert summaries.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{GradeLevel, RaterComparison};

/// Largest sample the exact permutation test will enumerate (10! arrangements).
pub const MAX_PERMUTATION_N: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("at least 2 observations required, got {0}")]
    TooShort(usize),
    #[error("correlation undefined: a vector is constant")]
    DegenerateInput,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("exact permutation test supports n <= {MAX_PERMUTATION_N}, got {0}")]
    TooLarge(usize),
    #[error("no responses")]
    EmptyResponses,
    #[error("Likert value {0} outside 1..=5")]
    OutOfRange(f64),
}

/// Mid-ranks (1-based); tied values share the mean of the ranks they span.
pub fn midranks(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort(x.len()));
    }
    Ok(())
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(StatsError::DegenerateInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho with mid-rank tie correction: the Pearson correlation of
/// the two rank vectors.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    pearson(&midranks(x)?, &midranks(y)?)
}

/// Extreme-arrangement count from the exact permutation test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationCount {
    /// Arrangements whose |rho| reaches the observed |rho|.
    pub extreme: u64,
    /// n! arrangements, tied values counted as distinct.
    pub total: u64,
}

impl PermutationCount {
    pub fn p_value(&self) -> f64 {
        self.extreme as f64 / self.total as f64
    }
}

/// Doubled mid-ranks are integers, so the rank covariance numerator can be
/// compared exactly across permutations.
fn doubled_ranks(values: &[f64]) -> Result<Vec<i64>, StatsError> {
    Ok(midranks(values)?
        .into_iter()
        .map(|r| (r * 2.0).round() as i64)
        .collect())
}

/// Enumerates every arrangement of `y` against `x` (Heap's algorithm) and
/// counts those with |rho| at least the observed |rho|.
pub fn permutation_count(x: &[f64], y: &[f64]) -> Result<PermutationCount, StatsError> {
    check_pair(x, y)?;
    let n = x.len();
    if n > MAX_PERMUTATION_N {
        return Err(StatsError::TooLarge(n));
    }
    // Surfaces DegenerateInput before enumerating.
    spearman_rho(x, y)?;

    let a = doubled_ranks(x)?;
    let mut b = doubled_ranks(y)?;
    let n_i = n as i64;
    let sum_a: i64 = a.iter().sum();
    let sum_b: i64 = b.iter().sum();
    // rho is proportional to n*sum(a*b) - sum(a)*sum(b); the denominator is
    // invariant under permutation.
    let numerator = |b: &[i64]| -> i64 {
        n_i * a.iter().zip(b).map(|(p, q)| p * q).sum::<i64>() - sum_a * sum_b
    };
    let observed = numerator(&b).abs();

    let mut extreme = 0u64;
    let mut total = 0u64;
    let mut counters = vec![0usize; n];
    let mut visit = |b: &[i64]| {
        total += 1;
        if numerator(b).abs() >= observed {
            extreme += 1;
        }
    };
    visit(&b);
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                b.swap(0, i);
            } else {
                b.swap(counters[i], i);
            }
            visit(&b);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(PermutationCount { extreme, total })
}

/// Two-sided exact permutation p-value for Spearman's rho.
pub fn permutation_p(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    Ok(permutation_count(x, y)?.p_value())
}

fn grade_ranks(grades: &[GradeLevel]) -> Vec<f64> {
    grades.iter().map(|g| f64::from(g.ordinal_rank())).collect()
}

/// Compares two raters' grades for the same tools on the ordinal scale.
pub fn compare_raters(
    rater_a_name: &str,
    rater_b_name: &str,
    tool_ids: &[String],
    grades_a: &[GradeLevel],
    grades_b: &[GradeLevel],
) -> Result<RaterComparison, StatsError> {
    for other in [grades_a.len(), grades_b.len()] {
        if other != tool_ids.len() {
            return Err(StatsError::LengthMismatch {
                left: tool_ids.len(),
                right: other,
            });
        }
    }
    let x = grade_ranks(grades_a);
    let y = grade_ranks(grades_b);
    let rho = spearman_rho(&x, &y)?;
    let p_value = permutation_p(&x, &y)?;
    let exact_agreement = grades_a
        .iter()
        .zip(grades_b)
        .filter(|(a, b)| a == b)
        .count();
    Ok(RaterComparison {
        rater_a_name: rater_a_name.to_string(),
        rater_b_name: rater_b_name.to_string(),
        tool_ids: tool_ids.to_vec(),
        grades_a: grades_a.to_vec(),
        grades_b: grades_b.to_vec(),
        rho,
        p_value,
        exact_agreement,
    })
}

/// `"<0.001"` below the reporting threshold, otherwise three decimals.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("={p:.3}")
    }
}

impl RaterComparison {
    /// `rho=0.994 agreement=6/8 p<0.001`
    pub fn summary_line(&self) -> String {
        format!(
            "rho={:.3} agreement={}/{} p{}",
            self.rho,
            self.exact_agreement,
            self.tool_ids.len(),
            format_p(self.p_value)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementLabel {
    StronglyDisagree,
    SomewhatDisagree,
    Neither,
    SomewhatAgree,
    StronglyAgree,
}

impl AgreementLabel {
    pub fn meaning(self) -> &'static str {
        match self {
            AgreementLabel::StronglyDisagree => "Strongly Disagree",
            AgreementLabel::SomewhatDisagree => "Somewhat Disagree",
            AgreementLabel::Neither => "Neither Agree nor Disagree",
            AgreementLabel::SomewhatAgree => "Somewhat Agree",
            AgreementLabel::StronglyAgree => "Strongly Agree",
        }
    }
}

impl fmt::Display for AgreementLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.meaning())
    }
}

pub fn likert_mean(responses: &[u8]) -> Result<f64, StatsError> {
    if responses.is_empty() {
        return Err(StatsError::EmptyResponses);
    }
    if let Some(bad) = responses.iter().find(|r| !(1..=5).contains(*r)) {
        return Err(StatsError::OutOfRange(f64::from(*bad)));
    }
    let sum: u32 = responses.iter().map(|r| u32::from(*r)).sum();
    Ok(f64::from(sum) / responses.len() as f64)
}

/// Five equal-width bins of 0.8 over [1, 5], upper edges inclusive.
pub fn agreement_label(mean_score: f64) -> Result<AgreementLabel, StatsError> {
    const EPS: f64 = 1e-9;
    if !mean_score.is_finite() || !(1.0 - EPS..=5.0 + EPS).contains(&mean_score) {
        return Err(StatsError::OutOfRange(mean_score));
    }
    let label = if mean_score <= 1.8 + EPS {
        AgreementLabel::StronglyDisagree
    } else if mean_score <= 2.6 + EPS {
        AgreementLabel::SomewhatDisagree
    } else if mean_score <= 3.4 + EPS {
        AgreementLabel::Neither
    } else if mean_score <= 4.2 + EPS {
        AgreementLabel::SomewhatAgree
    } else {
        AgreementLabel::StronglyAgree
    };
    Ok(label)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertSummary {
    pub question_id: String,
    pub mean_score: f64,
    pub n: usize,
    pub label: AgreementLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveySummary {
    pub questions: Vec<LikertSummary>,
    /// Mean of the per-question means.
    pub overall_mean: f64,
    pub overall_label: AgreementLabel,
}

/// Summarizes `(question_id, response)` pairs; questions keep the order in
/// which they first appear.
pub fn summarize_survey(responses: &[(String, u8)]) -> Result<SurveySummary, StatsError> {
    let mut order: Vec<&str> = Vec::new();
    let mut grouped: std::collections::HashMap<&str, Vec<u8>> = Default::default();
    for (q, r) in responses {
        let entry = grouped.entry(q.as_str()).or_insert_with(|| {
            order.push(q.as_str());
            Vec::new()
        });
        entry.push(*r);
    }
    let questions = order
        .iter()
        .map(|q| {
            let values = &grouped[q];
            let mean_score = likert_mean(values)?;
            Ok(LikertSummary {
                question_id: q.to_string(),
                mean_score,
                n: values.len(),
                label: agreement_label(mean_score)?,
            })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    if questions.is_empty() {
        return Err(StatsError::EmptyResponses);
    }
    let overall_mean = questions.iter().map(|q| q.mean_score).sum::<f64>() / questions.len() as f64;
    Ok(SurveySummary {
        overall_label: agreement_label(overall_mean)?,
        overall_mean,
        questions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn midranks_average_ties() {
        assert_eq!(
            midranks(&[10.0, 20.0, 10.0, 30.0]).unwrap(),
            vec![1.5, 3.0, 1.5, 4.0]
        );
    }

    #[test]
    fn rho_identity_and_reversal() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_abs_diff_eq!(spearman_rho(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
        let rev: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(spearman_rho(&x, &rev).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn rho_errors() {
        assert_eq!(
            spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::DegenerateInput)
        );
        assert!(matches!(
            spearman_rho(&[1.0, 2.0], &[1.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert_eq!(spearman_rho(&[1.0], &[1.0]), Err(StatsError::TooShort(1)));
    }

    #[test]
    fn permutation_three_identity() {
        // Of the 6 arrangements of [1,2,3], the identity and the reversal reach |rho| = 1.
        let c = permutation_count(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            c,
            PermutationCount {
                extreme: 2,
                total: 6
            }
        );
        assert_abs_diff_eq!(c.p_value(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn permutation_errors() {
        assert_eq!(
            permutation_p(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::DegenerateInput)
        );
        let big: Vec<f64> = (0..11).map(f64::from).collect();
        assert_eq!(permutation_p(&big, &big), Err(StatsError::TooLarge(11)));
    }

    #[test]
    fn likert_means() {
        assert_eq!(likert_mean(&[5, 5, 5]).unwrap(), 5.0);
        assert_eq!(likert_mean(&[1]).unwrap(), 1.0);
        assert_eq!(likert_mean(&[]), Err(StatsError::EmptyResponses));
        assert_eq!(likert_mean(&[3, 6]), Err(StatsError::OutOfRange(6.0)));
        assert_eq!(likert_mean(&[0]), Err(StatsError::OutOfRange(0.0)));
    }

    #[test]
    fn label_bins() {
        use AgreementLabel::*;
        let cases = [
            (1.0, StronglyDisagree),
            (1.8, StronglyDisagree),
            (1.81, SomewhatDisagree),
            (2.6, SomewhatDisagree),
            (2.97, Neither),
            (3.4, Neither),
            (3.41, SomewhatAgree),
            (4.16, SomewhatAgree),
            (4.2, SomewhatAgree),
            (4.26, StronglyAgree),
            (4.87, StronglyAgree),
            (5.0, StronglyAgree),
        ];
        for (score, expected) in cases {
            assert_eq!(agreement_label(score).unwrap(), expected, "{score}");
        }
        assert!(agreement_label(0.99).is_err());
        assert!(agreement_label(5.01).is_err());
        assert!(agreement_label(f64::NAN).is_err());
    }

    #[test]
    fn survey_keeps_question_order() {
        let rows: Vec<(String, u8)> = [("b", 3), ("a", 5), ("b", 3), ("a", 4)]
            .iter()
            .map(|(q, r)| (q.to_string(), *r))
            .collect();
        let s = summarize_survey(&rows).unwrap();
        assert_eq!(s.questions[0].question_id, "b");
        assert_eq!(s.questions[0].label, AgreementLabel::Neither);
        assert_eq!(s.questions[1].mean_score, 4.5);
        assert_abs_diff_eq!(s.overall_mean, 3.75);
    }

    #[test]
    fn p_formatting() {
        assert_eq!(format_p(0.0000992), "<0.001");
        assert_eq!(format_p(1.0 / 3.0), "=0.333");
    }
}
