use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{normalize_entity, ExampleRow, Gold, Metric, Prediction, TaskError, TaskSpec};

/// Per-example scoring result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct(bool),
    Counts {
        tp: u64,
        fp: u64,
        #[serde(rename = "fn")]
        fn_: u64,
    },
}

impl Outcome {
    pub fn is_correct(self) -> bool {
        match self {
            Outcome::Correct(c) => c,
            Outcome::Counts { fp, fn_, .. } => fp == 0 && fn_ == 0,
        }
    }

    pub(crate) fn score(task: &TaskSpec, gold: &Gold, prediction: &Prediction) -> Outcome {
        match (task.metric, gold) {
            (Metric::EntitySetF1, Gold::Entities(gold)) => {
                let gold: BTreeSet<String> = gold.iter().map(|e| normalize_entity(e)).filter(|e| !e.is_empty()).collect();
                let predicted = match prediction {
                    Prediction::Entities(p) => p.clone(),
                    _ => BTreeSet::new(),
                };
                let tp = predicted.intersection(&gold).count() as u64;
                Outcome::Counts { tp, fp: predicted.len() as u64 - tp, fn_: gold.len() as u64 - tp }
            }
            (_, Gold::Label(label)) => Outcome::Correct(match prediction {
                Prediction::Label(p) => p.trim().to_lowercase() == label.trim().to_lowercase(),
                _ => false,
            }),
            (_, Gold::Entities(_)) => Outcome::Correct(false),
        }
    }
}

/// Micro F1 from summed counts. Empty predictions against empty gold sets
/// score 1.
pub fn micro_f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

pub fn compute_metric(task: &TaskSpec, rows: &[ExampleRow]) -> Result<f64, TaskError> {
    if rows.is_empty() {
        return Err(TaskError::EmptyExamples);
    }
    Ok(match task.metric {
        Metric::Accuracy => {
            let correct = rows.iter().filter(|r| r.outcome.is_correct()).count();
            correct as f64 / rows.len() as f64
        }
        Metric::EntitySetF1 => {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for row in rows {
                if let Outcome::Counts { tp: t, fp: p, fn_: n } = row.outcome {
                    tp += t;
                    fp += p;
                    fn_ += n;
                }
            }
            micro_f1(tp, fp, fn_)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::ExtractionRule;

    fn task(metric: Metric) -> TaskSpec {
        TaskSpec {
            name: "t".into(),
            initial_prompt: "p".into(),
            task_prefix: None,
            task_suffix: None,
            answer_format: None,
            metric,
            label_space: None,
            extraction: if metric == Metric::EntitySetF1 { ExtractionRule::EntitySet } else { ExtractionRule::default() },
        }
    }

    fn row(outcome: Outcome) -> ExampleRow {
        ExampleRow { id: "x".into(), raw_response: String::new(), prediction: Prediction::Unparsed, outcome }
    }

    #[test]
    fn accuracy_three_of_four() {
        let rows: Vec<_> = [true, true, false, true].into_iter().map(|c| row(Outcome::Correct(c))).collect();
        assert_eq!(compute_metric(&task(Metric::Accuracy), &rows).unwrap(), 0.75);
    }

    #[test]
    fn accuracy_all_correct() {
        let rows: Vec<_> = (0..5).map(|_| row(Outcome::Correct(true))).collect();
        assert_eq!(compute_metric(&task(Metric::Accuracy), &rows).unwrap(), 1.0);
    }

    #[test]
    fn entity_f1_half_overlap() {
        let t = task(Metric::EntitySetF1);
        let predicted: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let outcome = Outcome::score(&t, &Gold::Entities(vec!["B".into(), " C ".into()]), &Prediction::Entities(predicted));
        assert_eq!(outcome, Outcome::Counts { tp: 1, fp: 1, fn_: 1 });
        assert_eq!(compute_metric(&t, &[row(outcome)]).unwrap(), 0.5);
    }

    #[test]
    fn unparsed_entity_answer_misses_everything() {
        let t = task(Metric::EntitySetF1);
        let outcome = Outcome::score(&t, &Gold::Entities(vec!["x".into(), "y".into()]), &Prediction::Unparsed);
        assert_eq!(outcome, Outcome::Counts { tp: 0, fp: 0, fn_: 2 });
        assert!(!outcome.is_correct());
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(matches!(compute_metric(&task(Metric::Accuracy), &[]), Err(TaskError::EmptyExamples)));
    }
}
