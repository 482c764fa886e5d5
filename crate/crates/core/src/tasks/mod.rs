//! Task definitions, datasets, answer extraction, metrics and reward
//! evaluation.

mod eval;
mod extract;
mod io;
mod metric;
mod split;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::BackendError;

pub use eval::{evaluate_prompt, evaluate_prompt_with_format, format_input, run_example, EvalResult, ExampleRow};
pub use extract::{extract_answer, normalize_entity, ExtractionRule, Prediction, UNPARSED};
pub use io::{load_examples, load_task, parse_examples, write_examples};
pub use metric::{compute_metric, micro_f1, Outcome};
pub use split::{default_heldout_size, split_dataset, DatasetSplit, SplitConfig, DEFAULT_HELDOUT, HELDOUT_RANGE, MAX_TEST};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("invalid task: {0}")]
    Invalid(String),
    #[error("no examples to evaluate")]
    EmptyExamples,
    #[error("duplicate example id `{0}`")]
    DuplicateId(String),
    #[error("not enough data for the {split} split: need {needed}, have {available}")]
    InsufficientData { split: &'static str, needed: usize, available: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Accuracy,
    EntitySetF1,
}

/// How a task is posed to the base model and how its answers are scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub initial_prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_prefix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_suffix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_format: Option<String>,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_space: Option<Vec<String>>,
    #[serde(default)]
    pub extraction: ExtractionRule,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), TaskError> {
        if self.initial_prompt.trim().is_empty() {
            return Err(TaskError::Invalid("initial_prompt must not be empty".into()));
        }
        match self.metric {
            Metric::EntitySetF1 => {
                if self.label_space.is_some() {
                    return Err(TaskError::Invalid("entity_set_f1 tasks cannot declare a label_space".into()));
                }
                if self.extraction != ExtractionRule::EntitySet {
                    return Err(TaskError::Invalid("entity_set_f1 tasks need the entity_set extraction rule".into()));
                }
            }
            Metric::Accuracy => {
                if self.extraction == ExtractionRule::EntitySet {
                    return Err(TaskError::Invalid("the entity_set extraction rule requires metric entity_set_f1".into()));
                }
            }
        }
        if let ExtractionRule::Regex { pattern } = &self.extraction {
            regex::Regex::new(pattern).map_err(|e| TaskError::Invalid(format!("bad extraction regex: {e}")))?;
        }
        Ok(())
    }

    /// Checks that an example's gold answer fits this task.
    pub fn check_example(&self, example: &Example) -> Result<(), TaskError> {
        match (&example.gold, self.metric) {
            (Gold::Label(label), Metric::Accuracy) => {
                if let Some(space) = &self.label_space {
                    if !space.iter().any(|l| l.trim().eq_ignore_ascii_case(label.trim())) {
                        return Err(TaskError::Invalid(format!(
                            "example `{}` has label `{label}` outside the label space",
                            example.id
                        )));
                    }
                }
                Ok(())
            }
            (Gold::Entities(_), Metric::EntitySetF1) => Ok(()),
            _ => Err(TaskError::Invalid(format!("example `{}` does not match the task metric", example.id))),
        }
    }
}

/// Gold answer: a single label or a set of entity strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gold {
    Label(String),
    Entities(Vec<String>),
}

impl Gold {
    /// Human-readable form used in error reports.
    pub fn display(&self) -> String {
        match self {
            Gold::Label(l) => l.clone(),
            Gold::Entities(es) => format!("{{{}}}", es.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub question: String,
    pub gold: Gold,
}

impl Example {
    pub fn label(id: impl Into<String>, question: impl Into<String>, answer: impl Into<String>) -> Self {
        Self { id: id.into(), question: question.into(), gold: Gold::Label(answer.into()) }
    }

    pub fn entities<I, S>(id: impl Into<String>, question: impl Into<String>, entities: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            id: id.into(),
            question: question.into(),
            gold: Gold::Entities(entities.into_iter().map(Into::into).collect()),
        }
    }
}

/// A task together with its data split.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub spec: TaskSpec,
    pub split: DatasetSplit,
}

impl TaskInstance {
    pub fn new(spec: TaskSpec, split: DatasetSplit) -> Result<Self, TaskError> {
        let task = Self { spec, split };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        self.spec.validate()?;
        if self.split.train.is_empty() {
            return Err(TaskError::InsufficientData { split: "train", needed: 1, available: 0 });
        }
        if self.split.heldout.is_empty() {
            return Err(TaskError::InsufficientData { split: "heldout", needed: 1, available: 0 });
        }
        let mut seen = HashSet::new();
        for ex in self.split.train.iter().chain(&self.split.heldout).chain(&self.split.test) {
            self.spec.check_example(ex)?;
            if !seen.insert(ex.id.as_str()) {
                return Err(TaskError::DuplicateId(ex.id.clone()));
            }
        }
        Ok(())
    }
}
