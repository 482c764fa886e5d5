use serde::{Deserialize, Serialize};

use super::{compute_metric, extract_answer, Example, Outcome, Prediction, TaskError, TaskSpec};
use crate::expansion::templates::{render_input_format, DEFAULT_INPUT_FORMAT};
use crate::models::{BackendError, Backends};
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRow {
    pub id: String,
    pub raw_response: String,
    pub prediction: Prediction,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub per_example: Vec<ExampleRow>,
    pub score: f64,
}

/// Base-model input: prompt, task prefix, question, task suffix and answer
/// format, one per line, with absent parts left out.
pub fn format_input(task: &TaskSpec, prompt: &str, example: &Example) -> String {
    render_input_format(DEFAULT_INPUT_FORMAT, task, prompt, example)
}

/// Queries the base model on one example and scores the answer.
pub fn run_example(
    input_format: &str,
    task: &TaskSpec,
    prompt: &str,
    example: &Example,
    backends: &Backends,
) -> Result<ExampleRow, BackendError> {
    let input = render_input_format(input_format, task, prompt, example);
    let raw_response = backends.base_complete(&input)?;
    let prediction = extract_answer(task, &raw_response);
    let outcome = Outcome::score(task, &example.gold, &prediction);
    Ok(ExampleRow { id: example.id.clone(), raw_response, prediction, outcome })
}

/// Scores `prompt` on `examples` with the base model.
pub fn evaluate_prompt(prompt: &str, task: &TaskSpec, examples: &[Example], backends: &Backends) -> Result<EvalResult, TaskError> {
    evaluate_prompt_with_format(DEFAULT_INPUT_FORMAT, prompt, task, examples, backends)
}

/// [`evaluate_prompt`] with a custom input-format template.
///
/// Per-example calls run with bounded parallelism; any backend failure fails
/// the whole evaluation.
pub fn evaluate_prompt_with_format(
    input_format: &str,
    prompt: &str,
    task: &TaskSpec,
    examples: &[Example],
    backends: &Backends,
) -> Result<EvalResult, TaskError> {
    if examples.is_empty() {
        return Err(TaskError::EmptyExamples);
    }
    backends.counters().record_evaluation();
    let per_example = parallel::try_map(examples, backends.max_parallel(), |ex| {
        run_example(input_format, task, prompt, ex, backends)
    })?;
    let score = compute_metric(task, &per_example)?;
    Ok(EvalResult { per_example, score })
}
