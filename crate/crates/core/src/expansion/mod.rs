//! State transitions: collect base-model errors on sampled training batches,
//! ask the optimizer for error feedback (the action), then ask it to rewrite
//! the prompt (the new states).

mod errors;
pub mod templates;

use rand::seq::SliceRandom;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

pub use errors::{format_error_string, format_error_string_with, parse_error_string, ErrorRecord};
pub use templates::{placeholders, render, render_input_format, MetaPromptSet, TemplateError};

use crate::models::BackendError;
use crate::parallel;
use crate::rng::SearchRng;
use crate::search::{check_terminal, NodeId, SearchContext, SearchError, SearchTree};
use crate::tasks::{evaluate_prompt_with_format, run_example, TaskError};

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("no errors found in {attempts} sampled batches")]
    PerfectPrompt { attempts: usize },
    #[error("no <START>...<END> span in {attempts} optimizer replies")]
    MalformedTransition { attempts: usize },
    #[error("optimizer returned empty feedback")]
    EmptyFeedback,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Task(TaskError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("expansion precondition failed: {0}")]
    Precondition(String),
}

impl From<TaskError> for ExpansionError {
    fn from(e: TaskError) -> Self {
        match e {
            TaskError::Backend(b) => ExpansionError::Backend(b),
            other => ExpansionError::Task(other),
        }
    }
}

impl ExpansionError {
    /// Failures that only skip the current batch.
    pub fn skips_batch(&self) -> bool {
        matches!(
            self,
            ExpansionError::PerfectPrompt { .. } | ExpansionError::MalformedTransition { .. } | ExpansionError::EmptyFeedback
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl std::fmt::Display for ActionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Optimizer feedback on one batch of errors; the edge label between a node
/// and the children rewritten from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub id: ActionId,
    pub feedback_text: String,
    pub source_error_ids: Vec<String>,
    pub batch_index: usize,
}

/// Samples up to `max_error_attempts` batches of `batch_size` training
/// examples and returns the errors of the first batch that has any.
pub fn collect_errors(prompt: &str, ctx: &SearchContext<'_>, rng: &mut SearchRng) -> Result<Vec<ErrorRecord>, ExpansionError> {
    let train = &ctx.task.split.train;
    let batch_size = ctx.config.batch_size;
    if batch_size == 0 || batch_size > train.len() {
        return Err(ExpansionError::Precondition(format!(
            "batch_size {batch_size} does not fit a training set of {}",
            train.len()
        )));
    }
    let format = &ctx.templates.input_format_template;
    let attempts = ctx.config.max_error_attempts;
    for _ in 0..attempts {
        let batch: Vec<_> = train.choose_multiple(rng, batch_size).collect();
        ctx.backends.counters().record_error_batch();
        let rows = parallel::try_map(&batch, ctx.backends.max_parallel(), |ex| {
            run_example(format, &ctx.task.spec, prompt, ex, ctx.backends)
        })?;
        let errors: Vec<ErrorRecord> = batch
            .iter()
            .zip(rows)
            .filter(|(_, row)| !row.outcome.is_correct())
            .map(|(ex, row)| ErrorRecord {
                example_id: ex.id.clone(),
                question: ex.question.clone(),
                model_response: row.raw_response,
                gold_label: ex.gold.display(),
                predicted_label: row.prediction.display(),
            })
            .collect();
        if !errors.is_empty() {
            return Ok(errors);
        }
    }
    Err(ExpansionError::PerfectPrompt { attempts })
}

/// Asks the optimizer what is wrong with `prompt` given `error_string`.
/// The returned action has a placeholder id until it is added to a tree.
pub fn generate_feedback(
    prompt: &str,
    error_string: &str,
    errors: &[ErrorRecord],
    batch_index: usize,
    ctx: &SearchContext<'_>,
) -> Result<Action, ExpansionError> {
    if error_string.trim().is_empty() || errors.is_empty() {
        return Err(ExpansionError::Precondition("feedback needs a non-empty error string".into()));
    }
    let input = render(&ctx.templates.error_feedback_template, &[("cur_prompt", prompt), ("error_string", error_string)])?;
    let feedback_text = ctx.backends.optimizer_complete(&input)?;
    if feedback_text.trim().is_empty() {
        return Err(ExpansionError::EmptyFeedback);
    }
    Ok(Action {
        id: ActionId(usize::MAX),
        feedback_text,
        source_error_ids: errors.iter().map(|e| e.example_id.clone()).collect(),
        batch_index,
    })
}

fn span_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)<START>(.*?)<END>").expect("static regex"))
}

/// Non-empty, trimmed `<START>...<END>` spans in order.
pub fn parse_prompt_spans(reply: &str) -> Vec<String> {
    span_regex()
        .captures_iter(reply)
        .map(|c| c[1].trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Numbered list of the prompts from the root to the current one.
pub fn format_trajectory(prompts: &[String]) -> String {
    prompts.iter().enumerate().map(|(i, p)| format!("({i}) {p}")).collect::<Vec<_>>().join("\n")
}

/// Asks the optimizer for `num_samples` rewrites of `prompt`. Retries up to
/// `transition_retries` times when the reply holds no usable span.
pub fn transit_state(
    prompt: &str,
    error_string: &str,
    action: &Action,
    trajectory_prompts: &[String],
    num_samples: usize,
    ctx: &SearchContext<'_>,
) -> Result<Vec<String>, ExpansionError> {
    let steps = num_samples.to_string();
    let trajectory = format_trajectory(trajectory_prompts);
    let input = render(
        &ctx.templates.state_transit_template,
        &[
            ("cur_prompt", prompt),
            ("error_string", error_string),
            ("error_feedback", &action.feedback_text),
            ("trajectory_prompts", &trajectory),
            ("steps_per_gradient", &steps),
        ],
    )?;
    let attempts = ctx.config.transition_retries + 1;
    for _ in 0..attempts {
        let reply = ctx.backends.optimizer_complete(&input)?;
        let mut spans = parse_prompt_spans(&reply);
        if !spans.is_empty() {
            spans.truncate(num_samples);
            return Ok(spans);
        }
    }
    Err(ExpansionError::MalformedTransition { attempts })
}

/// Runs `batches` error/feedback/rewrite rounds on node `id`, evaluates
/// every rewrite on the held-out set and attaches them as children.
///
/// Skipped batches are tallied in the tree stats. Terminal flags are left
/// untouched.
pub fn expand_with(
    id: NodeId,
    tree: &mut SearchTree,
    batches: usize,
    samples_per_batch: usize,
    ctx: &SearchContext<'_>,
    rng: &mut SearchRng,
) -> Result<Vec<NodeId>, ExpansionError> {
    ctx.backends.counters().record_expansion();
    let prompt = tree.node(id)?.state.text.clone();
    let trajectory: Vec<String> = tree.trajectory(id)?.iter().map(|n| n.state.text.clone()).collect();

    let mut proposals: Vec<(Action, Vec<String>)> = Vec::new();
    for batch_index in 0..batches {
        match propose(&prompt, &trajectory, batch_index, samples_per_batch, ctx, rng) {
            Ok(p) => proposals.push(p),
            Err(e) if e.skips_batch() => {
                let stats = tree.stats_mut();
                match e {
                    ExpansionError::PerfectPrompt { .. } => stats.perfect_prompt_batches += 1,
                    _ => stats.malformed_transitions += 1,
                }
                log::debug!("batch {batch_index} on {id} skipped: {e}");
            }
            Err(e) => return Err(e),
        }
    }

    let heldout = &ctx.task.split.heldout;
    let format = &ctx.templates.input_format_template;
    let mut created = Vec::new();
    for (action, texts) in proposals {
        let rewards = texts
            .iter()
            .map(|t| evaluate_prompt_with_format(format, t, &ctx.task.spec, heldout, ctx.backends).map(|r| r.score))
            .collect::<Result<Vec<f64>, TaskError>>()?;
        let action_id = tree.push_action(action);
        for (text, reward) in texts.into_iter().zip(rewards) {
            created.push(tree.add_child(id, text, reward, Some(action_id))?);
        }
    }
    Ok(created)
}

fn propose(
    prompt: &str,
    trajectory: &[String],
    batch_index: usize,
    samples: usize,
    ctx: &SearchContext<'_>,
    rng: &mut SearchRng,
) -> Result<(Action, Vec<String>), ExpansionError> {
    let errors = collect_errors(prompt, ctx, rng)?;
    let error_string = format_error_string_with(&ctx.templates.error_string_template, &errors)?;
    let action = generate_feedback(prompt, &error_string, &errors, batch_index, ctx)?;
    let texts = transit_state(prompt, &error_string, &action, trajectory, samples, ctx)?;
    Ok((action, texts))
}

/// MCTS expansion of a non-terminal node: `expand_width` batches of
/// `num_samples` rewrites each. New children get their terminal flags once
/// all siblings exist. A node that yields nothing is marked unexpandable.
pub fn expand(id: NodeId, tree: &mut SearchTree, ctx: &SearchContext<'_>, rng: &mut SearchRng) -> Result<Vec<NodeId>, ExpansionError> {
    if tree.node(id)?.is_terminal() {
        return Err(ExpansionError::Precondition(format!("node {id} is terminal")));
    }
    let created = expand_with(id, tree, ctx.config.expand_width, ctx.config.num_samples, ctx, rng)?;
    let flags = created
        .iter()
        .map(|&c| check_terminal(c, tree, ctx.config))
        .collect::<Result<Vec<_>, _>>()?;
    for (&c, flag) in created.iter().zip(flags) {
        tree.node_mut(c)?.terminal_flag = flag;
    }
    if created.is_empty() {
        tree.node_mut(id)?.unexpandable = true;
    }
    Ok(created)
}
