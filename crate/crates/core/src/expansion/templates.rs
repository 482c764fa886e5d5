//! Meta-prompt templates and single-pass `{name}` interpolation.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasks::{Example, TaskSpec};

pub const DEFAULT_INPUT_FORMAT: &str = "{prompt}\n{task_prefix}\n{question}\n{task_suffix}\n{answer_format}";

pub const DEFAULT_ERROR_STRING: &str = "<{index}>
The model's input is:
{question}

The model's response is:
{response}

The correct label is: {label}
The model's prediction is {prediction}";

pub const DEFAULT_ERROR_FEEDBACK: &str = "I'm writing prompts for a language model designed for a task.

My current prompt is:
{cur_prompt}

But this prompt gets the following examples wrong:
{error_string}

For each wrong example, carefully examine each question and wrong answer step by step, provide comprehensive and different reasons why the prompt leads to the wrong answer. At last, based on all these reasons, summarize and list all the aspects that can improve the prompt.";

pub const DEFAULT_STATE_TRANSIT: &str = "I'm writing prompts for a language model designed for a task.

My current prompt is:
{cur_prompt}

But this prompt gets the following examples wrong:
{error_string}

Based on these errors, the problems with this prompt and the reasons are:
{error_feedback}

There is a list of former prompts including the current prompt, and each prompt is modified from its former prompts:
{trajectory_prompts}

Based on the above information, please write {steps_per_gradient} new prompts following these guidelines:
1. The new prompts should solve the current prompt's problems.
2. The new prompts should consider the list of prompts and evolve based on the current prompt.
3. Each new prompt should be wrapped with <START> and <END>.

The new prompts are:";

const INPUT_PARTS: [&str; 5] = ["prompt", "task_prefix", "question", "task_suffix", "answer_format"];
const ERROR_STRING_VARS: [&str; 5] = ["index", "question", "response", "label", "prediction"];
const ERROR_FEEDBACK_VARS: [&str; 2] = ["cur_prompt", "error_string"];
const STATE_TRANSIT_VARS: [&str; 5] =
    ["cur_prompt", "error_string", "error_feedback", "trajectory_prompts", "steps_per_gradient"];

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("unknown placeholder `{{{0}}}`")]
    Unknown(String),
    #[error("template `{template}` is missing placeholder `{{{name}}}`")]
    Missing { template: &'static str, name: String },
    #[error("template `{template}` uses unsupported placeholder `{{{name}}}`")]
    Unexpected { template: &'static str, name: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The four templates that frame model calls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPromptSet {
    pub error_feedback_template: String,
    pub state_transit_template: String,
    pub error_string_template: String,
    pub input_format_template: String,
}

impl Default for MetaPromptSet {
    fn default() -> Self {
        Self {
            error_feedback_template: DEFAULT_ERROR_FEEDBACK.into(),
            state_transit_template: DEFAULT_STATE_TRANSIT.into(),
            error_string_template: DEFAULT_ERROR_STRING.into(),
            input_format_template: DEFAULT_INPUT_FORMAT.into(),
        }
    }
}

impl MetaPromptSet {
    /// Built-in defaults, overridden by `error_feedback.txt`,
    /// `state_transit.txt`, `error_string.txt` and `input_format.txt` when
    /// present in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::default();
        let slots: [(&str, &mut String); 4] = [
            ("error_feedback.txt", &mut set.error_feedback_template),
            ("state_transit.txt", &mut set.state_transit_template),
            ("error_string.txt", &mut set.error_string_template),
            ("input_format.txt", &mut set.input_format_template),
        ];
        for (file, slot) in slots {
            let path = dir.join(file);
            match fs::read_to_string(&path) {
                Ok(text) => *slot = text.trim_end_matches('\n').to_string(),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(source) => return Err(TemplateError::Io { path, source }),
            }
        }
        set.validate()?;
        Ok(set)
    }

    /// Checks that each template uses exactly the placeholders it is
    /// rendered with. The input format may omit optional parts but must
    /// keep `{prompt}` and `{question}`.
    pub fn validate(&self) -> Result<(), TemplateError> {
        check_exact("error_feedback", &self.error_feedback_template, &ERROR_FEEDBACK_VARS)?;
        check_exact("state_transit", &self.state_transit_template, &STATE_TRANSIT_VARS)?;
        check_exact("error_string", &self.error_string_template, &ERROR_STRING_VARS)?;
        let used = placeholders(&self.input_format_template);
        if let Some(name) = used.iter().find(|n| !INPUT_PARTS.contains(&n.as_str())) {
            return Err(TemplateError::Unexpected { template: "input_format", name: name.clone() });
        }
        for name in ["prompt", "question"] {
            if !used.iter().any(|n| n == name) {
                return Err(TemplateError::Missing { template: "input_format", name: name.into() });
            }
        }
        Ok(())
    }
}

fn check_exact(template: &'static str, text: &str, vars: &[&str]) -> Result<(), TemplateError> {
    let used: BTreeSet<String> = placeholders(text).into_iter().collect();
    if let Some(name) = used.iter().find(|n| !vars.contains(&n.as_str())) {
        return Err(TemplateError::Unexpected { template, name: name.clone() });
    }
    if let Some(name) = vars.iter().find(|v| !used.contains(**v)) {
        return Err(TemplateError::Missing { template, name: name.to_string() });
    }
    Ok(())
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Splits `template` into literal text and `{ident}` placeholders.
fn scan(template: &str, mut emit: impl FnMut(Result<&str, &str>)) {
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_ident(&after[..close]) => {
                emit(Ok(&rest[..open]));
                emit(Err(&after[..close]));
                rest = &after[close + 1..];
            }
            _ => {
                emit(Ok(&rest[..=open]));
                rest = after;
            }
        }
    }
    emit(Ok(rest));
}

/// Placeholder names in order of appearance, repeats included.
///
/// A placeholder is `{name}` where `name` is a lowercase identifier; any
/// other brace is literal text.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut out = Vec::new();
    scan(template, |piece| {
        if let Err(name) = piece {
            out.push(name.to_string());
        }
    });
    out
}

/// Substitutes every placeholder in one pass; substituted values are never
/// re-scanned. Unknown names are an error.
pub fn render(template: &str, vars: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut unknown = None;
    scan(template, |piece| match piece {
        Ok(lit) => out.push_str(lit),
        Err(name) => match vars.iter().find(|(k, _)| *k == name) {
            Some((_, v)) => out.push_str(v),
            None => {
                unknown.get_or_insert_with(|| name.to_string());
            }
        },
    });
    match unknown {
        Some(name) => Err(TemplateError::Unknown(name)),
        None => Ok(out),
    }
}

/// Renders an input-format template for one example.
///
/// Lines that reference an absent or empty part are dropped, so optional
/// parts leave no blank lines behind. Unknown placeholders stay literal.
pub fn render_input_format(template: &str, task: &TaskSpec, prompt: &str, example: &Example) -> String {
    let value = |name: &str| -> Option<Option<&str>> {
        let v = match name {
            "prompt" => Some(prompt),
            "task_prefix" => task.task_prefix.as_deref(),
            "question" => Some(example.question.as_str()),
            "task_suffix" => task.task_suffix.as_deref(),
            "answer_format" => task.answer_format.as_deref(),
            _ => return None,
        };
        Some(v.filter(|s| !s.is_empty()))
    };
    let mut lines = Vec::new();
    for line in template.split('\n') {
        let mut rendered = String::new();
        let mut absent = false;
        scan(line, |piece| match piece {
            Ok(lit) => rendered.push_str(lit),
            Err(name) => match value(name) {
                Some(Some(v)) => rendered.push_str(v),
                Some(None) => absent = true,
                None => {
                    rendered.push('{');
                    rendered.push_str(name);
                    rendered.push('}');
                }
            },
        });
        if !absent {
            lines.push(rendered);
        }
    }
    lines.join("\n")
}
