//! JSON Lines datasets and JSON task files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Example, Gold, TaskError, TaskSpec};

#[derive(Deserialize)]
struct RawExample {
    id: Value,
    question: String,
    #[serde(default)]
    answer: Option<Value>,
    #[serde(default)]
    entities: Option<Vec<String>>,
}

#[derive(Serialize)]
struct OutExample<'a> {
    id: &'a str,
    question: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entities: Option<&'a [String]>,
}

fn scalar_to_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Parses JSON Lines text; `path` is only used in error messages.
pub fn parse_examples(text: &str, path: &Path) -> Result<Vec<Example>, TaskError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| TaskError::Parse { path: path.to_path_buf(), line: i + 1, message };
        let raw: RawExample = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let id = scalar_to_string(&raw.id).ok_or_else(|| err("`id` must be a string or number".into()))?;
        let gold = match (raw.answer, raw.entities) {
            (Some(a), None) => Gold::Label(scalar_to_string(&a).ok_or_else(|| err("`answer` must be a scalar".into()))?),
            (None, Some(es)) => Gold::Entities(es),
            _ => return Err(err("expected exactly one of `answer` or `entities`".into())),
        };
        out.push(Example { id, question: raw.question, gold });
    }
    Ok(out)
}

pub fn load_examples(path: &Path) -> Result<Vec<Example>, TaskError> {
    let text = fs::read_to_string(path).map_err(|source| TaskError::Io { path: path.to_path_buf(), source })?;
    parse_examples(&text, path)
}

pub fn write_examples(path: &Path, examples: &[Example]) -> Result<(), TaskError> {
    let mut text = String::new();
    for ex in examples {
        let (answer, entities) = match &ex.gold {
            Gold::Label(l) => (Some(l.as_str()), None),
            Gold::Entities(es) => (None, Some(es.as_slice())),
        };
        let line = serde_json::to_string(&OutExample { id: &ex.id, question: &ex.question, answer, entities })
            .expect("examples always serialize");
        text.push_str(&line);
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| TaskError::Io { path: path.to_path_buf(), source })
}

pub fn load_task(path: &Path) -> Result<TaskSpec, TaskError> {
    let text = fs::read_to_string(path).map_err(|source| TaskError::Io { path: path.to_path_buf(), source })?;
    let spec: TaskSpec = serde_json::from_str(&text).map_err(|e| TaskError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    spec.validate()?;
    Ok(spec)
}
