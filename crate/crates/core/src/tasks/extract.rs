use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::TaskSpec;

/// Sentinel shown for responses with no extractable answer.
pub const UNPARSED: &str = "unparsed";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtractionRule {
    /// Text between the last `open`/`close` pair.
    Tag { open: String, close: String },
    /// Last match of `pattern`; capture group 1 when present.
    Regex { pattern: String },
    /// Last `{a, b, ...}` group, parsed as a set of entities.
    EntitySet,
}

impl Default for ExtractionRule {
    fn default() -> Self {
        ExtractionRule::Tag { open: "<answer>".into(), close: "</answer>".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Label(String),
    Entities(BTreeSet<String>),
    Unparsed,
}

impl Prediction {
    pub fn display(&self) -> String {
        match self {
            Prediction::Label(l) => l.clone(),
            Prediction::Entities(es) => format!("{{{}}}", es.iter().cloned().collect::<Vec<_>>().join(",")),
            Prediction::Unparsed => UNPARSED.to_string(),
        }
    }
}

/// Lowercased, whitespace-trimmed entity string.
pub fn normalize_entity(s: &str) -> String {
    s.trim().to_lowercase()
}

pub fn extract_answer(task: &TaskSpec, response: &str) -> Prediction {
    let raw = match &task.extraction {
        ExtractionRule::Tag { open, close } => last_tagged(response, open, close),
        ExtractionRule::Regex { pattern } => last_regex_match(response, pattern),
        ExtractionRule::EntitySet => {
            return match last_tagged(response, "{", "}") {
                Some(inner) => Prediction::Entities(
                    inner.split(',').map(normalize_entity).filter(|e| !e.is_empty()).collect(),
                ),
                None => Prediction::Unparsed,
            };
        }
    };
    match raw.map(|r| r.trim().to_string()).filter(|r| !r.is_empty()) {
        Some(label) => Prediction::Label(canonical_label(task, label)),
        None => Prediction::Unparsed,
    }
}

fn canonical_label(task: &TaskSpec, label: String) -> String {
    task.label_space
        .as_ref()
        .and_then(|space| space.iter().find(|l| l.trim().eq_ignore_ascii_case(&label)))
        .map(|l| l.trim().to_string())
        .unwrap_or(label)
}

fn last_tagged<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let end = text.rfind(close)?;
    let start = text[..end].rfind(open)? + open.len();
    Some(&text[start..end])
}

fn last_regex_match<'a>(text: &'a str, pattern: &str) -> Option<&'a str> {
    let re = Regex::new(pattern).ok()?;
    let caps = re.captures_iter(text).last()?;
    caps.get(1).or_else(|| caps.get(0)).map(|m| m.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::Metric;

    fn task(extraction: ExtractionRule, labels: Option<&[&str]>) -> TaskSpec {
        TaskSpec {
            name: "t".into(),
            initial_prompt: "p".into(),
            task_prefix: None,
            task_suffix: None,
            answer_format: None,
            metric: if extraction == ExtractionRule::EntitySet { Metric::EntitySetF1 } else { Metric::Accuracy },
            label_space: labels.map(|ls| ls.iter().map(|s| s.to_string()).collect()),
            extraction,
        }
    }

    #[test]
    fn tag_rule_takes_last_pair() {
        let t = task(ExtractionRule::default(), Some(&["A", "B", "C", "D", "E"]));
        let p = extract_answer(&t, "Thinking <answer>A</answer> ... so <answer> b </answer>");
        assert_eq!(p, Prediction::Label("B".into()));
    }

    #[test]
    fn missing_tags_are_unparsed() {
        let t = task(ExtractionRule::default(), None);
        assert_eq!(extract_answer(&t, "The answer is B."), Prediction::Unparsed);
        assert_eq!(extract_answer(&t, "<answer>  </answer>"), Prediction::Unparsed);
    }

    #[test]
    fn entity_set_rule() {
        let t = task(ExtractionRule::EntitySet, None);
        let p = extract_answer(&t, "Entities: {gliomas, HNPCC}");
        let expected: BTreeSet<String> = ["gliomas", "hnpcc"].iter().map(|s| s.to_string()).collect();
        assert_eq!(p, Prediction::Entities(expected));
        assert_eq!(extract_answer(&t, "none here: {}"), Prediction::Entities(BTreeSet::new()));
        assert_eq!(extract_answer(&t, "no braces"), Prediction::Unparsed);
    }

    #[test]
    fn regex_rule_uses_first_group_of_last_match() {
        let t = task(ExtractionRule::Regex { pattern: r"Answer:\s*(\w+)".into() }, None);
        assert_eq!(extract_answer(&t, "Answer: yes\nAnswer: no"), Prediction::Label("no".into()));
    }
}
