//! Error records and the error-string block format.

use serde::{Deserialize, Serialize};

use super::templates::{render, TemplateError, DEFAULT_ERROR_STRING};
use super::ExpansionError;

/// One base-model mistake on a training example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub example_id: String,
    pub question: String,
    pub model_response: String,
    pub gold_label: String,
    pub predicted_label: String,
}

const BLOCK_SEPARATOR: &str = "\n\n";

/// Formats errors with the built-in block layout, numbered from 0.
pub fn format_error_string(errors: &[ErrorRecord]) -> Result<String, ExpansionError> {
    format_error_string_with(DEFAULT_ERROR_STRING, errors)
}

/// Formats errors with a custom block template.
pub fn format_error_string_with(template: &str, errors: &[ErrorRecord]) -> Result<String, ExpansionError> {
    if errors.is_empty() {
        return Err(ExpansionError::Precondition("no errors to format".into()));
    }
    let blocks = errors
        .iter()
        .enumerate()
        .map(|(i, e)| {
            render(
                template,
                &[
                    ("index", &i.to_string()),
                    ("question", &e.question),
                    ("response", &e.model_response),
                    ("label", &e.gold_label),
                    ("prediction", &e.predicted_label),
                ],
            )
        })
        .collect::<Result<Vec<_>, TemplateError>>()?;
    Ok(blocks.join(BLOCK_SEPARATOR))
}

fn block_head(index: usize) -> String {
    format!("<{index}>\nThe model's input is:\n")
}

fn take_until<'a>(rest: &mut &'a str, marker: &str) -> Option<&'a str> {
    let at = rest.find(marker)?;
    let field = &rest[..at];
    *rest = &rest[at + marker.len()..];
    Some(field)
}

/// Parses text produced by [`format_error_string`].
///
/// Example ids are not part of the text, so `example_id` is left empty.
/// Fields may span lines but must not contain the layout's own marker
/// lines.
pub fn parse_error_string(text: &str) -> Result<Vec<ErrorRecord>, ExpansionError> {
    let malformed = |i: usize, what: &str| ExpansionError::Precondition(format!("error block {i}: {what}"));
    let mut out = Vec::new();
    let mut rest = text;
    loop {
        let i = out.len();
        rest = rest.strip_prefix(block_head(i).as_str()).ok_or_else(|| malformed(i, "missing block header"))?;
        let question = take_until(&mut rest, "\n\nThe model's response is:\n").ok_or_else(|| malformed(i, "no response"))?;
        let response = take_until(&mut rest, "\n\nThe correct label is: ").ok_or_else(|| malformed(i, "no label"))?;
        let label = take_until(&mut rest, "\nThe model's prediction is ").ok_or_else(|| malformed(i, "no prediction"))?;
        let next = format!("{BLOCK_SEPARATOR}{}", block_head(i + 1));
        let prediction = match rest.find(&next) {
            Some(at) => {
                let p = &rest[..at];
                rest = &rest[at + BLOCK_SEPARATOR.len()..];
                p
            }
            None => std::mem::take(&mut rest),
        };
        out.push(ErrorRecord {
            example_id: String::new(),
            question: question.to_string(),
            model_response: response.to_string(),
            gold_label: label.to_string(),
            predicted_label: prediction.to_string(),
        });
        if rest.is_empty() {
            return Ok(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(q: &str, r: &str, g: &str, p: &str) -> ErrorRecord {
        ErrorRecord {
            example_id: String::new(),
            question: q.into(),
            model_response: r.into(),
            gold_label: g.into(),
            predicted_label: p.into(),
        }
    }

    #[test]
    fn single_block_layout() {
        let s = format_error_string(&[record("What is 2+2?", "It is 5.", "4", "5")]).unwrap();
        assert_eq!(
            s,
            "<0>\nThe model's input is:\nWhat is 2+2?\n\nThe model's response is:\nIt is 5.\n\n\
             The correct label is: 4\nThe model's prediction is 5"
        );
    }

    #[test]
    fn blocks_numbered_in_order() {
        let errs = vec![record("a", "b", "c", "d"); 3];
        let s = format_error_string(&errs).unwrap();
        let heads: Vec<usize> = (0..3).map(|i| s.find(&format!("<{i}>\n")).unwrap()).collect();
        assert!(heads.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_list_rejected() {
        assert!(matches!(format_error_string(&[]), Err(ExpansionError::Precondition(_))));
    }

    fn field() -> impl Strategy<Value = String> {
        // Free text including blank lines and braces, without the layout's
        // marker phrases.
        "[a-zA-Z0-9 .,:{}<>\n]{0,40}".prop_filter("marker text", |s| !s.contains("The model's") && !s.contains("The correct"))
    }

    proptest! {
        #[test]
        fn round_trip(rows in proptest::collection::vec((field(), field(), field(), field()), 1..6)) {
            let errs: Vec<ErrorRecord> = rows.iter().map(|(q, r, g, p)| record(q, r, g, p)).collect();
            let text = format_error_string(&errs).unwrap();
            prop_assert_eq!(parse_error_string(&text).unwrap(), errs);
        }
    }
}
