//! Deterministic stand-ins for the base and optimizer models.
//!
//! A landscape assigns every example a set of required keywords. The base
//! model answers an example correctly iff the prompt mentions all of them,
//! so a prompt's score is a known, monotone function of keyword coverage.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BackendError, CompletionBackend};
use crate::expansion::parse_error_string;
use crate::rng;
use crate::tasks::{Example, ExtractionRule, Metric, TaskSpec};

const WORDS: [&str; 16] = [
    "locus",
    "allele",
    "phenotype",
    "carcinoma",
    "syndrome",
    "mutation",
    "deficiency",
    "tumor",
    "hereditary",
    "lesion",
    "genotype",
    "biopsy",
    "metastasis",
    "polyp",
    "enzyme",
    "chromosome",
];

const LABELS: [&str; 4] = ["A", "B", "C", "D"];

const FEEDBACK_MARKER: &str = "But this prompt gets the following examples wrong:";
const TRANSITION_MARKER: &str = "Based on these errors, the problems with this prompt and the reasons are:";
const ASPECTS_HEADER: &str = "Aspects to improve:";

/// Lowercased alphanumeric tokens of `text`.
fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

/// Keywords from `pool` that occur as whole tokens in `text`, in pool order.
pub fn mentioned_keywords(text: &str, pool: &[String]) -> Vec<String> {
    let present: BTreeSet<String> = tokens(text).collect();
    pool.iter().filter(|k| present.contains(k.as_str())).cloned().collect()
}

/// True when every keyword in `required` occurs in `text`.
pub fn prompt_mentions(text: &str, required: &[String]) -> bool {
    let present: BTreeSet<String> = tokens(text).collect();
    required.iter().all(|k| present.contains(&k.to_lowercase()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandscapeExample {
    pub id: String,
    pub question: String,
    pub gold: String,
    pub wrong: String,
    pub required: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LandscapeFile {
    keyword_pool: Vec<String>,
    examples: Vec<LandscapeExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LandscapeFile", into = "LandscapeFile")]
pub struct SimulatedLandscape {
    pub keyword_pool: Vec<String>,
    pub examples: Vec<LandscapeExample>,
    by_question: HashMap<String, usize>,
    by_id: HashMap<String, usize>,
}

impl TryFrom<LandscapeFile> for SimulatedLandscape {
    type Error = BackendError;

    fn try_from(file: LandscapeFile) -> Result<Self, BackendError> {
        SimulatedLandscape::new(file.keyword_pool, file.examples)
    }
}

impl From<SimulatedLandscape> for LandscapeFile {
    fn from(l: SimulatedLandscape) -> Self {
        LandscapeFile { keyword_pool: l.keyword_pool, examples: l.examples }
    }
}

/// Shape of a generated landscape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandscapeParams {
    pub n_keywords: usize,
    /// Keywords the initial prompt already mentions.
    pub root_mentions: usize,
    pub n_examples: usize,
    /// Each example requires between 1 and this many keywords.
    pub max_required: usize,
    pub seed: u64,
}

impl Default for LandscapeParams {
    fn default() -> Self {
        Self { n_keywords: 10, root_mentions: 4, n_examples: 200, max_required: 3, seed: 0 }
    }
}

fn join_words(words: &[String]) -> String {
    match words {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

impl SimulatedLandscape {
    pub fn new(keyword_pool: Vec<String>, examples: Vec<LandscapeExample>) -> Result<Self, BackendError> {
        let bad = |m: String| BackendError::Config(format!("invalid landscape: {m}"));
        let pool: BTreeSet<&str> = keyword_pool.iter().map(String::as_str).collect();
        if pool.len() != keyword_pool.len() {
            return Err(bad("duplicate keywords".into()));
        }
        for k in &keyword_pool {
            if k.is_empty() || tokens(k).collect::<Vec<_>>() != [k.clone()] {
                return Err(bad(format!("keyword `{k}` must be a single lowercase token")));
            }
        }
        let mut by_question = HashMap::new();
        let mut by_id = HashMap::new();
        for (i, ex) in examples.iter().enumerate() {
            if ex.question.contains('\n') || ex.question.trim().is_empty() {
                return Err(bad(format!("example `{}` needs a single-line question", ex.id)));
            }
            if ex.gold == ex.wrong {
                return Err(bad(format!("example `{}` has identical gold and wrong labels", ex.id)));
            }
            if let Some(k) = ex.required.iter().find(|k| !pool.contains(k.as_str())) {
                return Err(bad(format!("example `{}` requires unknown keyword `{k}`", ex.id)));
            }
            if by_question.insert(ex.question.clone(), i).is_some() {
                return Err(bad(format!("duplicate question `{}`", ex.question)));
            }
            if by_id.insert(ex.id.clone(), i).is_some() {
                return Err(bad(format!("duplicate id `{}`", ex.id)));
            }
        }
        Ok(Self { keyword_pool, examples, by_question, by_id })
    }

    /// Builds a random landscape plus a matching task and dataset.
    ///
    /// Every keyword is required by at least one example, so only a prompt
    /// naming all of them scores 1.0.
    pub fn generate(params: &LandscapeParams) -> Result<(Self, TaskSpec, Vec<Example>), BackendError> {
        if params.n_keywords == 0 || params.n_keywords > WORDS.len() {
            return Err(BackendError::Config(format!("n_keywords must be in 1..={}", WORDS.len())));
        }
        if params.root_mentions > params.n_keywords {
            return Err(BackendError::Config("root_mentions cannot exceed n_keywords".into()));
        }
        if params.n_examples < params.n_keywords {
            return Err(BackendError::Config("need at least one example per keyword".into()));
        }
        if params.max_required == 0 {
            return Err(BackendError::Config("max_required must be at least 1".into()));
        }
        let mut rng = rng::seeded(params.seed);
        let mut words: Vec<String> = WORDS.iter().map(|w| w.to_string()).collect();
        words.shuffle(&mut rng);
        words.truncate(params.n_keywords);
        let pool = words;

        let width = (params.n_examples - 1).to_string().len().max(3);
        let mut examples = Vec::with_capacity(params.n_examples);
        for i in 0..params.n_examples {
            let k = rng.gen_range(1..=params.max_required.min(pool.len()));
            let anchor = &pool[i % pool.len()];
            let mut required = vec![anchor.clone()];
            let others: Vec<&String> = pool.iter().filter(|w| *w != anchor).collect();
            required.extend(others.choose_multiple(&mut rng, k - 1).map(|w| (*w).clone()));
            // Pool order keeps questions readable and stable.
            required.sort_by_key(|w| pool.iter().position(|p| p == w));
            let gold_i = rng.gen_range(0..LABELS.len());
            let wrong_i = (gold_i + rng.gen_range(1..LABELS.len())) % LABELS.len();
            examples.push(LandscapeExample {
                id: format!("case-{i:0width$}"),
                question: format!("Case {i:0width$}: the report discusses {} findings.", join_words(&required)),
                gold: LABELS[gold_i].to_string(),
                wrong: LABELS[wrong_i].to_string(),
                required,
            });
        }

        let root_words: Vec<String> = pool[..params.root_mentions].to_vec();
        let initial_prompt = if root_words.is_empty() {
            "Classify each case report into one of the categories.".to_string()
        } else {
            format!("Classify each case report into one of the categories. Consider {}.", join_words(&root_words))
        };
        let task = TaskSpec {
            name: format!("keyword-landscape-{}", params.seed),
            initial_prompt,
            task_prefix: None,
            task_suffix: None,
            answer_format: Some(format!("Answer with one of {} as <answer>X</answer>.", LABELS.join(", "))),
            metric: Metric::Accuracy,
            label_space: Some(LABELS.iter().map(|l| l.to_string()).collect()),
            extraction: ExtractionRule::default(),
        };
        let dataset = examples.iter().map(|e| Example::label(e.id.clone(), e.question.clone(), e.gold.clone())).collect();
        Ok((Self::new(pool, examples)?, task, dataset))
    }

    pub fn example(&self, id: &str) -> Option<&LandscapeExample> {
        self.by_id.get(id).map(|&i| &self.examples[i])
    }

    /// Whether `prompt` makes the base model answer example `id` correctly.
    pub fn answers_correctly(&self, prompt: &str, id: &str) -> Option<bool> {
        self.example(id).map(|ex| prompt_mentions(prompt, &ex.required))
    }

    /// Accuracy the simulated base model achieves with `prompt` on `examples`.
    ///
    /// Computed directly from keyword coverage, independent of the model
    /// plumbing. Examples unknown to the landscape count as wrong.
    pub fn oracle_score(&self, prompt: &str, examples: &[Example]) -> f64 {
        if examples.is_empty() {
            return 0.0;
        }
        let hits = examples.iter().filter(|e| self.answers_correctly(prompt, &e.id) == Some(true)).count();
        hits as f64 / examples.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("landscapes always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        serde_json::from_str(text).map_err(|e| BackendError::Config(format!("invalid landscape: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text =
            fs::read_to_string(path).map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        fs::write(path, self.to_json()).map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))
    }
}

/// Base model that answers from keyword coverage of the prompt.
pub struct SimulatedBase {
    landscape: Arc<SimulatedLandscape>,
}

impl SimulatedBase {
    pub fn new(landscape: Arc<SimulatedLandscape>) -> Self {
        Self { landscape }
    }
}

impl CompletionBackend for SimulatedBase {
    fn complete(&self, input: &str) -> Result<String, BackendError> {
        let lines: Vec<&str> = input.lines().collect();
        // The question sits below the prompt; scan from the end so prompt
        // text can never be mistaken for it.
        for (pos, line) in lines.iter().enumerate().rev() {
            if let Some(&i) = self.landscape.by_question.get(*line) {
                let ex = &self.landscape.examples[i];
                let prompt = lines[..pos].join("\n");
                let label = if prompt_mentions(&prompt, &ex.required) { &ex.gold } else { &ex.wrong };
                return Ok(format!("Considering the report, the answer is <answer>{label}</answer>"));
            }
        }
        Ok("I cannot identify the case.".to_string())
    }
}

/// Optimizer that names the keywords missing from the current prompt and
/// rewrites it by appending them.
pub struct SimulatedOptimizer {
    keyword_pool: Vec<String>,
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let len = text[from..].find(end)?;
    Some(&text[from..from + len])
}

impl SimulatedOptimizer {
    pub fn new(keyword_pool: Vec<String>) -> Self {
        Self { keyword_pool }
    }

    fn current_prompt(input: &str) -> Option<&str> {
        between(input, "My current prompt is:\n", "\n\nBut this prompt gets").map(str::trim)
    }

    fn feedback(&self, input: &str) -> Option<String> {
        let cur = Self::current_prompt(input)?;
        let errors = between(input, "following examples wrong:\n", "\n\nFor each wrong example")?;
        let records = parse_error_string(errors).ok()?;
        let have: BTreeSet<String> = mentioned_keywords(cur, &self.keyword_pool).into_iter().collect();
        let mut lines: Vec<String> = Vec::new();
        for rec in &records {
            let missing: Vec<String> =
                mentioned_keywords(&rec.question, &self.keyword_pool).into_iter().filter(|k| !have.contains(k)).collect();
            if missing.is_empty() {
                continue;
            }
            let line = format!("- {}", missing.join(", "));
            if !lines.contains(&line) {
                lines.push(line);
            }
        }
        let mut out = format!("{ASPECTS_HEADER}\n");
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
        Some(out)
    }

    fn transition(&self, input: &str) -> Option<String> {
        let cur = Self::current_prompt(input)?;
        let feedback = between(input, "the reasons are:\n", "\n\nThere is a list of former prompts")?;
        let count: usize = between(input, "please write ", " new prompts")?.trim().parse().ok()?;
        let aspects: Vec<Vec<&str>> = feedback
            .lines()
            .filter_map(|l| l.strip_prefix("- "))
            .map(|l| l.split(',').map(str::trim).filter(|k| !k.is_empty()).collect())
            .collect();
        let mut out = String::new();
        for j in 0..count.max(1) {
            let text = if aspects.is_empty() {
                cur.to_string()
            } else {
                format!("{cur} {}", aspects[j % aspects.len()].join(" "))
            };
            out.push_str(&format!("<START>{text}<END>\n"));
        }
        Some(out)
    }
}

impl CompletionBackend for SimulatedOptimizer {
    fn complete(&self, input: &str) -> Result<String, BackendError> {
        let reply = if input.contains(TRANSITION_MARKER) {
            self.transition(input)
        } else if input.contains(FEEDBACK_MARKER) {
            self.feedback(input)
        } else {
            None
        };
        Ok(reply.unwrap_or_else(|| {
            let cur = Self::current_prompt(input).unwrap_or(input.lines().next().unwrap_or_default());
            format!("<START>{cur}<END>")
        }))
    }
}
