//! Prompt optimization as planning over prompt space.
//!
//! A task prompt is refined by collecting the base model's mistakes on small
//! training batches, asking an optimizer model to reflect on those mistakes
//! (the *action*), and asking it again to rewrite the prompt accordingly (the
//! *state transition*). A UCT-guided Monte Carlo tree search decides which
//! prompt to refine next; rewards are held-out task scores.
//!
//! Modules:
//! - [`search`]: tree bookkeeping and the four MCTS steps.
//! - [`expansion`]: error collection, feedback, transitions and meta-prompts.
//! - [`tasks`]: task definitions, datasets, answer extraction and metrics.
//! - [`models`]: completion backends (HTTP and deterministic simulated ones).
//! - [`baselines`]: Monte Carlo, greedy and beam search over the same expansion.
//! - [`trace`]: trace persistence, resume support and convergence reports.

pub mod baselines;
pub mod expansion;
pub mod models;
pub mod search;
pub mod tasks;
pub mod trace;

mod error;
mod parallel;
pub mod rng;

pub use error::{Error, Result};
pub use expansion::{Action, ActionId, ErrorRecord, MetaPromptSet};
pub use models::{BackendConfig, BackendError, Backends, CompletionBackend, SimulatedLandscape};
pub use search::{
    run_search, select_output, NodeId, PromptState, SearchConfig, SearchContext, SearchNode,
    SearchOutcome, SearchTree, TerminalFlag,
};
pub use tasks::{DatasetSplit, EvalResult, Example, TaskInstance, TaskSpec};
