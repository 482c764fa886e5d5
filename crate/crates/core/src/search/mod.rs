//! Search tree bookkeeping and the MCTS loop.

mod config;
mod mcts;
mod run;
mod tree;

use thiserror::Error;

pub use config::{Preset, SearchConfig};
pub use mcts::{
    backpropagate, best_path, check_terminal, select, select_output, simulate, uct_score,
};
pub use run::{run_search, SearchContext, SearchFailure, SearchOutcome, Searcher};
pub use tree::{IterationRecord, NodeId, PromptState, SearchNode, SearchTree, TerminalFlag, TreeStats};

use crate::expansion::ActionId;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("action {} does not exist", .0 .0)]
    UnknownAction(ActionId),
    #[error("node {child} is not a child of {parent}")]
    NotAChild { parent: NodeId, child: NodeId },
    #[error("path does not start at the root")]
    PathNotRootAnchored,
    #[error("cycle detected at node {0}")]
    Cycle(NodeId),
    #[error("prompt text must not be empty")]
    EmptyPrompt,
    #[error("parent {0} has never been visited")]
    UnvisitedParent(NodeId),
    #[error("no completed iteration has been logged")]
    EmptyIterationLog,
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("invalid tree: {0}")]
    Invalid(String),
}
