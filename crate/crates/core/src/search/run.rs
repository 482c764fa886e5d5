use log::{debug, info};

use super::{backpropagate, select, select_output, simulate, IterationRecord, NodeId, PromptState, SearchConfig, SearchTree};
use crate::expansion::{self, MetaPromptSet};
use crate::models::Backends;
use crate::rng::{self, SearchRng};
use crate::tasks::{self, TaskInstance};
use crate::{Error, Result};

/// Everything an expansion or a search step needs to talk to the models.
#[derive(Clone, Copy)]
pub struct SearchContext<'a> {
    pub task: &'a TaskInstance,
    pub config: &'a SearchConfig,
    pub backends: &'a Backends,
    pub templates: &'a MetaPromptSet,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: PromptState,
    pub tree: SearchTree,
}

/// A run that stopped early. `partial` holds the tree as of the last
/// completed iteration, when the root could be evaluated at all.
#[derive(Debug)]
pub struct SearchFailure {
    pub error: Error,
    pub partial: Option<SearchTree>,
}

impl std::fmt::Display for SearchFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for SearchFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Drives MCTS iterations over a [`SearchTree`] owned by the caller.
pub struct Searcher<'a> {
    ctx: SearchContext<'a>,
}

impl<'a> Searcher<'a> {
    pub fn new(ctx: SearchContext<'a>) -> Result<Self> {
        ctx.config.validate()?;
        ctx.task.validate()?;
        ctx.templates.validate().map_err(expansion::ExpansionError::from)?;
        Ok(Self { ctx })
    }

    pub fn context(&self) -> &SearchContext<'a> {
        &self.ctx
    }

    /// Evaluates the initial prompt and returns a one-node tree.
    pub fn initialize(&self) -> Result<SearchTree> {
        let before = self.ctx.backends.counters().model_calls();
        let prompt = &self.ctx.task.spec.initial_prompt;
        let eval = tasks::evaluate_prompt_with_format(
            &self.ctx.templates.input_format_template,
            prompt,
            &self.ctx.task.spec,
            &self.ctx.task.split.heldout,
            self.ctx.backends,
        )?;
        let mut tree = SearchTree::new(prompt.clone(), eval.score)?;
        tree.stats_mut().clock = self.ctx.backends.counters().model_calls() - before;
        info!("root reward {:.4}", eval.score);
        Ok(tree)
    }

    /// Runs one full iteration: selection, expansion, simulation and
    /// back-propagation. On error the tree is restored to its state before
    /// the iteration began.
    pub fn iterate(&self, tree: &mut SearchTree) -> Result<Vec<NodeId>> {
        let iteration = tree.completed_iterations();
        let mut rng = rng::iteration_stream(self.ctx.config.random_seed, iteration);
        let snapshot = tree.clone();
        let calls_before = self.ctx.backends.counters().model_calls();
        let started_tick = tree.stats().clock;

        match self.iteration_body(tree, &mut rng) {
            Ok(path) => {
                let used = self.ctx.backends.counters().model_calls() - calls_before;
                tree.stats_mut().clock += used;
                let finished_tick = tree.stats().clock;
                tree.log_iteration(IterationRecord { iteration, path: path.clone(), started_tick, finished_tick });
                let last = tree.node(*path.last().expect("path holds the root"))?;
                info!(
                    "iteration {iteration}: path length {}, leaf reward {:.4}, nodes {}",
                    path.len(),
                    last.reward,
                    tree.len()
                );
                Ok(path)
            }
            Err(e) => {
                *tree = snapshot;
                Err(e)
            }
        }
    }

    fn iteration_body(&self, tree: &mut SearchTree, rng: &mut SearchRng) -> Result<Vec<NodeId>> {
        let mut path = select(tree, self.ctx.config.exploration_weight)?;
        let leaf = *path.last().expect("selection always includes the root");
        let node = tree.node(leaf)?;
        if !node.is_terminal() && !node.unexpandable && node.children.is_empty() {
            let created = expansion::expand(leaf, tree, &self.ctx, rng)?;
            debug!("expanded {leaf} into {} children", created.len());
            if !created.is_empty() {
                path.extend(simulate(leaf, tree, &self.ctx, rng)?);
            }
        }
        backpropagate(tree, &path)?;
        Ok(path)
    }

    /// Iterates until the tree has `config.iterations` logged iterations.
    pub fn run(&self, tree: &mut SearchTree) -> Result<()> {
        while tree.completed_iterations() < self.ctx.config.iterations {
            self.iterate(tree)?;
        }
        Ok(())
    }
}

/// Evaluates the initial prompt, runs every configured iteration and picks
/// the output prompt.
pub fn run_search(ctx: SearchContext<'_>) -> Result<SearchOutcome, SearchFailure> {
    let searcher = Searcher::new(ctx).map_err(|error| SearchFailure { error, partial: None })?;
    let mut tree = searcher.initialize().map_err(|error| SearchFailure { error, partial: None })?;
    if let Err(error) = searcher.run(&mut tree) {
        return Err(SearchFailure { error, partial: Some(tree) });
    }
    match select_output(&tree) {
        Ok(best) => Ok(SearchOutcome { best, tree }),
        Err(e) => Err(SearchFailure { error: e.into(), partial: Some(tree) }),
    }
}
