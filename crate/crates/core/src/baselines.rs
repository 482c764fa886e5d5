//! Monte Carlo, greedy and beam search over the same expansion machinery
//! as the tree search.
//!
//! All three draw from a single random stream seeded with
//! `config.random_seed` and ignore the MCTS-only settings (iterations,
//! exploration weight, early stopping).

use serde::{Deserialize, Serialize};

use crate::expansion::expand_with;
use crate::rng::{self, SearchRng};
use crate::search::{NodeId, PromptState, SearchContext, SearchError, SearchFailure, SearchTree};
use crate::tasks;
use crate::Result;

type Outcome = std::result::Result<BaselineOutcome, SearchFailure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    /// One-step rewrites of the root until `budget` candidates exist.
    Mc { budget: usize },
    /// Expand `width` times per level, descend into the best child.
    Greedy { depth: usize, width: usize },
    /// Keep the `beam_width` best nodes per level; each is expanded
    /// `per_node` times.
    Beam { beam_width: usize, per_node: usize, depth: usize },
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub best: PromptState,
    pub tree: SearchTree,
    /// Prompts generated and evaluated, root excluded.
    pub explored: usize,
    /// Error batches that yielded no prompt.
    pub skipped: usize,
    /// Every generated prompt in creation order.
    pub candidates: Vec<NodeId>,
}

fn start(ctx: &SearchContext<'_>) -> Result<(SearchTree, SearchRng)> {
    ctx.config.validate()?;
    ctx.task.validate()?;
    ctx.templates.validate().map_err(crate::expansion::ExpansionError::from)?;
    let before = ctx.backends.counters().model_calls();
    let prompt = &ctx.task.spec.initial_prompt;
    let eval = tasks::evaluate_prompt_with_format(
        &ctx.templates.input_format_template,
        prompt,
        &ctx.task.spec,
        &ctx.task.split.heldout,
        ctx.backends,
    )?;
    let mut tree = SearchTree::new(prompt.clone(), eval.score)?;
    tree.stats_mut().clock = ctx.backends.counters().model_calls() - before;
    Ok((tree, rng::seeded(ctx.config.random_seed)))
}

/// Highest reward among `ids`; earliest wins ties.
fn top(tree: &SearchTree, ids: &[NodeId]) -> Result<Option<NodeId>, SearchError> {
    let mut best: Option<(NodeId, f64)> = None;
    for &id in ids {
        let r = tree.node(id)?.reward;
        match best {
            Some((_, b)) if r <= b => {}
            _ => best = Some((id, r)),
        }
    }
    Ok(best.map(|(id, _)| id))
}

/// Sets up the tree and random stream, runs `body`, and packages the
/// result. On failure the tree built so far comes back with the error.
fn drive<F>(ctx: &SearchContext<'_>, body: F) -> Outcome
where
    F: FnOnce(&mut SearchTree, &mut SearchRng) -> Result<()>,
{
    let (mut tree, mut rng) = start(ctx).map_err(|error| SearchFailure { error, partial: None })?;
    let before = ctx.backends.counters().model_calls();
    let result = body(&mut tree, &mut rng);
    tree.stats_mut().clock += ctx.backends.counters().model_calls() - before;
    match result {
        Ok(()) => finish(tree).map_err(|error| SearchFailure { error, partial: None }),
        Err(error) => Err(SearchFailure { error, partial: Some(tree) }),
    }
}

fn finish(tree: SearchTree) -> Result<BaselineOutcome> {
    let candidates: Vec<NodeId> = tree.nodes().skip(1).map(|n| n.id()).collect();
    let best_id = top(&tree, &candidates)?.unwrap_or(tree.root());
    let stats = tree.stats();
    let skipped = (stats.perfect_prompt_batches + stats.malformed_transitions) as usize;
    Ok(BaselineOutcome {
        best: tree.node(best_id)?.state.clone(),
        explored: candidates.len(),
        skipped,
        candidates,
        tree,
    })
}

fn expand_node(
    id: NodeId,
    tree: &mut SearchTree,
    batches: usize,
    ctx: &SearchContext<'_>,
    rng: &mut SearchRng,
) -> Result<Vec<NodeId>> {
    Ok(expand_with(id, tree, batches, ctx.config.num_samples, ctx, rng)?)
}

/// Samples single-batch rewrites of the root until `budget` candidates
/// exist. Skipped batches do not count toward the budget; at most `budget`
/// of them are tolerated.
pub fn mc_search(ctx: &SearchContext<'_>, budget: usize) -> Outcome {
    if budget == 0 {
        return Err(config_failure("budget"));
    }
    drive(ctx, |tree, rng| {
        let root = tree.root();
        let mut made = 0;
        let mut skips = 0;
        while made < budget && skips < budget {
            let samples = ctx.config.num_samples.min(budget - made);
            let created = expand_with(root, tree, 1, samples, ctx, rng)?;
            if created.is_empty() {
                skips += 1;
            }
            made += created.len();
        }
        Ok(())
    })
}

fn config_failure(name: &str) -> SearchFailure {
    SearchFailure { error: SearchError::Config(format!("{name} must be at least 1")).into(), partial: None }
}

/// Depth-first greedy descent: `width` batches per level, then the best
/// new child becomes the next node to expand.
pub fn greedy_search(ctx: &SearchContext<'_>, depth: usize, width: usize) -> Outcome {
    beam_or_greedy(ctx, 1, width, width, depth)
}

/// Beam search: the root gets `beam_width * per_node` batches, each kept
/// node `per_node` afterwards, and the `beam_width` best new nodes of every
/// level (earliest on ties) are kept.
pub fn beam_search(ctx: &SearchContext<'_>, beam_width: usize, per_node: usize, depth: usize) -> Outcome {
    beam_or_greedy(ctx, beam_width, beam_width * per_node, per_node, depth)
}

fn beam_or_greedy(
    ctx: &SearchContext<'_>,
    beam_width: usize,
    root_batches: usize,
    per_node: usize,
    depth: usize,
) -> Outcome {
    for (name, v) in [("beam_width", beam_width), ("width", per_node), ("depth", depth)] {
        if v == 0 {
            return Err(config_failure(name));
        }
    }
    drive(ctx, |tree, rng| {
        let mut frontier = vec![tree.root()];
        for level in 0..depth {
            let batches = if level == 0 { root_batches } else { per_node };
            let mut created = Vec::new();
            for &id in &frontier {
                created.extend(expand_node(id, tree, batches, ctx, rng)?);
            }
            if created.is_empty() {
                break;
            }
            let mut ranked = created;
            // Stable sort keeps creation order among equal rewards.
            ranked.sort_by(|a, b| tree.nodes[b.0].reward.total_cmp(&tree.nodes[a.0].reward));
            ranked.truncate(beam_width);
            frontier = ranked;
        }
        Ok(())
    })
}

/// Runs `strategy`.
pub fn run_baseline(ctx: &SearchContext<'_>, strategy: Strategy) -> Outcome {
    match strategy {
        Strategy::Mc { budget } => mc_search(ctx, budget),
        Strategy::Greedy { depth, width } => greedy_search(ctx, depth, width),
        Strategy::Beam { beam_width, per_node, depth } => beam_search(ctx, beam_width, per_node, depth),
    }
}
