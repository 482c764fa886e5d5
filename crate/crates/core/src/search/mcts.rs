//! Selection, early stopping, simulation, back-propagation and the output
//! strategy.

use super::{NodeId, PromptState, SearchConfig, SearchContext, SearchError, SearchNode, SearchTree, TerminalFlag};
use crate::expansion;
use crate::rng::SearchRng;
use crate::Result;

/// UCT score of `child` seen from `parent`:
/// `Q(child) + c * sqrt(ln N(parent) / N(child))`.
///
/// A child that has never been visited scores `+inf`, so every child is tried
/// once before any of them is revisited.
pub fn uct_score(parent: &SearchNode, child: &SearchNode, c: f64) -> Result<f64, SearchError> {
    if !parent.children.contains(&child.id()) || child.parent != Some(parent.id()) {
        return Err(SearchError::NotAChild { parent: parent.id(), child: child.id() });
    }
    if child.visit_count == 0 {
        return Ok(f64::INFINITY);
    }
    if parent.visit_count == 0 {
        return Err(SearchError::UnvisitedParent(parent.id()));
    }
    let explore = ((parent.visit_count as f64).ln() / child.visit_count as f64).sqrt();
    Ok(child.q_value + c * explore)
}

/// Child of `id` with the highest UCT score; ties go to the earliest child.
///
/// Terminal children only compete when every child is terminal.
fn best_uct_child(tree: &SearchTree, id: NodeId, c: f64) -> Result<NodeId, SearchError> {
    let parent = tree.node(id)?;
    let open: Vec<NodeId> = parent
        .children
        .iter()
        .copied()
        .filter(|&ch| tree.nodes[ch.0].terminal_flag == TerminalFlag::None)
        .collect();
    let pool = if open.is_empty() { &parent.children } else { &open };

    let mut best: Option<(NodeId, f64)> = None;
    for &ch in pool {
        let score = uct_score(parent, tree.node(ch)?, c)?;
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((ch, score)),
        }
    }
    best.map(|(ch, _)| ch).ok_or(SearchError::Invalid(format!("node {id} has no children")))
}

/// Walks from the root to a leaf by UCT and returns the path.
///
/// Stops at the first node that has no children or is terminal. Every node on
/// the returned path has its visit count incremented once; a parent's count
/// is bumped only after its child has been chosen, so the UCT scores use the
/// counts as they stood before this pass.
pub fn select(tree: &mut SearchTree, c: f64) -> Result<Vec<NodeId>, SearchError> {
    let mut cur = tree.root();
    let mut path = vec![cur];
    loop {
        let node = tree.node(cur)?;
        if node.children.is_empty() || node.is_terminal() {
            break;
        }
        let next = best_uct_child(tree, cur, c)?;
        tree.node_mut(cur)?.visit_count += 1;
        path.push(next);
        cur = next;
    }
    tree.node_mut(cur)?.visit_count += 1;
    Ok(path)
}

/// Terminal status of a node that is already part of the tree.
///
/// The depth limit always applies. Below `early_stop_min_depth` nothing else
/// does; deeper nodes stop early when their reward falls under the mean of
/// their parent's and the root's rewards, or exceeds every other node's
/// reward.
pub fn check_terminal(id: NodeId, tree: &SearchTree, config: &SearchConfig) -> Result<TerminalFlag, SearchError> {
    let node = tree.node(id)?;
    if node.depth() >= config.depth_limit {
        return Ok(TerminalFlag::DepthLimit);
    }
    if node.depth() <= config.early_stop_min_depth {
        return Ok(TerminalFlag::None);
    }
    let parent = node.parent.ok_or(SearchError::Invalid(format!("node {id} at depth {} has no parent", node.depth())))?;
    let parent_reward = tree.node(parent)?.reward;
    let root_reward = tree.node(tree.root())?.reward;
    let min_threshold = (parent_reward + root_reward) / 2.0;
    if node.reward < min_threshold {
        return Ok(TerminalFlag::EarlyLow);
    }
    let max_threshold = tree
        .nodes()
        .filter(|n| n.id() != id)
        .map(|n| n.reward)
        .fold(f64::NEG_INFINITY, f64::max);
    if node.reward > max_threshold {
        return Ok(TerminalFlag::EarlyHigh);
    }
    Ok(TerminalFlag::None)
}

/// Appends each node's trajectory sum (its reward plus everything below it
/// on `path`) to its cumulative rewards and refreshes Q as their mean.
pub fn backpropagate(tree: &mut SearchTree, path: &[NodeId]) -> Result<(), SearchError> {
    tree.check_path(path)?;
    let mut future = 0.0;
    for &id in path.iter().rev() {
        let node = tree.node_mut(id)?;
        future += node.reward;
        node.cumulative_rewards.push(future);
        node.recompute_q();
    }
    Ok(())
}

/// Greedy lookahead from a freshly expanded node: repeatedly step into the
/// highest-reward child (earliest on ties) and expand it, until a terminal
/// node is reached or expansion yields nothing.
///
/// Returns the nodes appended to the path; each gets one visit.
pub fn simulate(id: NodeId, tree: &mut SearchTree, ctx: &SearchContext<'_>, rng: &mut SearchRng) -> Result<Vec<NodeId>> {
    let mut extension = Vec::new();
    let mut cur = id;
    loop {
        let Some(next) = highest_reward_child(tree, cur)? else {
            break;
        };
        tree.node_mut(next)?.visit_count += 1;
        extension.push(next);
        if tree.node(next)?.is_terminal() {
            break;
        }
        let created = expansion::expand(next, tree, ctx, rng)?;
        if created.is_empty() {
            break;
        }
        cur = next;
    }
    Ok(extension)
}

pub(crate) fn highest_reward_child(tree: &SearchTree, id: NodeId) -> Result<Option<NodeId>, SearchError> {
    let mut best: Option<(NodeId, f64)> = None;
    for &ch in &tree.node(id)?.children {
        let r = tree.node(ch)?.reward;
        match best {
            Some((_, b)) if r <= b => {}
            _ => best = Some((ch, r)),
        }
    }
    Ok(best.map(|(ch, _)| ch))
}

/// Index into the iteration log of the path with the highest mean reward
/// (earliest iteration on ties) and the best node on it (earliest on ties).
pub fn best_path(tree: &SearchTree) -> Result<(usize, NodeId), SearchError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, record) in tree.iteration_log().iter().enumerate() {
        if record.path.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for &id in &record.path {
            sum += tree.node(id)?.reward;
        }
        let mean = sum / record.path.len() as f64;
        match best {
            Some((_, m)) if mean <= m => {}
            _ => best = Some((i, mean)),
        }
    }
    let (index, _) = best.ok_or(SearchError::EmptyIterationLog)?;
    let mut top: Option<(NodeId, f64)> = None;
    for &id in &tree.iteration_log()[index].path {
        let r = tree.node(id)?.reward;
        match top {
            Some((_, t)) if r <= t => {}
            _ => top = Some((id, r)),
        }
    }
    Ok((index, top.expect("non-empty path").0))
}

/// Final prompt: the highest-reward node on the highest-mean logged path.
pub fn select_output(tree: &SearchTree) -> Result<PromptState, SearchError> {
    let (_, id) = best_path(tree)?;
    Ok(tree.node(id)?.state.clone())
}
