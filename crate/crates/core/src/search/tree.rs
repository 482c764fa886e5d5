use std::fmt;

use serde::{Deserialize, Serialize};

use super::SearchError;
use crate::expansion::{Action, ActionId};

/// Index of a node inside its [`SearchTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// One version of the task prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptState {
    pub id: NodeId,
    pub text: String,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalFlag {
    #[default]
    None,
    DepthLimit,
    EarlyLow,
    EarlyHigh,
}

impl TerminalFlag {
    pub fn is_terminal(self) -> bool {
        self != TerminalFlag::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchNode {
    pub state: PromptState,
    pub parent: Option<NodeId>,
    pub incoming_action: Option<ActionId>,
    /// Held-out score of `state.text`, in `[0, 1]`.
    pub reward: f64,
    pub visit_count: u64,
    /// One trajectory sum per back-propagated path through this node.
    pub cumulative_rewards: Vec<f64>,
    pub q_value: f64,
    pub children: Vec<NodeId>,
    pub terminal_flag: TerminalFlag,
    /// Expansion was attempted and produced no children.
    #[serde(default)]
    pub unexpandable: bool,
    /// Text is identical to the parent's.
    #[serde(default)]
    pub degenerate: bool,
}

impl SearchNode {
    pub fn id(&self) -> NodeId {
        self.state.id
    }

    pub fn depth(&self) -> usize {
        self.state.depth
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal_flag.is_terminal()
    }

    pub(crate) fn recompute_q(&mut self) {
        if !self.cumulative_rewards.is_empty() {
            let sum: f64 = self.cumulative_rewards.iter().sum();
            self.q_value = sum / self.cumulative_rewards.len() as f64;
        }
    }
}

/// Root-to-terminal path produced by one MCTS iteration.
///
/// Ticks come from a logical clock that counts model calls, so replays of a
/// run reproduce them exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub path: Vec<NodeId>,
    pub started_tick: u64,
    pub finished_tick: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    /// Model calls issued on behalf of this tree.
    pub clock: u64,
    pub degenerate_transitions: u64,
    pub malformed_transitions: u64,
    pub perfect_prompt_batches: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    pub(crate) nodes: Vec<SearchNode>,
    pub(crate) actions: Vec<Action>,
    pub(crate) iteration_log: Vec<IterationRecord>,
    pub(crate) stats: TreeStats,
}

impl SearchTree {
    /// Creates a tree holding only the (already evaluated) root prompt.
    pub fn new(root_text: impl Into<String>, root_reward: f64) -> Result<Self, SearchError> {
        let text = root_text.into();
        if text.trim().is_empty() {
            return Err(SearchError::EmptyPrompt);
        }
        let root = SearchNode {
            state: PromptState { id: NodeId(0), text, depth: 0 },
            parent: None,
            incoming_action: None,
            reward: root_reward,
            visit_count: 0,
            cumulative_rewards: Vec::new(),
            q_value: 0.0,
            children: Vec::new(),
            terminal_flag: TerminalFlag::None,
            unexpandable: false,
            degenerate: false,
        };
        Ok(Self {
            nodes: vec![root],
            actions: Vec::new(),
            iteration_log: Vec::new(),
            stats: TreeStats::default(),
        })
    }

    /// Rebuilds a tree from raw parts and checks every structural invariant.
    pub fn from_parts(
        nodes: Vec<SearchNode>,
        actions: Vec<Action>,
        iteration_log: Vec<IterationRecord>,
        stats: TreeStats,
    ) -> Result<Self, SearchError> {
        let tree = Self { nodes, actions, iteration_log, stats };
        tree.validate()?;
        Ok(tree)
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&SearchNode, SearchError> {
        self.nodes.get(id.0).ok_or(SearchError::UnknownNode(id))
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Result<&mut SearchNode, SearchError> {
        self.nodes.get_mut(id.0).ok_or(SearchError::UnknownNode(id))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SearchNode> {
        self.nodes.iter()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> Option<&Action> {
        self.actions.get(id.0)
    }

    pub fn iteration_log(&self) -> &[IterationRecord] {
        &self.iteration_log
    }

    pub fn stats(&self) -> &TreeStats {
        &self.stats
    }

    pub(crate) fn stats_mut(&mut self) -> &mut TreeStats {
        &mut self.stats
    }

    pub fn completed_iterations(&self) -> usize {
        self.iteration_log.len()
    }

    pub fn max_reward(&self) -> f64 {
        self.nodes.iter().map(|n| n.reward).fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn push_action(&mut self, mut action: Action) -> ActionId {
        let id = ActionId(self.actions.len());
        action.id = id;
        self.actions.push(action);
        id
    }

    /// Appends a new evaluated child under `parent` and returns its id.
    pub fn add_child(
        &mut self,
        parent: NodeId,
        text: impl Into<String>,
        reward: f64,
        action: Option<ActionId>,
    ) -> Result<NodeId, SearchError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(SearchError::EmptyPrompt);
        }
        if let Some(a) = action {
            if a.0 >= self.actions.len() {
                return Err(SearchError::UnknownAction(a));
            }
        }
        let parent_node = self.node(parent)?;
        let depth = parent_node.depth() + 1;
        let degenerate = parent_node.state.text == text;
        let id = NodeId(self.nodes.len());
        self.nodes.push(SearchNode {
            state: PromptState { id, text, depth },
            parent: Some(parent),
            incoming_action: action,
            reward,
            visit_count: 0,
            cumulative_rewards: Vec::new(),
            q_value: 0.0,
            children: Vec::new(),
            terminal_flag: TerminalFlag::None,
            unexpandable: false,
            degenerate,
        });
        self.nodes[parent.0].children.push(id);
        if degenerate {
            self.stats.degenerate_transitions += 1;
        }
        Ok(id)
    }

    /// Prompt texts from the root down to `id`, inclusive.
    pub fn trajectory(&self, id: NodeId) -> Result<Vec<&SearchNode>, SearchError> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            let node = self.node(c)?;
            out.push(node);
            if out.len() > self.nodes.len() {
                return Err(SearchError::Cycle(id));
            }
            cur = node.parent;
        }
        out.reverse();
        Ok(out)
    }

    /// Checks that `path` starts at the root and follows parent links.
    pub fn check_path(&self, path: &[NodeId]) -> Result<(), SearchError> {
        match path.first() {
            Some(&first) if first == self.root() => {}
            _ => return Err(SearchError::PathNotRootAnchored),
        }
        for pair in path.windows(2) {
            let child = self.node(pair[1])?;
            if child.parent != Some(pair[0]) {
                return Err(SearchError::NotAChild { parent: pair[0], child: pair[1] });
            }
        }
        Ok(())
    }

    pub(crate) fn log_iteration(&mut self, record: IterationRecord) {
        self.iteration_log.push(record);
    }

    /// Verifies the structural invariants: single root, consistent
    /// parent/child links, depths, no cycles, known references and Q values.
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.nodes.is_empty() {
            return Err(SearchError::Invalid("tree has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            if node.state.id != id {
                return Err(SearchError::Invalid(format!("node at index {i} carries id {}", node.state.id)));
            }
            if node.state.text.trim().is_empty() {
                return Err(SearchError::Invalid(format!("node {id} has empty text")));
            }
            match node.parent {
                None if i == 0 => {
                    if node.depth() != 0 {
                        return Err(SearchError::Invalid("root depth must be 0".into()));
                    }
                }
                None => return Err(SearchError::Invalid(format!("node {id} has no parent"))),
                Some(p) => {
                    // Parents are always created before their children.
                    if p.0 >= i {
                        return Err(SearchError::Cycle(id));
                    }
                    let parent = &self.nodes[p.0];
                    if !parent.children.contains(&id) {
                        return Err(SearchError::NotAChild { parent: p, child: id });
                    }
                    if node.depth() != parent.depth() + 1 {
                        return Err(SearchError::Invalid(format!("node {id} depth mismatch")));
                    }
                }
            }
            for &c in &node.children {
                let child = self.node(c)?;
                if child.parent != Some(id) {
                    return Err(SearchError::NotAChild { parent: id, child: c });
                }
            }
            let mut seen = node.children.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != node.children.len() {
                return Err(SearchError::Invalid(format!("node {id} lists a child twice")));
            }
            if let Some(a) = node.incoming_action {
                if a.0 >= self.actions.len() {
                    return Err(SearchError::UnknownAction(a));
                }
            }
            if !node.cumulative_rewards.is_empty() {
                let mean = node.cumulative_rewards.iter().sum::<f64>()
                    / node.cumulative_rewards.len() as f64;
                if (mean - node.q_value).abs() >= 1e-12 {
                    return Err(SearchError::Invalid(format!("node {id} Q disagrees with its trajectories")));
                }
            }
        }
        for (i, action) in self.actions.iter().enumerate() {
            if action.id != ActionId(i) {
                return Err(SearchError::Invalid(format!("action at index {i} carries id {}", action.id.0)));
            }
        }
        for record in &self.iteration_log {
            self.check_path(&record.path)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_follows_parent() {
        let mut tree = SearchTree::new("root", 0.1).unwrap();
        let a = tree.add_child(tree.root(), "a", 0.2, None).unwrap();
        let b = tree.add_child(a, "b", 0.3, None).unwrap();
        assert_eq!(tree.node(b).unwrap().depth(), 2);
        assert_eq!(tree.node(tree.root()).unwrap().children, vec![a]);
        tree.validate().unwrap();
    }

    #[test]
    fn rejects_empty_prompt() {
        assert!(matches!(SearchTree::new("  ", 0.0), Err(SearchError::EmptyPrompt)));
        let mut tree = SearchTree::new("root", 0.0).unwrap();
        assert!(tree.add_child(tree.root(), "", 0.0, None).is_err());
    }

    #[test]
    fn degenerate_child_is_flagged_and_counted() {
        let mut tree = SearchTree::new("same", 0.5).unwrap();
        let c = tree.add_child(tree.root(), "same", 0.5, None).unwrap();
        assert!(tree.node(c).unwrap().degenerate);
        assert_eq!(tree.stats().degenerate_transitions, 1);
    }

    #[test]
    fn path_must_start_at_root() {
        let mut tree = SearchTree::new("root", 0.1).unwrap();
        let a = tree.add_child(tree.root(), "a", 0.2, None).unwrap();
        let b = tree.add_child(tree.root(), "b", 0.2, None).unwrap();
        assert!(matches!(tree.check_path(&[a]), Err(SearchError::PathNotRootAnchored)));
        assert!(matches!(tree.check_path(&[tree.root(), a, b]), Err(SearchError::NotAChild { .. })));
        tree.check_path(&[tree.root(), b]).unwrap();
    }

    #[test]
    fn validate_catches_broken_links() {
        let mut tree = SearchTree::new("root", 0.1).unwrap();
        let a = tree.add_child(tree.root(), "a", 0.2, None).unwrap();
        tree.nodes[0].children.clear();
        assert!(tree.validate().is_err());
        tree.nodes[0].children.push(a);
        tree.nodes[a.0].cumulative_rewards = vec![0.5];
        tree.nodes[a.0].q_value = 0.4;
        assert!(tree.validate().is_err());
    }
}
