//! Trace files and convergence reports.
//!
//! A trace is one JSON document holding the search configuration, every node
//! (with the action that produced it), the iteration log and run counters.
//! Loading a trace gives back a tree that resumes exactly where it stopped.

use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::expansion::Action;
use crate::search::{best_path, IterationRecord, NodeId, PromptState, SearchConfig, SearchError, SearchNode, SearchTree, TerminalFlag, TreeStats};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace file not found: {0}")]
    NotFound(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error at byte {offset}: {message}")]
    Parse { path: PathBuf, offset: usize, message: String },
    #[error("unsupported trace schema version {found} (this build reads version {SCHEMA_VERSION})")]
    UnsupportedVersion { found: String },
    #[error("inconsistent trace: {0}")]
    Invalid(String),
}

impl From<SearchError> for TraceError {
    fn from(e: SearchError) -> Self {
        TraceError::Invalid(e.to_string())
    }
}

/// A node as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub text: String,
    pub depth: usize,
    pub parent: Option<NodeId>,
    pub incoming_action: Option<Action>,
    pub reward: f64,
    pub visit_count: u64,
    pub cumulative_rewards: Vec<f64>,
    pub q_value: f64,
    pub children: Vec<NodeId>,
    pub terminal_flag: TerminalFlag,
    #[serde(default)]
    pub unexpandable: bool,
    #[serde(default)]
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub schema_version: u64,
    /// The run stopped before finishing.
    pub partial: bool,
    pub config: SearchConfig,
    /// Task name.
    pub task: String,
    pub nodes: Vec<NodeRecord>,
    pub iterations: Vec<IterationRecord>,
    #[serde(default)]
    pub stats: TreeStats,
    /// Caller-defined metadata, e.g. how to rebuild the task and backends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invocation: Option<Value>,
}

impl Trace {
    pub fn from_tree(tree: &SearchTree, config: &SearchConfig, task: &str, partial: bool) -> Self {
        let nodes = tree
            .nodes()
            .map(|n| NodeRecord {
                id: n.id(),
                text: n.state.text.clone(),
                depth: n.depth(),
                parent: n.parent,
                incoming_action: n.incoming_action.and_then(|a| tree.action(a)).cloned(),
                reward: n.reward,
                visit_count: n.visit_count,
                cumulative_rewards: n.cumulative_rewards.clone(),
                q_value: n.q_value,
                children: n.children.clone(),
                terminal_flag: n.terminal_flag,
                unexpandable: n.unexpandable,
                degenerate: n.degenerate,
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            partial,
            config: config.clone(),
            task: task.to_string(),
            nodes,
            iterations: tree.iteration_log().to_vec(),
            stats: tree.stats().clone(),
            invocation: None,
        }
    }

    pub fn with_invocation(mut self, invocation: Value) -> Self {
        self.invocation = Some(invocation);
        self
    }

    /// Rebuilds the tree, checking every structural invariant.
    pub fn to_tree(&self) -> Result<SearchTree, TraceError> {
        let mut actions: BTreeMap<usize, &Action> = BTreeMap::new();
        for n in &self.nodes {
            if let Some(a) = &n.incoming_action {
                if let Some(prev) = actions.insert(a.id.0, a) {
                    if prev != a {
                        return Err(TraceError::Invalid(format!("action {} stored with different contents", a.id)));
                    }
                }
            }
        }
        let mut dense = Vec::with_capacity(actions.len());
        for (i, (id, a)) in actions.into_iter().enumerate() {
            if id != i {
                return Err(TraceError::Invalid(format!("action ids are not contiguous (missing a{i})")));
            }
            dense.push(a.clone());
        }
        let nodes = self
            .nodes
            .iter()
            .map(|r| SearchNode {
                state: PromptState { id: r.id, text: r.text.clone(), depth: r.depth },
                parent: r.parent,
                incoming_action: r.incoming_action.as_ref().map(|a| a.id),
                reward: r.reward,
                visit_count: r.visit_count,
                cumulative_rewards: r.cumulative_rewards.clone(),
                q_value: r.q_value,
                children: r.children.clone(),
                terminal_flag: r.terminal_flag,
                unexpandable: r.unexpandable,
                degenerate: r.degenerate,
            })
            .collect();
        Ok(SearchTree::from_parts(nodes, dense, self.iterations.clone(), self.stats.clone())?)
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("traces always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, TraceError> {
        let parse_err = |e: serde_json::Error| TraceError::Parse {
            path: path.to_path_buf(),
            offset: byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        };
        let value: Value = serde_json::from_str(text).map_err(parse_err)?;
        match value.get("schema_version") {
            Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
            Some(v) => return Err(TraceError::UnsupportedVersion { found: v.to_string() }),
            None => return Err(TraceError::UnsupportedVersion { found: "none".into() }),
        }
        // Re-parse from text so errors keep their positions.
        serde_json::from_str(text).map_err(parse_err)
    }

    /// Writes through a temporary file so a crash never leaves a torn trace.
    pub fn save(&self, path: &Path) -> Result<(), TraceError> {
        let io = |source| TraceError::Io { path: path.to_path_buf(), source };
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, self.to_json()).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }
}

/// Byte offset of a 1-based line/column position.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

pub fn save_trace(tree: &SearchTree, config: &SearchConfig, task: &str, partial: bool, path: &Path) -> Result<(), TraceError> {
    tree.validate()?;
    Trace::from_tree(tree, config, task, partial).save(path)
}

pub fn load_trace(path: &Path) -> Result<Trace, TraceError> {
    let text = fs::read_to_string(path).map_err(|source| match source.kind() {
        ErrorKind::NotFound => TraceError::NotFound(path.to_path_buf()),
        _ => TraceError::Io { path: path.to_path_buf(), source },
    })?;
    let trace = Trace::from_json(&text, path)?;
    trace.to_tree()?;
    if trace.partial {
        log::warn!("{} is a partial trace", path.display());
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub depth: usize,
    pub mean_reward: f64,
    /// Population variance.
    pub var_reward: f64,
    pub n_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub node: NodeId,
    pub depth: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<DepthRow>,
    /// Rewards along the highest-mean logged path, or along the root path of
    /// the best node when no iteration was logged.
    pub best_path: Vec<PathPoint>,
}

pub fn convergence_report(tree: &SearchTree) -> Result<ConvergenceReport, SearchError> {
    let mut by_depth: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for n in tree.nodes() {
        by_depth.entry(n.depth()).or_default().push(n.reward);
    }
    let rows = by_depth
        .into_iter()
        .map(|(depth, rs)| {
            let n = rs.len() as f64;
            let mean = rs.iter().sum::<f64>() / n;
            let var = rs.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
            DepthRow { depth, mean_reward: mean, var_reward: var, n_nodes: rs.len() }
        })
        .collect();

    let path: Vec<NodeId> = if tree.iteration_log().is_empty() {
        let mut best = tree.root();
        for n in tree.nodes() {
            if n.reward > tree.node(best)?.reward {
                best = n.id();
            }
        }
        tree.trajectory(best)?.iter().map(|n| n.id()).collect()
    } else {
        let (i, _) = best_path(tree)?;
        tree.iteration_log()[i].path.clone()
    };
    let best_path = path
        .into_iter()
        .map(|id| tree.node(id).map(|n| PathPoint { node: id, depth: n.depth(), reward: n.reward }))
        .collect::<Result<_, _>>()?;
    Ok(ConvergenceReport { rows, best_path })
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,mean_reward,var_reward,n_nodes\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.depth, r.mean_reward, r.var_reward, r.n_nodes));
        }
        out
    }

    /// Sidecar JSON for the best path.
    pub fn best_path_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&serde_json::json!({ "best_path": self.best_path }))
            .expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
