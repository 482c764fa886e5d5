#![allow(dead_code)]

use std::sync::Arc;

use prompt_mcts::models::{LandscapeParams, SimulatedLandscape};
use prompt_mcts::rng::SearchRng;
use prompt_mcts::search::{IterationRecord, Preset, TreeStats};
use prompt_mcts::tasks::{split_dataset, SplitConfig};
use prompt_mcts::{Backends, MetaPromptSet, NodeId, SearchConfig, SearchContext, SearchTree, TaskInstance};
use rand::Rng;

/// A generated keyword landscape with its task split 100 test / 60
/// held-out / 40 train.
pub struct Fixture {
    pub landscape: Arc<SimulatedLandscape>,
    pub task: TaskInstance,
    pub templates: MetaPromptSet,
}

impl Fixture {
    pub fn new(params: LandscapeParams) -> Self {
        let seed = params.seed;
        let (landscape, spec, data) = SimulatedLandscape::generate(&params).unwrap();
        let split = split_dataset(
            &data,
            None,
            &SplitConfig { train_size: None, test_size: Some(100), heldout_size: Some(60) },
            seed,
        )
        .unwrap();
        Self {
            landscape: Arc::new(landscape),
            task: TaskInstance::new(spec, split).unwrap(),
            templates: MetaPromptSet::default(),
        }
    }

    pub fn seeded(seed: u64) -> Self {
        Self::new(LandscapeParams { seed, ..Default::default() })
    }

    pub fn backends(&self) -> Backends {
        Backends::simulated(self.landscape.clone())
    }

    pub fn ctx<'a>(&'a self, config: &'a SearchConfig, backends: &'a Backends) -> SearchContext<'a> {
        SearchContext { task: &self.task, config, backends, templates: &self.templates }
    }
}

pub fn lite(seed: u64) -> SearchConfig {
    SearchConfig::preset(Preset::Lite).with_seed(seed)
}

/// Random tree of `n` nodes: each new node hangs under a uniformly chosen
/// earlier node.
pub fn random_tree(rng: &mut SearchRng, n: usize, mut reward: impl FnMut(&mut SearchRng) -> f64) -> SearchTree {
    let r = reward(rng);
    let mut tree = SearchTree::new("p0", r).unwrap();
    for i in 1..n {
        let parent = NodeId(rng.gen_range(0..i));
        let r = reward(rng);
        tree.add_child(parent, format!("p{i}"), r, None).unwrap();
    }
    tree
}

/// Random root-anchored path: walks down random children and stops at a
/// leaf or, with probability 1/4 per step, earlier.
pub fn random_path(rng: &mut SearchRng, tree: &SearchTree) -> Vec<NodeId> {
    let mut path = vec![tree.root()];
    loop {
        let node = tree.node(*path.last().unwrap()).unwrap();
        if node.children.is_empty() || rng.gen_ratio(1, 4) {
            return path;
        }
        path.push(node.children[rng.gen_range(0..node.children.len())]);
    }
}

/// `tree` with `paths` as its iteration log.
pub fn with_log(tree: &SearchTree, paths: Vec<Vec<NodeId>>) -> SearchTree {
    let log = paths
        .into_iter()
        .enumerate()
        .map(|(iteration, path)| IterationRecord { iteration, path, started_tick: 0, finished_tick: 0 })
        .collect();
    SearchTree::from_parts(tree.nodes().cloned().collect(), tree.actions().to_vec(), log, TreeStats::default()).unwrap()
}
