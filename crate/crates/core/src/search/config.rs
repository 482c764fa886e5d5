use serde::{Deserialize, Serialize};

use super::SearchError;

/// Named hyperparameter presets for depth limit, expansion width and samples
/// per batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Standard,
    Wide,
    Lite,
    Custom,
}

impl Preset {
    /// `(depth_limit, expand_width, num_samples)` for a named preset.
    pub fn shape(self) -> Option<(usize, usize, usize)> {
        match self {
            Preset::Standard => Some((8, 3, 1)),
            Preset::Wide => Some((6, 3, 2)),
            Preset::Lite => Some((4, 3, 1)),
            Preset::Custom => None,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Preset::Standard),
            "wide" => Ok(Preset::Wide),
            "lite" => Ok(Preset::Lite),
            "custom" => Ok(Preset::Custom),
            other => Err(format!("unknown preset `{other}` (expected standard, wide, lite or custom)")),
        }
    }
}

/// Planner hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Number of MCTS iterations.
    pub iterations: usize,
    /// Exploration constant in the UCT score.
    pub exploration_weight: f64,
    pub depth_limit: usize,
    /// Error batches sampled per expansion.
    pub expand_width: usize,
    /// New prompts requested per error batch.
    pub num_samples: usize,
    /// Training examples per error batch.
    pub batch_size: usize,
    /// Early stopping only applies strictly below this depth.
    pub early_stop_min_depth: usize,
    pub random_seed: u64,
    pub preset: Preset,
    /// Batches tried before a prompt is declared error-free.
    pub max_error_attempts: usize,
    /// Extra optimizer calls when a transition has no `<START>`/`<END>` span.
    pub transition_retries: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self::preset(Preset::Standard)
    }
}

impl SearchConfig {
    pub fn preset(preset: Preset) -> Self {
        let (depth_limit, expand_width, num_samples) = preset.shape().unwrap_or((8, 3, 1));
        Self {
            iterations: 12,
            exploration_weight: 2.5,
            depth_limit,
            expand_width,
            num_samples,
            batch_size: 5,
            early_stop_min_depth: 2,
            random_seed: 0,
            preset,
            max_error_attempts: 10,
            transition_retries: 2,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.random_seed = seed;
        self
    }

    /// Re-labels the preset as `custom` when its shape no longer matches.
    pub fn normalize_preset(&mut self) {
        if let Some(shape) = self.preset.shape() {
            if shape != (self.depth_limit, self.expand_width, self.num_samples) {
                self.preset = Preset::Custom;
            }
        }
    }

    /// Upper bound on the node count of a finished run (root included).
    pub fn node_budget(&self) -> usize {
        1 + self.iterations * self.depth_limit * self.expand_width * self.num_samples
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let counts = [
            ("iterations", self.iterations),
            ("depth_limit", self.depth_limit),
            ("expand_width", self.expand_width),
            ("num_samples", self.num_samples),
            ("batch_size", self.batch_size),
            ("max_error_attempts", self.max_error_attempts),
        ];
        for (name, value) in counts {
            if value < 1 {
                return Err(SearchError::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.exploration_weight >= 0.0) || !self.exploration_weight.is_finite() {
            return Err(SearchError::Config("exploration_weight must be a finite value >= 0".into()));
        }
        if let Some(shape) = self.preset.shape() {
            if shape != (self.depth_limit, self.expand_width, self.num_samples) {
                return Err(SearchError::Config(format!(
                    "preset {:?} requires depth_limit/expand_width/num_samples = {:?}",
                    self.preset, shape
                )));
            }
        }
        Ok(())
    }
}
