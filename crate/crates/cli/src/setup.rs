//! Task files, config layering and backend construction.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use prompt_mcts::models::{BackendConfig, BackendKind, Role};
use prompt_mcts::search::Preset;
use prompt_mcts::tasks::{self, split_dataset, SplitConfig, TaskSpec};
use prompt_mcts::{Backends, MetaPromptSet, SearchConfig, SimulatedLandscape, TaskInstance};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{CliError, SearchArgs, TaskArgs};

/// A task file: task fields plus where its data lives. Paths are relative
/// to the task file.
#[derive(Debug, Deserialize)]
struct TaskFile {
    #[serde(flatten)]
    spec: TaskSpec,
    data: Option<PathBuf>,
    test_data: Option<PathBuf>,
    landscape: Option<PathBuf>,
    #[serde(default)]
    split: SplitConfig,
    #[serde(default)]
    split_seed: u64,
}

/// Config file: `{"search": {...}, "base": {...}, "optimizer": {...}}`,
/// every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    search: Map<String, Value>,
    #[serde(default)]
    base: Map<String, Value>,
    #[serde(default)]
    optimizer: Map<String, Value>,
}

/// What is needed to rebuild a run; stored in the trace for `resume`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub command: String,
    pub task_file: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
    pub base: BackendConfig,
    pub optimizer: BackendConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<prompt_mcts::baselines::Strategy>,
}

pub struct Run {
    pub task: TaskInstance,
    pub config: SearchConfig,
    pub backends: Backends,
    pub templates: MetaPromptSet,
    pub invocation: Invocation,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    fs::canonicalize(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn overlay(base: &mut Value, layer: &Map<String, Value>) {
    if let Value::Object(obj) = base {
        for (k, v) in layer {
            obj.insert(k.clone(), v.clone());
        }
    }
}

fn with_layer<T>(value: &T, layer: &Map<String, Value>, what: &str) -> Result<T, CliError>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let mut v = serde_json::to_value(value).expect("config serializes");
    overlay(&mut v, layer);
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

/// Defaults, then the config file's preset, then its fields, then the CLI
/// preset, then individual CLI flags.
pub fn search_config(file: Option<&Path>, args: &SearchArgs) -> Result<SearchConfig, CliError> {
    let file = load_config_file(file)?;
    let file_preset = match file.search.get("preset") {
        Some(v) => serde_json::from_value::<Preset>(v.clone()).map_err(|e| CliError::Config(format!("preset: {e}")))?,
        None => Preset::Standard,
    };
    let mut config = with_layer(&SearchConfig::preset(file_preset), &file.search, "search config")?;
    if let Some(p) = args.preset {
        config.preset = p;
        if let Some((d, w, s)) = p.shape() {
            config.depth_limit = d;
            config.expand_width = w;
            config.num_samples = s;
        }
    }
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                config.$field = v;
            }
        )*};
    }
    set!(
        iterations,
        exploration_weight,
        depth_limit,
        expand_width,
        num_samples,
        batch_size,
        early_stop_min_depth,
        max_error_attempts,
        transition_retries
    );
    if let Some(seed) = args.seed {
        config.random_seed = seed;
    }
    config.normalize_preset();
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

fn load_config_file(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    match path {
        Some(p) => serde_json::from_value(read_json(p)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => Ok(ConfigFile::default()),
    }
}

/// Backend configs for both roles: defaults, config file, then CLI flags.
pub fn backend_configs(file: Option<&Path>, args: &TaskArgs) -> Result<(BackendConfig, BackendConfig), CliError> {
    let file = load_config_file(file)?;
    let mut base = with_layer(&BackendConfig::for_role(Role::Base), &file.base, "base backend")?;
    let mut optimizer = with_layer(&BackendConfig::for_role(Role::Optimizer), &file.optimizer, "optimizer backend")?;
    base.role = Role::Base;
    optimizer.role = Role::Optimizer;
    for cfg in [&mut base, &mut optimizer] {
        if let Some(kind) = args.backend {
            cfg.kind = kind.into();
        }
        if let Some(e) = &args.endpoint {
            cfg.endpoint = Some(e.clone());
        }
        if let Some(n) = args.max_parallel {
            cfg.max_parallel = n;
        }
        if let Some(n) = args.max_retries {
            cfg.max_retries = n;
        }
    }
    if let Some(m) = &args.base_model {
        base.model_name = m.clone();
    }
    if let Some(m) = &args.optimizer_model {
        optimizer.model_name = m.clone();
    }
    for cfg in [&base, &optimizer] {
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok((base, optimizer))
}

pub struct LoadedTask {
    pub task: TaskInstance,
    pub landscape: Option<PathBuf>,
}

/// Reads the task file and its data, and splits it.
pub fn load_task(task_file: &Path, landscape_flag: Option<&Path>) -> Result<LoadedTask, CliError> {
    let raw = read_json(task_file)?;
    let file: TaskFile =
        serde_json::from_value(raw).map_err(|e| CliError::Config(format!("{}: {e}", task_file.display())))?;
    file.spec.validate().map_err(|e| CliError::Config(format!("{}: {e}", task_file.display())))?;
    let dir = task_file.parent().unwrap_or(Path::new("."));
    let data = file
        .data
        .as_ref()
        .ok_or_else(|| CliError::Dataset(format!("{}: no `data` file given", task_file.display())))?;
    let pool = tasks::load_examples(&dir.join(data)).map_err(|e| CliError::Dataset(e.to_string()))?;
    let test = match &file.test_data {
        Some(p) => Some(tasks::load_examples(&dir.join(p)).map_err(|e| CliError::Dataset(e.to_string()))?),
        None => None,
    };
    let split = split_dataset(&pool, test.as_deref(), &file.split, file.split_seed)
        .map_err(|e| CliError::Dataset(e.to_string()))?;
    let task = TaskInstance::new(file.spec, split).map_err(|e| CliError::Dataset(e.to_string()))?;
    let landscape = match landscape_flag {
        Some(p) => Some(absolute(p)?),
        None => file.landscape.map(|p| absolute(&dir.join(p))).transpose()?,
    };
    Ok(LoadedTask { task, landscape })
}

pub fn templates(dir: Option<&Path>) -> Result<MetaPromptSet, CliError> {
    match dir {
        Some(d) => MetaPromptSet::load_dir(d).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(MetaPromptSet::default()),
    }
}

pub fn backends(
    base: &BackendConfig,
    optimizer: &BackendConfig,
    landscape: Option<&Path>,
) -> Result<Backends, CliError> {
    let needs_landscape = base.kind == BackendKind::Simulated || optimizer.kind == BackendKind::Simulated;
    let landscape = match (needs_landscape, landscape) {
        (true, Some(p)) => Some(Arc::new(SimulatedLandscape::load(p).map_err(|e| CliError::Config(e.to_string()))?)),
        (true, None) => {
            return Err(CliError::Config(
                "simulated backends need a landscape (--landscape or `landscape` in the task file)".into(),
            ))
        }
        (false, _) => None,
    };
    Backends::from_configs(base, optimizer, landscape.as_ref()).map_err(|e| CliError::Config(e.to_string()))
}

/// Everything `optimize` and `baseline` need, from command-line arguments.
pub fn prepare(command: &str, task_args: &TaskArgs, search_args: &SearchArgs) -> Result<Run, CliError> {
    let config_file = task_args.config.as_deref();
    let config = search_config(config_file, search_args)?;
    let (base, optimizer) = backend_configs(config_file, task_args)?;
    let task_file = absolute(&task_args.task)?;
    let loaded = load_task(&task_file, task_args.landscape.as_deref())?;
    let templates_dir = task_args.templates.as_deref().map(absolute).transpose()?;
    let templates = templates(templates_dir.as_deref())?;
    let backends = backends(&base, &optimizer, loaded.landscape.as_deref())?;
    let invocation = Invocation {
        command: command.into(),
        task_file,
        landscape: loaded.landscape,
        templates: templates_dir,
        base,
        optimizer,
        strategy: None,
    };
    Ok(Run { task: loaded.task, config, backends, templates, invocation })
}

/// Rebuilds a run from a stored invocation.
pub fn from_invocation(inv: &Invocation, config: SearchConfig) -> Result<Run, CliError> {
    let loaded = load_task(&inv.task_file, inv.landscape.as_deref())?;
    let templates = templates(inv.templates.as_deref())?;
    let backends = backends(&inv.base, &inv.optimizer, loaded.landscape.as_deref())?;
    Ok(Run { task: loaded.task, config, backends, templates, invocation: inv.clone() })
}
