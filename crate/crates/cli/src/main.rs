//! `prompt-mcts`: optimize prompts, run baselines, evaluate prompts and
//! inspect traces.

mod setup;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use prompt_mcts::baselines::{run_baseline, Strategy};
use prompt_mcts::models::{BackendKind, LandscapeParams};
use prompt_mcts::search::{Preset, SearchFailure, Searcher};
use prompt_mcts::tasks::{evaluate_prompt_with_format, write_examples};
use prompt_mcts::trace::{convergence_report, load_trace, Trace};
use prompt_mcts::{select_output, Error, SearchContext, SearchTree, SimulatedLandscape};
use serde_json::json;

use setup::{Invocation, Run};

const PROMPT_BEGIN: &str = "---PROMPT-BEGIN---";
const PROMPT_END: &str = "---PROMPT-END---";

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Backend(String),
    Dataset(String),
    Trace(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Backend(_) => 3,
            CliError::Dataset(_) => 4,
            CliError::Trace(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Config(m) | CliError::Backend(m) | CliError::Dataset(m) | CliError::Trace(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        use prompt_mcts::expansion::ExpansionError;
        use prompt_mcts::search::SearchError;
        use prompt_mcts::tasks::TaskError;
        let msg = e.to_string();
        if e.is_backend() {
            return CliError::Backend(msg);
        }
        match e {
            Error::Search(SearchError::Config(_)) => CliError::Config(msg),
            Error::Expansion(ExpansionError::Template(_)) => CliError::Config(msg),
            Error::Expansion(ExpansionError::Precondition(_)) => CliError::Dataset(msg),
            Error::Expansion(ExpansionError::Task(TaskError::Invalid(_))) | Error::Task(TaskError::Invalid(_)) => {
                CliError::Config(msg)
            }
            Error::Expansion(ExpansionError::Task(_)) | Error::Task(_) => CliError::Dataset(msg),
            Error::Trace(_) => CliError::Trace(msg),
            _ => CliError::Io(msg),
        }
    }
}

#[derive(Parser)]
#[command(name = "prompt-mcts", version, about = "Prompt optimization by tree search over error-driven rewrites")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendChoice {
    Simulated,
    Http,
}

impl From<BackendChoice> for BackendKind {
    fn from(c: BackendChoice) -> Self {
        match c {
            BackendChoice::Simulated => BackendKind::Simulated,
            BackendChoice::Http => BackendKind::Http,
        }
    }
}

#[derive(Args)]
pub struct TaskArgs {
    /// Task file (JSON).
    #[arg(long)]
    task: PathBuf,
    /// Config file with `search`, `base` and `optimizer` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Landscape for the simulated backends; overrides the task file.
    #[arg(long)]
    landscape: Option<PathBuf>,
    /// Directory with template overrides.
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendChoice>,
    /// Base URL of a chat-completions endpoint.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    base_model: Option<String>,
    #[arg(long)]
    optimizer_model: Option<String>,
    #[arg(long)]
    max_parallel: Option<usize>,
    #[arg(long)]
    max_retries: Option<u32>,
}

#[derive(Args)]
pub struct SearchArgs {
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    exploration_weight: Option<f64>,
    #[arg(long)]
    depth_limit: Option<usize>,
    #[arg(long)]
    expand_width: Option<usize>,
    #[arg(long)]
    num_samples: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    early_stop_min_depth: Option<usize>,
    #[arg(long)]
    max_error_attempts: Option<usize>,
    #[arg(long)]
    transition_retries: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyChoice {
    Mc,
    Greedy,
    Beam,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitChoice {
    Train,
    Heldout,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tree search and print the best prompt.
    Optimize {
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value = "trace.json")]
        trace: PathBuf,
        /// Also write the best prompt here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stop after this many iterations; finish later with `resume`.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Run a Monte Carlo, greedy or beam search baseline.
    Baseline {
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_enum)]
        strategy: StrategyChoice,
        /// Candidates to sample (mc).
        #[arg(long, default_value_t = 72)]
        budget: usize,
        /// Batches per level (greedy).
        #[arg(long, default_value_t = 3)]
        width: usize,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        beam_width: usize,
        /// Batches per kept node (beam).
        #[arg(long, default_value_t = 3)]
        per_node: usize,
        #[arg(long, default_value = "trace.json")]
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a fixed prompt on one split of a task.
    Evaluate {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        prompt_file: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitChoice,
        /// Write the per-example rows here (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Continue an interrupted search from its trace.
    Resume {
        trace: PathBuf,
        /// Write the updated trace here instead of over the input.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-depth reward table of a trace.
    Report {
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: ReportFormat,
        /// Output file; a CSV gets a `.best_path.json` sidecar next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a simulated keyword landscape with its task and dataset.
    GenLandscape {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        keywords: usize,
        #[arg(long, default_value_t = 4)]
        root_mentions: usize,
        #[arg(long, default_value_t = 200)]
        examples: usize,
        #[arg(long, default_value_t = 3)]
        max_required: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Optimize { task, search, trace, out, stop_after } => {
            let run = setup::prepare("optimize", &task, &search)?;
            optimize(run, None, &trace, out.as_deref(), stop_after)
        }
        Command::Baseline { task, search, strategy, budget, width, depth, beam_width, per_node, trace, out } => {
            let strategy = match strategy {
                StrategyChoice::Mc => Strategy::Mc { budget },
                StrategyChoice::Greedy => Strategy::Greedy { depth, width },
                StrategyChoice::Beam => Strategy::Beam { beam_width, per_node, depth },
            };
            let mut run = setup::prepare("baseline", &task, &search)?;
            run.invocation.strategy = Some(strategy);
            baseline(run, strategy, &trace, out.as_deref())
        }
        Command::Evaluate { task, prompt_file, split, out } => evaluate(&task, &prompt_file, split, out.as_deref()),
        Command::Resume { trace, trace_out, out } => resume(&trace, trace_out.as_deref(), out.as_deref()),
        Command::Report { trace, format, out } => report(&trace, format, out.as_deref()),
        Command::GenLandscape { out_dir, seed, keywords, root_mentions, examples, max_required } => {
            let params =
                LandscapeParams { n_keywords: keywords, root_mentions, n_examples: examples, max_required, seed };
            gen_landscape(&out_dir, &params)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn save(tree: &SearchTree, run: &Run, partial: bool, path: &Path) -> Result<(), CliError> {
    let invocation = serde_json::to_value(&run.invocation).expect("invocation serializes");
    Trace::from_tree(tree, &run.config, &run.task.spec.name, partial)
        .with_invocation(invocation)
        .save(path)
        .map_err(|e| CliError::Trace(e.to_string()))
}

fn print_prompt(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{PROMPT_BEGIN}\n{text}\n{PROMPT_END}").map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(path) = out {
        write_file(path, &format!("{text}\n"))?;
    }
    Ok(())
}

/// Runs MCTS iterations on `tree` (or a fresh one) until the configured
/// count or `stop_after` new iterations, saving the trace either way.
fn optimize(
    run: Run,
    tree: Option<SearchTree>,
    trace_path: &Path,
    out: Option<&Path>,
    stop_after: Option<usize>,
) -> Result<(), CliError> {
    let ctx = SearchContext { task: &run.task, config: &run.config, backends: &run.backends, templates: &run.templates };
    let searcher = Searcher::new(ctx)?;
    let mut tree = match tree {
        Some(t) => t,
        None => searcher.initialize()?,
    };
    let mut done_now = 0;
    while tree.completed_iterations() < run.config.iterations {
        if stop_after.is_some_and(|n| done_now >= n) {
            save(&tree, &run, true, trace_path)?;
            eprintln!(
                "stopped after {} of {} iterations; continue with `prompt-mcts resume {}`",
                tree.completed_iterations(),
                run.config.iterations,
                trace_path.display()
            );
            return Ok(());
        }
        if let Err(e) = searcher.iterate(&mut tree) {
            save(&tree, &run, true, trace_path)?;
            warn!("partial trace written to {}", trace_path.display());
            return Err(e.into());
        }
        done_now += 1;
    }
    let best = select_output(&tree).map_err(Error::from)?;
    save(&tree, &run, false, trace_path)?;
    info!("best prompt is {} with reward {}", best.id, tree.node(best.id).map_err(Error::from)?.reward);
    print_prompt(&best.text, out)
}

fn baseline(run: Run, strategy: Strategy, trace_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let ctx = SearchContext { task: &run.task, config: &run.config, backends: &run.backends, templates: &run.templates };
    match run_baseline(&ctx, strategy) {
        Ok(outcome) => {
            save(&outcome.tree, &run, false, trace_path)?;
            eprintln!("explored {} candidates, skipped {} batches", outcome.explored, outcome.skipped);
            print_prompt(&outcome.best.text, out)
        }
        Err(SearchFailure { error, partial }) => {
            if let Some(tree) = partial {
                save(&tree, &run, true, trace_path)?;
                warn!("partial trace written to {}", trace_path.display());
            }
            Err(error.into())
        }
    }
}

fn evaluate(args: &TaskArgs, prompt_file: &Path, split: SplitChoice, out: Option<&Path>) -> Result<(), CliError> {
    let prompt = fs::read_to_string(prompt_file).map_err(|e| CliError::Config(format!("{}: {e}", prompt_file.display())))?;
    let prompt = prompt.trim_end_matches(['\n', '\r']);
    if prompt.trim().is_empty() {
        return Err(CliError::Config(format!("{}: prompt is empty", prompt_file.display())));
    }
    let (base, optimizer) = setup::backend_configs(args.config.as_deref(), args)?;
    let loaded = setup::load_task(&args.task, args.landscape.as_deref())?;
    let templates = setup::templates(args.templates.as_deref())?;
    let backends = setup::backends(&base, &optimizer, loaded.landscape.as_deref())?;
    let split_data = match split {
        SplitChoice::Train => &loaded.task.split.train,
        SplitChoice::Heldout => &loaded.task.split.heldout,
        SplitChoice::Test => &loaded.task.split.test,
    };
    let result = evaluate_prompt_with_format(
        &templates.input_format_template,
        prompt,
        &loaded.task.spec,
        split_data,
        &backends,
    )
    .map_err(Error::from)?;
    println!("score: {}", result.score);
    if let Some(path) = out {
        let mut text = serde_json::to_string_pretty(&result).expect("results serialize");
        text.push('\n');
        write_file(path, &text)?;
    }
    Ok(())
}

fn resume(trace_path: &Path, trace_out: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let trace = load_trace(trace_path).map_err(|e| CliError::Trace(e.to_string()))?;
    let tree = trace.to_tree().map_err(|e| CliError::Trace(e.to_string()))?;
    let invocation: Invocation = trace
        .invocation
        .clone()
        .ok_or_else(|| CliError::Trace("trace has no invocation record and cannot be resumed".into()))
        .and_then(|v| serde_json::from_value(v).map_err(|e| CliError::Trace(format!("bad invocation record: {e}"))))?;
    if invocation.command != "optimize" {
        return Err(CliError::Trace(format!("`{}` traces cannot be resumed", invocation.command)));
    }
    if !trace.partial && tree.completed_iterations() >= trace.config.iterations {
        eprintln!(
            "{} is already complete ({} iterations); nothing to do",
            trace_path.display(),
            tree.completed_iterations()
        );
        return Ok(());
    }
    if trace.partial {
        warn!("resuming partial trace {}", trace_path.display());
    }
    let run = setup::from_invocation(&invocation, trace.config.clone())?;
    optimize(run, Some(tree), trace_out.unwrap_or(trace_path), out, None)
}

fn report(trace_path: &Path, format: ReportFormat, out: Option<&Path>) -> Result<(), CliError> {
    let trace = load_trace(trace_path).map_err(|e| CliError::Trace(e.to_string()))?;
    let tree = trace.to_tree().map_err(|e| CliError::Trace(e.to_string()))?;
    let report = convergence_report(&tree).map_err(|e| CliError::Trace(e.to_string()))?;
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    };
    match out {
        Some(path) => {
            write_file(path, &text)?;
            if let ReportFormat::Csv = format {
                write_file(&path.with_extension("best_path.json"), &report.best_path_json())?;
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn gen_landscape(dir: &Path, params: &LandscapeParams) -> Result<(), CliError> {
    let (landscape, spec, data) = SimulatedLandscape::generate(params).map_err(|e| CliError::Config(e.to_string()))?;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    landscape.save(&dir.join("landscape.json")).map_err(|e| CliError::Io(e.to_string()))?;
    write_examples(&dir.join("data.jsonl"), &data).map_err(|e| CliError::Io(e.to_string()))?;
    let test_size = params.n_examples / 2;
    let heldout = (params.n_examples - test_size) * 3 / 5;
    let mut task = serde_json::to_value(&spec).expect("task serializes");
    let obj = task.as_object_mut().expect("task is an object");
    obj.insert("data".into(), json!("data.jsonl"));
    obj.insert("landscape".into(), json!("landscape.json"));
    obj.insert("split".into(), json!({ "test_size": test_size, "heldout_size": heldout.max(1) }));
    let mut text = serde_json::to_string_pretty(&task).expect("task serializes");
    text.push('\n');
    write_file(&dir.join("task.json"), &text)?;
    eprintln!("wrote landscape.json, data.jsonl and task.json to {}", dir.display());
    Ok(())
}
