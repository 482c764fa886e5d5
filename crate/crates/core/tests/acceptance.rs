//! Acceptance checks. Runs without the test harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{lite, random_path, random_tree, with_log, Fixture};
use prompt_mcts::baselines::{beam_search, greedy_search, mc_search, BaselineOutcome};
use prompt_mcts::models::LandscapeParams;
use prompt_mcts::rng;
use prompt_mcts::search::{backpropagate, check_terminal, select, select_output, uct_score, Preset, Searcher, TreeStats};
use prompt_mcts::tasks::{evaluate_prompt, ExtractionRule, Metric};
use prompt_mcts::trace::{convergence_report, load_trace, Trace};
use prompt_mcts::{Backends, BackendError, Example, NodeId, SearchConfig, SearchTree, TaskSpec, TerminalFlag};
use rand::Rng;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

// 1. UCT arithmetic and the unvisited-child rule.
fn uct_arithmetic() -> Verdict {
    let start = Instant::now();
    let mut rng = rng::seeded(101);
    let mut tree = SearchTree::new("root", 0.0).unwrap();
    let child = tree.add_child(tree.root(), "child", 0.0, None).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q: f64 = rng.gen_range(-1.0..3.0);
        let n_parent: u64 = rng.gen_range(1..=10_000);
        let n_child: u64 = rng.gen_range(1..=n_parent);
        let c: f64 = rng.gen_range(0.0..5.0);
        let mut p = tree.node(tree.root()).unwrap().clone();
        let mut ch = tree.node(child).unwrap().clone();
        p.visit_count = n_parent;
        ch.visit_count = n_child;
        ch.q_value = q;
        let got = uct_score(&p, &ch, c).map_err(|e| e.to_string())?;
        // Same quantity through logs: c * exp((ln ln Np - ln Nc) / 2).
        let bonus = if n_parent == 1 {
            0.0
        } else {
            c * (((n_parent as f64).ln().ln() - (n_child as f64).ln()) / 2.0).exp()
        };
        worst = worst.max((got - (q + bonus)).abs());
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;

    // Fixed values computed offline.
    let pinned = [(0.5, 10, 2, 2.5, 3.182_457_532_861_684), (0.0, 1, 1, 2.5, 0.0), (0.25, 100, 7, 1.0, 1.061_098_918_222_158_6)];
    for (q, np, nc, c, want) in pinned {
        let mut p = tree.node(tree.root()).unwrap().clone();
        let mut ch = tree.node(child).unwrap().clone();
        p.visit_count = np;
        ch.visit_count = nc;
        ch.q_value = q;
        let got = uct_score(&p, &ch, c).unwrap();
        ensure((got - want).abs() <= 1e-9, || format!("uct({q},{np},{nc},{c}) = {got}, expected {want}"))?;
    }

    for _ in 0..200 {
        let k = rng.gen_range(2..8);
        let mut t = SearchTree::new("root", 0.0).unwrap();
        for i in 0..k {
            t.add_child(t.root(), format!("c{i}"), 0.0, None).unwrap();
        }
        let mut nodes: Vec<_> = t.nodes().cloned().collect();
        let mut first_unvisited = None;
        let mut total = 0;
        for (i, node) in nodes.iter_mut().enumerate().skip(1) {
            let n = if rng.gen_ratio(1, 3) { 0 } else { rng.gen_range(1..50) };
            node.visit_count = n;
            node.q_value = rng.gen_range(0.0..100.0);
            total += n;
            if n == 0 && first_unvisited.is_none() {
                first_unvisited = Some(NodeId(i));
            }
        }
        nodes[0].visit_count = total.max(1);
        let mut t = SearchTree::from_parts(nodes, vec![], vec![], TreeStats::default()).unwrap();
        let path = select(&mut t, 2.5).map_err(|e| e.to_string())?;
        if let Some(want) = first_unvisited {
            ensure(path[1] == want, || format!("selected {} over unvisited {want}", path[1]))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("1000 tuples, max deviation {worst:.1e}, {:?}", start.elapsed()))
}

// 2. Back-propagation against brute-force recomputation.
fn backprop_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = rng::seeded(202);
    for round in 0..400 {
        let dyadic = round < 200;
        let n = rng.gen_range(1..=30);
        let mut tree = random_tree(&mut rng, n, |r| {
            if dyadic {
                r.gen_range(0..=64) as f64 / 64.0
            } else {
                r.gen_range(0.0..1.0)
            }
        });
        let paths: Vec<Vec<NodeId>> = (0..rng.gen_range(1..=10)).map(|_| random_path(&mut rng, &tree)).collect();
        for p in &paths {
            backpropagate(&mut tree, p).map_err(|e| e.to_string())?;
        }
        for node in tree.nodes() {
            let mut expected = Vec::new();
            for p in &paths {
                if let Some(pos) = p.iter().position(|&id| id == node.id()) {
                    let mut sum = 0.0;
                    for &id in p[pos..].iter().rev() {
                        sum += tree.node(id).unwrap().reward;
                    }
                    expected.push(sum);
                }
            }
            let tol = if dyadic { 0.0 } else { 1e-12 };
            ensure(expected.len() == node.cumulative_rewards.len(), || format!("node {} trajectory count", node.id()))?;
            for (a, b) in expected.iter().zip(&node.cumulative_rewards) {
                ensure((a - b).abs() <= tol, || format!("node {} trajectory {a} vs {b}", node.id()))?;
            }
            if !expected.is_empty() {
                let q = expected.iter().sum::<f64>() / expected.len() as f64;
                let ok = if dyadic { q.to_bits() == node.q_value.to_bits() } else { (q - node.q_value).abs() <= tol };
                ensure(ok, || format!("node {} q {} vs brute force {q}", node.id(), node.q_value))?;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("200 dyadic trees bit-exact, 200 real-valued within 1e-12, {:?}", start.elapsed()))
}

// 3. Early stopping on hand-built cases.
struct StopCase {
    depth: usize,
    limit: usize,
    root: f64,
    mid: f64,
    parent: f64,
    node: f64,
    sibling: Option<f64>,
    want: TerminalFlag,
}

fn stop_case(row: (usize, usize, f64, f64, f64, f64, Option<f64>, TerminalFlag)) -> StopCase {
    let (depth, limit, root, mid, parent, node, sibling, want) = row;
    StopCase { depth, limit, root, mid, parent, node, sibling, want }
}

fn early_stopping() -> Verdict {
    use TerminalFlag::{DepthLimit as Dl, EarlyHigh as Hi, EarlyLow as Lo, None as No};
    // (depth, depth limit, root, intermediate, parent, node, sibling, expected)
    // Intermediates sit at depths 1..depth-2; the parent at depth-1 (the
    // root itself when depth is 1).
    let rows = [
        (8, 8, 0.5, 0.5, 0.5, 0.5, None, Dl),
        (4, 4, 0.25, 0.25, 0.5, 0.9, None, Dl),
        (4, 4, 0.5, 0.5, 0.75, 0.1, None, Dl),
        (6, 6, 0.2, 0.3, 0.4, 0.5, None, Dl),
        (9, 8, 0.5, 0.5, 0.5, 0.5, None, Dl),
        (2, 2, 0.5, 0.5, 0.5, 0.0, None, Dl),
        (1, 1, 0.5, 0.5, 0.5, 1.0, None, Dl),
        (1, 8, 0.5, 0.5, 0.5, 0.0, None, No),
        (1, 8, 0.5, 0.5, 0.5, 1.0, None, No),
        (2, 8, 0.5, 0.5, 0.75, 0.1, None, No),
        (2, 8, 0.25, 0.25, 0.5, 0.95, None, No),
        (2, 4, 0.5, 0.5, 0.5, 0.5, None, No),
        (1, 4, 0.0, 0.0, 0.0, 0.0, None, No),
        (3, 8, 0.5, 0.5, 0.75, 0.5, None, Lo),
        (3, 8, 0.5, 0.5, 0.75, 0.625, None, No),
        (3, 8, 0.5, 0.5, 0.75, 0.6875, None, No),
        (3, 8, 0.5, 0.5, 0.75, 0.8, None, Hi),
        (3, 8, 0.5, 0.5, 0.75, 0.75, None, No),
        (4, 8, 0.2, 0.3, 0.4, 0.29, None, Lo),
        (4, 8, 0.2, 0.3, 0.4, 0.35, None, No),
        (4, 8, 0.2, 0.3, 0.4, 0.45, None, Hi),
        (5, 8, 0.1, 0.9, 0.3, 0.25, None, No),
        (5, 8, 0.1, 0.9, 0.3, 0.95, None, Hi),
        (5, 8, 0.1, 0.9, 0.3, 0.15, None, Lo),
        (3, 8, 0.0, 0.0, 0.0, 0.0, None, No),
        (3, 8, 0.0, 0.0, 0.0, 0.0625, None, Hi),
        (3, 8, 1.0, 1.0, 1.0, 1.0, None, No),
        (3, 8, 1.0, 1.0, 1.0, 0.9375, None, Lo),
        (7, 8, 0.5, 0.5, 0.5, 0.4375, None, Lo),
        (7, 8, 0.5, 0.5, 0.5, 0.5625, None, Hi),
        (7, 8, 0.5, 0.5, 0.5, 0.5, None, No),
        (3, 8, 0.5, 0.5, 0.75, 0.8, Some(0.9), No),
        (3, 8, 0.5, 0.5, 0.75, 0.95, Some(0.9), Hi),
        (3, 8, 0.5, 0.5, 0.75, 0.9, Some(0.9), No),
        (3, 8, 0.5, 0.5, 0.75, 0.5, Some(0.9), Lo),
        (4, 8, 0.25, 0.5, 0.5, 0.375, Some(0.25), No),
        (4, 8, 0.25, 0.5, 0.5, 0.3125, Some(0.0), Lo),
        (4, 8, 0.25, 0.5, 0.5, 0.625, Some(0.625), No),
        (4, 8, 0.25, 0.5, 0.5, 0.6875, Some(0.625), Hi),
        (3, 3, 0.5, 0.5, 0.75, 0.1, None, Dl),
        (3, 4, 0.5, 0.5, 0.75, 0.1, None, Lo),
        (5, 6, 0.5, 0.5, 0.5, 1.0, None, Hi),
        (6, 6, 0.5, 0.5, 0.5, 1.0, None, Dl),
        (3, 4, 0.5, 0.5, 0.75, 0.9, None, Hi),
        (3, 8, 0.875, 0.25, 0.25, 0.5, None, Lo),
        (3, 8, 0.875, 0.25, 0.25, 0.5625, None, No),
        (3, 8, 0.875, 0.25, 0.25, 0.9375, None, Hi),
        (4, 8, 0.875, 0.125, 0.125, 0.875, None, No),
        (3, 8, 0.125, 0.125, 0.875, 0.375, None, Lo),
        (3, 8, 0.125, 0.125, 0.875, 0.5, None, No),
    ];
    let mut agree = 0;
    for (i, row) in rows.into_iter().enumerate() {
        let case = stop_case(row);
        let mut tree = SearchTree::new("root", case.root).unwrap();
        let mut parent = tree.root();
        for d in 1..case.depth {
            let r = if d == case.depth - 1 { case.parent } else { case.mid };
            parent = tree.add_child(parent, format!("d{d}"), r, None).unwrap();
        }
        if let Some(s) = case.sibling {
            tree.add_child(parent, "sibling", s, None).unwrap();
        }
        let node = tree.add_child(parent, "node", case.node, None).unwrap();
        let mut config = SearchConfig::default();
        config.depth_limit = case.limit;
        let got = check_terminal(node, &tree, &config).map_err(|e| e.to_string())?;
        ensure(got == case.want, || format!("case {}: got {got:?}, expected {:?}", i + 1, case.want))?;
        agree += 1;
    }
    Ok(format!("{agree}/{} cases agree", rows.len()))
}

// 4. Output strategy against enumeration of logged paths.
fn output_strategy() -> Verdict {
    let mut rng = rng::seeded(404);
    for round in 0..200 {
        let n = rng.gen_range(1..=30);
        let tree = random_tree(&mut rng, n, |r| r.gen_range(0..=4) as f64 / 4.0);
        let paths: Vec<Vec<NodeId>> = (0..rng.gen_range(1..=10)).map(|_| random_path(&mut rng, &tree)).collect();
        let logged = with_log(&tree, paths.clone());
        let reward = |id: &NodeId| tree.node(*id).unwrap().reward;
        let means: Vec<f64> = paths.iter().map(|p| p.iter().map(reward).sum::<f64>() / p.len() as f64).collect();
        let top = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let path = &paths[means.iter().position(|&m| m == top).unwrap()];
        let best = path.iter().map(reward).fold(f64::NEG_INFINITY, f64::max);
        let want = *path.iter().find(|id| reward(id) == best).unwrap();
        let got = select_output(&logged).map_err(|e| e.to_string())?;
        ensure(got.id == want, || format!("trace {round}: selected {}, enumeration gives {want}", got.id))?;
    }
    Ok("200 traces agree".into())
}

// 5. Presets and baseline budgets.
fn budget_accounting() -> Verdict {
    let table = [(Preset::Standard, (8, 3, 1)), (Preset::Wide, (6, 3, 2)), (Preset::Lite, (4, 3, 1))];
    for (preset, (d, w, s)) in table {
        let c = SearchConfig::preset(preset);
        ensure((c.depth_limit, c.expand_width, c.num_samples) == (d, w, s), || format!("{preset:?} shape"))?;
        ensure(c.iterations == 12 && c.batch_size == 5 && c.early_stop_min_depth == 2 && c.exploration_weight == 2.5, || {
            format!("{preset:?} shared defaults")
        })?;
    }

    let mut notes = Vec::new();
    let mut exact_runs = 0;
    let landscapes = [
        ("default", LandscapeParams { seed: 5, ..Default::default() }),
        ("sparse", LandscapeParams { n_keywords: 16, root_mentions: 1, max_required: 1, seed: 5, ..Default::default() }),
    ];
    for (label, params) in landscapes {
        let fx = Fixture::new(params);
        let config = SearchConfig::preset(Preset::Standard).with_seed(5);
        let b = fx.backends();
        let ctx = fx.ctx(&config, &b);
        let runs: [(&str, usize, BaselineOutcome); 3] = [
            ("mc", 72, mc_search(&ctx, 72).map_err(|f| f.error.to_string())?),
            ("greedy", 72, greedy_search(&ctx, 8, 9).map_err(|f| f.error.to_string())?),
            ("beam", 72, beam_search(&ctx, 3, 3, 8).map_err(|f| f.error.to_string())?),
        ];
        for (name, budget, out) in runs {
            ensure(out.explored <= budget, || format!("{label} {name}: {} explored over budget {budget}", out.explored))?;
            if out.skipped == 0 {
                ensure(out.explored == budget, || format!("{label} {name}: {} explored without skips", out.explored))?;
                exact_runs += 1;
            }
            notes.push(format!("{label}/{name} {}+{}skip", out.explored, out.skipped));
        }
    }
    ensure(exact_runs > 0, || "no skip-free run to check exact budgets".into())?;
    Ok(format!("presets match; {}", notes.join(", ")))
}

// 6. MCTS against greedy and Monte Carlo on the keyword landscape.
fn end_to_end() -> Verdict {
    let start = Instant::now();
    let (mut mcts, mut greedy, mut mc, mut hits) = (0.0, 0.0, 0.0, 0);
    let seeds = 20;
    for seed in 0..seeds {
        let fx = Fixture::seeded(seed);
        ensure(fx.landscape.keyword_pool.len() == 10, || "landscape keyword count".into())?;
        let config = lite(seed);
        let b = fx.backends();
        let ctx = fx.ctx(&config, &b);
        let out = prompt_mcts::run_search(ctx).map_err(|f| f.error.to_string())?;
        let m = out.tree.node(out.best.id).unwrap().reward;
        let g = greedy_search(&ctx, config.depth_limit, config.expand_width).map_err(|f| f.error.to_string())?;
        let r = mc_search(&ctx, config.iterations).map_err(|f| f.error.to_string())?;
        mcts += m;
        greedy += g.tree.node(g.best.id).unwrap().reward;
        mc += r.tree.node(r.best.id).unwrap().reward;
        if m == 1.0 {
            hits += 1;
        }
    }
    let n = seeds as f64;
    let (mcts, greedy, mc) = (mcts / n, greedy / n, mc / n);
    let summary = format!("mean reward mcts {mcts:.3} >= greedy {greedy:.3} >= mc {mc:.3}, mcts hits 1.0 on {hits}/{seeds}");
    ensure(mcts >= greedy && greedy >= mc, || summary.clone())?;
    ensure(hits as f64 >= 0.8 * n, || summary.clone())?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("{summary}, {:?}", start.elapsed()))
}

// 7. Entity micro-F1 against a counting oracle.
fn entity_task() -> TaskSpec {
    TaskSpec {
        name: "entities".into(),
        initial_prompt: "List the entities.".into(),
        task_prefix: None,
        task_suffix: None,
        answer_format: None,
        metric: Metric::EntitySetF1,
        label_space: None,
        extraction: ExtractionRule::EntitySet,
    }
}

/// Scores `predicted[i]` against `gold[i]` through the library's evaluation
/// path, with a base model that answers from the table.
fn library_f1(gold: &[Vec<String>], predicted: &[Vec<String>]) -> f64 {
    let examples: Vec<Example> =
        gold.iter().enumerate().map(|(i, g)| Example::entities(format!("e{i}"), format!("item-{i}"), g.clone())).collect();
    let answers: Arc<Vec<String>> = Arc::new(predicted.iter().map(|p| format!("{{{}}}", p.join(","))).collect());
    let base = move |input: &str| -> Result<String, BackendError> {
        let line = input.lines().find_map(|l| l.strip_prefix("item-")).expect("question line");
        Ok(answers[line.trim().parse::<usize>().unwrap()].clone())
    };
    let optimizer = |_: &str| -> Result<String, BackendError> { Ok(String::new()) };
    let backends = Backends::new(Arc::new(base), Arc::new(optimizer));
    evaluate_prompt("List the entities.", &entity_task(), &examples, &backends).unwrap().score
}

fn oracle_f1(gold: &[Vec<String>], predicted: &[Vec<String>]) -> f64 {
    let norm = |v: &Vec<String>| {
        let mut s: Vec<String> = v.iter().map(|e| e.trim().to_lowercase()).filter(|e| !e.is_empty()).collect();
        s.sort();
        s.dedup();
        s
    };
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (g, p) in gold.iter().zip(predicted) {
        let (g, p) = (norm(g), norm(p));
        let hits = p.iter().filter(|e| g.contains(e)).count();
        tp += hits;
        fp += p.len() - hits;
        fn_ += g.len() - hits;
    }
    if tp + fp + fn_ == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

fn metric_correctness() -> Verdict {
    let hand = library_f1(&[vec!["A".into(), "B".into()]], &[vec!["B".into(), "C".into()]]);
    ensure(hand == 0.5, || format!("{{A,B}} vs {{B,C}} scored {hand}"))?;
    let mut rng = rng::seeded(707);
    let names = ["alpha", "Beta", "gamma", " delta", "EPSILON", "zeta "];
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let rows = rng.gen_range(1..5);
        let pick = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<String> {
            (0..r.gen_range(0..4)).map(|_| names[r.gen_range(0..names.len())].to_string()).collect()
        };
        let gold: Vec<Vec<String>> = (0..rows).map(|_| pick(&mut rng)).collect();
        let predicted: Vec<Vec<String>> = (0..rows).map(|_| pick(&mut rng)).collect();
        let got = library_f1(&gold, &predicted);
        worst = worst.max((got - oracle_f1(&gold, &predicted)).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("hand case 0.5 exact; 500 instances, max deviation {worst:.1e}"))
}

// 8. Resume and byte-identical reruns.
fn full_trace(fx: &Fixture, config: &SearchConfig) -> String {
    let b = fx.backends();
    let out = prompt_mcts::run_search(fx.ctx(config, &b)).unwrap();
    Trace::from_tree(&out.tree, config, &fx.task.spec.name, false).to_json()
}

fn determinism_and_resume() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut checked = 0;
    for seed in [3u64, 11] {
        let fx = Fixture::seeded(seed);
        let config = lite(seed);
        let first = full_trace(&fx, &config);
        ensure(first == full_trace(&fx, &config), || format!("seed {seed}: reruns differ"))?;
        for k in [1, 5, 11] {
            let path = dir.path().join(format!("trace-{seed}-{k}.json"));
            {
                let b = fx.backends();
                let searcher = Searcher::new(fx.ctx(&config, &b)).unwrap();
                let mut tree = searcher.initialize().unwrap();
                for _ in 0..k {
                    searcher.iterate(&mut tree).unwrap();
                }
                Trace::from_tree(&tree, &config, &fx.task.spec.name, true).save(&path).unwrap();
            }
            let loaded = load_trace(&path).map_err(|e| e.to_string())?;
            let mut tree = loaded.to_tree().map_err(|e| e.to_string())?;
            let b = fx.backends();
            let searcher = Searcher::new(fx.ctx(&loaded.config, &b)).unwrap();
            searcher.run(&mut tree).unwrap();
            let resumed = Trace::from_tree(&tree, &loaded.config, &loaded.task, false).to_json();
            let deep = serde_json::from_str::<serde_json::Value>(&resumed).unwrap()
                == serde_json::from_str::<serde_json::Value>(&first).unwrap();
            ensure(deep && resumed == first, || format!("seed {seed}: resume after {k} iterations differs"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} resumed runs equal uninterrupted ones; reruns byte-identical"))
}

// 9. Per-depth mean rewards rise with depth.
fn convergence() -> Verdict {
    let mut shown = String::new();
    for seed in 0..20 {
        let fx = Fixture::seeded(seed);
        let config = lite(seed);
        let b = fx.backends();
        let out = prompt_mcts::run_search(fx.ctx(&config, &b)).map_err(|f| f.error.to_string())?;
        let report = convergence_report(&out.tree).map_err(|e| e.to_string())?;
        let means: Vec<f64> = report.rows.iter().map(|r| r.mean_reward).collect();
        ensure(means.windows(2).all(|w| w[0] <= w[1]), || format!("seed {seed}: per-depth means {means:?}"))?;
        if seed == 7 {
            shown = means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" ");
        }
    }
    Ok(format!("non-decreasing on 20 seeds (seed 7: {shown})"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("uct arithmetic", uct_arithmetic),
        ("back-propagation oracle", backprop_oracle),
        ("early stopping", early_stopping),
        ("output strategy", output_strategy),
        ("budget accounting", budget_accounting),
        ("end-to-end oracle run", end_to_end),
        ("metric correctness", metric_correctness),
        ("determinism and resume", determinism_and_resume),
        ("convergence report", convergence),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match verdict {
            Ok(detail) => println!("PASS {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
