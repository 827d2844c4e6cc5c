use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{field_error, AdiabaticParams, LearnParams, LsmParams, SolveParams};
use super::{Command, Outcome, RunContext};
use crate::adiabatic::{
    build_problem_hamiltonian, gap_profile, overlap_sweep, SatInstance, MIN_STEPS_PER_UNIT_TIME,
};
use crate::error::{QlsmError, Result};
use crate::hashing::derive_seed;
use crate::hebbian::{unsupervised_session, write_session_csv, ContextNetwork};
use crate::io::write_csv;
use crate::oracle::{brute_force, trace_np_decision, trace_sharp_p_count, OracleFunction};
use crate::readout::{constant_nrmse, nrmse, predict_all, time_ordered_split, train_readout};
use crate::reservoir::{
    build_reservoir, estimate_fading_memory, random_walk, run_liquid_detailed, separation_sweep,
    validate_input, write_trajectory_csv, FilterBank, InputSignal, LiquidConfig, DEFAULT_BOUND,
    DEFAULT_LIPSCHITZ,
};
use crate::statevec::uniform_superposition;

const BUNDLED_INSTANCE: &str = include_str!("../../data/unique3.cnf");

/// Norm drift tolerated on any liquid branch.
const NORM_DRIFT_TOLERANCE: f64 = 1e-6;

fn bool_metric(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn cmd_adiabatic(p: &AdiabaticParams, ctx: &RunContext) -> Result<Outcome> {
    if p.total_times.is_empty() {
        return Err(field_error("adiabatic.total_times", "empty list"));
    }
    if let Some(t) = p.total_times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(field_error("adiabatic.total_times", format!("{t} is not a positive time")));
    }
    if !(p.steps_per_unit >= MIN_STEPS_PER_UNIT_TIME) {
        return Err(field_error(
            "adiabatic.steps_per_unit",
            format!("{} is below the minimum {MIN_STEPS_PER_UNIT_TIME}", p.steps_per_unit),
        ));
    }
    if p.gap_samples < 2 {
        return Err(field_error("adiabatic.gap_samples", "need at least 2 points"));
    }
    let inst = match &p.instance {
        Some(path) => SatInstance::from_dimacs_file(path)?,
        None => SatInstance::parse_dimacs(BUNDLED_INSTANCE, Path::new("<bundled unique3.cnf>"))?,
    };
    let n = inst.num_vars();
    let terms = build_problem_hamiltonian(&inst)?;
    let sweep = overlap_sweep(&terms, &p.total_times, p.steps_per_unit, &uniform_superposition(n)?)?;
    let gaps = gap_profile(&terms, p.gap_samples)?;

    let pre = ctx.preamble(Command::Adiabatic);
    write_csv(
        &ctx.path("overlap.csv"),
        &pre,
        &["T".into(), "overlap".into()],
        sweep.iter().map(|(t, r)| vec![*t, r.overlap]),
    )?;
    write_csv(
        &ctx.path("spectrum.csv"),
        &pre,
        &["s".into(), "value".into()],
        gaps.iter().map(|&(s, g)| vec![s, g]),
    )?;

    let mut out = Outcome::default();
    out.artifact("overlap.csv");
    out.artifact("spectrum.csv");
    let first = sweep.first().expect("nonempty sweep").1.overlap;
    let (last_t, last) = sweep.last().map(|(t, r)| (*t, r)).expect("nonempty sweep");
    let solutions = (0..1usize << n).filter(|&a| inst.is_satisfied(a)).count();
    out.metric("num_vars", n as f64);
    out.metric("num_clauses", inst.clauses().len() as f64);
    out.metric("num_solutions", solutions as f64);
    out.metric("first_overlap", first);
    out.metric("final_overlap", last.overlap);
    out.metric("final_total_time", last_t);
    out.metric("ground_multiplicity", last.ground_multiplicity as f64);
    out.metric("ground_energy", last.ground_energy);
    out.metric("degenerate_ground", bool_metric(last.degenerate));
    out.metric(
        "min_gap",
        gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min),
    );
    let in_range = sweep
        .iter()
        .all(|(_, r)| (-1e-12..=1.0 + 1e-12).contains(&r.overlap));
    out.check("overlaps_in_unit_interval", in_range);
    out.check("endpoint_spot_check", last.overlap >= first);
    if !in_range || last.overlap < first {
        out.diff.push(serde_json::json!({
            "check": "adiabatic overlaps",
            "overlaps": sweep.iter().map(|(t, r)| [*t, r.overlap]).collect::<Vec<_>>(),
        }));
    }
    Ok(out)
}

/// Configured signal, validated before anything runs.
fn lsm_signal(p: &LsmParams, ctx: &RunContext) -> Result<InputSignal> {
    let u = match (&p.signal.path, p.signal.length, p.signal.step_fraction) {
        (Some(path), None, None) => InputSignal::from_csv(path, DEFAULT_BOUND, DEFAULT_LIPSCHITZ)?,
        (None, Some(len), Some(step)) => {
            if !(step > 0.0 && step <= 1.0) {
                return Err(field_error("lsm.signal.step_fraction", format!("{step} outside (0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed, "signal", 0));
            random_walk(len, 1, step, &mut rng)?
        }
        _ => {
            return Err(field_error(
                "lsm.signal",
                "give either `path` or both `length` and `step_fraction`",
            ))
        }
    };
    validate_input(&u).into_result()?;
    Ok(u)
}

#[derive(Serialize)]
struct DelayedRecall {
    delay: usize,
    washout: usize,
    train_size: usize,
    test_size: usize,
}

pub(crate) fn cmd_lsm(p: &LsmParams, ctx: &RunContext) -> Result<Outcome> {
    let u = lsm_signal(p, ctx)?;
    if !(p.field_scale.is_finite() && p.field_scale > 0.0) {
        return Err(field_error("lsm.field_scale", "must be positive"));
    }
    let graph = build_reservoir(p.nodes, u.channels(), p.connectivity, derive_seed(ctx.seed, "graph", 0))
        .map_err(|e| field_error("lsm", e))?
        .with_field_scale(p.field_scale);
    let bank = match &p.filters {
        Some(filters) => FilterBank::new(filters.clone(), p.nodes).map_err(|e| field_error("lsm.filters", e))?,
        None => FilterBank::default_bank(p.nodes),
    };
    let liquid = LiquidConfig::default().with_leak(p.leak);
    if !(0.0..=1.0).contains(&p.leak) {
        return Err(field_error("lsm.leak", format!("{} outside [0, 1]", p.leak)));
    }
    let t = &p.task;
    if t.washout < t.delay.max(bank.max_lag()) {
        return Err(field_error(
            "lsm.task.washout",
            format!("must be at least max(delay, largest filter lag) = {}", t.delay.max(bank.max_lag())),
        ));
    }
    if t.washout + 10 > u.len() {
        return Err(field_error("lsm.task.washout", "leaves fewer than 10 samples"));
    }

    let run = run_liquid_detailed(&graph, &u, u.duration(), &liquid)?;
    let traj = &run.states;
    let inputs = (t.washout..traj.len())
        .map(|k| bank.apply_at(traj, k))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<f64> = (t.washout..traj.len()).map(|k| u.sample(k - t.delay)[0]).collect();
    let (train, test) = time_ordered_split(inputs, targets)?;
    let model = train_readout(&train, t.regularization)
        .map_err(|e| field_error("lsm.task.regularization", e))?
        .with_filter_bank_hash(bank.descriptor_hash());
    let predictions = predict_all(&model, &test)?;
    let train_mean = train.targets.iter().sum::<f64>() / train.len() as f64;
    let test_nrmse = nrmse(&predictions, &test.targets);
    let baseline_nrmse = constant_nrmse(train_mean, &test.targets);
    let test_mean = test.targets.iter().sum::<f64>() / test.len() as f64;
    let best_constant_nrmse = constant_nrmse(test_mean, &test.targets);

    let sep = separation_sweep(
        &graph,
        &bank,
        p.separation.pairs,
        p.separation.length,
        p.separation.threshold,
        &liquid,
        derive_seed(ctx.seed, "separation", 0),
    )
    .map_err(|e| field_error("lsm.separation", e))?;
    let mut base_rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed, "fading-base", 0));
    let base = random_walk(p.fading.base_length, u.channels(), 1.0, &mut base_rng)
        .map_err(|e| field_error("lsm.fading.base_length", e))?;
    let fading = estimate_fading_memory(
        &graph,
        &bank,
        &base,
        p.fading.pairs,
        &p.fading.windows,
        &liquid,
        derive_seed(ctx.seed, "fading", 0),
    )
    .map_err(|e| field_error("lsm.fading", e))?;

    let pre = ctx.preamble(Command::Lsm);
    write_trajectory_csv(&ctx.path("trajectory.csv"), &pre, traj)?;
    write_csv(
        &ctx.path("divergence.csv"),
        &pre,
        &["window".into(), "mean".into(), "std".into(), "max".into()],
        (0..fading.windows.len()).map(|i| {
            vec![
                fading.windows[i] as f64,
                fading.mean_divergence[i],
                fading.std_divergence[i],
                fading.max_divergence[i],
            ]
        }),
    )?;
    let test_start = t.washout + train.len();
    write_csv(
        &ctx.path("predictions.csv"),
        &pre,
        &["t".into(), "target".into(), "prediction".into()],
        predictions
            .iter()
            .zip(&test.targets)
            .enumerate()
            .map(|(i, (y_hat, y))| vec![(test_start + i) as f64 * u.dt(), *y, *y_hat]),
    )?;
    ctx.write_json("graph.json", "graph", &graph)?;
    ctx.write_json("filters.json", "filter_bank", &bank)?;
    ctx.write_json("model.json", "model", &model)?;
    ctx.write_json(
        "task.json",
        "delayed_recall",
        &DelayedRecall {
            delay: t.delay,
            washout: t.washout,
            train_size: train.len(),
            test_size: test.len(),
        },
    )?;

    let mut out = Outcome::default();
    for a in ["trajectory.csv", "divergence.csv", "predictions.csv", "graph.json", "filters.json", "model.json", "task.json"] {
        out.artifact(a);
    }
    out.metric("edges", graph.edge_count() as f64);
    out.metric("separation_pairs", sep.pairs as f64);
    out.metric("separation_pass_rate", sep.pass_rate);
    out.metric("separation_min_max_difference", sep.min_max_difference);
    out.metric("fading_certified", bool_metric(fading.certified));
    out.metric("fading_nonincreasing_fraction", fading.nonincreasing_fraction);
    out.metric("fading_decay_ratio", fading.decay_ratio);
    out.metric("test_nrmse", test_nrmse);
    out.metric("baseline_nrmse", baseline_nrmse);
    out.metric("nrmse_ratio", test_nrmse / baseline_nrmse);
    out.metric("best_constant_nrmse", best_constant_nrmse);
    out.metric("nrmse_ratio_vs_best_constant", test_nrmse / best_constant_nrmse);
    out.metric("max_norm_drift", run.max_norm_drift);
    let norm_ok = run.max_norm_drift < NORM_DRIFT_TOLERANCE;
    out.check("norm_conservation", norm_ok);
    if !norm_ok {
        out.diff.push(serde_json::json!({
            "check": "norm_conservation",
            "max_norm_drift": run.max_norm_drift,
            "tolerance": NORM_DRIFT_TOLERANCE,
        }));
    }
    Ok(out)
}

#[derive(Serialize)]
struct SolveReport {
    n: usize,
    decision: bool,
    count: u64,
    iterations: usize,
    trace_hash: String,
    decision_trace_hash: String,
    brute_force_decision: bool,
    brute_force_count: u64,
}

pub(crate) fn cmd_solve(p: &SolveParams, ctx: &RunContext) -> Result<Outcome> {
    let f = match (&p.cnf, &p.truth_table) {
        (Some(path), None) => OracleFunction::from_instance(&SatInstance::from_dimacs_file(path)?)?,
        (None, Some(path)) => OracleFunction::from_truth_table_file(path)?,
        _ => return Err(field_error("solve", "give exactly one of `cnf` and `truth_table`")),
    };
    let decision_run = trace_np_decision(&f)?;
    let count_run = trace_sharp_p_count(&f)?;
    let (bf_decision, bf_count) = brute_force(&f);
    let decision = decision_run.result != 0;
    let count = count_run.result;

    let report = SolveReport {
        n: f.n(),
        decision,
        count,
        iterations: count_run.iterations(),
        trace_hash: count_run.trace_hash(),
        decision_trace_hash: decision_run.trace_hash(),
        brute_force_decision: bf_decision,
        brute_force_count: bf_count,
    };
    ctx.write_json("solve.json", "solve", &report)?;
    let pre = ctx.preamble(Command::Solve);
    write_csv(
        &ctx.path("true_counts.csv"),
        &pre,
        &["iteration".into(), "decision_true_count".into(), "count_true_count".into()],
        decision_run
            .true_counts
            .iter()
            .zip(&count_run.true_counts)
            .enumerate()
            .map(|(k, (d, c))| vec![k as f64, *d as f64, *c as f64]),
    )?;

    let mut out = Outcome::default();
    out.artifact("solve.json");
    out.artifact("true_counts.csv");
    out.metric("n", f.n() as f64);
    out.metric("decision", bool_metric(decision));
    out.metric("count", count as f64);
    out.metric("iterations", count_run.iterations() as f64);
    out.check("decision_matches_brute_force", decision == bf_decision);
    out.check("count_matches_brute_force", count == bf_count);
    if decision != bf_decision {
        out.diff.push(serde_json::json!({
            "quantity": "decision", "algorithm": decision, "brute_force": bf_decision,
        }));
    }
    if count != bf_count {
        out.diff.push(serde_json::json!({
            "quantity": "count", "algorithm": count, "brute_force": bf_count,
        }));
    }
    Ok(out)
}

pub(crate) fn cmd_learn(p: &LearnParams, ctx: &RunContext) -> Result<Outcome> {
    let channels = match p.patterns.first() {
        Some(first) if !first.is_empty() => first.len(),
        _ => return Err(field_error("learn.patterns", "need at least one nonempty pattern")),
    };
    if p.patterns.iter().any(|q| q.len() != channels) {
        return Err(field_error("learn.patterns", "patterns have different lengths"));
    }
    if p.stream.is_empty() {
        return Err(field_error("learn.stream", "empty stream"));
    }
    if let Some(k) = p.stream.iter().find(|&&k| k >= p.patterns.len()) {
        return Err(field_error("learn.stream", format!("pattern index {k} out of range")));
    }
    if p.pattern_length < 2 {
        return Err(field_error("learn.pattern_length", "need at least 2 samples"));
    }
    let graph = build_reservoir(p.nodes, channels, p.connectivity, derive_seed(ctx.seed, "graph", 0))
        .map_err(|e| field_error("learn", e))?;
    let signals = p
        .stream
        .iter()
        .map(|&k| InputSignal::constant(p.pattern_length, &p.patterns[k]))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| field_error("learn.patterns", e))?;
    let mut net = ContextNetwork::new(p.nodes, p.vigilance, p.art_learning_rate)
        .map_err(|e| field_error("learn.vigilance", e))?;
    let liquid = LiquidConfig::default().with_leak(p.leak);
    let session = unsupervised_session(&graph, &signals, &mut net, &p.hebbian, p.epochs, &liquid)
        .map_err(|e| match e {
            QlsmError::Config(m) => field_error("learn.hebbian", m),
            other => other,
        })?;

    let pre = ctx.preamble(Command::Learn);
    write_session_csv(&ctx.path("learn.csv"), &pre, p.nodes, &session.log)?;
    ctx.write_json("graph_initial.json", "graph", &graph)?;
    ctx.write_json("graph_final.json", "graph", &session.graph)?;

    let cap = p.hebbian.weight_cap;
    let max_abs = session
        .log
        .iter()
        .flat_map(|s| s.weights.iter())
        .fold(0.0f64, |m, w| m.max(w.abs()));
    let within_cap = session.log.iter().all(|s| s.weights.iter().all(|w| w.abs() <= cap));
    let unchanged = session.graph == graph;

    let mut out = Outcome::default();
    out.artifact("learn.csv");
    out.artifact("graph_initial.json");
    out.artifact("graph_final.json");
    out.metric("steps", session.log.len() as f64);
    out.metric("categories_discovered", session.categories_discovered as f64);
    out.metric(
        "reinforcements",
        session.log.iter().map(|s| s.reinforced.len()).sum::<usize>() as f64,
    );
    out.metric("max_abs_weight", max_abs);
    out.metric("graph_unchanged", bool_metric(unchanged));
    out.check("weights_within_cap", within_cap);
    if p.epochs == 0 {
        out.check("zero_epochs_leave_graph_unchanged", unchanged);
    }
    if !within_cap {
        out.diff.push(serde_json::json!({
            "check": "weights_within_cap", "cap": cap, "max_abs_weight": max_abs,
        }));
    }
    if p.epochs == 0 && !unchanged {
        out.diff.push(serde_json::json!({ "check": "zero_epochs_leave_graph_unchanged" }));
    }
    Ok(out)
}
