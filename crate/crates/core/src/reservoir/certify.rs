//! Empirical checks of the liquid's separation and fading-memory properties.
//!
//! Both are finite-sample statements about the trials actually run; neither
//! certifies the property for all inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::filters::FilterBank;
use super::graph::ReservoirGraph;
use super::liquid::{run_liquid, LiquidConfig};
use super::signal::{random_walk, rewrite_prefix, validate_input, InputSignal};
use crate::error::{QlsmError, Result};
use crate::hashing::derive_seed;

/// Fraction of adjacent window pairs that must not increase.
pub const MONOTONE_FRACTION: f64 = 0.9;
/// Largest allowed ratio of the divergence at the longest window to the
/// divergence at the shortest.
pub const DECAY_RATIO: f64 = 0.5;
/// Slack allowed when comparing adjacent mean divergences.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationWitness {
    pub filter: usize,
    pub node: usize,
    pub lag: usize,
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub separated: bool,
    pub threshold: f64,
    /// First filter (in bank order) whose outputs differ by more than the
    /// threshold, with its most-different component.
    pub witness: Option<SeparationWitness>,
    pub max_difference: f64,
}

/// Whether some filter distinguishes the liquid's response to `u` and `v`.
pub fn check_pointwise_separation(
    graph: &ReservoirGraph,
    bank: &FilterBank,
    u: &InputSignal,
    v: &InputSignal,
    threshold: f64,
    cfg: &LiquidConfig,
) -> Result<SeparationReport> {
    if u.len() != v.len() || u.channels() != v.channels() || u.dt() != v.dt() {
        return Err(QlsmError::Precondition("signals are sampled on different grids".into()));
    }
    if u.samples() == v.samples() {
        return Err(QlsmError::Precondition("signals are identical at every sample".into()));
    }
    validate_input(u).into_result()?;
    validate_input(v).into_result()?;
    let tu = run_liquid(graph, u, u.duration(), cfg)?;
    let tv = run_liquid(graph, v, v.duration(), cfg)?;
    let at = tu.len() - 1;

    let mut witness = None;
    let mut max_difference: f64 = 0.0;
    for (k, f) in bank.filters.iter().enumerate() {
        let fu = f.apply_at(&tu, at)?;
        let fv = f.apply_at(&tv, at)?;
        let (best, diff) = fu
            .iter()
            .zip(&fv)
            .map(|(a, b)| (a - b).abs())
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
        max_difference = max_difference.max(diff);
        if witness.is_none() && diff > threshold {
            let lags = f.lags.len();
            witness = Some(SeparationWitness {
                filter: k,
                node: f.nodes[best / lags],
                lag: f.lags[best % lags],
                difference: diff,
            });
        }
    }
    Ok(SeparationReport {
        separated: witness.is_some(),
        threshold,
        witness,
        max_difference,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationSweep {
    pub pairs: usize,
    pub separated: usize,
    pub pass_rate: f64,
    pub min_max_difference: f64,
}

/// Separation over `num_pairs` pairs of independent random-walk signals.
pub fn separation_sweep(
    graph: &ReservoirGraph,
    bank: &FilterBank,
    num_pairs: usize,
    len: usize,
    threshold: f64,
    cfg: &LiquidConfig,
    seed: u64,
) -> Result<SeparationSweep> {
    if num_pairs == 0 {
        return Err(QlsmError::Config("separation sweep needs at least one pair".into()));
    }
    let mut separated = 0;
    let mut min_max_difference = f64::INFINITY;
    for p in 0..num_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "separation", p as u64));
        let (u, v) = loop {
            let u = random_walk(len, graph.m, 1.0, &mut rng)?;
            let v = random_walk(len, graph.m, 1.0, &mut rng)?;
            if u.samples() != v.samples() {
                break (u, v);
            }
        };
        let report = check_pointwise_separation(graph, bank, &u, &v, threshold, cfg)?;
        separated += usize::from(report.separated);
        min_max_difference = min_max_difference.min(report.max_difference);
    }
    Ok(SeparationSweep {
        pairs: num_pairs,
        separated,
        pass_rate: separated as f64 / num_pairs as f64,
        min_max_difference,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FadingMemoryReport {
    /// Window lengths in samples.
    pub windows: Vec<usize>,
    pub mean_divergence: Vec<f64>,
    pub std_divergence: Vec<f64>,
    pub max_divergence: Vec<f64>,
    /// Fraction of adjacent windows whose mean divergence does not increase.
    pub nonincreasing_fraction: f64,
    /// Mean divergence at the longest window over that at the shortest.
    pub decay_ratio: f64,
    pub certified: bool,
}

/// Estimates how fast the liquid forgets.
///
/// Let `L` be the length of `base_signal` and `W_max` the longest window. Each
/// pair replaces the first `P = L − 1 − W_max` samples of `base_signal` with
/// two independent random histories; from sample `P` on the two signals agree.
/// The divergence for window `W` is the distance between the two filter
/// outputs at sample `P + W`, where the signals have agreed for the last
/// `W + 1` samples and differed before.
///
/// The curve is certified when at least [`MONOTONE_FRACTION`] of adjacent
/// windows are nonincreasing and the longest window's divergence is at most
/// [`DECAY_RATIO`] times the shortest's.
pub fn estimate_fading_memory(
    graph: &ReservoirGraph,
    bank: &FilterBank,
    base_signal: &InputSignal,
    num_pairs: usize,
    windows: &[usize],
    cfg: &LiquidConfig,
    seed: u64,
) -> Result<FadingMemoryReport> {
    if num_pairs < 10 {
        return Err(QlsmError::Config(format!("num_pairs = {num_pairs} must be >= 10")));
    }
    if windows.is_empty() || windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QlsmError::Config(format!("windows {windows:?} must be strictly increasing")));
    }
    let last = base_signal.len() - 1;
    let longest = *windows.last().expect("windows is nonempty");
    if longest > last {
        return Err(QlsmError::Config(format!(
            "window {longest} exceeds the trajectory ({} samples)",
            base_signal.len()
        )));
    }
    let history = last - longest;
    if bank.max_lag() > history + windows[0] {
        return Err(QlsmError::Config(format!(
            "filter lag {} reaches before the start of the trajectory at window {}",
            bank.max_lag(),
            windows[0]
        )));
    }
    validate_input(base_signal).into_result()?;

    // divs[window][pair]
    let mut divs = vec![Vec::with_capacity(num_pairs); windows.len()];
    for p in 0..num_pairs {
        let mut rng_u = ChaCha8Rng::seed_from_u64(derive_seed(seed, "fading-u", p as u64));
        let mut rng_v = ChaCha8Rng::seed_from_u64(derive_seed(seed, "fading-v", p as u64));
        let u = rewrite_prefix(base_signal, history, 1.0, &mut rng_u)?;
        let v = rewrite_prefix(base_signal, history, 1.0, &mut rng_v)?;
        let tu = run_liquid(graph, &u, u.duration(), cfg)?;
        let tv = run_liquid(graph, &v, v.duration(), cfg)?;
        for (wi, &w) in windows.iter().enumerate() {
            let fu = bank.apply_at(&tu, history + w)?;
            let fv = bank.apply_at(&tv, history + w)?;
            divs[wi].push(fu.iter().zip(&fv).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
        }
    }
    let mut mean_divergence = Vec::with_capacity(windows.len());
    let mut std_divergence = Vec::with_capacity(windows.len());
    let mut max_divergence = Vec::with_capacity(windows.len());
    for d in &divs {
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64;
        mean_divergence.push(mean);
        std_divergence.push(var.sqrt());
        max_divergence.push(d.iter().copied().fold(0.0, f64::max));
    }

    let adjacent = mean_divergence.len().saturating_sub(1);
    let nonincreasing = mean_divergence
        .windows(2)
        .filter(|w| w[1] <= w[0] + MONOTONE_SLACK)
        .count();
    let nonincreasing_fraction = if adjacent == 0 {
        1.0
    } else {
        nonincreasing as f64 / adjacent as f64
    };
    let first = mean_divergence[0];
    let final_mean = *mean_divergence.last().expect("windows is nonempty");
    let decay_ratio = if first > 0.0 {
        final_mean / first
    } else if final_mean == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(FadingMemoryReport {
        windows: windows.to_vec(),
        mean_divergence,
        std_divergence,
        max_divergence,
        nonincreasing_fraction,
        decay_ratio,
        certified: nonincreasing_fraction >= MONOTONE_FRACTION && decay_ratio <= DECAY_RATIO,
    })
}
