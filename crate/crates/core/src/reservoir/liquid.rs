use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::graph::ReservoirGraph;
use super::signal::{validate_input, InputSignal};
use crate::error::{QlsmError, Result};
use crate::statevec::{uniform_superposition, StateVector};

pub const DEFAULT_LEAK: f64 = 0.1;
pub const DEFAULT_SUBSTEPS: usize = 4;

/// Branches whose mixture weight drops below this are discarded.
const BRANCH_WEIGHT_CUTOFF: f64 = 1e-15;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|0…0⟩`, every node expectation `+1`.
    #[default]
    Zero,
    /// Uniform superposition, every node expectation `0`.
    Uniform,
}

/// How the liquid is integrated and read.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiquidConfig {
    /// Per-`dt` mixing weight toward the uniform superposition, in `[0, 1]`.
    pub leak: f64,
    /// Strang-splitting substeps per `dt`.
    pub substeps: usize,
    pub initial: InitialState,
}

impl Default for LiquidConfig {
    fn default() -> Self {
        Self {
            leak: DEFAULT_LEAK,
            substeps: DEFAULT_SUBSTEPS,
            initial: InitialState::Zero,
        }
    }
}

impl LiquidConfig {
    pub fn with_leak(mut self, leak: f64) -> Self {
        self.leak = leak;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.leak) {
            return Err(QlsmError::Config(format!("leak {} outside [0, 1]", self.leak)));
        }
        if self.substeps == 0 {
            return Err(QlsmError::Config("substeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-node `⟨Z⟩` at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiquidState {
    pub t: f64,
    pub node_expectations: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LiquidRun {
    pub states: Vec<LiquidState>,
    /// Largest `|‖ψ‖² − 1|` seen on any branch.
    pub max_norm_drift: f64,
}

struct Branch {
    weight: f64,
    state: StateVector,
}

/// Drives the reservoir with `u` over `[0, horizon]` and records the node
/// expectations at every grid point, starting with `t = 0`.
///
/// Each `dt` step evolves under `H = Σ J_ij Z_i Z_j + Σ b_i Z_i + Σ_i h_i X_i`, with
/// `h_i` taken from the mean of the two bracketing input samples, using
/// `substeps` Strang splits `e^{-iH_zz τ/2} e^{-iH_x τ} e^{-iH_zz τ/2}`.
///
/// After each step the liquid is mixed toward the uniform superposition with
/// weight `leak`. The mixture is never formed: expectations are linear, so the
/// run keeps one pure branch per reset time and sums their weighted
/// expectations.
pub fn run_liquid(
    graph: &ReservoirGraph,
    u: &InputSignal,
    horizon: f64,
    cfg: &LiquidConfig,
) -> Result<Vec<LiquidState>> {
    Ok(run_liquid_detailed(graph, u, horizon, cfg)?.states)
}

pub fn run_liquid_detailed(
    graph: &ReservoirGraph,
    u: &InputSignal,
    horizon: f64,
    cfg: &LiquidConfig,
) -> Result<LiquidRun> {
    graph.validate()?;
    cfg.validate()?;
    if u.channels() != graph.m {
        return Err(QlsmError::Size(format!(
            "signal has {} channels, reservoir expects {}",
            u.channels(),
            graph.m
        )));
    }
    validate_input(u).into_result()?;
    if !(horizon >= 0.0) || horizon > u.duration() + 1e-9 {
        return Err(QlsmError::Domain(format!(
            "horizon {horizon} outside the signal's support [0, {}]",
            u.duration()
        )));
    }
    let steps = (horizon / u.dt() + 1e-9).floor() as usize;
    let n = graph.n;
    let tau = u.dt() / cfg.substeps as f64;
    let half_phase: Vec<Complex64> = graph
        .zz_energies()
        .into_iter()
        .map(|e| Complex64::from_polar(1.0, -e * tau / 2.0))
        .collect();
    let fresh = uniform_superposition(n)?;
    let initial = match cfg.initial {
        InitialState::Zero => StateVector::zero(n)?,
        InitialState::Uniform => fresh.clone(),
    };

    let mut branches = vec![Branch {
        weight: 1.0,
        state: initial,
    }];
    let mut states = Vec::with_capacity(steps + 1);
    states.push(LiquidState {
        t: 0.0,
        node_expectations: expectations(&branches, n),
    });
    let mut max_norm_drift: f64 = 0.0;

    for i in 0..steps {
        let mid: Vec<f64> = u
            .sample(i)
            .iter()
            .zip(u.sample(i + 1))
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let angles: Vec<f64> = graph.drive(&mid).iter().map(|h| 2.0 * h * tau).collect();
        for b in branches.iter_mut() {
            for _ in 0..cfg.substeps {
                apply_phase(&mut b.state, &half_phase);
                for (q, &angle) in angles.iter().enumerate() {
                    if angle != 0.0 {
                        b.state.rotate_x_mut(q, angle);
                    }
                }
                apply_phase(&mut b.state, &half_phase);
            }
            max_norm_drift = max_norm_drift.max((b.state.norm_sqr() - 1.0).abs());
        }
        if cfg.leak > 0.0 {
            for b in branches.iter_mut() {
                b.weight *= 1.0 - cfg.leak;
            }
            branches.retain(|b| b.weight >= BRANCH_WEIGHT_CUTOFF);
            branches.push(Branch {
                weight: cfg.leak,
                state: fresh.clone(),
            });
        }
        states.push(LiquidState {
            t: (i + 1) as f64 * u.dt(),
            node_expectations: expectations(&branches, n),
        });
    }
    Ok(LiquidRun {
        states,
        max_norm_drift,
    })
}

fn apply_phase(state: &mut StateVector, phase: &[Complex64]) {
    for (a, p) in state.amplitudes_mut().iter_mut().zip(phase) {
        *a *= p;
    }
}

fn expectations(branches: &[Branch], n: usize) -> Vec<f64> {
    (0..n)
        .map(|q| {
            branches
                .iter()
                .map(|b| b.weight * b.state.expectation_z_unchecked(q))
                .sum::<f64>()
                .clamp(-1.0, 1.0)
        })
        .collect()
}

/// Writes `t,z0,z1,…`.
pub fn write_trajectory_csv(
    path: &std::path::Path,
    preamble: &[String],
    trajectory: &[LiquidState],
) -> Result<()> {
    let n = trajectory.first().map(|s| s.node_expectations.len()).unwrap_or(0);
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("z{i}")));
    let rows = trajectory.iter().map(|s| {
        let mut row = vec![s.t];
        row.extend_from_slice(&s.node_expectations);
        row
    });
    crate::io::write_csv(path, preamble, &header, rows)
}
