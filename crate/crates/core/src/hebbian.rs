//! Unsupervised adaptation of reservoir couplings.
//!
//! A fuzzy-ART style context network sorts liquid states into categories.
//! Each category owns signed links to the input nodes: positive toward nodes
//! active in its prototype, negative toward the rest. Hebbian updates are
//! applied only to node pairs that the current category links positively.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QlsmError, Result};
use crate::reservoir::{run_liquid, InputSignal, LiquidConfig, ReservoirGraph};

pub const DEFAULT_RATE: f64 = 0.05;
pub const DEFAULT_WEIGHT_CAP: f64 = 1.0;
pub const DEFAULT_DECAY: f64 = 0.001;
pub const DEFAULT_VIGILANCE: f64 = 0.9;
pub const DEFAULT_ART_LEARNING_RATE: f64 = 0.5;

/// Tie-breaking constant of the ART choice function.
const CHOICE_ALPHA: f64 = 1e-3;
/// Prototype level at or above which a node counts as active.
const ACTIVE_LEVEL: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextNetwork {
    dim: usize,
    vigilance: f64,
    learning_rate: f64,
    categories: Vec<Vec<f64>>,
    /// `context_links[category][input_node]`, each `+1` or `-1`.
    context_links: Vec<Vec<f64>>,
}

impl ContextNetwork {
    pub fn new(dim: usize, vigilance: f64, learning_rate: f64) -> Result<Self> {
        if dim == 0 {
            return Err(QlsmError::Config("context network needs dim >= 1".into()));
        }
        if !(vigilance > 0.0 && vigilance <= 1.0) {
            return Err(QlsmError::Config(format!("vigilance {vigilance} outside (0, 1]")));
        }
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(QlsmError::Config(format!("learning rate {learning_rate} outside (0, 1]")));
        }
        Ok(Self {
            dim,
            vigilance,
            learning_rate,
            categories: Vec::new(),
            context_links: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vigilance(&self) -> f64 {
        self.vigilance
    }

    pub fn categories(&self) -> &[Vec<f64>] {
        &self.categories
    }

    pub fn context_links(&self) -> &[Vec<f64>] {
        &self.context_links
    }

    pub fn num_categories(&self) -> usize {
        self.categories.len()
    }

    /// Input nodes positively linked from `category`.
    pub fn active_nodes(&self, category: usize) -> Result<Vec<bool>> {
        let links = self.context_links.get(category).ok_or_else(|| {
            QlsmError::Index(format!(
                "category {category} not in network with {} categories",
                self.categories.len()
            ))
        })?;
        Ok(links.iter().map(|&w| w > 0.0).collect())
    }

    fn refresh_links(&mut self, category: usize) {
        self.context_links[category] = self.categories[category]
            .iter()
            .map(|&w| if w >= ACTIVE_LEVEL { 1.0 } else { -1.0 })
            .collect();
    }
}

/// `|min(pattern, prototype)|₁ / |pattern|₁`; an all-zero pattern matches
/// everything.
pub fn match_score(pattern: &[f64], prototype: &[f64]) -> f64 {
    let norm: f64 = pattern.iter().sum();
    if norm == 0.0 {
        return 1.0;
    }
    pattern.iter().zip(prototype).map(|(p, w)| p.min(*w)).sum::<f64>() / norm
}

/// Assigns `pattern` to the best resonating category, creating one when none
/// passes the vigilance test, and moves the chosen prototype toward it.
pub fn art_categorize(net: &mut ContextNetwork, pattern: &[f64]) -> Result<usize> {
    if pattern.len() != net.dim {
        return Err(QlsmError::Size(format!(
            "pattern of length {} for network of dimension {}",
            pattern.len(),
            net.dim
        )));
    }
    if pattern.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(QlsmError::Domain("ART patterns must lie in [0, 1]".into()));
    }
    let mut order: Vec<(usize, f64)> = net
        .categories
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let overlap: f64 = pattern.iter().zip(w).map(|(p, w)| p.min(*w)).sum();
            (k, overlap / (CHOICE_ALPHA + w.iter().sum::<f64>()))
        })
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let chosen = order
        .iter()
        .map(|&(k, _)| k)
        .find(|&k| match_score(pattern, &net.categories[k]) >= net.vigilance);
    let category = match chosen {
        Some(k) => {
            let beta = net.learning_rate;
            for (w, p) in net.categories[k].iter_mut().zip(pattern) {
                *w += beta * (p - *w);
            }
            k
        }
        None => {
            net.categories.push(pattern.to_vec());
            net.context_links.push(Vec::new());
            net.categories.len() - 1
        }
    };
    net.refresh_links(category);
    Ok(category)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HebbianConfig {
    pub rate: f64,
    pub weight_cap: f64,
    pub decay: f64,
}

impl Default for HebbianConfig {
    fn default() -> Self {
        Self {
            rate: DEFAULT_RATE,
            weight_cap: DEFAULT_WEIGHT_CAP,
            decay: DEFAULT_DECAY,
        }
    }
}

impl HebbianConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(QlsmError::Config(format!("Hebbian rate {} outside (0, 1]", self.rate)));
        }
        if !(self.weight_cap > 0.0 && self.weight_cap.is_finite()) {
            return Err(QlsmError::Config(format!("weight cap {} must be positive", self.weight_cap)));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(QlsmError::Config(format!("decay {} outside [0, 1)", self.decay)));
        }
        Ok(())
    }
}

/// Outcome of one Hebbian step.
#[derive(Clone, Debug)]
pub struct HebbianStep {
    pub couplings: Vec<Vec<f64>>,
    /// Gated pairs `(i, j)`, `i < j`, that received a positive update.
    pub reinforced: Vec<(usize, usize)>,
}

/// Hebbian step restricted to pairs of `active` nodes.
///
/// Every coupling first decays by the factor `1 − decay`. For each gated pair
/// the two directed co-activations `η·pre_i·post_j` and `η·pre_j·post_i` are
/// formed; the larger in magnitude is added to both `w_ij` and `w_ji`, and the
/// result is clipped to `[−cap, cap]`.
pub fn hebbian_update_gated(
    couplings: &[Vec<f64>],
    pre: &[f64],
    post: &[f64],
    cfg: &HebbianConfig,
    active: &[bool],
) -> Result<HebbianStep> {
    cfg.validate()?;
    let n = couplings.len();
    if pre.len() != n || post.len() != n || active.len() != n || couplings.iter().any(|r| r.len() != n) {
        return Err(QlsmError::Size("activity, gate and coupling sizes differ".into()));
    }
    if pre.iter().chain(post).any(|a| !(-1.0..=1.0).contains(a)) {
        return Err(QlsmError::Domain("activities must lie in [-1, 1]".into()));
    }
    let mut out = couplings.to_vec();
    let mut reinforced = Vec::new();
    let cap = cfg.weight_cap;
    for i in 0..n {
        for j in i + 1..n {
            let mut w = (1.0 - cfg.decay) * couplings[i][j];
            if active[i] && active[j] {
                let forward = cfg.rate * pre[i] * post[j];
                let backward = cfg.rate * pre[j] * post[i];
                let delta = if forward.abs() >= backward.abs() { forward } else { backward };
                w += delta;
                if delta > 0.0 {
                    reinforced.push((i, j));
                }
            }
            let w = w.clamp(-cap, cap);
            out[i][j] = w;
            out[j][i] = w;
        }
        out[i][i] = 0.0;
    }
    Ok(HebbianStep {
        couplings: out,
        reinforced,
    })
}

/// Hebbian step gated by the nodes that `category` links positively.
pub fn hebbian_update(
    couplings: &[Vec<f64>],
    pre: &[f64],
    post: &[f64],
    cfg: &HebbianConfig,
    net: &ContextNetwork,
    category: usize,
) -> Result<Vec<Vec<f64>>> {
    let active = net.active_nodes(category)?;
    Ok(hebbian_update_gated(couplings, pre, post, cfg, &active)?.couplings)
}

#[derive(Clone, Debug, Serialize)]
pub struct SessionStep {
    pub step: usize,
    pub epoch: usize,
    pub signal: usize,
    pub category: usize,
    pub reinforced: Vec<(usize, usize)>,
    /// Upper-triangle couplings after the step, row-major.
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SessionResult {
    pub graph: ReservoirGraph,
    pub log: Vec<SessionStep>,
    pub categories_discovered: usize,
}

fn upper_triangle(c: &[Vec<f64>]) -> Vec<f64> {
    let n = c.len();
    (0..n).flat_map(|i| (i + 1..n).map(move |j| c[i][j])).collect()
}

/// Runs the reservoir over every signal for `epochs` passes and adapts its
/// couplings step by step.
///
/// At each grid point after `t = 0`, the liquid state `z` is rescaled to
/// `(z + 1) / 2` and categorized. The presynaptic activity is the input drive
/// `tanh(h_i)` on each node and the postsynaptic activity is `z`. A signal's
/// trajectory is computed with the couplings in force when it starts.
pub fn unsupervised_session(
    graph: &ReservoirGraph,
    signals: &[InputSignal],
    net: &mut ContextNetwork,
    cfg: &HebbianConfig,
    epochs: usize,
    liquid: &LiquidConfig,
) -> Result<SessionResult> {
    cfg.validate()?;
    if cfg.weight_cap > 1.0 {
        return Err(QlsmError::Config(format!(
            "weight cap {} exceeds the reservoir coupling range",
            cfg.weight_cap
        )));
    }
    if net.dim() != graph.n {
        return Err(QlsmError::Size(format!(
            "context network has dimension {}, reservoir has {} nodes",
            net.dim(),
            graph.n
        )));
    }
    let mut graph = graph.clone();
    let mut log = Vec::new();
    let mut step = 0;
    for epoch in 0..epochs {
        for (s, u) in signals.iter().enumerate() {
            let traj = run_liquid(&graph, u, u.duration(), liquid)?;
            for (t, state) in traj.iter().enumerate().skip(1) {
                let pattern: Vec<f64> = state
                    .node_expectations
                    .iter()
                    .map(|z| ((z + 1.0) / 2.0).clamp(0.0, 1.0))
                    .collect();
                let category = art_categorize(net, &pattern)?;
                let pre: Vec<f64> = graph.drive(u.sample(t)).iter().map(|h| h.tanh()).collect();
                let active = net.active_nodes(category)?;
                let update =
                    hebbian_update_gated(&graph.couplings, &pre, &state.node_expectations, cfg, &active)?;
                graph.couplings = update.couplings;
                log.push(SessionStep {
                    step,
                    epoch,
                    signal: s,
                    category,
                    reinforced: update.reinforced,
                    weights: upper_triangle(&graph.couplings),
                });
                step += 1;
            }
        }
    }
    Ok(SessionResult {
        graph,
        log,
        categories_discovered: net.num_categories(),
    })
}

/// Writes `step,category,w_0_1,w_0_2,…`.
pub fn write_session_csv(path: &Path, preamble: &[String], n: usize, log: &[SessionStep]) -> Result<()> {
    let mut header = vec!["step".to_string(), "category".to_string()];
    header.extend((0..n).flat_map(|i| (i + 1..n).map(move |j| format!("w_{i}_{j}"))));
    let rows = log.iter().map(|s| {
        let mut row = vec![s.step.to_string(), s.category.to_string()];
        row.extend(s.weights.iter().map(|w| w.to_string()));
        row
    });
    crate::io::write_csv_records(path, preamble, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_active(n: usize) -> Vec<bool> {
        vec![true; n]
    }

    #[test]
    fn first_pattern_creates_category() {
        let mut net = ContextNetwork::new(3, 0.9, 0.5).unwrap();
        let p = [0.2, 0.9, 0.6];
        assert_eq!(art_categorize(&mut net, &p).unwrap(), 0);
        assert_eq!(net.categories()[0], p.to_vec());
        assert_eq!(net.context_links()[0], vec![-1.0, 1.0, 1.0]);
    }

    #[test]
    fn repeated_pattern_same_category() {
        let mut net = ContextNetwork::new(4, 0.9, 0.5).unwrap();
        let p = [0.1, 0.7, 0.3, 1.0];
        let a = art_categorize(&mut net, &p).unwrap();
        let b = art_categorize(&mut net, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(net.num_categories(), 1);
    }

    #[test]
    fn orthogonal_patterns_split() {
        let mut net = ContextNetwork::new(4, 0.9, 0.5).unwrap();
        let a = art_categorize(&mut net, &[1.0, 1.0, 0.0, 0.0]).unwrap();
        let b = art_categorize(&mut net, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_ne!(a, b);
        assert_eq!(net.num_categories(), 2);
    }

    #[test]
    fn pattern_checks() {
        let mut net = ContextNetwork::new(2, 0.9, 0.5).unwrap();
        assert!(matches!(art_categorize(&mut net, &[0.5]), Err(QlsmError::Size(_))));
        assert!(matches!(art_categorize(&mut net, &[0.5, 1.5]), Err(QlsmError::Domain(_))));
    }

    #[test]
    fn single_coactivation() {
        let cfg = HebbianConfig {
            rate: 0.1,
            weight_cap: 1.0,
            decay: 0.0,
        };
        let w = vec![vec![0.0; 2]; 2];
        let out = hebbian_update_gated(&w, &[1.0, 0.0], &[0.0, 1.0], &cfg, &all_active(2)).unwrap();
        assert!((out.couplings[0][1] - 0.1).abs() < 1e-15);
        assert_eq!(out.couplings[0][1], out.couplings[1][0]);
        assert_eq!(out.reinforced, vec![(0, 1)]);
    }

    #[test]
    fn silent_presynaptic_only_decays() {
        let cfg = HebbianConfig {
            rate: 0.1,
            weight_cap: 1.0,
            decay: 0.01,
        };
        let w = vec![vec![0.0, 0.5], vec![0.5, 0.0]];
        let out = hebbian_update_gated(&w, &[0.0, 0.0], &[0.3, 0.9], &cfg, &all_active(2)).unwrap();
        assert!((out.couplings[0][1] - 0.495).abs() < 1e-15);
    }

    #[test]
    fn gating_by_category() {
        let mut net = ContextNetwork::new(3, 0.9, 0.5).unwrap();
        let c = art_categorize(&mut net, &[1.0, 1.0, 0.0]).unwrap();
        let cfg = HebbianConfig {
            rate: 0.1,
            weight_cap: 1.0,
            decay: 0.0,
        };
        let w = vec![vec![0.0; 3]; 3];
        let out = hebbian_update(&w, &[1.0; 3], &[1.0; 3], &cfg, &net, c).unwrap();
        assert!((out[0][1] - 0.1).abs() < 1e-15);
        assert_eq!(out[0][2], 0.0);
        assert_eq!(out[1][2], 0.0);
        assert!(hebbian_update(&w, &[1.0; 3], &[1.0; 3], &cfg, &net, 5).is_err());
    }

    #[test]
    fn saturates_at_cap() {
        let cfg = HebbianConfig {
            rate: 0.1,
            weight_cap: 1.0,
            decay: 0.0,
        };
        let mut w = vec![vec![0.0; 2]; 2];
        for _ in 0..1000 {
            w = hebbian_update_gated(&w, &[1.0, 1.0], &[1.0, 1.0], &cfg, &all_active(2))
                .unwrap()
                .couplings;
        }
        assert_eq!(w[0][1], 1.0);
        assert_eq!(w[1][0], 1.0);
    }

    #[test]
    fn config_validation() {
        let bad = HebbianConfig {
            rate: 0.0,
            ..HebbianConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = HebbianConfig {
            decay: 1.0,
            ..HebbianConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(ContextNetwork::new(2, 0.0, 0.5).is_err());
        assert!(ContextNetwork::new(2, 0.5, 1.5).is_err());
    }
}
