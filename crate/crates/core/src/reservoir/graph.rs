use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QlsmError, Result};

/// Largest reservoir simulated exactly.
pub const MAX_RESERVOIR_NODES: usize = 10;

pub const DEFAULT_FIELD_SCALE: f64 = 3.0;

/// Smallest magnitude of a drawn coupling; keeps present edges distinguishable
/// from absent ones.
const MIN_COUPLING: f64 = 0.1;

/// Random ZZ coupling topology, per-node input weights and static local fields.
///
/// The reservoir Hamiltonian is
/// `Σ_{i<j} J_ij Z_i Z_j + Σ_i b_i Z_i + Σ_i h_i(t) X_i` with local fields `b_i`
/// and transverse drive `h_i(t) = field_scale · Σ_c input_weights[i][c]·u_c(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirGraph {
    pub n: usize,
    pub m: usize,
    pub connectivity: f64,
    pub field_scale: f64,
    pub seed: u64,
    /// Symmetric, zero diagonal, entries in `[-1, 1]`.
    pub couplings: Vec<Vec<f64>>,
    /// `n × m`.
    pub input_weights: Vec<Vec<f64>>,
    /// Static Z field on each node, entries in `[-1, 1]`.
    pub local_fields: Vec<f64>,
}

/// Draws a reservoir with `n` nodes and `m` input channels. Each node pair is
/// coupled independently with probability `connectivity`.
pub fn build_reservoir(n: usize, m: usize, connectivity: f64, seed: u64) -> Result<ReservoirGraph> {
    if n == 0 || n > MAX_RESERVOIR_NODES {
        return Err(QlsmError::Size(format!(
            "reservoir size {n} outside 1..={MAX_RESERVOIR_NODES}"
        )));
    }
    if m == 0 {
        return Err(QlsmError::Config("reservoir needs at least one input channel".into()));
    }
    if !(connectivity > 0.0 && connectivity <= 1.0) {
        return Err(QlsmError::Config(format!(
            "connectivity fraction {connectivity} outside (0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut couplings = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(connectivity) {
                let magnitude = rng.gen_range(MIN_COUPLING..=1.0);
                let w = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
                couplings[i][j] = w;
                couplings[j][i] = w;
            }
        }
    }
    let input_weights = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let local_fields = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Ok(ReservoirGraph {
        n,
        m,
        connectivity,
        field_scale: DEFAULT_FIELD_SCALE,
        seed,
        couplings,
        input_weights,
        local_fields,
    })
}

impl ReservoirGraph {
    pub fn with_field_scale(mut self, field_scale: f64) -> Self {
        self.field_scale = field_scale;
        self
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n)
            .map(|i| (i + 1..self.n).filter(|&j| self.couplings[i][j] != 0.0).count())
            .sum()
    }

    /// Fraction of node pairs that carry a coupling.
    pub fn density(&self) -> f64 {
        let pairs = self.n * (self.n - 1) / 2;
        if pairs == 0 {
            0.0
        } else {
            self.edge_count() as f64 / pairs as f64
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.couplings[i][j] == self.couplings[j][i]))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_RESERVOIR_NODES {
            return Err(QlsmError::Size(format!("reservoir size {} out of range", self.n)));
        }
        if self.couplings.len() != self.n || self.couplings.iter().any(|r| r.len() != self.n) {
            return Err(QlsmError::Size("coupling matrix is not n x n".into()));
        }
        if self.input_weights.len() != self.n || self.input_weights.iter().any(|r| r.len() != self.m) {
            return Err(QlsmError::Size("input weights are not n x m".into()));
        }
        if self.local_fields.len() != self.n {
            return Err(QlsmError::Size("local fields are not length n".into()));
        }
        if !self.is_symmetric() {
            return Err(QlsmError::Domain("coupling matrix is not symmetric".into()));
        }
        if (0..self.n).any(|i| self.couplings[i][i] != 0.0) {
            return Err(QlsmError::Domain("coupling matrix has a nonzero diagonal".into()));
        }
        if self.couplings.iter().flatten().any(|w| !(w.abs() <= 1.0)) {
            return Err(QlsmError::Domain("coupling magnitude exceeds 1".into()));
        }
        Ok(())
    }

    /// Transverse field on every node for the input sample `u`.
    pub fn drive(&self, u: &[f64]) -> Vec<f64> {
        self.input_weights
            .iter()
            .map(|row| self.field_scale * row.iter().zip(u).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    /// Diagonal of `Σ_{i<j} J_ij Z_i Z_j + Σ_i b_i Z_i` over the computational basis.
    pub fn zz_energies(&self) -> Vec<f64> {
        let dim = 1usize << self.n;
        (0..dim)
            .map(|b| {
                let z = |q: usize| if (b >> q) & 1 == 0 { 1.0 } else { -1.0 };
                let mut e = 0.0;
                for i in 0..self.n {
                    e += self.local_fields[i] * z(i);
                    for j in i + 1..self.n {
                        e += self.couplings[i][j] * z(i) * z(j);
                    }
                }
                e
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| QlsmError::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(text).map_err(|e| QlsmError::Config(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QlsmError::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_complete() {
        let g = build_reservoir(2, 1, 1.0, 9).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_ne!(g.couplings[0][1], 0.0);
        assert_eq!(g.couplings[0][1], g.couplings[1][0]);
        g.validate().unwrap();
    }

    #[test]
    fn seeded_determinism() {
        assert_eq!(build_reservoir(6, 2, 0.4, 77).unwrap(), build_reservoir(6, 2, 0.4, 77).unwrap());
        assert_ne!(build_reservoir(6, 2, 0.4, 77).unwrap(), build_reservoir(6, 2, 0.4, 78).unwrap());
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(build_reservoir(11, 1, 0.5, 0), Err(QlsmError::Size(_))));
        assert!(build_reservoir(4, 1, 0.0, 0).is_err());
        assert!(build_reservoir(4, 1, 1.5, 0).is_err());
        assert!(build_reservoir(4, 0, 0.5, 0).is_err());
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let g = build_reservoir(5, 2, 0.6, 3).unwrap();
        assert_eq!(ReservoirGraph::from_json(&g.to_json().unwrap()).unwrap(), g);
        let mut bad = g.clone();
        bad.couplings[0][1] = 0.5;
        bad.couplings[1][0] = -0.5;
        assert!(ReservoirGraph::from_json(&bad.to_json().unwrap()).is_err());
    }
}
