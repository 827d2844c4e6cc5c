use serde::{Deserialize, Serialize};

use super::liquid::LiquidState;
use crate::error::{QlsmError, Result};
use crate::hashing::sha256_hex;

/// Lags used by [`FilterBank::default_bank`].
pub const DEFAULT_LAGS: [usize; 5] = [0, 1, 2, 3, 4];

/// Reads `⟨Z⟩` of each listed node at each listed lag, node-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterDescriptor {
    pub nodes: Vec<usize>,
    pub lags: Vec<usize>,
}

impl FilterDescriptor {
    pub fn new(nodes: Vec<usize>, lags: Vec<usize>) -> Self {
        Self { nodes, lags }
    }

    pub fn output_len(&self) -> usize {
        self.nodes.len() * self.lags.len()
    }

    pub fn max_lag(&self) -> usize {
        self.lags.iter().copied().max().unwrap_or(0)
    }

    /// Output at trajectory index `at`.
    pub fn apply_at(&self, trajectory: &[LiquidState], at: usize) -> Result<Vec<f64>> {
        if at >= trajectory.len() {
            return Err(QlsmError::Index(format!(
                "time index {at} beyond trajectory of length {}",
                trajectory.len()
            )));
        }
        let mut out = Vec::with_capacity(self.output_len());
        for &node in &self.nodes {
            for &lag in &self.lags {
                if lag > at {
                    return Err(QlsmError::Index(format!(
                        "lag {lag} reaches before the start of the trajectory (index {at})"
                    )));
                }
                let state = &trajectory[at - lag];
                let z = state.node_expectations.get(node).ok_or_else(|| {
                    QlsmError::Index(format!(
                        "node {node} not in liquid state of size {}",
                        state.node_expectations.len()
                    ))
                })?;
                out.push(*z);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterBank {
    pub filters: Vec<FilterDescriptor>,
}

impl FilterBank {
    /// Checks every descriptor against a reservoir of `num_nodes` nodes.
    pub fn new(filters: Vec<FilterDescriptor>, num_nodes: usize) -> Result<Self> {
        if filters.is_empty() {
            return Err(QlsmError::Config("filter bank is empty".into()));
        }
        for (k, f) in filters.iter().enumerate() {
            if f.nodes.is_empty() || f.lags.is_empty() {
                return Err(QlsmError::Config(format!("filter {k} has no nodes or no lags")));
            }
            if let Some(&node) = f.nodes.iter().find(|&&n| n >= num_nodes) {
                return Err(QlsmError::Index(format!(
                    "filter {k} references node {node} of a {num_nodes}-node reservoir"
                )));
            }
        }
        Ok(Self { filters })
    }

    /// One filter per node reading lags `0..=4`.
    pub fn default_bank(num_nodes: usize) -> Self {
        Self {
            filters: (0..num_nodes)
                .map(|i| FilterDescriptor::new(vec![i], DEFAULT_LAGS.to_vec()))
                .collect(),
        }
    }

    pub fn output_len(&self) -> usize {
        self.filters.iter().map(FilterDescriptor::output_len).sum()
    }

    pub fn max_lag(&self) -> usize {
        self.filters.iter().map(FilterDescriptor::max_lag).max().unwrap_or(0)
    }

    /// Hex SHA-256 of the bank's JSON form.
    pub fn descriptor_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("filter bank serializes");
        sha256_hex(&json)
    }

    /// Concatenated filter outputs at trajectory index `at`.
    pub fn apply_at(&self, trajectory: &[LiquidState], at: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.output_len());
        for f in &self.filters {
            out.extend(f.apply_at(trajectory, at)?);
        }
        Ok(out)
    }
}

/// Concatenated filter outputs at the end of `trajectory`.
pub fn apply_filters(bank: &FilterBank, trajectory: &[LiquidState]) -> Result<Vec<f64>> {
    let last = trajectory
        .len()
        .checked_sub(1)
        .ok_or_else(|| QlsmError::Index("empty trajectory".into()))?;
    bank.apply_at(trajectory, last)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj() -> Vec<LiquidState> {
        (0..5)
            .map(|k| LiquidState {
                t: k as f64,
                node_expectations: vec![k as f64 * 0.1, -(k as f64) * 0.1],
            })
            .collect()
    }

    #[test]
    fn identity_filter_reads_last_state() {
        let bank = FilterBank::new(vec![FilterDescriptor::new(vec![0], vec![0])], 2).unwrap();
        assert_eq!(apply_filters(&bank, &traj()).unwrap(), vec![0.4]);
    }

    #[test]
    fn filters_concatenate() {
        let a = FilterDescriptor::new(vec![0], vec![0, 1]);
        let b = FilterDescriptor::new(vec![1], vec![2]);
        let both = FilterBank::new(vec![a.clone(), b.clone()], 2).unwrap();
        let mut expect = FilterBank::new(vec![a], 2).unwrap().apply_at(&traj(), 4).unwrap();
        expect.extend(FilterBank::new(vec![b], 2).unwrap().apply_at(&traj(), 4).unwrap());
        assert_eq!(apply_filters(&both, &traj()).unwrap(), expect);
    }

    #[test]
    fn lag_list_reads_recent_samples() {
        let bank = FilterBank::new(vec![FilterDescriptor::new(vec![1], vec![0, 1, 2])], 2).unwrap();
        let out = apply_filters(&bank, &traj()).unwrap();
        let expect = [-0.4, -0.3, -0.2];
        for (a, b) in out.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn lag_out_of_range() {
        let bank = FilterBank::new(vec![FilterDescriptor::new(vec![0], vec![5])], 2).unwrap();
        assert!(matches!(apply_filters(&bank, &traj()), Err(QlsmError::Index(_))));
    }

    #[test]
    fn bad_node_rejected() {
        assert!(matches!(
            FilterBank::new(vec![FilterDescriptor::new(vec![2], vec![0])], 2),
            Err(QlsmError::Index(_))
        ));
    }

    #[test]
    fn default_bank_shape() {
        let bank = FilterBank::default_bank(6);
        assert_eq!(bank.filters.len(), 6);
        assert_eq!(bank.output_len(), 30);
        assert_eq!(bank.max_lag(), 4);
        assert_eq!(bank.descriptor_hash(), FilterBank::default_bank(6).descriptor_hash());
    }
}
