use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{QlsmError, Result};

pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_BOUND: f64 = 1.0;
pub const DEFAULT_LIPSCHITZ: f64 = 10.0;

/// Slack added to the discrete Lipschitz bound.
const LIPSCHITZ_SLACK: f64 = 1e-12;

/// Multichannel input sampled on a uniform grid `t_i = i·dt`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputSignal {
    dt: f64,
    bound: f64,
    lipschitz: f64,
    /// `samples[i][channel]`.
    samples: Vec<Vec<f64>>,
}

impl InputSignal {
    /// Builds a signal; does not check membership in the input domain (see
    /// [`validate_input`]).
    pub fn new(dt: f64, bound: f64, lipschitz: f64, samples: Vec<Vec<f64>>) -> Result<Self> {
        for (name, v) in [("dt", dt), ("bound K", bound), ("lipschitz K'", lipschitz)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QlsmError::Config(format!("{name} = {v} must be positive")));
            }
        }
        let channels = samples.first().map(Vec::len).unwrap_or(0);
        if channels == 0 {
            return Err(QlsmError::Config("signal needs at least one sample and one channel".into()));
        }
        if let Some(i) = samples.iter().position(|s| s.len() != channels) {
            return Err(QlsmError::Size(format!(
                "sample {i} has {} channels, expected {channels}",
                samples[i].len()
            )));
        }
        Ok(Self {
            dt,
            bound,
            lipschitz,
            samples,
        })
    }

    /// Signal with the default grid and domain constants.
    pub fn with_defaults(samples: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(DEFAULT_DT, DEFAULT_BOUND, DEFAULT_LIPSCHITZ, samples)
    }

    pub fn constant(len: usize, values: &[f64]) -> Result<Self> {
        Self::with_defaults(vec![values.to_vec(); len])
    }

    /// Same grid and constants, different samples.
    pub fn with_samples(&self, samples: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.dt, self.bound, self.lipschitz, samples)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn channels(&self) -> usize {
        self.samples[0].len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of the last sample.
    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    /// Largest per-sample change allowed by the Lipschitz constant.
    pub fn max_step(&self) -> f64 {
        self.lipschitz * self.dt
    }

    /// Reads `t,ch0,ch1,…` CSV. The grid spacing is taken from the `t`
    /// column and must be uniform.
    pub fn from_csv(path: &Path, bound: f64, lipschitz: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| QlsmError::parse(path, 0, e.to_string()))?;
        let headers = reader
            .headers()
            .map_err(|e| QlsmError::parse(path, 1, e.to_string()))?
            .clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(QlsmError::parse(path, 1, "expected header `t,ch0,...`"));
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let line = row + 2;
            let record = record.map_err(|e| QlsmError::parse(path, line, e.to_string()))?;
            let values: Vec<f64> = record
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| QlsmError::parse(path, line, e.to_string()))?;
            if values.len() != headers.len() {
                return Err(QlsmError::parse(path, line, "wrong number of fields"));
            }
            times.push(values[0]);
            samples.push(values[1..].to_vec());
        }
        if times.len() < 2 {
            return Err(QlsmError::parse(path, 0, "need at least two samples"));
        }
        let dt = times[1] - times[0];
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 {
                return Err(QlsmError::parse(path, i + 3, "non-uniform time grid"));
            }
        }
        Self::new(dt, bound, lipschitz, samples)
    }

    pub fn write_csv(&self, path: &Path, preamble: &[String]) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((0..self.channels()).map(|c| format!("ch{c}")));
        let rows = self.samples.iter().enumerate().map(|(i, s)| {
            let mut row = vec![i as f64 * self.dt];
            row.extend_from_slice(s);
            row
        });
        crate::io::write_csv(path, preamble, &header, rows)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundViolation {
    pub sample: usize,
    pub channel: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzViolation {
    /// Index of the later sample of the offending pair.
    pub sample: usize,
    pub channel: usize,
    pub jump: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub bound_violations: Vec<BoundViolation>,
    pub lipschitz_violations: Vec<LipschitzViolation>,
}

impl ValidityReport {
    pub fn first_offending_sample(&self) -> Option<usize> {
        self.bound_violations
            .iter()
            .map(|v| v.sample)
            .chain(self.lipschitz_violations.iter().map(|v| v.sample))
            .min()
    }

    /// Domain error naming the first offending sample, if any.
    pub fn into_result(self) -> Result<()> {
        match self.first_offending_sample() {
            None => Ok(()),
            Some(i) => Err(QlsmError::Domain(format!(
                "input signal leaves the input domain at sample {i} ({} bound, {} Lipschitz violations)",
                self.bound_violations.len(),
                self.lipschitz_violations.len()
            ))),
        }
    }
}

/// Checks `|u| ≤ K` on every sample and `|u(t_{i+1}) − u(t_i)| ≤ K'·dt` on
/// every step, per channel.
pub fn validate_input(u: &InputSignal) -> ValidityReport {
    let mut bound_violations = Vec::new();
    let mut lipschitz_violations = Vec::new();
    let limit = u.max_step() + LIPSCHITZ_SLACK;
    for (i, sample) in u.samples.iter().enumerate() {
        for (c, &x) in sample.iter().enumerate() {
            if !(x.abs() <= u.bound) {
                bound_violations.push(BoundViolation {
                    sample: i,
                    channel: c,
                    value: x,
                });
            }
            if i > 0 {
                let jump = (x - u.samples[i - 1][c]).abs();
                if !(jump <= limit) {
                    lipschitz_violations.push(LipschitzViolation {
                        sample: i,
                        channel: c,
                        jump,
                        limit: u.max_step(),
                    });
                }
            }
        }
    }
    ValidityReport {
        valid: bound_violations.is_empty() && lipschitz_violations.is_empty(),
        bound_violations,
        lipschitz_violations,
    }
}

fn walk_step<R: Rng + ?Sized>(x: f64, max_step: f64, bound: f64, rng: &mut R) -> f64 {
    (x + rng.gen_range(-max_step..=max_step)).clamp(-bound, bound)
}

/// Clamped random walk starting uniformly in `[-K, K]`. Steps are drawn from
/// `±step_fraction·K'·dt`, so the result always lies in the input domain.
pub fn random_walk<R: Rng + ?Sized>(
    len: usize,
    channels: usize,
    step_fraction: f64,
    rng: &mut R,
) -> Result<InputSignal> {
    if len == 0 || channels == 0 {
        return Err(QlsmError::Config("random walk needs len >= 1 and channels >= 1".into()));
    }
    let max_step = DEFAULT_LIPSCHITZ * DEFAULT_DT * step_fraction.clamp(0.0, 1.0);
    let mut x: Vec<f64> = (0..channels)
        .map(|_| rng.gen_range(-DEFAULT_BOUND..=DEFAULT_BOUND))
        .collect();
    let mut samples = Vec::with_capacity(len);
    samples.push(x.clone());
    for _ in 1..len {
        for xc in x.iter_mut() {
            *xc = walk_step(*xc, max_step, DEFAULT_BOUND, rng);
        }
        samples.push(x.clone());
    }
    InputSignal::with_defaults(samples)
}

/// Replaces samples `0..keep_from` with a fresh backward random walk ending
/// next to `u[keep_from]`, keeping the signal inside the input domain.
pub fn rewrite_prefix<R: Rng + ?Sized>(
    u: &InputSignal,
    keep_from: usize,
    step_fraction: f64,
    rng: &mut R,
) -> Result<InputSignal> {
    if keep_from >= u.len() {
        return Err(QlsmError::Index(format!(
            "prefix end {keep_from} beyond signal length {}",
            u.len()
        )));
    }
    let max_step = u.max_step() * step_fraction.clamp(0.0, 1.0);
    let mut samples = u.samples.clone();
    for i in (0..keep_from).rev() {
        for c in 0..u.channels() {
            samples[i][c] = walk_step(samples[i + 1][c], max_step, u.bound, rng);
        }
    }
    u.with_samples(samples)
}
