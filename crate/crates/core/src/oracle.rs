//! Flag-register algorithm for decision and counting problems.
//!
//! An oracle `f : {0,1}^n → {0,1}` is loaded into the flagged superposition
//! `2^(-n/2) Σ_i |i, f(i)⟩`. Iteration `k` pairs the components whose indices
//! differ only in bit `k` and rewrites both flags with a nonlinear pair rule:
//! the OR of the two flags for the decision variant, their sum for the
//! counting variant. After all `n` iterations every component carries the
//! same flag, which is read out directly.
//!
//! The pair rule is not unitary. It is simulated as a deterministic rewrite of
//! basis-component flags, at a cost exponential in `n`.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adiabatic::SatInstance;
use crate::error::{QlsmError, Result};

/// Largest index register for which the flagged state is prepared.
pub const MAX_ORACLE_VARS: usize = 16;
/// Largest register accepted by the exhaustive checker.
pub const MAX_BRUTE_FORCE_VARS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleFunction {
    n: usize,
    table: Vec<bool>,
}

impl OracleFunction {
    pub fn from_table(table: Vec<bool>) -> Result<Self> {
        let len = table.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QlsmError::Size(format!(
                "truth table length {len} is not 2^n with n >= 1"
            )));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_BRUTE_FORCE_VARS {
            return Err(QlsmError::Size(format!("{n} variables exceeds cap {MAX_BRUTE_FORCE_VARS}")));
        }
        Ok(Self { n, table })
    }

    /// Function whose value at `i` is bit `i` of `bits`; requires `n <= 6`.
    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        if n == 0 || n > 6 {
            return Err(QlsmError::Size(format!("from_bits supports 1..=6 variables, got {n}")));
        }
        Self::from_table((0..1usize << n).map(|i| (bits >> i) & 1 == 1).collect())
    }

    pub fn from_instance(inst: &SatInstance) -> Result<Self> {
        let n = inst.num_vars();
        if n > MAX_BRUTE_FORCE_VARS {
            return Err(QlsmError::Size(format!("{n} variables exceeds cap {MAX_BRUTE_FORCE_VARS}")));
        }
        Self::from_table((0..1usize << n).map(|a| inst.is_satisfied(a)).collect())
    }

    /// One `0` or `1` per non-blank line, `2^n` lines.
    pub fn parse_truth_table(text: &str, source: &Path) -> Result<Self> {
        let mut table = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "0" => table.push(false),
                "1" => table.push(true),
                other => {
                    return Err(QlsmError::parse(
                        source,
                        lineno + 1,
                        format!("expected 0 or 1, found `{other}`"),
                    ))
                }
            }
        }
        let len = table.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QlsmError::parse(
                source,
                0,
                format!("truth table has {len} lines, expected a power of two >= 2"),
            ));
        }
        Self::from_table(table)
    }

    pub fn from_truth_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QlsmError::io(path, e))?;
        Self::parse_truth_table(&text, path)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn eval(&self, i: usize) -> bool {
        self.table[i]
    }
}

/// Exhaustive `(OR_i f(i), Σ_i f(i))`.
pub fn brute_force(f: &OracleFunction) -> (bool, u64) {
    let count = f.table.iter().filter(|&&b| b).count() as u64;
    (count > 0, count)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagMode {
    /// One flag bit, combined by OR.
    Decision,
    /// Integer flag register, combined by addition.
    Counting,
}

/// Bits needed to hold every count in `0..=2^n`.
pub fn counting_register_width(n: usize) -> usize {
    let max = 1u64 << n;
    (u64::BITS - max.leading_zeros()) as usize
}

/// `2^(-n/2) Σ_i |i, flag_i⟩`. The index register and the flag register are
/// disjoint, so each index carries exactly one flag value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlaggedSuperposition {
    n: usize,
    mode: FlagMode,
    flags: Vec<u64>,
}

impl FlaggedSuperposition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> FlagMode {
        self.mode
    }

    pub fn flag_width(&self) -> usize {
        match self.mode {
            FlagMode::Decision => 1,
            FlagMode::Counting => counting_register_width(self.n),
        }
    }

    pub fn flags(&self) -> &[u64] {
        &self.flags
    }

    /// Common magnitude of every component amplitude.
    pub fn amplitude(&self) -> f64 {
        (2f64).powf(-(self.n as f64) / 2.0)
    }

    /// `(index, flag, amplitude)` for every component.
    pub fn components(&self) -> impl Iterator<Item = (usize, u64, f64)> + '_ {
        let amp = self.amplitude();
        self.flags.iter().enumerate().map(move |(i, &f)| (i, f, amp))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.flags.len() as f64 * self.amplitude().powi(2)
    }

    /// Number of components whose flag is nonzero.
    pub fn true_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f != 0).count()
    }

    /// The shared flag, if all components agree.
    pub fn uniform_flag(&self) -> Option<u64> {
        let first = *self.flags.first()?;
        self.flags.iter().all(|&f| f == first).then_some(first)
    }
}

fn prepare(f: &OracleFunction, mode: FlagMode) -> Result<FlaggedSuperposition> {
    if f.n > MAX_ORACLE_VARS {
        return Err(QlsmError::Size(format!(
            "{} variables exceeds flagged-state cap {MAX_ORACLE_VARS}",
            f.n
        )));
    }
    Ok(FlaggedSuperposition {
        n: f.n,
        mode,
        flags: f.table.iter().map(|&b| u64::from(b)).collect(),
    })
}

/// Decision-mode flagged state: component `(i, f(i))` for every `i`.
pub fn prepare_flagged_state(f: &OracleFunction) -> Result<FlaggedSuperposition> {
    prepare(f, FlagMode::Decision)
}

/// Counting-mode flagged state with an `n + 1`-bit integer register.
pub fn prepare_counting_state(f: &OracleFunction) -> Result<FlaggedSuperposition> {
    prepare(f, FlagMode::Counting)
}

/// Decision pair rule: both flags become the OR of the pair.
pub fn nonlinear_pair_map(flag_a: bool, flag_b: bool) -> (bool, bool) {
    let both = flag_a || flag_b;
    (both, both)
}

/// Counting pair rule: both flags become the sum of the pair.
pub fn counting_pair_map(flag_a: u64, flag_b: u64) -> (u64, u64) {
    let sum = flag_a + flag_b;
    (sum, sum)
}

/// Which transition a decision-mode pair undergoes, written as the flag on
/// the bit-0 partner followed by the flag on the bit-1 partner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCase {
    /// Flags (0, 1) become (1, 1).
    FlagOnHigh,
    /// Flags (1, 0) become (1, 1).
    FlagOnLow,
    /// Flags (0, 0) stay (0, 0).
    NoFlag,
    /// Flags (1, 1), the fixed point reached by the first two cases.
    Saturated,
}

impl PairCase {
    fn classify(low: u64, high: u64) -> Self {
        match (low != 0, high != 0) {
            (false, true) => PairCase::FlagOnHigh,
            (true, false) => PairCase::FlagOnLow,
            (false, false) => PairCase::NoFlag,
            (true, true) => PairCase::Saturated,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairTraceEntry {
    pub low_index: usize,
    pub high_index: usize,
    pub before: (u64, u64),
    pub after: (u64, u64),
    /// Present in decision mode only.
    pub case: Option<PairCase>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairRuleTrace {
    pub iteration: usize,
    pub qubit: usize,
    pub entries: Vec<PairTraceEntry>,
}

/// Applies the pair rule across bit `k` of the index register.
pub fn filter_iteration(
    state: &FlaggedSuperposition,
    k: usize,
    iteration: usize,
) -> Result<(FlaggedSuperposition, PairRuleTrace)> {
    if k >= state.n {
        return Err(QlsmError::Index(format!(
            "pair bit {k} out of range for {}-bit index register",
            state.n
        )));
    }
    let bit = 1usize << k;
    let mut flags = state.flags.clone();
    let mut entries = Vec::with_capacity(flags.len() / 2);
    for low in (0..flags.len()).filter(|i| i & bit == 0) {
        let high = low | bit;
        let before = (flags[low], flags[high]);
        let after = match state.mode {
            FlagMode::Decision => {
                let (a, b) = nonlinear_pair_map(before.0 != 0, before.1 != 0);
                (u64::from(a), u64::from(b))
            }
            FlagMode::Counting => counting_pair_map(before.0, before.1),
        };
        flags[low] = after.0;
        flags[high] = after.1;
        entries.push(PairTraceEntry {
            low_index: low,
            high_index: high,
            before,
            after,
            case: (state.mode == FlagMode::Decision).then(|| PairCase::classify(before.0, before.1)),
        });
    }
    Ok((
        FlaggedSuperposition {
            n: state.n,
            mode: state.mode,
            flags,
        },
        PairRuleTrace {
            iteration,
            qubit: k,
            entries,
        },
    ))
}

/// Full run of the algorithm with its trace.
#[derive(Clone, Debug, Serialize)]
pub struct AlgorithmRun {
    pub n: usize,
    pub mode: FlagMode,
    /// The common flag after the last iteration.
    pub result: u64,
    /// Components with a nonzero flag: before iteration 0, then after each.
    pub true_counts: Vec<usize>,
    pub traces: Vec<PairRuleTrace>,
    pub final_flags: Vec<u64>,
}

impl AlgorithmRun {
    pub fn iterations(&self) -> usize {
        self.traces.len()
    }

    /// SHA-256 over the before/after flags of every traced pair, hex encoded.
    pub fn trace_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.traces {
            hasher.update((t.iteration as u64).to_le_bytes());
            hasher.update((t.qubit as u64).to_le_bytes());
            for e in &t.entries {
                for v in [
                    e.low_index as u64,
                    e.high_index as u64,
                    e.before.0,
                    e.before.1,
                    e.after.0,
                    e.after.1,
                ] {
                    hasher.update(v.to_le_bytes());
                }
            }
        }
        crate::hashing::hex(&hasher.finalize())
    }
}

/// Runs the pair-rule iterations over the given bit order and reads the
/// terminal flag. Fails if the flags disagree after the last iteration.
pub fn run_with_order(initial: FlaggedSuperposition, order: &[usize]) -> Result<AlgorithmRun> {
    let n = initial.n;
    let mut seen = vec![false; n];
    for &k in order {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(QlsmError::Config(format!(
                "iteration order {order:?} is not a permutation of 0..{n}"
            )));
        }
    }
    if order.len() != n {
        return Err(QlsmError::Config(format!(
            "iteration order {order:?} is not a permutation of 0..{n}"
        )));
    }
    let mode = initial.mode;
    let mut state = initial;
    let mut true_counts = vec![state.true_count()];
    let mut traces = Vec::with_capacity(n);
    for (iteration, &k) in order.iter().enumerate() {
        let (next, trace) = filter_iteration(&state, k, iteration)?;
        true_counts.push(next.true_count());
        traces.push(trace);
        state = next;
    }
    let result = state.uniform_flag().ok_or_else(|| {
        QlsmError::Internal("flags still differ after the final iteration".into())
    })?;
    Ok(AlgorithmRun {
        n,
        mode,
        result,
        true_counts,
        traces,
        final_flags: state.flags,
    })
}

pub fn trace_np_decision(f: &OracleFunction) -> Result<AlgorithmRun> {
    let order: Vec<usize> = (0..f.n).collect();
    run_with_order(prepare_flagged_state(f)?, &order)
}

pub fn trace_sharp_p_count(f: &OracleFunction) -> Result<AlgorithmRun> {
    let order: Vec<usize> = (0..f.n).collect();
    run_with_order(prepare_counting_state(f)?, &order)
}

/// Whether some input satisfies `f`.
pub fn run_np_decision(f: &OracleFunction) -> Result<bool> {
    Ok(trace_np_decision(f)?.result != 0)
}

/// Number of inputs satisfying `f`.
pub fn run_sharp_p_count(f: &OracleFunction) -> Result<u64> {
    Ok(trace_sharp_p_count(f)?.result)
}
