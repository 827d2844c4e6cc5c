//! Invariant suite behind `qlsm props`. Each check reports a pass flag and a
//! JSON detail; failures become the run's diff.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{field_error, PropsParams};
use super::{Outcome, RunContext};
use crate::adiabatic::{
    build_problem_hamiltonian, interpolate, spectrum, total_base, total_problem, eigen_residual,
    Literal, SatInstance,
};
use crate::error::Result;
use crate::hashing::derive_seed;
use crate::hebbian::{art_categorize, hebbian_update_gated, ContextNetwork, HebbianConfig};
use crate::oracle::{
    brute_force, counting_pair_map, nonlinear_pair_map, run_np_decision, run_sharp_p_count,
    OracleFunction,
};
use crate::readout::{train_readout, Split, TrainingSet};
use crate::reservoir::{build_reservoir, random_walk, run_liquid_detailed, LiquidConfig};
use crate::statevec::{uniform_superposition, StateVector};

#[derive(Serialize)]
struct PropCheck {
    name: &'static str,
    passed: bool,
    detail: Value,
}

fn rng_for(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label, 0))
}

/// Random 3-CNF (clause width `min(3, n)`) with distinct variables per clause.
pub(crate) fn random_cnf<R: Rng>(n: usize, clauses: usize, rng: &mut R) -> Result<SatInstance> {
    let width = n.min(3);
    let cs = (0..clauses)
        .map(|_| {
            let mut vars: Vec<usize> = Vec::with_capacity(width);
            while vars.len() < width {
                let v = rng.gen_range(0..n);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            vars.into_iter()
                .map(|v| if rng.gen_bool(0.5) { Literal::pos(v) } else { Literal::neg(v) })
                .collect()
        })
        .collect();
    SatInstance::new(n, cs)
}

fn statevec_norm(seed: u64) -> Result<PropCheck> {
    let mut rng = rng_for(seed, "props-statevec");
    let n = 5;
    let mut psi = uniform_superposition(n)?;
    for _ in 0..10_000 {
        let q = rng.gen_range(0..n);
        let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        psi = if rng.gen_bool(0.5) { psi.rotate_y(q, angle)? } else { psi.rotate_x(q, angle)? };
    }
    let drift = (psi.norm_sqr() - 1.0).abs();
    Ok(PropCheck {
        name: "statevec_norm_after_10000_rotations",
        passed: drift < 1e-9,
        detail: json!({ "drift": drift }),
    })
}

fn rotation_inverse(seed: u64, trials: usize) -> Result<PropCheck> {
    let mut rng = rng_for(seed, "props-inverse");
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let psi = StateVector::basis(3, rng.gen_range(0..8))?.rotate_y(1, 0.7)?;
        let q = rng.gen_range(0..3);
        let a = rng.gen_range(-3.0..3.0);
        let back = psi.rotate_y(q, a)?.rotate_y(q, -a)?;
        let diff = psi
            .amplitudes()
            .iter()
            .zip(back.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    Ok(PropCheck {
        name: "rotate_y_inverse",
        passed: worst < 1e-12,
        detail: json!({ "max_amplitude_error": worst }),
    })
}

fn oracle_exhaustive() -> Result<Vec<PropCheck>> {
    let mut decision_mismatch = Vec::new();
    let mut count_mismatch = Vec::new();
    for bits in 0..256u64 {
        let f = OracleFunction::from_bits(3, bits)?;
        let (d, c) = brute_force(&f);
        if run_np_decision(&f)? != d {
            decision_mismatch.push(bits);
        }
        if run_sharp_p_count(&f)? != c {
            count_mismatch.push(bits);
        }
    }
    Ok(vec![
        PropCheck {
            name: "np_decision_all_n3_functions",
            passed: decision_mismatch.is_empty(),
            detail: json!({ "mismatched_truth_tables": decision_mismatch }),
        },
        PropCheck {
            name: "sharp_p_count_all_n3_functions",
            passed: count_mismatch.is_empty(),
            detail: json!({ "mismatched_truth_tables": count_mismatch }),
        },
    ])
}

fn pair_maps() -> PropCheck {
    let mut bad = Vec::new();
    for a in [false, true] {
        for b in [false, true] {
            let once = nonlinear_pair_map(a, b);
            if nonlinear_pair_map(once.0, once.1) != once || once.0 != (a || b) {
                bad.push(json!(["decision", a, b]));
            }
        }
    }
    for a in 0..4u64 {
        for b in 0..4u64 {
            let (x, y) = counting_pair_map(a, b);
            if x != a + b || y != a + b {
                bad.push(json!(["counting", a, b]));
            }
        }
    }
    PropCheck {
        name: "pair_maps",
        passed: bad.is_empty(),
        detail: json!({ "violations": bad }),
    }
}

fn hamiltonian_assembly(seed: u64, trials: usize) -> Result<PropCheck> {
    let mut rng = rng_for(seed, "props-hamiltonian");
    let mut worst: f64 = 0.0;
    let mut endpoints_exact = true;
    for _ in 0..trials {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=8);
        let terms = build_problem_hamiltonian(&random_cnf(n, m, &mut rng)?)?;
        let hb = total_base(&terms)?;
        let hp = total_problem(&terms)?;
        for s in [0.0, 0.25, 0.5, 0.8, 1.0] {
            let h = interpolate(&terms, s)?;
            let dense = hb.matrix().map(|x| x * (1.0 - s)) + hp.matrix().map(|x| x * s);
            let diff = (h.matrix() - dense).iter().map(|x| x.norm()).fold(0.0, f64::max);
            worst = worst.max(diff);
        }
        endpoints_exact &= interpolate(&terms, 0.0)?.max_abs_diff(&hb) == 0.0
            && interpolate(&terms, 1.0)?.max_abs_diff(&hp) == 0.0;
    }
    Ok(PropCheck {
        name: "hamiltonian_assembly",
        passed: worst <= 1e-12 && endpoints_exact,
        detail: json!({ "max_elementwise_error": worst, "endpoints_exact": endpoints_exact }),
    })
}

fn spectrum_contract(seed: u64, trials: usize) -> Result<PropCheck> {
    let mut rng = rng_for(seed, "props-spectrum");
    let (mut sorted, mut residual, mut herm) = (true, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let n = rng.gen_range(1..=5);
        let terms = build_problem_hamiltonian(&random_cnf(n, rng.gen_range(1..=6), &mut rng)?)?;
        let s = rng.gen_range(0.0..=1.0);
        let h = interpolate(&terms, s)?;
        let snap = spectrum(&h, s)?;
        sorted &= snap.eigenvalues.windows(2).all(|w| w[0] <= w[1]);
        residual = residual.max(eigen_residual(&h, snap.eigenvalues[0], &snap.ground_state));
        herm = herm.max(h.hermiticity_residual());
    }
    Ok(PropCheck {
        name: "spectrum_contract",
        passed: sorted && residual < 1e-8 && herm < 1e-10,
        detail: json!({ "sorted": sorted, "max_eigen_residual": residual, "max_hermiticity_residual": herm }),
    })
}

fn liquid_norm(seed: u64) -> Result<PropCheck> {
    let mut rng = rng_for(seed, "props-liquid");
    let g = build_reservoir(4, 1, 0.7, derive_seed(seed, "props-graph", 0))?;
    let u = random_walk(2_001, 1, 1.0, &mut rng)?;
    let run = run_liquid_detailed(&g, &u, u.duration(), &LiquidConfig::default().with_leak(0.0))?;
    Ok(PropCheck {
        name: "liquid_norm_conservation",
        passed: run.max_norm_drift < 1e-6,
        detail: json!({ "max_norm_drift": run.max_norm_drift, "steps": u.len() - 1 }),
    })
}

fn hebbian_bounds(seed: u64) -> Result<PropCheck> {
    let mut rng = rng_for(seed, "props-hebbian");
    let n = 5;
    let cfg = HebbianConfig::default();
    let mut w = vec![vec![0.0; n]; n];
    let (mut within, mut symmetric) = (true, true);
    for _ in 0..10_000 {
        let pre: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let post: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let active: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
        w = hebbian_update_gated(&w, &pre, &post, &cfg, &active)?.couplings;
        within &= w.iter().flatten().all(|x| x.abs() <= cfg.weight_cap);
        symmetric &= (0..n).all(|i| (0..n).all(|j| w[i][j] == w[j][i]));
    }
    Ok(PropCheck {
        name: "hebbian_bounds_and_symmetry",
        passed: within && symmetric,
        detail: json!({ "within_cap": within, "symmetric": symmetric }),
    })
}

fn art_repeat(seed: u64, trials: usize) -> Result<PropCheck> {
    let mut rng = rng_for(seed, "props-art");
    let mut failures = 0;
    for _ in 0..trials {
        let mut net = ContextNetwork::new(6, 0.9, 0.5)?;
        let p: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let first = art_categorize(&mut net, &p)?;
        for _ in 0..5 {
            if art_categorize(&mut net, &p)? != first {
                failures += 1;
                break;
            }
        }
    }
    Ok(PropCheck {
        name: "art_repeated_pattern_same_category",
        passed: failures == 0,
        detail: json!({ "trials": trials, "failures": failures }),
    })
}

fn readout_optimality(seed: u64) -> Result<PropCheck> {
    let mut rng = rng_for(seed, "props-readout");
    let inputs: Vec<Vec<f64>> = (0..60).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let targets: Vec<f64> = inputs.iter().map(|x| x[0] - 0.5 * x[2] + rng.gen_range(-0.1..0.1)).collect();
    let data = TrainingSet::new(inputs, targets, Split::Train)?;
    let model = train_readout(&data, 1e-3)?;
    let best = model.objective(&data)?;
    let mut worse = 0;
    for k in 0..model.coefficients.len() {
        for eps in [-1e-3, 1e-3] {
            let mut m = model.clone();
            m.coefficients[k] += eps;
            if m.objective(&data)? < best - 1e-12 {
                worse += 1;
            }
        }
    }
    Ok(PropCheck {
        name: "ridge_local_optimality",
        passed: worse == 0,
        detail: json!({ "objective": best, "improving_perturbations": worse }),
    })
}

pub(crate) fn cmd_props(p: &PropsParams, ctx: &RunContext) -> Result<Outcome> {
    if p.trials == 0 {
        return Err(field_error("props.trials", "must be at least 1"));
    }
    let seed = ctx.seed;
    let mut checks = vec![
        statevec_norm(seed)?,
        rotation_inverse(seed, p.trials)?,
        pair_maps(),
        hamiltonian_assembly(seed, p.trials)?,
        spectrum_contract(seed, p.trials)?,
        liquid_norm(seed)?,
        hebbian_bounds(seed)?,
        art_repeat(seed, p.trials)?,
        readout_optimality(seed)?,
    ];
    checks.extend(oracle_exhaustive()?);
    ctx.write_json("props.json", "checks", &checks)?;

    let mut out = Outcome::default();
    out.artifact("props.json");
    out.metric("checks_run", checks.len() as f64);
    out.metric("checks_failed", checks.iter().filter(|c| !c.passed).count() as f64);
    for c in checks {
        out.check(c.name, c.passed);
        if !c.passed {
            out.diff.push(json!({ "check": c.name, "detail": c.detail }));
        }
    }
    Ok(out)
}
