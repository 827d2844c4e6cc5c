use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::hamiltonian::{interpolate, total_base, total_problem, ClauseTerm, Hamiltonian};
use crate::error::{QlsmError, Result};
use crate::statevec::StateVector;

/// Largest dimension accepted by full diagonalization.
pub const MAX_DIAG_DIM: usize = 1 << 12;

/// Minimum integrator steps per unit of schedule time.
pub const MIN_STEPS_PER_UNIT_TIME: f64 = 10.0;

/// Energies within this distance of the ground energy count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

/// Instantaneous spectrum at interpolation parameter `s`.
#[derive(Clone, Debug)]
pub struct SpectrumSnapshot {
    pub s: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub ground_state: StateVector,
}

impl SpectrumSnapshot {
    pub fn gap(&self) -> f64 {
        match self.eigenvalues.as_slice() {
            [e0, e1, ..] => (e1 - e0).max(0.0),
            _ => 0.0,
        }
    }
}

/// Full eigendecomposition with eigenvalues ascending and eigenvectors as
/// matching columns.
pub(crate) struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

pub(crate) fn eigensystem(h: &Hamiltonian) -> Result<Eigensystem> {
    let dim = h.dim();
    if dim > MAX_DIAG_DIM {
        return Err(QlsmError::Size(format!(
            "dimension {dim} exceeds diagonalization cap {MAX_DIAG_DIM}"
        )));
    }
    let eig = SymmetricEigen::new(h.matrix().clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigensystem { values, vectors })
}

/// Refines an approximate eigensystem with cyclic complex Jacobi sweeps on
/// `Vᴴ H V`. The QL iteration stops once off-diagonals are small relative to
/// neighbouring diagonal entries, which can leave eigenpair residuals near
/// 1e-7; starting from an almost-diagonal matrix, Jacobi converges
/// quadratically in one or two sweeps.
fn polish(h: &Hamiltonian, sys: Eigensystem) -> Eigensystem {
    let dim = h.dim();
    let mut v = sys.vectors;
    let mut a = v.adjoint() * h.matrix() * &v;
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for _ in 0..8 {
        let mut rotated = false;
        for p in 0..dim {
            for q in p + 1..dim {
                let b = a[(p, q)];
                if b.norm() <= 1e-17 * scale {
                    continue;
                }
                rotated = true;
                let phase = b / b.norm();
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * b.norm());
                let t = if tau == 0.0 { 1.0 } else { tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                // G = [[c, s], [-s·e^{-iφ}, c·e^{-iφ}]] on the (p, q) plane.
                let (gqp, gqq) = (-phase.conj() * sn, phase.conj() * c);
                for m in [&mut a, &mut v] {
                    for r in 0..dim {
                        let (xp, xq) = (m[(r, p)], m[(r, q)]);
                        m[(r, p)] = xp * c + xq * gqp;
                        m[(r, q)] = xp * sn + xq * gqq;
                    }
                }
                for col in 0..dim {
                    let (xp, xq) = (a[(p, col)], a[(q, col)]);
                    a[(p, col)] = xp * c + xq * gqp.conj();
                    a[(q, col)] = xp * sn + xq * gqq.conj();
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    Eigensystem {
        values: order.iter().map(|&i| a[(i, i)].re).collect(),
        vectors: DMatrix::from_fn(dim, dim, |r, c| v[(r, order[c])]),
    }
}

/// Diagonalizes `h`, tagging the snapshot with interpolation parameter `s`.
pub fn spectrum(h: &Hamiltonian, s: f64) -> Result<SpectrumSnapshot> {
    let sys = polish(h, eigensystem(h)?);
    let ground: Vec<Complex64> = sys.vectors.column(0).iter().copied().collect();
    Ok(SpectrumSnapshot {
        s,
        eigenvalues: sys.values,
        ground_state: StateVector::from_amplitudes(ground)?,
    })
}

/// `‖H v − E v‖₂` for a candidate eigenpair.
pub fn eigen_residual(h: &Hamiltonian, energy: f64, v: &StateVector) -> f64 {
    let v = DVector::from_column_slice(v.amplitudes());
    let hv = h.matrix() * &v;
    (hv - v * Complex64::new(energy, 0.0)).norm()
}

/// Linear schedule `s(t) = t / T` discretized into `num_steps` equal steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Schedule {
    total_time: f64,
    num_steps: usize,
}

impl Schedule {
    pub fn new(total_time: f64, num_steps: usize) -> Result<Self> {
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(QlsmError::Config(format!("total time {total_time} must be positive")));
        }
        if num_steps == 0 {
            return Err(QlsmError::Config("num_steps must be >= 1".into()));
        }
        Ok(Self {
            total_time,
            num_steps,
        })
    }

    /// Schedule with `steps_per_unit · T` steps, rounded up.
    pub fn with_density(total_time: f64, steps_per_unit: f64) -> Result<Self> {
        let steps = (total_time * steps_per_unit).ceil().max(1.0) as usize;
        Self::new(total_time, steps)
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.num_steps as f64
    }

    /// `s` after `step` steps; exactly 0 at the start and 1 at the end.
    pub fn s_at_step(&self, step: usize) -> f64 {
        if step >= self.num_steps {
            1.0
        } else {
            step as f64 / self.num_steps as f64
        }
    }

    pub fn s_at_time(&self, t: f64) -> f64 {
        (t / self.total_time).clamp(0.0, 1.0)
    }

    pub fn min_steps(total_time: f64) -> usize {
        (MIN_STEPS_PER_UNIT_TIME * total_time).ceil().max(1.0) as usize
    }
}

/// Propagator data for one step: `ψ ← V e^{-iEΔt} V† ψ`.
fn step_exact(sys: &Eigensystem, dt: f64, psi: &DVector<Complex64>) -> DVector<Complex64> {
    let mut coeffs = sys.vectors.ad_mul(psi);
    for (c, &e) in coeffs.iter_mut().zip(&sys.values) {
        *c *= Complex64::from_polar(1.0, -e * dt);
    }
    &sys.vectors * coeffs
}

/// Integrates the Schrödinger equation under the interpolated family using
/// the exact propagator of the midpoint Hamiltonian on each step.
pub fn evolve(terms: &[ClauseTerm], schedule: &Schedule, initial: &StateVector) -> Result<StateVector> {
    let hb = total_base(terms)?;
    let hp = total_problem(terms)?;
    evolve_between(&hb, &hp, schedule, initial)
}

/// Same as [`evolve`] with the endpoint Hamiltonians already summed.
pub fn evolve_between(
    hb: &Hamiltonian,
    hp: &Hamiltonian,
    schedule: &Schedule,
    initial: &StateVector,
) -> Result<StateVector> {
    let min = Schedule::min_steps(schedule.total_time());
    if schedule.num_steps() < min {
        return Err(QlsmError::Config(format!(
            "step budget {} too small for T = {}; minimum is {min}",
            schedule.num_steps(),
            schedule.total_time()
        )));
    }
    if initial.num_qubits() != hb.num_qubits() || hb.num_qubits() != hp.num_qubits() {
        return Err(QlsmError::Size(format!(
            "initial state has {} qubits, Hamiltonian acts on {}",
            initial.num_qubits(),
            hb.num_qubits()
        )));
    }
    if !initial.is_normalized() {
        return Err(QlsmError::Precondition("initial state is not normalized".into()));
    }
    let dt = schedule.dt();
    let n = schedule.num_steps();
    let mut psi = DVector::from_column_slice(initial.amplitudes());
    for k in 0..n {
        let s_mid = (k as f64 + 0.5) / n as f64;
        let h = Hamiltonian::lerp(hb, hp, s_mid);
        let sys = eigensystem(&h)?;
        psi = step_exact(&sys, dt, &psi);
    }
    StateVector::from_amplitudes(psi.iter().copied().collect())
}

/// Overlap of an evolved state with the final ground space.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapReport {
    /// `|⟨ground|ψ⟩|`, or the projection norm onto the ground eigenspace when
    /// it is degenerate.
    pub overlap: f64,
    pub degenerate: bool,
    pub ground_multiplicity: usize,
    pub ground_energy: f64,
}

/// Projects `state` onto the lowest eigenspace of `h`.
pub fn ground_space_overlap(h: &Hamiltonian, state: &StateVector) -> Result<OverlapReport> {
    let sys = eigensystem(h)?;
    let e0 = sys.values[0];
    let multiplicity = sys
        .values
        .iter()
        .take_while(|&&e| e - e0 <= DEGENERACY_TOLERANCE)
        .count();
    let psi = DVector::from_column_slice(state.amplitudes());
    let weight: f64 = (0..multiplicity)
        .map(|c| sys.vectors.column(c).dotc(&psi).norm_sqr())
        .sum();
    Ok(OverlapReport {
        overlap: weight.sqrt().clamp(0.0, 1.0),
        degenerate: multiplicity > 1,
        ground_multiplicity: multiplicity,
        ground_energy: e0,
    })
}

/// Evolves `initial` and measures its overlap with the ground space at `s = 1`.
pub fn overlap_with_final_ground(
    terms: &[ClauseTerm],
    schedule: &Schedule,
    initial: &StateVector,
) -> Result<OverlapReport> {
    let hb = total_base(terms)?;
    let hp = total_problem(terms)?;
    let psi = evolve_between(&hb, &hp, schedule, initial)?;
    ground_space_overlap(&hp, &psi)
}

/// Overlaps for a list of total times, each with `steps_per_unit · T` steps.
pub fn overlap_sweep(
    terms: &[ClauseTerm],
    total_times: &[f64],
    steps_per_unit: f64,
    initial: &StateVector,
) -> Result<Vec<(f64, OverlapReport)>> {
    if total_times.is_empty() {
        return Err(QlsmError::Config("empty list of total times".into()));
    }
    let hb = total_base(terms)?;
    let hp = total_problem(terms)?;
    total_times
        .iter()
        .map(|&t| {
            let schedule = Schedule::with_density(t, steps_per_unit)?;
            let psi = evolve_between(&hb, &hp, &schedule, initial)?;
            Ok((t, ground_space_overlap(&hp, &psi)?))
        })
        .collect()
}

/// `(s, E₁ − E₀)` at `num_samples` evenly spaced points of `[0, 1]`.
pub fn gap_profile(terms: &[ClauseTerm], num_samples: usize) -> Result<Vec<(f64, f64)>> {
    (0..num_samples)
        .map(|i| {
            let s = if num_samples == 1 {
                0.0
            } else {
                i as f64 / (num_samples - 1) as f64
            };
            let snap = spectrum(&interpolate(terms, s)?, s)?;
            Ok((s, snap.gap()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::hamiltonian::build_base_hamiltonian;
    use super::*;

    #[test]
    fn diagonal_spectrum_is_sorted_diagonal() {
        let h = Hamiltonian::diagonal(2, &[3.0, -1.0, 2.5, 0.0]).unwrap();
        let snap = spectrum(&h, 0.0).unwrap();
        let expect = [-1.0, 0.0, 2.5, 3.0];
        for (a, b) in snap.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn base_one_qubit_spectrum() {
        let h = build_base_hamiltonian(1).unwrap();
        let snap = spectrum(&h, 0.0).unwrap();
        assert!((snap.eigenvalues[0]).abs() < 1e-12);
        assert!((snap.eigenvalues[1] - 2.0).abs() < 1e-12);
        let a = snap.ground_state.amplitudes();
        assert!((a[0].norm() - a[1].norm()).abs() < 1e-12);
        assert!(eigen_residual(&h, snap.eigenvalues[0], &snap.ground_state) < 1e-8);
    }

    #[test]
    fn schedule_endpoints() {
        let sch = Schedule::new(3.0, 30).unwrap();
        assert_eq!(sch.s_at_step(0), 0.0);
        assert_eq!(sch.s_at_step(30), 1.0);
        assert_eq!(sch.s_at_time(0.0), 0.0);
        assert_eq!(sch.s_at_time(3.0), 1.0);
        assert!(Schedule::new(0.0, 1).is_err());
        assert!(Schedule::new(1.0, 0).is_err());
    }

    #[test]
    fn step_budget_error_names_minimum() {
        let h = build_base_hamiltonian(1).unwrap();
        let init = StateVector::zero(1).unwrap();
        let err = evolve_between(&h, &h, &Schedule::new(5.0, 10).unwrap(), &init).unwrap_err();
        assert!(err.to_string().contains("minimum is 50"), "{err}");
    }

    #[test]
    fn gap_profile_edge_counts() {
        use super::super::hamiltonian::build_problem_hamiltonian;
        use super::super::sat::{Literal, SatInstance};
        let inst = SatInstance::new(1, vec![vec![Literal::pos(0)]]).unwrap();
        let terms = build_problem_hamiltonian(&inst).unwrap();
        assert!(gap_profile(&terms, 0).unwrap().is_empty());
        let one = gap_profile(&terms, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one[0].1 - 2.0).abs() < 1e-10);
    }
}
