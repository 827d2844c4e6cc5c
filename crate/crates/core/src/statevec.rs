//! Dense state vectors over the computational basis.
//!
//! Basis index `i` encodes qubit `q` in bit `q` of `i` (qubit 0 is the least
//! significant bit). Operations return new states; the in-place variants are
//! crate-private and used by the time-evolution loops.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{QlsmError, Result};

/// Largest register the dense representation accepts.
pub const MAX_QUBITS: usize = 20;

/// Tolerance used when checking that a state is normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Result of a projective Z measurement on one qubit.
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub qubit: usize,
    pub bit: u8,
    /// Squared norm of the projected component before renormalization.
    pub probability: f64,
    pub post_state: StateVector,
}

fn check_size(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(QlsmError::Size(format!(
            "qubit count {num_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_size(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QlsmError::Index(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// `|0…0⟩`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// Wraps raw amplitudes. The length must be a power of two; the vector is
    /// not renormalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QlsmError::Size(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_size(num_qubits)?;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < NORM_TOLERANCE
    }

    /// Returns a copy scaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(QlsmError::Domain("cannot normalize the zero vector".into()));
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            amplitudes: self.amplitudes.iter().map(|a| a / norm).collect(),
        })
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(QlsmError::Index(format!(
                "qubit {qubit} out of range for {}-qubit state",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Rotation about the Y axis, `exp(-i θ Y / 2)`.
    pub fn rotate_y(&self, qubit: usize, angle: f64) -> Result<Self> {
        self.check_qubit(qubit)?;
        let mut out = self.clone();
        out.rotate_y_mut(qubit, angle);
        Ok(out)
    }

    /// Rotation about the X axis, `exp(-i θ X / 2)`.
    pub fn rotate_x(&self, qubit: usize, angle: f64) -> Result<Self> {
        self.check_qubit(qubit)?;
        let mut out = self.clone();
        out.rotate_x_mut(qubit, angle);
        Ok(out)
    }

    pub(crate) fn rotate_y_mut(&mut self, qubit: usize, angle: f64) {
        let (s, c) = (angle / 2.0).sin_cos();
        let m = [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ];
        self.apply_single_qubit_mut(qubit, &m);
    }

    pub(crate) fn rotate_x_mut(&mut self, qubit: usize, angle: f64) {
        let (s, c) = (angle / 2.0).sin_cos();
        let m = [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ];
        self.apply_single_qubit_mut(qubit, &m);
    }

    /// Applies a 2x2 matrix (row-major) to one qubit in place.
    pub(crate) fn apply_single_qubit_mut(&mut self, qubit: usize, m: &[[Complex64; 2]; 2]) {
        let stride = 1usize << qubit;
        let dim = self.amplitudes.len();
        let mut base = 0;
        while base < dim {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(QlsmError::Size(format!(
                "inner product of {}-qubit and {}-qubit states",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Probability of reading `1` on `qubit`.
    pub fn prob_one(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// `⟨Z_q⟩ = P(0) − P(1)` for a normalized state.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        Ok(self.expectation_z_unchecked(qubit))
    }

    pub(crate) fn expectation_z_unchecked(&self, qubit: usize) -> f64 {
        let mask = 1usize << qubit;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum()
    }

    /// Projective measurement of `qubit` in the Z basis.
    pub fn measure_qubit<R: Rng + ?Sized>(&self, qubit: usize, rng: &mut R) -> Result<MeasurementOutcome> {
        self.check_qubit(qubit)?;
        if !self.is_normalized() {
            return Err(QlsmError::Precondition(format!(
                "measurement on unnormalized state (norm² = {})",
                self.norm_sqr()
            )));
        }
        let p1 = self.prob_one(qubit)?.clamp(0.0, 1.0);
        let draw: f64 = rng.gen();
        let bit = u8::from(draw < p1);
        let probability = if bit == 1 { p1 } else { 1.0 - p1 };
        if probability <= 0.0 {
            return Err(QlsmError::Internal(format!(
                "drew zero-probability outcome {bit} on qubit {qubit}"
            )));
        }
        let mask = 1usize << qubit;
        let scale = probability.sqrt();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if u8::from(i & mask != 0) == bit {
                    a / scale
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(MeasurementOutcome {
            qubit,
            bit,
            probability,
            post_state: StateVector {
                num_qubits: self.num_qubits,
                amplitudes,
            },
        })
    }
}

/// Equal-weight superposition with every amplitude `2^(-n/2)`, produced by a
/// π/2 Y rotation on every qubit of `|0…0⟩`.
pub fn uniform_superposition(num_qubits: usize) -> Result<StateVector> {
    check_size(num_qubits)?;
    let mut state = StateVector::zero(num_qubits)?;
    for q in 0..num_qubits {
        state.rotate_y_mut(q, std::f64::consts::FRAC_PI_2);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() < tol, "{a} vs {b}");
    }

    #[test]
    fn uniform_one_qubit() {
        let s = uniform_superposition(1).unwrap();
        for a in s.amplitudes() {
            assert_close(*a, Complex64::new(FRAC_1_SQRT_2, 0.0), 1e-12);
        }
    }

    #[test]
    fn uniform_three_qubits() {
        let s = uniform_superposition(3).unwrap();
        assert_eq!(s.dim(), 8);
        for a in s.amplitudes() {
            assert!((a.re - 0.353_553_390_593_273_8).abs() < 1e-12);
            assert!(a.re > 0.0 && a.im == 0.0);
        }
    }

    #[test]
    fn size_cap() {
        assert!(matches!(uniform_superposition(21), Err(QlsmError::Size(_))));
        assert!(matches!(uniform_superposition(0), Err(QlsmError::Size(_))));
    }

    #[test]
    fn rotate_y_examples() {
        let zero = StateVector::zero(1).unwrap();
        let plus = zero.rotate_y(0, PI / 2.0).unwrap();
        assert_close(plus.amplitudes()[0], Complex64::new(FRAC_1_SQRT_2, 0.0), 1e-12);
        assert_close(plus.amplitudes()[1], Complex64::new(FRAC_1_SQRT_2, 0.0), 1e-12);

        let same = plus.rotate_y(0, 0.0).unwrap();
        assert_eq!(same, plus);

        let one = zero.rotate_y(0, PI).unwrap();
        let overlap = StateVector::basis(1, 1).unwrap().inner_product(&one).unwrap();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotate_bad_qubit() {
        let s = StateVector::zero(2).unwrap();
        assert!(matches!(s.rotate_y(2, 0.3), Err(QlsmError::Index(_))));
    }

    #[test]
    fn inner_product_examples() {
        let u = uniform_superposition(2).unwrap();
        assert_close(u.inner_product(&u).unwrap(), Complex64::new(1.0, 0.0), 1e-12);
        let z0 = StateVector::basis(1, 0).unwrap();
        let z1 = StateVector::basis(1, 1).unwrap();
        assert_close(z0.inner_product(&z1).unwrap(), Complex64::new(0.0, 0.0), 1e-15);
        let z00 = StateVector::zero(2).unwrap();
        assert_close(u.inner_product(&z00).unwrap(), Complex64::new(0.5, 0.0), 1e-12);
        assert!(matches!(z0.inner_product(&z00), Err(QlsmError::Size(_))));
    }

    #[test]
    fn measure_eigenstate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = StateVector::basis(1, 1).unwrap().measure_qubit(0, &mut rng).unwrap();
        assert_eq!(out.bit, 1);
        assert!((out.probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measure_seeded_is_reproducible() {
        let plus = uniform_superposition(1).unwrap();
        let bits: Vec<Vec<u8>> = (0..3)
            .map(|_| {
                let mut rng = ChaCha8Rng::seed_from_u64(42);
                (0..32).map(|_| plus.measure_qubit(0, &mut rng).unwrap().bit).collect()
            })
            .collect();
        assert_eq!(bits[0], bits[1]);
        assert_eq!(bits[1], bits[2]);
    }

    #[test]
    fn measure_bell_collapse() {
        let h = FRAC_1_SQRT_2;
        let bell = StateVector::from_amplitudes(vec![
            Complex64::new(h, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
        ])
        .unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = bell.measure_qubit(0, &mut rng).unwrap();
            let expected = if out.bit == 0 { 0 } else { 3 };
            let target = StateVector::basis(2, expected).unwrap();
            assert!((target.inner_product(&out.post_state).unwrap().norm() - 1.0).abs() < 1e-12);
            assert!((out.probability - 0.5).abs() < 1e-12);
            assert!(out.post_state.is_normalized());
        }
    }

    #[test]
    fn measure_rejects_unnormalized() {
        let s = StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(s.measure_qubit(0, &mut rng), Err(QlsmError::Precondition(_))));
    }
}
