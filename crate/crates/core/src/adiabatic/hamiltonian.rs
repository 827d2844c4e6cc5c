use nalgebra::DMatrix;
use num_complex::Complex64;

use super::sat::SatInstance;
use crate::error::{QlsmError, Result};

/// Largest register for which dense Hamiltonians are assembled and diagonalized.
pub const MAX_HAMILTONIAN_QUBITS: usize = 12;

/// Dense Hermitian operator on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    num_qubits: usize,
    matrix: DMatrix<Complex64>,
}

fn check_qubits(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_HAMILTONIAN_QUBITS {
        return Err(QlsmError::Size(format!(
            "Hamiltonian on {num_qubits} qubits outside 1..={MAX_HAMILTONIAN_QUBITS}"
        )));
    }
    Ok(())
}

impl Hamiltonian {
    pub fn new(num_qubits: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QlsmError::Size(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { num_qubits, matrix })
    }

    pub fn zeros(num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        Ok(Self {
            num_qubits,
            matrix: DMatrix::zeros(dim, dim),
        })
    }

    pub fn diagonal(num_qubits: usize, diag: &[f64]) -> Result<Self> {
        let mut h = Self::zeros(num_qubits)?;
        if diag.len() != h.dim() {
            return Err(QlsmError::Size(format!(
                "diagonal of length {} for dimension {}",
                diag.len(),
                h.dim()
            )));
        }
        for (i, &d) in diag.iter().enumerate() {
            h.matrix[(i, i)] = Complex64::new(d, 0.0);
        }
        Ok(h)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|r| (0..d).all(|c| r == c || self.matrix[(r, c)] == Complex64::new(0.0, 0.0)))
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// `max |H − H†|` over all entries.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Largest elementwise difference to `other`.
    pub fn max_abs_diff(&self, other: &Hamiltonian) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn add_scaled(&mut self, other: &Hamiltonian, weight: f64) {
        self.matrix
            .iter_mut()
            .zip(other.matrix.iter())
            .for_each(|(a, b)| *a += b * weight);
    }

    /// `(1 − s)·a + s·b`.
    pub(crate) fn lerp(a: &Hamiltonian, b: &Hamiltonian, s: f64) -> Hamiltonian {
        let matrix = a.matrix.map(|x| x * (1.0 - s)) + b.matrix.map(|x| x * s);
        Hamiltonian {
            num_qubits: a.num_qubits,
            matrix,
        }
    }
}

/// One clause's share of the base and problem Hamiltonians.
#[derive(Clone, Debug)]
pub struct ClauseTerm {
    pub clause_id: usize,
    pub base_part: Hamiltonian,
    pub problem_part: Hamiltonian,
}

/// Adds `weight·(1 − X_qubit)` to `h`.
fn add_transverse_term(h: &mut Hamiltonian, qubit: usize, weight: f64) {
    let flip = 1usize << qubit;
    for i in 0..h.dim() {
        h.matrix[(i, i)] += Complex64::new(weight, 0.0);
        h.matrix[(i, i ^ flip)] -= Complex64::new(weight, 0.0);
    }
}

/// `Σ_j (1 − X_j)`. Ground state is the uniform superposition with energy 0.
pub fn build_base_hamiltonian(num_qubits: usize) -> Result<Hamiltonian> {
    let mut h = Hamiltonian::zeros(num_qubits)?;
    for q in 0..num_qubits {
        add_transverse_term(&mut h, q, 1.0);
    }
    Ok(h)
}

/// Splits the instance into per-clause terms.
///
/// The problem part of clause `C` is diagonal with entry 1 on every assignment
/// violating `C`. Each transverse term `(1 − X_j)` is divided evenly among the
/// clauses containing variable `j`; variables that occur in no clause are
/// charged to clause 0 so the base parts still sum to the full base Hamiltonian.
pub fn build_problem_hamiltonian(inst: &SatInstance) -> Result<Vec<ClauseTerm>> {
    let n = inst.num_vars();
    check_qubits(n)?;
    let num_clauses = inst.clauses().len();
    if num_clauses == 0 {
        return Err(QlsmError::Config("instance has an empty clause list".into()));
    }
    let clause_vars: Vec<Vec<usize>> = (0..num_clauses).map(|c| inst.clause_vars(c)).collect();
    let mut occurrences = vec![0usize; n];
    for vars in &clause_vars {
        for &v in vars {
            occurrences[v] += 1;
        }
    }
    let dim = 1usize << n;
    let mut terms = Vec::with_capacity(num_clauses);
    for (c, vars) in clause_vars.iter().enumerate() {
        let mut base_part = Hamiltonian::zeros(n)?;
        for &v in vars {
            add_transverse_term(&mut base_part, v, 1.0 / occurrences[v] as f64);
        }
        if c == 0 {
            for (v, &count) in occurrences.iter().enumerate() {
                if count == 0 {
                    add_transverse_term(&mut base_part, v, 1.0);
                }
            }
        }
        let diag: Vec<f64> = (0..dim)
            .map(|a| if inst.clause_satisfied(c, a) { 0.0 } else { 1.0 })
            .collect();
        terms.push(ClauseTerm {
            clause_id: c,
            base_part,
            problem_part: Hamiltonian::diagonal(n, &diag)?,
        });
    }
    Ok(terms)
}

fn terms_qubits(terms: &[ClauseTerm]) -> Result<usize> {
    let first = terms
        .first()
        .ok_or_else(|| QlsmError::Config("no clause terms".into()))?;
    let n = first.base_part.num_qubits();
    if terms
        .iter()
        .any(|t| t.base_part.num_qubits() != n || t.problem_part.num_qubits() != n)
    {
        return Err(QlsmError::Size("clause terms act on different registers".into()));
    }
    Ok(n)
}

/// `Σ_C H_{B,C}`.
pub fn total_base(terms: &[ClauseTerm]) -> Result<Hamiltonian> {
    let mut h = Hamiltonian::zeros(terms_qubits(terms)?)?;
    for t in terms {
        h.add_scaled(&t.base_part, 1.0);
    }
    Ok(h)
}

/// `Σ_C H_{P,C}`.
pub fn total_problem(terms: &[ClauseTerm]) -> Result<Hamiltonian> {
    let mut h = Hamiltonian::zeros(terms_qubits(terms)?)?;
    for t in terms {
        h.add_scaled(&t.problem_part, 1.0);
    }
    Ok(h)
}

/// `Σ_C [(1 − s) H_{B,C} + s H_{P,C}]`, assembled clause by clause.
pub fn interpolate(terms: &[ClauseTerm], s: f64) -> Result<Hamiltonian> {
    if !(0.0..=1.0).contains(&s) {
        return Err(QlsmError::Domain(format!("interpolation parameter s = {s} outside [0, 1]")));
    }
    let mut h = Hamiltonian::zeros(terms_qubits(terms)?)?;
    for t in terms {
        if s != 1.0 {
            h.add_scaled(&t.base_part, 1.0 - s);
        }
        if s != 0.0 {
            h.add_scaled(&t.problem_part, s);
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::super::sat::Literal;
    use super::*;

    #[test]
    fn base_single_qubit() {
        let h = build_base_hamiltonian(1).unwrap();
        let m = h.matrix();
        assert_eq!(m[(0, 0)].re, 1.0);
        assert_eq!(m[(0, 1)].re, -1.0);
        assert_eq!(m[(1, 0)].re, -1.0);
        assert_eq!(m[(1, 1)].re, 1.0);
        assert_eq!(h.hermiticity_residual(), 0.0);
    }

    #[test]
    fn unit_clause_penalty() {
        let inst = SatInstance::new(1, vec![vec![Literal::pos(0)]]).unwrap();
        let terms = build_problem_hamiltonian(&inst).unwrap();
        assert_eq!(terms.len(), 1);
        assert!(terms[0].problem_part.is_diagonal());
        assert_eq!(terms[0].problem_part.diagonal_entries(), vec![1.0, 0.0]);
    }

    #[test]
    fn or_clause_penalty() {
        let inst = SatInstance::new(2, vec![vec![Literal::pos(0), Literal::pos(1)]]).unwrap();
        let terms = build_problem_hamiltonian(&inst).unwrap();
        assert_eq!(terms[0].problem_part.diagonal_entries(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn unused_variable_is_still_driven() {
        let inst = SatInstance::new(3, vec![vec![Literal::pos(0)], vec![Literal::neg(0)]]).unwrap();
        let terms = build_problem_hamiltonian(&inst).unwrap();
        let base = total_base(&terms).unwrap();
        let direct = build_base_hamiltonian(3).unwrap();
        assert!(base.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn interpolate_domain() {
        let inst = SatInstance::new(1, vec![vec![Literal::pos(0)]]).unwrap();
        let terms = build_problem_hamiltonian(&inst).unwrap();
        assert!(matches!(interpolate(&terms, -0.1), Err(QlsmError::Domain(_))));
        assert!(matches!(interpolate(&terms, 1.5), Err(QlsmError::Domain(_))));
        assert!(matches!(interpolate(&[], 0.5), Err(QlsmError::Config(_))));
    }

    #[test]
    fn interpolate_endpoints_and_midpoint() {
        let inst = SatInstance::new(
            2,
            vec![vec![Literal::pos(0), Literal::neg(1)], vec![Literal::pos(1)]],
        )
        .unwrap();
        let terms = build_problem_hamiltonian(&inst).unwrap();
        let hb = total_base(&terms).unwrap();
        let hp = total_problem(&terms).unwrap();
        assert_eq!(interpolate(&terms, 0.0).unwrap(), hb);
        assert_eq!(interpolate(&terms, 1.0).unwrap(), hp);
        let mid = interpolate(&terms, 0.5).unwrap();
        let mean = Hamiltonian::lerp(&hb, &hp, 0.5);
        assert!(mid.max_abs_diff(&mean) < 1e-12);
    }

    #[test]
    fn size_cap() {
        assert!(matches!(build_base_hamiltonian(13), Err(QlsmError::Size(_))));
    }
}
