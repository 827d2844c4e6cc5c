use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QlsmError, Result};

/// A literal over variable `var`; bit `var` of an assignment index holds its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, negated: true }
    }

    pub fn is_true(&self, assignment: usize) -> bool {
        let value = (assignment >> self.var) & 1 == 1;
        value != self.negated
    }
}

/// CNF formula. Every clause is a disjunction of literals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatInstance {
    num_vars: usize,
    clauses: Vec<Vec<Literal>>,
}

impl SatInstance {
    pub fn new(num_vars: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        if num_vars == 0 {
            return Err(QlsmError::Config("instance has no variables".into()));
        }
        if clauses.is_empty() {
            return Err(QlsmError::Config("instance has an empty clause list".into()));
        }
        for (c, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(QlsmError::Config(format!("clause {c} is empty")));
            }
            if let Some(lit) = clause.iter().find(|l| l.var >= num_vars) {
                return Err(QlsmError::Index(format!(
                    "clause {c} references variable {} but num_vars = {num_vars}",
                    lit.var
                )));
            }
        }
        Ok(Self { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    pub fn clause_satisfied(&self, clause: usize, assignment: usize) -> bool {
        self.clauses[clause].iter().any(|l| l.is_true(assignment))
    }

    pub fn violated_count(&self, assignment: usize) -> usize {
        (0..self.clauses.len())
            .filter(|&c| !self.clause_satisfied(c, assignment))
            .count()
    }

    pub fn is_satisfied(&self, assignment: usize) -> bool {
        (0..self.clauses.len()).all(|c| self.clause_satisfied(c, assignment))
    }

    /// Variables occurring in clause `c`, deduplicated, ascending.
    pub fn clause_vars(&self, clause: usize) -> Vec<usize> {
        let mut vars: Vec<usize> = self.clauses[clause].iter().map(|l| l.var).collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Parses DIMACS CNF text. Variables are renumbered from 1-based to 0-based.
    pub fn parse_dimacs(text: &str, source: &Path) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('%') {
                break;
            }
            if line.starts_with('p') {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if header.is_some() {
                    return Err(QlsmError::parse(source, lineno, "duplicate problem line"));
                }
                if fields.len() != 4 || fields[1] != "cnf" {
                    return Err(QlsmError::parse(source, lineno, "expected `p cnf <vars> <clauses>`"));
                }
                let vars = fields[2]
                    .parse()
                    .map_err(|_| QlsmError::parse(source, lineno, "bad variable count"))?;
                let count = fields[3]
                    .parse()
                    .map_err(|_| QlsmError::parse(source, lineno, "bad clause count"))?;
                header = Some((vars, count));
                continue;
            }
            let Some((num_vars, _)) = header else {
                return Err(QlsmError::parse(source, lineno, "clause before `p cnf` header"));
            };
            for tok in line.split_whitespace() {
                let v: i64 = tok
                    .parse()
                    .map_err(|_| QlsmError::parse(source, lineno, format!("bad literal `{tok}`")))?;
                if v == 0 {
                    clauses.push(std::mem::take(&mut current));
                    continue;
                }
                let var = v.unsigned_abs() as usize;
                if var > num_vars {
                    return Err(QlsmError::parse(
                        source,
                        lineno,
                        format!("literal {v} exceeds declared {num_vars} variables"),
                    ));
                }
                current.push(Literal {
                    var: var - 1,
                    negated: v < 0,
                });
            }
        }
        let Some((num_vars, declared)) = header else {
            return Err(QlsmError::parse(source, 0, "missing `p cnf` header"));
        };
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != declared {
            return Err(QlsmError::parse(
                source,
                0,
                format!("header declares {declared} clauses, found {}", clauses.len()),
            ));
        }
        Self::new(num_vars, clauses)
    }

    pub fn from_dimacs_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QlsmError::io(path, e))?;
        Self::parse_dimacs(&text, path)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let v = lit.var as i64 + 1;
                out.push_str(&format!("{} ", if lit.negated { -v } else { v }));
            }
            out.push_str("0\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let text = "c demo\np cnf 3 2\n1 -2 0\n2 3\n0\n";
        let inst = SatInstance::parse_dimacs(text, Path::new("demo.cnf")).unwrap();
        assert_eq!(inst.num_vars(), 3);
        assert_eq!(inst.clauses()[0], vec![Literal::pos(0), Literal::neg(1)]);
        assert_eq!(inst.clauses()[1], vec![Literal::pos(1), Literal::pos(2)]);
        let again = SatInstance::parse_dimacs(&inst.to_dimacs(), Path::new("x")).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn parse_errors() {
        let p = Path::new("bad.cnf");
        assert!(SatInstance::parse_dimacs("1 2 0\n", p).is_err());
        assert!(SatInstance::parse_dimacs("p cnf 2 1\n1 3 0\n", p).is_err());
        assert!(SatInstance::parse_dimacs("p cnf 2 2\n1 2 0\n", p).is_err());
        assert!(matches!(
            SatInstance::parse_dimacs("p cnf 2 0\n", p),
            Err(QlsmError::Config(_))
        ));
    }

    #[test]
    fn violation_counts() {
        let inst = SatInstance::new(2, vec![vec![Literal::pos(0), Literal::pos(1)]]).unwrap();
        let counts: Vec<usize> = (0..4).map(|a| inst.violated_count(a)).collect();
        assert_eq!(counts, vec![1, 0, 0, 0]);
    }
}
