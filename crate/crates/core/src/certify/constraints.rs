use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cspop::SupportPattern;
use super::CertificateMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowFamily {
    Initial,
    Unsafe,
    Sign,
    /// Support-pattern rows: pins to zero and positivity floors.
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub family: RowFamily,
    /// Linear index of the originating grid cell.
    pub cell: Option<usize>,
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl ConstraintRow {
    pub fn lhs(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(a, b)| a * b).sum()
    }

    /// Amount by which `p` violates the row (nonpositive when satisfied).
    pub fn violation(&self, p: &[f64]) -> f64 {
        let lhs = self.lhs(p);
        match self.sense {
            RowSense::Le => lhs - self.rhs,
            RowSense::Ge => self.rhs - lhs,
            RowSense::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// The variable index if the row constrains a single variable.
    pub fn single_variable(&self) -> Option<usize> {
        let mut nz = self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0);
        match (nz.next(), nz.next()) {
            (Some((j, _)), None) => Some(j),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowViolation {
    pub row: usize,
    pub family: RowFamily,
    pub cell: Option<usize>,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemMeta {
    pub mode: CertificateMode,
    pub alpha: f64,
    pub delta_u: f64,
    pub horizons: Vec<usize>,
    /// Effective tail epsilon per trajectory (robust mode).
    pub epsilons: Vec<f64>,
    pub pattern: Option<SupportPattern>,
}

/// Linear rows over `p = [a, b_1..b_N, c_1..c_N]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub n_bases: usize,
    pub rows: Vec<ConstraintRow>,
    pub meta: SystemMeta,
}

impl ConstraintSystem {
    pub fn n_vars(&self) -> usize {
        2 * self.n_bases + 1
    }

    pub fn variable_names(&self) -> Vec<String> {
        let mut names = vec!["a".to_string()];
        names.extend((1..=self.n_bases).map(|k| format!("b{k}")));
        names.extend((1..=self.n_bases).map(|k| format!("c{k}")));
        names
    }

    pub fn count(&self, family: RowFamily) -> usize {
        self.rows.iter().filter(|r| r.family == family).count()
    }

    /// Every row violated by more than `tol`.
    pub fn verify(&self, p: &[f64], tol: f64) -> Vec<RowViolation> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                let amount = r.violation(p);
                (amount > tol || amount.is_nan()).then_some(RowViolation {
                    row: i,
                    family: r.family,
                    cell: r.cell,
                    amount,
                })
            })
            .collect()
    }

    /// Plain-text dump in CPLEX LP syntax; `objective` lists
    /// `(coefficient, variable index)` terms.
    pub fn lp_text(&self, objective: &[(f64, usize)]) -> String {
        let names = self.variable_names();
        let term_list = |terms: &mut dyn Iterator<Item = (f64, usize)>| {
            let mut s = String::new();
            for (c, j) in terms {
                if c == 0.0 {
                    continue;
                }
                let sign = if c < 0.0 { "-" } else { "+" };
                let _ = write!(s, " {sign} {:?} {}", c.abs(), names[j]);
            }
            if s.is_empty() {
                s.push_str(" 0 a");
            }
            s
        };
        let mut out = String::from("\\ monocert constraint system\nMinimize\n obj:");
        out.push_str(&term_list(&mut objective.iter().copied()));
        out.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let family = match r.family {
                RowFamily::Initial => "init",
                RowFamily::Unsafe => "unsafe",
                RowFamily::Sign => "sign",
                RowFamily::Pattern => "pattern",
            };
            let op = match r.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            let lhs = term_list(&mut r.coeffs.iter().copied().zip(0..));
            let _ = writeln!(out, " {family}_{i}:{lhs} {op} {:?}", r.rhs);
        }
        out.push_str("Bounds\n");
        let _ = writeln!(out, " a free");
        out.push_str("End\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> ConstraintRow {
        ConstraintRow {
            family: RowFamily::Initial,
            cell: None,
            coeffs,
            sense,
            rhs,
        }
    }

    #[test]
    fn violation_signs() {
        let r = row(vec![1.0, 2.0], RowSense::Le, 1.0);
        assert_eq!(r.violation(&[1.0, 1.0]), 2.0);
        assert_eq!(r.violation(&[0.0, 0.0]), -1.0);
        let g = row(vec![1.0, 0.0], RowSense::Ge, 1.0);
        assert_eq!(g.violation(&[0.5, 9.0]), 0.5);
        assert_eq!(g.single_variable(), Some(0));
        assert_eq!(r.single_variable(), None);
    }

    #[test]
    fn lp_text_lists_rows() {
        let sys = ConstraintSystem {
            n_bases: 1,
            rows: vec![row(vec![1.0, 0.5, 0.0], RowSense::Le, 0.0)],
            meta: SystemMeta {
                mode: CertificateMode::Robust,
                alpha: 2.0,
                delta_u: 1e-6,
                horizons: vec![3],
                epsilons: vec![0.0],
                pattern: None,
            },
        };
        let text = sys.lp_text(&[(1.0, 1), (1.0, 2)]);
        assert!(text.contains("obj: + 1.0 b1 + 1.0 c1"));
        assert!(text.contains("init_0: + 1.0 a + 0.5 b1 <= 0.0"));
        assert_eq!(sys.variable_names(), vec!["a", "b1", "c1"]);
    }
}
