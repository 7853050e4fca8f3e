//! Fuchsian systems of standard form `Y' = N(z)/p(z) · Y` with `p = ∏(z − a_k)`,
//! and scalar Fuchsian equations with their companion systems.

mod forward;
mod generate;
mod scalar;

pub use forward::{residue_spectra, Construction};
pub use generate::{choose_p, is_generic, Generator, Slot};
pub use scalar::{accessory_family, AccessoryFamily, CompanionSystem, ScalarFuchsEq};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64};
use crate::poly::Poly;
use serde::{Deserialize, Serialize};

/// Minimum separation below which two singularities count as the same point.
pub const COLOCATION_TOL: f64 = 1e-9;
/// Tolerance of the trace identity `Σκ_j = Σ tr Ê_k`.
pub const TRACE_TOL: f64 = 1e-8;

/// Anything that can serve as the coefficient matrix of a linear ODE `Y' = A(z) Y`.
pub trait MatrixField: Sync {
    fn dim(&self) -> usize;
    fn singularities(&self) -> &[C64];
    fn eval(&self, z: C64) -> CMatrix;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalSystem {
    pub n: usize,
    pub singularities: Vec<C64>,
    pub indices: Vec<i64>,
    /// Full numerators, diagonal leading terms `κ_i z^{m−1}` included.
    pub numerators: Vec<Vec<Poly>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    Shape { reason: String },
    Colocated { k: usize, l: usize },
    Degree { i: usize, j: usize, degree: usize, bound: i64 },
    DiagonalLeading { i: usize, found: C64, expected: i64 },
    Resonant { k: usize, a: C64, b: C64 },
    TraceIdentity { residual: f64 },
}

/// Degree bound `m − 2 + κ_i − κ_j` for the off-leading part of entry `(i, j)`.
pub fn degree_bound(m: usize, indices: &[i64], i: usize, j: usize) -> i64 {
    m as i64 - 2 + indices[i] - indices[j]
}

/// `∏_{l≠k} (a_k − a_l)`, i.e. `p'(a_k)`.
pub fn derivative_at(points: &[C64], k: usize) -> C64 {
    points
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != k)
        .fold(c(1.0, 0.0), |acc, (_, &a)| acc * (points[k] - a))
}

pub fn check_separated(points: &[C64]) -> Result<()> {
    for k in 0..points.len() {
        for l in k + 1..points.len() {
            if (points[k] - points[l]).norm() < COLOCATION_TOL {
                return Err(Error::ColocatedSingularities(k, l));
            }
        }
    }
    Ok(())
}

fn coeff_scale(p: &Poly) -> f64 {
    p.coeffs.iter().fold(1.0f64, |s, z| s.max(z.norm()))
}

impl RationalSystem {
    pub fn m(&self) -> usize {
        self.singularities.len()
    }

    pub fn denominator(&self) -> Poly {
        Poly::from_roots(&self.singularities)
    }

    /// Sum of declared indices.
    pub fn total_index(&self) -> i64 {
        self.indices.iter().sum()
    }

    pub fn numerator_at(&self, z: C64) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| self.numerators[i][j].eval(z))
    }

    /// Residues `Ê_k = N(a_k) / ∏_{l≠k}(a_k − a_l)`.
    pub fn residues(&self) -> Result<Vec<CMatrix>> {
        check_separated(&self.singularities)?;
        Ok((0..self.m())
            .map(|k| self.numerator_at(self.singularities[k]) / derivative_at(&self.singularities, k))
            .collect())
    }

    /// The same system conjugated by the constant diagonal `D` that balances
    /// the off-diagonal residue mass row against column (Osborne iteration).
    /// `D` preserves standard form and the indices, and conjugates the
    /// monodromy; less non-normal residues keep the transport well conditioned.
    pub fn balanced(&self) -> Result<RationalSystem> {
        let es = self.residues()?;
        let n = self.n;
        let mut d = vec![1.0f64; n];
        for _ in 0..50 {
            for i in 0..n {
                let (mut row, mut col) = (0.0, 0.0);
                for e in &es {
                    for j in (0..n).filter(|&j| j != i) {
                        row += (e[(i, j)] * d[i] / d[j]).norm_sqr();
                        col += (e[(j, i)] * d[j] / d[i]).norm_sqr();
                    }
                }
                if row > 0.0 && col > 0.0 {
                    d[i] *= (col / row).powf(0.25);
                }
            }
        }
        let numerators = (0..n)
            .map(|i| (0..n).map(|j| self.numerators[i][j].scale(c(d[i] / d[j], 0.0))).collect())
            .collect();
        Ok(RationalSystem { numerators, ..self.clone() })
    }

    pub fn trace_residual(&self) -> Result<f64> {
        let sum: C64 = self.residues()?.iter().map(linalg::trace).sum();
        Ok((sum - c(self.total_index() as f64, 0.0)).norm())
    }

    fn shape_problem(&self) -> Option<String> {
        if self.n == 0 || self.n > 3 {
            return Some(format!("dimension {} outside 1..3", self.n));
        }
        if self.m() == 0 {
            return Some("no singularities".into());
        }
        if self.indices.len() != self.n {
            return Some(format!("{} indices for dimension {}", self.indices.len(), self.n));
        }
        if self.numerators.len() != self.n || self.numerators.iter().any(|r| r.len() != self.n) {
            return Some("numerator matrix has the wrong shape".into());
        }
        None
    }

    /// All violations of the standard-form conditions; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        if let Some(reason) = self.shape_problem() {
            return vec![Violation::Shape { reason }];
        }
        let mut out = Vec::new();
        if let Err(Error::ColocatedSingularities(k, l)) = check_separated(&self.singularities) {
            out.push(Violation::Colocated { k, l });
            return out;
        }
        let m = self.m();
        for i in 0..self.n {
            for j in 0..self.n {
                let entry = &self.numerators[i][j];
                let tol = 1e-12 * coeff_scale(entry);
                let rest = if i == j {
                    let lead = entry.coeff(m - 1);
                    if (lead - c(self.indices[i] as f64, 0.0)).norm() > tol {
                        out.push(Violation::DiagonalLeading { i, found: lead, expected: self.indices[i] });
                    }
                    entry - &Poly::monomial(lead, m - 1)
                } else {
                    entry.clone()
                };
                let bound = degree_bound(m, &self.indices, i, j);
                if let Some(degree) = rest.numerical_degree(tol) {
                    if degree as i64 > bound {
                        out.push(Violation::Degree { i, j, degree, bound });
                    }
                }
            }
        }
        let Ok(residues) = self.residues() else { return out };
        for (k, r) in residues.iter().enumerate() {
            match linalg::eigenvalues(r) {
                Ok(values) => {
                    for (x, &a) in values.iter().enumerate() {
                        for &b in &values[x + 1..] {
                            let d = a - b;
                            let nearest = d.re.round();
                            if nearest != 0.0 && (d - c(nearest, 0.0)).norm() < 1e-8 {
                                out.push(Violation::Resonant { k, a, b });
                            }
                        }
                    }
                }
                Err(_) => out.push(Violation::Shape { reason: format!("residue {k} has no computable spectrum") }),
            }
        }
        if let Ok(residual) = self.trace_residual() {
            if residual > TRACE_TOL {
                out.push(Violation::TraceIdentity { residual });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

impl MatrixField for RationalSystem {
    fn dim(&self) -> usize {
        self.n
    }

    fn singularities(&self) -> &[C64] {
        &self.singularities
    }

    fn eval(&self, z: C64) -> CMatrix {
        let p: C64 = self.singularities.iter().map(|&a| z - a).product();
        self.numerator_at(z) / p
    }
}
