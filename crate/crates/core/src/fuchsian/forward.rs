//! Forward constructions of 3×3 systems with three singularities whose
//! monodromy lands in a prescribed row of the 3×3 index table.

use super::generate::{choose_p, Generator, Slot};
use super::RationalSystem;
use crate::error::{Error, Result};
use crate::linalg::C64;

use Slot::{Constant as K, Random as R, Zero as O};

/// Which invariant-subspace configuration a construction realises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Line over an irreducible pair, `2ν ≥ N`; coupled or split.
    LineOverPair { coupled: bool },
    /// Irreducible pair over a quotient line, `2ν ≤ N`; coupled or split.
    PairOverLine { coupled: bool },
    /// Generic upper triangular: a single flag.
    Flag,
    /// Two lines and two planes from one coupling entry `(i, j)`.
    SingleCoupling { i: usize, j: usize },
    /// Flag whose line sits over a lower-triangular pair with `κ₂ = κ₃ + 1`.
    LineOverSplitPair,
    /// Flag whose plane holds a lower-triangular pair with `κ₁ = κ₂ + 1`.
    SplitPairOverLine,
    /// Scalar slot plus a lower-triangular pair in slots 2, 3 (`κ₂ = κ₃ + 1`).
    ScalarBesideLowerPair,
    /// Lower-triangular pair in slots 1, 2 (`κ₁ = κ₂ + 1`) plus a scalar slot.
    LowerPairBesideScalar,
}

impl Construction {
    /// Constructions realising each of the eight leading rows of the table.
    pub fn for_table_row(row: usize) -> Vec<Construction> {
        use Construction::*;
        match row {
            1 => vec![LineOverPair { coupled: true }, LineOverPair { coupled: false }],
            2 => vec![PairOverLine { coupled: true }, PairOverLine { coupled: false }],
            3 => vec![Flag],
            4 => vec![SingleCoupling { i: 0, j: 1 }, SingleCoupling { i: 0, j: 2 }, SingleCoupling { i: 1, j: 2 }],
            5 => vec![LineOverSplitPair],
            6 => vec![SplitPairOverLine],
            7 => vec![ScalarBesideLowerPair],
            8 => vec![LowerPairBesideScalar],
            _ => Vec::new(),
        }
    }
}

const SPREAD: f64 = 0.1;
const P_MARGIN: f64 = 0.02;
/// Extremal couplings blow up when exponents nearly collide; instances whose
/// residues are this non-normal are redrawn.
const RESIDUE_NORM_CAP: f64 = 20.0;

impl Generator {
    /// Random non-increasing indices `κ₃ + (g₁ + g₂, g₂, 0)` with gaps drawn
    /// from `gaps`, each `None` meaning `{0, 1}`.
    fn indices_with(&mut self, g1: Option<i64>, g2: Option<i64>) -> Vec<i64> {
        let base = self.uniform(-1.5, 1.5).round() as i64;
        let mut pick = |g: Option<i64>| g.unwrap_or_else(|| if self.uniform(0.0, 1.0) < 0.5 { 0 } else { 1 });
        let (a, b) = (pick(g1), pick(g2));
        vec![base + a + b, base + b, base]
    }

    /// One instance of `construction` on three fresh singularities, with an
    /// exponent `p` that places every residue eigenvalue inside `J_p`.
    pub fn construct_3x3(&mut self, construction: Construction) -> Result<(RationalSystem, f64)> {
        use Construction::*;
        let m = 3;
        for _ in 0..100 {
            let pts = self.singularities(m);
            let (indices, eps) = match construction {
                LineOverPair { .. } => {
                    let ind = self.indices_with(None, None);
                    let line = self.reducible_exponents(m, &ind[..1], SPREAD);
                    let pair = self.generic_exponents(m, 2, ind[1] + ind[2], 1.5 * SPREAD);
                    (ind, (0..m).map(|k| vec![line[k][0], pair[k][0], pair[k][1]]).collect::<Vec<_>>())
                }
                PairOverLine { .. } => {
                    let ind = self.indices_with(None, None);
                    let pair = self.generic_exponents(m, 2, ind[0] + ind[1], 1.5 * SPREAD);
                    let line = self.reducible_exponents(m, &ind[2..], SPREAD);
                    (ind, (0..m).map(|k| vec![pair[k][0], pair[k][1], line[k][0]]).collect())
                }
                Flag | SingleCoupling { .. } => {
                    let ind = self.indices_with(None, None);
                    let eps = self.reducible_exponents(m, &ind, SPREAD);
                    (ind, eps)
                }
                LineOverSplitPair | ScalarBesideLowerPair => {
                    let ind = self.indices_with(None, Some(1));
                    let eps = self.reducible_exponents(m, &ind, SPREAD);
                    (ind, eps)
                }
                SplitPairOverLine | LowerPairBesideScalar => {
                    let ind = self.indices_with(Some(1), None);
                    let eps = self.reducible_exponents(m, &ind, SPREAD);
                    (ind, eps)
                }
            };
            let Some(p) = choose_p(&eps, P_MARGIN) else { continue };
            let sys = match construction {
                LineOverPair { coupled } => self.block12_3(&pts, &indices, &eps, coupled),
                PairOverLine { coupled } => self.block21_3(&pts, &indices, &eps, coupled),
                Flag => self.triangular_3(&pts, &indices, &eps),
                SingleCoupling { i, j } => {
                    let mut pattern = vec![vec![O; 3]; 3];
                    pattern[i][j] = R;
                    self.patterned(&pts, &indices, &eps, &pattern)
                }
                LineOverSplitPair => self.patterned(&pts, &indices, &eps, &[vec![O, R, R], vec![O, O, O], vec![O, K, O]]),
                SplitPairOverLine => self.patterned(&pts, &indices, &eps, &[vec![O, O, R], vec![K, O, R], vec![O, O, O]]),
                ScalarBesideLowerPair => self.patterned(&pts, &indices, &eps, &[vec![O; 3], vec![O; 3], vec![O, K, O]]),
                LowerPairBesideScalar => self.patterned(&pts, &indices, &eps, &[vec![O; 3], vec![K, O, O], vec![O; 3]]),
            };
            match sys {
                Ok(sys) => return Ok((sys, p)),
                Err(Error::Precondition(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Precondition(format!("no admissible instance of {construction:?} found")))
    }

    /// Extremal instance with generic exponents on fresh singularities.
    pub fn construct_extremal(&mut self, n: usize, m: usize, kappa_n: i64) -> Result<(RationalSystem, f64)> {
        let total = (n * (n - 1) / 2 * (m.saturating_sub(2))) as i64 + n as i64 * kappa_n;
        for _ in 0..100 {
            let pts = self.singularities(m);
            let eps = self.generic_exponents(m, n, total, 0.2);
            let Some(p) = choose_p(&eps, P_MARGIN) else { continue };
            let sys = self.extremal(&pts, kappa_n, &eps)?;
            if sys.residues()?.iter().any(|r| r.norm() > RESIDUE_NORM_CAP) {
                continue;
            }
            return Ok((sys, p));
        }
        Err(Error::Precondition("no admissible extremal exponents found".into()))
    }

    /// Triangular 2×2 instance with the given indices on fresh singularities.
    pub fn construct_triangular_2(&mut self, m: usize, indices: &[i64]) -> Result<(RationalSystem, f64)> {
        for _ in 0..100 {
            let pts = self.singularities(m);
            let eps = self.reducible_exponents(m, indices, SPREAD);
            let Some(p) = choose_p(&eps, P_MARGIN) else { continue };
            return Ok((self.triangular_2(&pts, indices, &eps)?, p));
        }
        Err(Error::Precondition(format!("no admissible exponents for indices {indices:?} with m = {m}")))
    }
}

/// Residue spectra of a system, one list per singularity.
pub fn residue_spectra(sys: &RationalSystem) -> Result<Vec<Vec<C64>>> {
    sys.residues()?.iter().map(crate::linalg::eigenvalues).collect()
}
