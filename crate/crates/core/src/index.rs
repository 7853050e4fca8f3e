//! Partial indices from the reducibility report, total index and number of
//! jumps.
//!
//! Outcomes are either determined index vectors, a dichotomy between a
//! balanced and an extremal vector (to be settled by the resolver), or only
//! the gap constraint for irreducible data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::reducibility::{self, CaseIntegers, ReducibilityReport2, ReducibilityReport3, Type2, Type3};
use crate::symbol::DataPair;

pub const DEFAULT_SCAN_RADIUS: f64 = 5.0;
pub const DEFAULT_GRID: usize = 41;
pub const DEFAULT_MATCH_TOL: f64 = 1e-7;

/// The rule of the case tables that produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Scalar symbols: the only index is the total index.
    TotalIndex,
    /// Diagonalizable 2×2 data, or one invariant line carrying the larger integer.
    OrderedInvariantLine,
    /// Irreducible-type 2×2 data with two jumps: the gap bound forces equality.
    ZeroGapBalanced,
    /// Irreducible-type data with odd total (2×2, three or four jumps).
    OddTotalSplit,
    /// Irreducible-type 2×2 data with three jumps and even total.
    EvenTotalBalanced,
    /// Even total with a jump matrix of low minimal-polynomial degree
    /// (a scalar 2×2 jump, or a 3×3 jump of degree ≤ 2).
    LowDegreeJumpBalanced,
    /// Balanced or extremal, decided by a scalar-equation monodromy problem.
    ExtremalDichotomy,
    /// 2×2 data with five or more jumps: only the gap bound is known.
    GapBoundOnly,
    /// B-1/B-3 with `2ν ≥ N`.
    LineBlockDominant,
    /// B-2/B-3 with `2ν ≤ N`.
    QuotientBlockDominant,
    /// Triangularizable with ordered integers (C, C-1, C-2, D).
    OrderedFlag,
    /// C-3 with `ν₁ ≥ ν₂`.
    SplitFlagOrdered,
    /// C/C-1 with `n₂ < n₃` and `2n₁ ≥ n₂ + n₃`.
    LineOverBalancedPair,
    /// C/C-2 with `n₁ < n₂` and `n₁ + n₂ ≥ 2n₃`.
    BalancedPairOverQuotient,
    /// C-3 with `ν₁ < ν₂` and `2ν# ≥ ν₁ + ν₂`.
    SplitLineOverBalancedPair,
    /// C-3 with `ν₁ < ν₂` and `ν₁ + ν₂ ≥ 2ν#`.
    SplitBalancedPairOverLine,
    /// Residual 3×3 cases with `κ ≡ 1 (mod 3)`.
    ResidualOneModThree,
    /// Residual 3×3 cases with `κ ≡ 2 (mod 3)`.
    ResidualTwoModThree,
}

/// Payload handed to the resolver for a dichotomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolverRequest {
    pub n: usize,
    pub m: usize,
    pub kappa: i64,
    #[serde(with = "crate::json::matrices")]
    pub target: Vec<CMatrix>,
    /// Local exponents of the scalar equation at each point, the last point
    /// already shifted by `1 − κ/n`.
    pub exponents: Vec<Vec<C64>>,
    pub singularities: Vec<C64>,
    pub balanced: Vec<i64>,
    pub extremal: Vec<i64>,
    pub scan_radius: f64,
    pub grid: usize,
    pub match_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexResult {
    Determined { indices: Vec<i64>, rule: Rule },
    Dichotomy { balanced: Vec<i64>, extremal: Vec<i64>, request: Box<ResolverRequest>, rule: Rule },
    Constraints { n: usize, gap_bound: i64, sum: i64, rule: Rule },
}

impl IndexResult {
    pub fn rule(&self) -> Rule {
        match self {
            IndexResult::Determined { rule, .. }
            | IndexResult::Dichotomy { rule, .. }
            | IndexResult::Constraints { rule, .. } => *rule,
        }
    }

    pub fn determined(&self) -> Option<&[i64]> {
        match self {
            IndexResult::Determined { indices, .. } => Some(indices),
            _ => None,
        }
    }

    /// Every concrete index vector the result admits.
    pub fn candidates(&self) -> Vec<Vec<i64>> {
        match self {
            IndexResult::Determined { indices, .. } => vec![indices.clone()],
            IndexResult::Dichotomy { balanced, extremal, .. } => vec![balanced.clone(), extremal.clone()],
            IndexResult::Constraints { .. } => Vec::new(),
        }
    }
}

/// Gap bound `κ_k − κ_{k+1} ≤ m − 2` satisfied by the indices of every
/// irreducible tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrreducibleGapBound {
    pub n: usize,
    pub m: usize,
}

impl IrreducibleGapBound {
    pub fn new(n: usize, m: usize) -> Self {
        IrreducibleGapBound { n, m }
    }

    pub fn max_gap(&self) -> i64 {
        self.m as i64 - 2
    }

    /// True for a non-increasing vector of length `n` whose gaps respect the bound.
    pub fn admits(&self, indices: &[i64]) -> bool {
        indices.len() == self.n && indices.windows(2).all(|w| w[0] >= w[1] && w[0] - w[1] <= self.max_gap())
    }
}

/// `(⌈t/2⌉, ⌊t/2⌋)`
fn halves(total: i64) -> (i64, i64) {
    let lo = total.div_euclid(2);
    (total - lo, lo)
}

fn determined(indices: Vec<i64>, rule: Rule) -> IndexResult {
    debug_assert!(indices.windows(2).all(|w| w[0] >= w[1]));
    IndexResult::Determined { indices, rule }
}

fn is_scalar(m: &CMatrix) -> bool {
    let n = m.nrows();
    let s = m.trace() / n as f64;
    (m - linalg::identity(n) * s).norm() < 1e-8 * (1.0 + m.norm())
}

fn exponent_payload(data: &DataPair, shift: C64) -> Result<Vec<Vec<C64>>> {
    let m = data.m();
    let mut out = Vec::with_capacity(m);
    for (k, e) in data.es.iter().enumerate() {
        let mut values = linalg::eigen(e)?.with_multiplicity();
        if k + 1 == m {
            for v in values.iter_mut() {
                *v += shift;
            }
        }
        out.push(values);
    }
    Ok(out)
}

fn dichotomy(data: &DataPair, balanced: Vec<i64>, extremal: Vec<i64>) -> Result<IndexResult> {
    let n = data.n() as i64;
    let shift = C64::new((1 - data.kappa / n) as f64, 0.0);
    let request = ResolverRequest {
        n: data.n(),
        m: data.m(),
        kappa: data.kappa,
        target: data.ms.clone(),
        exponents: exponent_payload(data, shift)?,
        singularities: data.points.clone(),
        balanced: balanced.clone(),
        extremal: extremal.clone(),
        scan_radius: DEFAULT_SCAN_RADIUS,
        grid: DEFAULT_GRID,
        match_tol: DEFAULT_MATCH_TOL,
    };
    Ok(IndexResult::Dichotomy { balanced, extremal, request: Box::new(request), rule: Rule::ExtremalDichotomy })
}

pub fn indices_2xm(report: &ReducibilityReport2, data: &DataPair) -> Result<IndexResult> {
    let (kappa, m) = (data.kappa, data.m());
    if let (Some(n1), Some(n2)) = (report.n1, report.n2) {
        if report.kind == Type2::C || n1 >= n2 {
            return Ok(determined(vec![n1, n2], Rule::OrderedInvariantLine));
        }
    }
    Ok(match m {
        0..=2 => {
            if kappa % 2 != 0 {
                return Err(Error::Precondition("gap bound 0 with an odd total index".into()));
            }
            determined(vec![kappa / 2, kappa / 2], Rule::ZeroGapBalanced)
        }
        3 => indices_2x3(kappa),
        4 => return indices_2x4(data),
        _ => IndexResult::Constraints { n: 2, gap_bound: m as i64 - 2, sum: kappa, rule: Rule::GapBoundOnly },
    })
}

/// Three jumps, irreducible type (or one line with `n₁ < n₂`).
pub fn indices_2x3(kappa: i64) -> IndexResult {
    let (hi, lo) = halves(kappa);
    if hi != lo {
        determined(vec![hi, lo], Rule::OddTotalSplit)
    } else {
        determined(vec![hi, lo], Rule::EvenTotalBalanced)
    }
}

/// Four jumps, irreducible type (or one line with `n₁ < n₂`).
pub fn indices_2x4(data: &DataPair) -> Result<IndexResult> {
    let kappa = data.kappa;
    let (hi, lo) = halves(kappa);
    if hi != lo {
        return Ok(determined(vec![hi, lo], Rule::OddTotalSplit));
    }
    if data.ms.iter().any(is_scalar) {
        return Ok(determined(vec![hi, lo], Rule::LowDegreeJumpBalanced));
    }
    dichotomy(data, vec![hi, lo], vec![hi + 1, lo - 1])
}

pub fn indices_3x3(report: &ReducibilityReport3, data: &DataPair) -> Result<IndexResult> {
    if data.m() != 3 {
        return Err(Error::Precondition("3×3 tables cover three jumps only".into()));
    }
    let kappa = data.kappa;
    use CaseIntegers as CI;
    use Type3::*;
    let table = match (report.kind, report.integers) {
        (B1 | B3, CI::Block { nu, big_n }) if 2 * nu >= big_n => {
            let (a, b) = halves(big_n);
            Some(determined(vec![nu, a, b], Rule::LineBlockDominant))
        }
        (B2 | B3, CI::Block { nu, big_n }) if 2 * nu <= big_n => {
            let (a, b) = halves(big_n);
            Some(determined(vec![a, b, nu], Rule::QuotientBlockDominant))
        }
        (C, CI::Flag { n1, n2, n3 }) if n1 >= n2 && n2 >= n3 => Some(determined(vec![n1, n2, n3], Rule::OrderedFlag)),
        (C1, CI::Flag { n1, n2, n3 }) if n2 >= n3 => Some(determined(vec![n1, n2, n3], Rule::OrderedFlag)),
        (C2, CI::Flag { n1, n2, n3 }) if n1 >= n2 => Some(determined(vec![n1, n2, n3], Rule::OrderedFlag)),
        (D, CI::Flag { n1, n2, n3 }) => Some(determined(vec![n1, n2, n3], Rule::OrderedFlag)),
        (C3, CI::Split { nu1, nu2, nu_sharp }) if nu1 >= nu2 => {
            let v = if nu2 >= nu_sharp {
                vec![nu1, nu2, nu_sharp]
            } else if nu1 >= nu_sharp {
                vec![nu1, nu_sharp, nu2]
            } else {
                vec![nu_sharp, nu1, nu2]
            };
            Some(determined(v, Rule::SplitFlagOrdered))
        }
        (C | C1, CI::Flag { n1, n2, n3 }) if n2 < n3 && 2 * n1 >= n2 + n3 => {
            let (a, b) = halves(n2 + n3);
            Some(determined(vec![n1, a, b], Rule::LineOverBalancedPair))
        }
        (C | C2, CI::Flag { n1, n2, n3 }) if n1 < n2 && n1 + n2 >= 2 * n3 => {
            let (a, b) = halves(n1 + n2);
            Some(determined(vec![a, b, n3], Rule::BalancedPairOverQuotient))
        }
        (C3, CI::Split { nu1, nu2, nu_sharp }) if nu1 < nu2 && 2 * nu_sharp >= nu1 + nu2 => {
            let (a, b) = halves(nu1 + nu2);
            Some(determined(vec![nu_sharp, a, b], Rule::SplitLineOverBalancedPair))
        }
        (C3, CI::Split { nu1, nu2, nu_sharp }) if nu1 < nu2 && nu1 + nu2 >= 2 * nu_sharp => {
            let (a, b) = halves(nu1 + nu2);
            Some(determined(vec![a, b, nu_sharp], Rule::SplitBalancedPairOverLine))
        }
        _ => None,
    };
    if let Some(r) = table {
        return Ok(r);
    }
    let third = kappa.div_euclid(3);
    Ok(match kappa.rem_euclid(3) {
        1 => determined(vec![third + 1, third, third], Rule::ResidualOneModThree),
        2 => determined(vec![third + 1, third + 1, third], Rule::ResidualTwoModThree),
        _ => {
            let mut low_degree = false;
            for m in &data.ms {
                if linalg::minimal_poly_degree(m)? <= 2 {
                    low_degree = true;
                }
            }
            if low_degree {
                determined(vec![third; 3], Rule::LowDegreeJumpBalanced)
            } else {
                return dichotomy(data, vec![third; 3], vec![third + 1, third, third - 1]);
            }
        }
    })
}

/// Reducibility report for any supported dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "n")]
pub enum Reducibility {
    #[serde(rename = "1")]
    Scalar,
    #[serde(rename = "2")]
    Two(ReducibilityReport2),
    #[serde(rename = "3")]
    Three(ReducibilityReport3),
}

pub fn classify(data: &DataPair) -> Result<Reducibility> {
    Ok(match data.n() {
        1 => Reducibility::Scalar,
        2 => Reducibility::Two(reducibility::classify2(data)?),
        3 => Reducibility::Three(reducibility::classify3(data)?),
        n => return Err(Error::InvalidInput(format!("dimension {n} is not supported"))),
    })
}

pub fn indices(report: &Reducibility, data: &DataPair) -> Result<IndexResult> {
    match report {
        Reducibility::Scalar => Ok(determined(vec![data.kappa], Rule::TotalIndex)),
        Reducibility::Two(r) => indices_2xm(r, data),
        Reducibility::Three(r) => indices_3x3(r, data),
    }
}

/// Whether the report describes an irreducible tuple.
pub fn is_irreducible(report: &Reducibility) -> bool {
    matches!(
        report,
        Reducibility::Two(ReducibilityReport2 { kind: Type2::A, .. })
            | Reducibility::Three(ReducibilityReport3 { kind: Type3::A, .. })
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, InvariantSubspaces};

    fn empty(dim: usize) -> InvariantSubspaces {
        InvariantSubspaces { dim, isolated: vec![], continua: vec![] }
    }

    fn data(n: usize, m: usize, kappa: i64) -> DataPair {
        DataPair {
            ms: vec![identity(n); m],
            es: vec![CMatrix::zeros(n, n); m],
            zetas: vec![vec![0.0; n]; m],
            kappa,
            p: 2.0,
            points: (0..m).map(|k| C64::from_polar(1.0, k as f64)).collect(),
        }
    }

    fn r2(kind: Type2, n: Option<(i64, i64)>) -> ReducibilityReport2 {
        ReducibilityReport2 { kind, n1: n.map(|x| x.0), n2: n.map(|x| x.1), lines: empty(1) }
    }

    fn r3(kind: Type3, integers: CaseIntegers) -> ReducibilityReport3 {
        ReducibilityReport3 { kind, integers, lines: empty(1), planes: empty(2) }
    }

    #[test]
    fn two_by_two_tables() {
        let r = indices_2xm(&r2(Type2::C, Some((3, 1))), &data(2, 3, 4)).unwrap();
        assert_eq!(r.determined(), Some(&[3, 1][..]));
        let r = indices_2xm(&r2(Type2::B, Some((2, 0))), &data(2, 5, 2)).unwrap();
        assert_eq!(r.determined(), Some(&[2, 0][..]));
        let r = indices_2xm(&r2(Type2::B, Some((0, 2))), &data(2, 5, 2)).unwrap();
        assert!(matches!(r, IndexResult::Constraints { gap_bound: 3, sum: 2, .. }));
        assert_eq!(indices_2x3(3).determined(), Some(&[2, 1][..]));
        assert_eq!(indices_2x3(0).determined(), Some(&[0, 0][..]));
        assert_eq!(indices_2x3(-1).determined(), Some(&[0, -1][..]));
    }

    #[test]
    fn four_jump_cases() {
        let mut d = data(2, 4, 1);
        d.ms = vec![crate::linalg::from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]); 4];
        assert_eq!(indices_2x4(&d).unwrap().determined(), Some(&[1, 0][..]));
        d.kappa = 0;
        let r = indices_2x4(&d).unwrap();
        match r {
            IndexResult::Dichotomy { balanced, extremal, request, .. } => {
                assert_eq!((balanced, extremal), (vec![0, 0], vec![1, -1]));
                assert_eq!(request.exponents.len(), 4);
                // exponents are zero; the last point is shifted by 1 − κ/2 = 1
                assert!((request.exponents[3][0] - C64::new(1.0, 0.0)).norm() < 1e-15);
            }
            other => panic!("expected a dichotomy, got {other:?}"),
        }
        d.ms[1] = identity(2) * C64::new(-1.0, 0.0);
        assert_eq!(indices_2x4(&d).unwrap().determined(), Some(&[0, 0][..]));
    }

    #[test]
    fn three_by_three_examples() {
        let d = data(3, 3, 3);
        let r = indices_3x3(&r3(Type3::D, CaseIntegers::Flag { n1: 2, n2: 1, n3: 0 }), &d).unwrap();
        assert_eq!(r.determined(), Some(&[2, 1, 0][..]));
        assert_eq!(r.rule(), Rule::OrderedFlag);
        let r = indices_3x3(&r3(Type3::B1, CaseIntegers::Block { nu: 2, big_n: 1 }), &d).unwrap();
        assert_eq!(r.determined(), Some(&[2, 1, 0][..]));
        assert_eq!(r.rule(), Rule::LineBlockDominant);

        let mut d = data(3, 3, 1);
        d.ms = vec![crate::linalg::diag(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0)]); 3];
        let r = indices_3x3(&r3(Type3::A, CaseIntegers::None), &d).unwrap();
        assert_eq!(r.determined(), Some(&[1, 0, 0][..]));
        // κ = 0 with a jump of minimal-polynomial degree 2
        d.kappa = 0;
        d.ms[0] = crate::linalg::diag(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let r = indices_3x3(&r3(Type3::A, CaseIntegers::None), &d).unwrap();
        assert_eq!(r.determined(), Some(&[0, 0, 0][..]));
        assert_eq!(r.rule(), Rule::LowDegreeJumpBalanced);
    }

    #[test]
    fn gap_bound_examples() {
        assert_eq!(IrreducibleGapBound::new(2, 3).max_gap(), 1);
        assert!(!IrreducibleGapBound::new(3, 3).admits(&[2, 0, -2]));
        assert!(IrreducibleGapBound::new(2, 4).admits(&[1, -1]));
    }

    #[test]
    fn overlapping_table_rows_agree() {
        // B-3 with 2ν = N is covered by the line and quotient rows alike
        let d = data(3, 3, 6);
        let r = indices_3x3(&r3(Type3::B3, CaseIntegers::Block { nu: 2, big_n: 4 }), &d).unwrap();
        assert_eq!(r.determined(), Some(&[2, 2, 2][..]));
        let (a, b) = halves(4);
        assert_eq!(vec![a, b, 2], vec![2, 2, 2]);
        // C-3 with ν₁ < ν₂ and ν₁ + ν₂ = 2ν#: rows for line-over-pair and pair-over-line coincide
        let d = data(3, 3, 3);
        let r = indices_3x3(&r3(Type3::C3, CaseIntegers::Split { nu1: 0, nu2: 2, nu_sharp: 1 }), &d).unwrap();
        assert_eq!(r.determined(), Some(&[1, 1, 1][..]));
    }
}
