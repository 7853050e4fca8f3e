//! Reducibility type of a jump tuple and the integers attached to each type.
//!
//! Types are decided from counts of common invariant lines and planes
//! (0, 1 or "at least two", continua counting as many) plus containment
//! tests. The integers are sums of exponents paired with the eigenvalues
//! the tuple induces on invariant lines and quotients.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, Continuum, InvariantSubspaces, SubspaceBasis, C64, I};
use crate::symbol::{round_integer, DataPair};

/// Relative tolerance for `|exp(−2πiε) − μ|` when pairing.
pub const PAIRING_TOL: f64 = 1e-6;

/// The unique `ε` among `exponents` with `exp(−2πiε) = μ`.
pub fn pair_eigenvalue(mu: C64, exponents: &[C64]) -> Result<C64> {
    let tol = PAIRING_TOL * (1.0 + mu.norm());
    let matches: Vec<C64> = exponents
        .iter()
        .copied()
        .filter(|e| ((-2.0 * PI * I * e).exp() - mu).norm() < tol)
        .collect();
    match matches.split_first() {
        None => Err(Error::Precondition(format!("no exponent matches eigenvalue {mu}"))),
        Some((first, rest)) => {
            if rest.iter().any(|e| (e - first).norm() > 1e-6) {
                Err(Error::AmbiguousPairing)
            } else {
                Ok(*first)
            }
        }
    }
}

fn distinct_exponents(e: &CMatrix) -> Result<Vec<C64>> {
    Ok(linalg::eigen(e)?.values())
}

/// Exponents of `E` paired with the eigenvalues of `M` on the successive
/// quotients of a chain of nested invariant subspaces (completed by `C^n`).
pub fn pair_exponents(m: &CMatrix, e: &CMatrix, chain: &[SubspaceBasis]) -> Result<Vec<C64>> {
    let n = m.nrows();
    let exps = distinct_exponents(e)?;
    let mut basis: Vec<CVector> = Vec::new();
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut steps: Vec<&SubspaceBasis> = chain.iter().collect();
    let full = SubspaceBasis::new(linalg::orthogonal_complement(&[], n));
    steps.push(&full);
    for step in steps {
        let start = basis.len();
        for v in &step.basis {
            let mut w = v.clone();
            for b in &basis {
                let coef = b.dotc(&w);
                w -= b * coef;
            }
            if w.norm() > 1e-8 {
                basis.push(w.normalize());
            }
        }
        if basis.len() > start {
            blocks.push((start, basis.len()));
        }
    }
    let q = CMatrix::from_columns(&basis);
    let t = q.adjoint() * m * &q;
    let mut out = Vec::with_capacity(n);
    for (s, f) in blocks {
        let block = t.view((s, s), (f - s, f - s)).into_owned();
        for mu in linalg::eigenvalues(&block)? {
            out.push(pair_eigenvalue(mu, &exps)?);
        }
    }
    Ok(out)
}

/// Sum over the tuple of exponents paired with the given per-matrix eigenvalues.
fn exponent_sum(mus: &[C64], exps: &[Vec<C64>]) -> Result<i64> {
    let mut total = C64::new(0.0, 0.0);
    for (mu, e) in mus.iter().zip(exps) {
        total += pair_eigenvalue(*mu, e)?;
    }
    round_integer(total)
}

/// Eigenvalue of each matrix on an invariant line spanned by unit `v`.
fn on_line(ms: &[CMatrix], v: &CVector) -> Vec<C64> {
    let v = v.normalize();
    ms.iter().map(|m| v.dotc(&(m * &v))).collect()
}

/// Eigenvalue of each matrix on the quotient by an invariant hyperplane.
fn on_quotient(ms: &[CMatrix], hyperplane: &SubspaceBasis) -> Vec<C64> {
    let n = ms[0].nrows();
    let u = linalg::orthogonal_complement(&hyperplane.basis, n).remove(0);
    // uᴴ M = λ uᴴ for the left eigenvector u ⊥ hyperplane
    ms.iter().map(|m| u.dotc(&(m * &u))).collect()
}

fn line_witnesses(lines: &InvariantSubspaces) -> Vec<CVector> {
    let mut out: Vec<CVector> = lines.isolated.iter().map(|l| l.space.basis[0].clone()).collect();
    for c in &lines.continua {
        if let Continuum::LinesIn { span, .. } = c {
            out.extend(span.basis.iter().cloned());
        }
    }
    out
}

fn hyperplane_witnesses(planes: &InvariantSubspaces, n: usize) -> Vec<SubspaceBasis> {
    let mut out: Vec<SubspaceBasis> = planes.isolated.iter().map(|p| p.space.clone()).collect();
    for c in &planes.continua {
        if let Continuum::HyperplanesThrough { axis, .. } = c {
            for u in linalg::orthogonal_complement(&axis.basis, n) {
                out.push(SubspaceBasis::new(linalg::orthogonal_complement(&[u], n)));
            }
        }
    }
    out
}

/// Greedy selection of up to `want` linearly independent vectors.
fn independent(vs: &[CVector], want: usize) -> Vec<CVector> {
    let mut chosen: Vec<CVector> = Vec::new();
    for v in vs {
        if chosen.len() == want {
            break;
        }
        let span = SubspaceBasis::new(orthonormalize(&chosen));
        if !span.contains(v, 1e-6) {
            chosen.push(v.clone());
        }
    }
    chosen
}

fn orthonormalize(vs: &[CVector]) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for b in &out {
            let coef = b.dotc(&w);
            w -= b * coef;
        }
        if w.norm() > 1e-10 {
            out.push(w.normalize());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Type2 {
    A,
    B,
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducibilityReport2 {
    #[serde(rename = "type")]
    pub kind: Type2,
    pub n1: Option<i64>,
    pub n2: Option<i64>,
    pub lines: InvariantSubspaces,
}

pub fn classify2(data: &DataPair) -> Result<ReducibilityReport2> {
    classify2_tol(data, linalg::SUBSPACE_REL_TOL)
}

pub fn classify2_tol(data: &DataPair, tol: f64) -> Result<ReducibilityReport2> {
    if data.n() != 2 {
        return Err(Error::Precondition("classify2 needs 2×2 data".into()));
    }
    let exps = data.es.iter().map(distinct_exponents).collect::<Result<Vec<_>>>()?;
    let lines = linalg::common_invariant_subspaces_tol(&data.ms, 1, tol)?;
    let witnesses = line_witnesses(&lines);
    let (kind, n1, n2) = match lines.count_capped() {
        0 => (Type2::A, None, None),
        1 => {
            let n1 = exponent_sum(&on_line(&data.ms, &witnesses[0]), &exps)?;
            (Type2::B, Some(n1), Some(data.kappa - n1))
        }
        _ => {
            let pair = independent(&witnesses, 2);
            if pair.len() < 2 {
                return Err(Error::Precondition("two invariant lines expected".into()));
            }
            let a = exponent_sum(&on_line(&data.ms, &pair[0]), &exps)?;
            let b = exponent_sum(&on_line(&data.ms, &pair[1]), &exps)?;
            check_total(a + b, data.kappa)?;
            (Type2::C, Some(a.max(b)), Some(a.min(b)))
        }
    };
    Ok(ReducibilityReport2 { kind, n1, n2, lines })
}

fn check_total(sum: i64, kappa: i64) -> Result<()> {
    if sum != kappa {
        return Err(Error::Precondition(format!("case integers sum to {sum}, total index is {kappa}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Type3 {
    A,
    B1,
    B2,
    B3,
    C,
    C1,
    C2,
    C3,
    D,
}

/// Case-dependent integers of a 3×3 report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CaseIntegers {
    None,
    /// Types B-1/B-2/B-3: `ν` on the distinguished line or quotient, `N = κ − ν`.
    Block { nu: i64, big_n: i64 },
    /// Types C, C-1, C-2, D: flag integers with the type's normalization.
    Flag { n1: i64, n2: i64, n3: i64 },
    /// Type C-3: `ν₁` on the common line of the planes, `ν₂` on the
    /// quotient by the plane spanned by the lines, `ν#` on the other line.
    Split { nu1: i64, nu2: i64, nu_sharp: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducibilityReport3 {
    #[serde(rename = "type")]
    pub kind: Type3,
    pub integers: CaseIntegers,
    pub lines: InvariantSubspaces,
    pub planes: InvariantSubspaces,
}

pub fn classify3(data: &DataPair) -> Result<ReducibilityReport3> {
    classify3_tol(data, linalg::SUBSPACE_REL_TOL)
}

pub fn classify3_tol(data: &DataPair, tol: f64) -> Result<ReducibilityReport3> {
    if data.n() != 3 {
        return Err(Error::Precondition("classify3 needs 3×3 data".into()));
    }
    let ms = &data.ms;
    let kappa = data.kappa;
    let exps = data.es.iter().map(distinct_exponents).collect::<Result<Vec<_>>>()?;
    let lines = linalg::common_invariant_subspaces_tol(ms, 1, tol)?;
    let planes = linalg::common_invariant_subspaces_tol(ms, 2, tol)?;
    let lw = line_witnesses(&lines);
    let pw = hyperplane_witnesses(&planes, 3);
    let line_sum = |v: &CVector| exponent_sum(&on_line(ms, v), &exps);
    let quotient_sum = |p: &SubspaceBasis| exponent_sum(&on_quotient(ms, p), &exps);

    let (kind, integers) = match (lines.count_capped(), planes.count_capped()) {
        (0, 0) => (Type3::A, CaseIntegers::None),
        (1, 0) => {
            let nu = line_sum(&lw[0])?;
            (Type3::B1, CaseIntegers::Block { nu, big_n: kappa - nu })
        }
        (0, 1) => {
            let nu = quotient_sum(&pw[0])?;
            (Type3::B2, CaseIntegers::Block { nu, big_n: kappa - nu })
        }
        (1, 1) => {
            let n1 = line_sum(&lw[0])?;
            if pw[0].contains(&lw[0], 1e-6) {
                let n3 = quotient_sum(&pw[0])?;
                (Type3::C, CaseIntegers::Flag { n1, n2: kappa - n1 - n3, n3 })
            } else {
                (Type3::B3, CaseIntegers::Block { nu: n1, big_n: kappa - n1 })
            }
        }
        (2, 1) => {
            let pair = independent(&lw, 2);
            let a = line_sum(&pair[0])?;
            let b = line_sum(&pair[1])?;
            let n3 = quotient_sum(&pw[0])?;
            check_total(a + b + n3, kappa)?;
            (Type3::C1, CaseIntegers::Flag { n1: a.max(b), n2: a.min(b), n3 })
        }
        (1, 2) => {
            let n1 = line_sum(&lw[0])?;
            let two = distinct_planes(&pw);
            let a = quotient_sum(&two[0])?;
            let b = quotient_sum(&two[1])?;
            check_total(n1 + a + b, kappa)?;
            (Type3::C2, CaseIntegers::Flag { n1, n2: a.max(b), n3: a.min(b) })
        }
        (2, 2) => {
            let basis = independent(&lw, 3);
            if basis.len() == 3 {
                let mut ns = basis.iter().map(line_sum).collect::<Result<Vec<_>>>()?;
                ns.sort_by(|a, b| b.cmp(a));
                check_total(ns.iter().sum(), kappa)?;
                (Type3::D, CaseIntegers::Flag { n1: ns[0], n2: ns[1], n3: ns[2] })
            } else {
                let two = distinct_planes(&pw);
                let normals: Vec<CVector> =
                    two.iter().map(|p| linalg::orthogonal_complement(&p.basis, 3).remove(0)).collect();
                let l0 = linalg::orthogonal_complement(&normals, 3);
                if l0.len() != 1 {
                    return Err(Error::Precondition("planes of a split flag must meet in a line".into()));
                }
                let p0 = SubspaceBasis::new(orthonormalize(&basis));
                let nu1 = line_sum(&l0[0])?;
                let nu2 = quotient_sum(&p0)?;
                (Type3::C3, CaseIntegers::Split { nu1, nu2, nu_sharp: kappa - nu1 - nu2 })
            }
        }
        (l, p) => {
            return Err(Error::Precondition(format!(
                "inconsistent invariant subspace lattice ({l} line classes, {p} plane classes)"
            )))
        }
    };
    Ok(ReducibilityReport3 { kind, integers, lines, planes })
}

fn distinct_planes(pw: &[SubspaceBasis]) -> Vec<SubspaceBasis> {
    let mut out: Vec<SubspaceBasis> = Vec::new();
    for p in pw {
        if !out.iter().any(|q| q.same_as(p, 1e-6)) {
            out.push(p.clone());
        }
        if out.len() == 2 {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, from_real_rows, from_rows, identity, inverse};
    use crate::symbol::jump_of_exponent;

    fn data(ms: Vec<CMatrix>, p: f64) -> DataPair {
        let m = ms.len();
        let points = (0..m).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)).collect();
        DataPair::from_jumps(ms, p, points).unwrap()
    }

    fn closing(ms: &[CMatrix]) -> CMatrix {
        let n = ms[0].nrows();
        inverse(&ms.iter().fold(identity(n), |acc, m| acc * m)).unwrap()
    }

    #[test]
    fn pairing_examples() {
        let z = pair_exponents(&identity(2), &CMatrix::zeros(2, 2), &[]).unwrap();
        assert!(z.iter().all(|e| e.norm() < 1e-15));
        let m = diag(&[c(0.0, 1.0), c(0.0, -1.0)]);
        let e = diag(&[c(-0.25, 0.0), c(0.25, 0.0)]);
        let e1 = SubspaceBasis::new(vec![CVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)])]);
        let got = pair_exponents(&m, &e, &[e1]).unwrap();
        assert!((got[0] - c(-0.25, 0.0)).norm() < 1e-14 && (got[1] - c(0.25, 0.0)).norm() < 1e-14);
        // two exponents with the same exponential differ by an integer: rejected
        assert!(matches!(pair_eigenvalue(c(1.0, 0.0), &[c(0.0, 0.0), c(1.0, 0.0)]), Err(Error::AmbiguousPairing)));
    }

    #[test]
    fn classify2_examples() {
        let r = classify2(&data(vec![identity(2); 3], 2.0)).unwrap();
        assert_eq!((r.kind, r.n1, r.n2), (Type2::C, Some(0), Some(0)));

        let u = from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]);
        let v = from_real_rows(2, &[1.0, -1.0, 0.0, 1.0]);
        let r = classify2(&data(vec![u.clone(), v, identity(2)], 2.0)).unwrap();
        assert_eq!(r.kind, Type2::B);
        let e1 = CVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(r.lines.isolated[0].space.contains(&e1, 1e-9));

        let rot = from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]);
        let last = closing(&[rot.clone(), u.clone()]);
        let r = classify2(&data(vec![rot, u, last], 2.0)).unwrap();
        assert_eq!(r.kind, Type2::A);
    }

    #[test]
    fn classify2_integers_on_line_and_quotient() {
        // upper triangular tuple with line e₁ carrying exponents (0.3, 0.3, 0.4) → n₁ = 1
        let e_line = [0.3, 0.3, 0.4];
        let e_quot = [-0.2, 0.1, 0.1];
        let mk = |k: usize, b: f64| {
            from_rows(
                2,
                &[jump_of_exponent(c(e_line[k], 0.0)), c(b, 0.0), c(0.0, 0.0), jump_of_exponent(c(e_quot[k], 0.0))],
            )
        };
        let m0 = mk(0, 1.0);
        let m1 = mk(1, 0.5);
        let m2 = closing(&[m0.clone(), m1.clone()]);
        let r = classify2(&data(vec![m0, m1, m2], 2.0)).unwrap();
        assert_eq!(r.kind, Type2::B);
        assert_eq!((r.n1, r.n2), (Some(1), Some(0)));
    }

    #[test]
    fn classify3_examples() {
        let r = classify3(&data(vec![identity(3); 3], 2.0)).unwrap();
        assert_eq!(r.kind, Type3::D);
        assert_eq!(r.integers, CaseIntegers::Flag { n1: 0, n2: 0, n3: 0 });

        // unipotent upper triangular with a unique flag
        let u = from_real_rows(3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        let v = from_real_rows(3, &[1.0, 0.5, 2.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0]);
        let w = closing(&[u.clone(), v.clone()]);
        let r = classify3(&data(vec![u.clone(), v.clone(), w], 2.0)).unwrap();
        assert_eq!(r.kind, Type3::C);

        // block-diagonal (irreducible 2×2, 1): one line, one plane, transversal
        let rot = from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]);
        let jb = from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]);
        let last = closing(&[rot.clone(), jb.clone()]);
        let embed = |b: &CMatrix, s: C64| {
            let mut out = CMatrix::zeros(3, 3);
            out[(0, 0)] = s;
            out.view_mut((1, 1), (2, 2)).copy_from(b);
            out
        };
        let s0 = jump_of_exponent(c(0.2, 0.0));
        let s1 = jump_of_exponent(c(0.1, 0.0));
        let s2 = c(1.0, 0.0) / (s0 * s1);
        let r = classify3(&data(vec![embed(&rot, s0), embed(&jb, s1), embed(&last, s2)], 2.0)).unwrap();
        assert_eq!(r.kind, Type3::B3);
    }
}
