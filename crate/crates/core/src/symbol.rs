//! Piecewise constant matrix symbols on the unit circle and their data pairs.
//!
//! The arg-increment part of the total index vanishes identically for
//! piecewise constant symbols (the determinant is constant on every arc), so
//! the total index is computed from the traces of the logarithms alone.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, BranchInterval, CMatrix, C64, I};

pub const TOL_PRODUCT: f64 = 1e-10;
/// Tolerance for rounding totals (sums of exponents) to integers.
pub const TOL_INTEGER: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSymbol {
    pub n: usize,
    pub p: f64,
    /// Strictly increasing angles in `[0, 2π)`.
    pub jump_angles: Vec<f64>,
    /// `arc_values[k]` is the value on the arc from `a_k` to `a_{k+1}`.
    #[serde(with = "crate::json::matrices")]
    pub arc_values: Vec<CMatrix>,
}

impl PiecewiseSymbol {
    pub fn new(n: usize, p: f64, jump_angles: Vec<f64>, arc_values: Vec<CMatrix>) -> Result<Self> {
        let s = PiecewiseSymbol { n, p, jump_angles, arc_values };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let m = self.jump_angles.len();
        if m == 0 {
            return Err(Error::InvalidInput("a symbol needs at least one jump".into()));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("exponent p = {} must lie in (1, ∞)", self.p)));
        }
        if self.n == 0 || self.n > 3 {
            return Err(Error::InvalidInput(format!("dimension {} outside 1..3", self.n)));
        }
        if self.arc_values.len() != m {
            return Err(Error::InvalidInput(format!("{} jumps but {} arc values", m, self.arc_values.len())));
        }
        if self.arc_values.iter().any(|a| a.shape() != (self.n, self.n)) {
            return Err(Error::InvalidInput("arc value of wrong shape".into()));
        }
        let in_range = self.jump_angles.iter().all(|&t| (0.0..2.0 * PI).contains(&t));
        let increasing = self.jump_angles.windows(2).all(|w| w[0] < w[1]);
        if !in_range || !increasing {
            return Err(Error::InvalidInput("jump angles must be strictly increasing in [0, 2π)".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.jump_angles.len()
    }

    pub fn points(&self) -> Vec<C64> {
        self.jump_angles.iter().map(|&t| C64::from_polar(1.0, t)).collect()
    }

    pub fn interval(&self) -> BranchInterval {
        BranchInterval::for_exponent(self.p)
    }

    /// End angle of arc `k` (the start of the next arc, unwrapped).
    fn arc_end(&self, k: usize) -> f64 {
        let m = self.m();
        if k + 1 < m {
            self.jump_angles[k + 1]
        } else {
            self.jump_angles[0] + 2.0 * PI
        }
    }

    /// `count` interior sample angles on arc `k`, equally spaced at cell midpoints.
    pub fn arc_sample_angles(&self, k: usize, count: usize) -> Vec<f64> {
        let (a, b) = (self.jump_angles[k], self.arc_end(k));
        (0..count).map(|j| a + (b - a) * (j as f64 + 0.5) / count as f64).collect()
    }

    /// Chebyshev-spaced interior sample angles on arc `k`.
    pub fn arc_chebyshev_angles(&self, k: usize, count: usize) -> Vec<f64> {
        let (a, b) = (self.jump_angles[k], self.arc_end(k));
        (0..count)
            .map(|j| {
                let x = ((2 * j + 1) as f64 * PI / (2 * count) as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * x
            })
            .collect()
    }

    /// Value at an angle (off the jump set).
    pub fn value_at(&self, angle: f64) -> &CMatrix {
        let t = angle.rem_euclid(2.0 * PI);
        let m = self.m();
        let k = (0..m).rev().find(|&k| self.jump_angles[k] <= t).unwrap_or(m - 1);
        &self.arc_values[k]
    }
}

/// `M_k = G(a_k − 0)·G(a_k + 0)⁻¹`.
pub fn jump_matrices(sym: &PiecewiseSymbol) -> Result<Vec<CMatrix>> {
    let m = sym.m();
    let inverses = sym.arc_values.iter().map(linalg::inverse).collect::<Result<Vec<_>>>()?;
    let ms: Vec<CMatrix> = (0..m).map(|k| &sym.arc_values[(k + m - 1) % m] * &inverses[k]).collect();
    let defect = product_defect(&ms);
    if defect > TOL_PRODUCT * (1.0 + ms.iter().map(linalg::norm).fold(0.0, f64::max)).powi(m as i32) {
        return Err(Error::NonConvergence);
    }
    Ok(ms)
}

/// `‖M₁⋯M_m − I‖`.
pub fn product_defect(ms: &[CMatrix]) -> f64 {
    let n = ms[0].nrows();
    let prod = ms.iter().fold(linalg::identity(n), |acc, m| acc * m);
    (prod - linalg::identity(n)).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum PhiFailure {
    SingularArc { arc: usize, det: f64 },
    EigenvalueOnBoundary { jump: usize, eigenvalue: C64, distance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PhiStatus {
    Ok,
    Fail { failures: Vec<PhiFailure> },
}

impl PhiStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, PhiStatus::Ok)
    }
}

/// Invertibility of all one-sided values plus `arg λ/2π + 1/p ∉ ℤ` for every
/// jump eigenvalue.
pub fn phi_criterion(sym: &PiecewiseSymbol) -> PhiStatus {
    let mut failures = Vec::new();
    for (k, a) in sym.arc_values.iter().enumerate() {
        if !linalg::is_invertible(a) {
            failures.push(PhiFailure::SingularArc { arc: k, det: linalg::det(a).norm() });
        }
    }
    if failures.is_empty() {
        match jump_matrices(sym) {
            Ok(ms) => {
                for (k, m) in ms.iter().enumerate() {
                    let Ok(spec) = linalg::eigen(m) else { continue };
                    for mu in spec.values() {
                        if let Err(Error::BranchOnBoundary { mu, distance }) = linalg::scalar_branch_log(mu, sym.interval()) {
                            failures.push(PhiFailure::EigenvalueOnBoundary { jump: k, eigenvalue: mu, distance });
                        }
                    }
                }
            }
            Err(_) => failures.push(PhiFailure::SingularArc { arc: 0, det: 0.0 }),
        }
    }
    if failures.is_empty() {
        PhiStatus::Ok
    } else {
        PhiStatus::Fail { failures }
    }
}

/// The jump matrices together with their branch-selected logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPair {
    #[serde(with = "crate::json::matrices")]
    pub ms: Vec<CMatrix>,
    #[serde(with = "crate::json::matrices")]
    pub es: Vec<CMatrix>,
    /// `zetas[k][j]`: real parts of the eigenvalues of `E_k`.
    pub zetas: Vec<Vec<f64>>,
    pub kappa: i64,
    pub p: f64,
    /// Jump points `a_k` on the unit circle.
    pub points: Vec<C64>,
}

impl DataPair {
    pub fn n(&self) -> usize {
        self.ms[0].nrows()
    }

    pub fn m(&self) -> usize {
        self.ms.len()
    }

    pub fn interval(&self) -> BranchInterval {
        BranchInterval::for_exponent(self.p)
    }

    /// Builds the data pair directly from a jump tuple (no symbol needed).
    pub fn from_jumps(ms: Vec<CMatrix>, p: f64, points: Vec<C64>) -> Result<Self> {
        if ms.is_empty() || ms.len() != points.len() {
            return Err(Error::InvalidInput("jump tuple and points must be nonempty and of equal length".into()));
        }
        let j = BranchInterval::for_exponent(p);
        let es = ms.iter().map(|m| linalg::branch_log(m, j)).collect::<Result<Vec<_>>>()?;
        let mut zetas = Vec::with_capacity(es.len());
        for e in &es {
            let values = linalg::eigen(e)?.with_multiplicity();
            check_non_resonant(&values)?;
            zetas.push(values.iter().map(|z| z.re).collect());
        }
        let total: C64 = es.iter().map(|e| e.trace()).sum();
        let kappa = round_integer(total)?;
        Ok(DataPair { ms, es, zetas, kappa, p, points })
    }
}

/// Rounds a complex number expected to be an integer.
pub fn round_integer(z: C64) -> Result<i64> {
    let r = z.re.round();
    if (z.re - r).abs() > TOL_INTEGER || z.im.abs() > TOL_INTEGER {
        return Err(Error::NonIntegral { value: z });
    }
    Ok(r as i64)
}

/// Rejects eigenvalue lists containing two entries that differ by a nonzero integer.
pub fn check_non_resonant(values: &[C64]) -> Result<()> {
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            let d = a - b;
            let r = d.re.round();
            if r != 0.0 && (d.re - r).abs() < 1e-8 && d.im.abs() < 1e-8 {
                return Err(Error::ResonantData { a: *a, b: *b });
            }
        }
    }
    Ok(())
}

pub fn extract_data(sym: &PiecewiseSymbol) -> Result<DataPair> {
    sym.check()?;
    if let PhiStatus::Fail { failures } = phi_criterion(sym) {
        return Err(match failures.into_iter().next() {
            Some(PhiFailure::SingularArc { det, .. }) => Error::Singular { det },
            Some(PhiFailure::EigenvalueOnBoundary { eigenvalue, distance, .. }) => {
                Error::BranchOnBoundary { mu: eigenvalue, distance }
            }
            None => Error::NonConvergence,
        });
    }
    DataPair::from_jumps(jump_matrices(sym)?, sym.p, sym.points())
}

/// `log(t − a)` with the cut on the ray from `a` away from the origin.
fn log_outward(t: C64, a: C64) -> C64 {
    let w = (t - a) / a;
    let mut arg = w.arg();
    if arg <= 0.0 {
        arg += 2.0 * PI;
    }
    c(w.norm().ln(), arg) + a.ln()
}

/// `log(1 − a/t)` with the cut on the segment from 0 to `a`.
fn log_inward(t: C64, a: C64) -> C64 {
    (c(1.0, 0.0) - a / t).ln()
}

/// Closed-form factorization of a scalar piecewise constant symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFactorization {
    pub eps: Vec<C64>,
    pub kappa: i64,
    pub constant: C64,
    pub points: Vec<C64>,
}

impl ScalarFactorization {
    /// `G₊(t) = c ∏ (t − a_k)^{−ε_k}`, analytic inside the circle.
    pub fn g_plus(&self, t: C64) -> C64 {
        let s: C64 = self.eps.iter().zip(&self.points).map(|(e, a)| -e * log_outward(t, *a)).sum();
        self.constant * s.exp()
    }

    /// `G₋(t) = ∏ (1 − a_k/t)^{ε_k}`, analytic outside the circle with `G₋(∞) = 1`.
    pub fn g_minus(&self, t: C64) -> C64 {
        let s: C64 = self.eps.iter().zip(&self.points).map(|(e, a)| e * log_inward(t, *a)).sum();
        s.exp()
    }

    pub fn reconstruct(&self, t: C64) -> C64 {
        self.g_plus(t) * t.powi(self.kappa as i32) * self.g_minus(t)
    }

    /// Max of `|G₊ t^κ G₋ − G|` over `samples` points per arc.
    pub fn residual(&self, sym: &PiecewiseSymbol, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..sym.m() {
            for angle in sym.arc_sample_angles(k, samples) {
                let t = C64::from_polar(1.0, angle);
                worst = worst.max((self.reconstruct(t) - sym.value_at(angle)[(0, 0)]).norm());
            }
        }
        worst
    }
}

pub fn scalar_factorize(sym: &PiecewiseSymbol) -> Result<ScalarFactorization> {
    if sym.n != 1 {
        return Err(Error::Precondition("scalar factorization needs n = 1".into()));
    }
    let data = extract_data(sym)?;
    let mut f = ScalarFactorization {
        eps: data.es.iter().map(|e| e[(0, 0)]).collect(),
        kappa: data.kappa,
        constant: c(1.0, 0.0),
        points: data.points.clone(),
    };
    let angle = sym.arc_sample_angles(0, 1)[0];
    let t = C64::from_polar(1.0, angle);
    f.constant = sym.value_at(angle)[(0, 0)] / f.reconstruct(t);
    Ok(f)
}

/// Explicit factorization for two jumps, where all values commute after
/// normalisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutingFactorization {
    /// Partial indices, non-increasing.
    pub indices: Vec<i64>,
    #[serde(with = "crate::json::matrices")]
    pub es: Vec<CMatrix>,
    pub points: Vec<C64>,
    /// Eigenbasis of `E₁ + E₂` ordered like `indices`.
    #[serde(with = "crate::json::matrix")]
    pub basis: CMatrix,
    #[serde(with = "crate::json::matrix")]
    pub constant: CMatrix,
}

impl CommutingFactorization {
    fn power(e: &CMatrix, log: C64) -> CMatrix {
        linalg::exp_scaled(e, log).expect("logarithm of a non-resonant matrix has a spectrum")
    }

    /// `G₊(t) = (t − a₁)^{−E₁}(t − a₂)^{−E₂}·S`.
    pub fn g_plus(&self, t: C64) -> CMatrix {
        let mut out = linalg::identity(self.basis.nrows());
        for (e, a) in self.es.iter().zip(&self.points) {
            out = out * Self::power(e, -log_outward(t, *a));
        }
        out * &self.basis
    }

    /// `Λ(t) = diag(t^{κ_j})`.
    pub fn lambda(&self, t: C64) -> CMatrix {
        let d: Vec<C64> = self.indices.iter().map(|&k| t.powi(k as i32)).collect();
        linalg::diag(&d)
    }

    /// `G₋(t) = S⁻¹ (1 − a₁/t)^{E₁}(1 − a₂/t)^{E₂}·C`.
    pub fn g_minus(&self, t: C64) -> CMatrix {
        let mut out = linalg::inverse(&self.basis).expect("eigenbasis is invertible");
        for (e, a) in self.es.iter().zip(&self.points) {
            out = out * Self::power(e, log_inward(t, *a));
        }
        out * &self.constant
    }

    pub fn reconstruct(&self, t: C64) -> CMatrix {
        self.g_plus(t) * self.lambda(t) * self.g_minus(t)
    }

    pub fn residual(&self, sym: &PiecewiseSymbol, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..sym.m() {
            for angle in sym.arc_sample_angles(k, samples) {
                let t = C64::from_polar(1.0, angle);
                worst = worst.max((self.reconstruct(t) - sym.value_at(angle)).norm());
            }
        }
        worst
    }
}

pub fn commuting_factorize_m2(sym: &PiecewiseSymbol) -> Result<CommutingFactorization> {
    if sym.m() != 2 {
        return Err(Error::Precondition("the commuting factorization needs exactly two jumps".into()));
    }
    let data = extract_data(sym)?;
    let n = sym.n;
    let sum = &data.es[0] + &data.es[1];
    let spectrum = linalg::eigen(&sum)?;
    if spectrum.clusters.iter().any(|cl| cl.geometric != cl.algebraic) {
        return Err(Error::NonDiagonalizableSum);
    }
    let mut columns: Vec<(i64, linalg::CVector)> = Vec::with_capacity(n);
    for cl in &spectrum.clusters {
        let k = round_integer(cl.value)?;
        for v in &cl.chain {
            columns.push((k, v.clone()));
        }
    }
    columns.sort_by(|a, b| b.0.cmp(&a.0));
    let indices: Vec<i64> = columns.iter().map(|(k, _)| *k).collect();
    let basis = CMatrix::from_columns(&columns.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
    let mut f = CommutingFactorization {
        indices,
        es: data.es.clone(),
        points: data.points.clone(),
        basis,
        constant: linalg::identity(n),
    };
    let angle = sym.arc_sample_angles(0, 1)[0];
    let t = C64::from_polar(1.0, angle);
    // with C = I the product is H(t); the true constant is H(t)⁻¹ G(t)
    let h = f.reconstruct(t);
    f.constant = linalg::inverse(&h)? * sym.value_at(angle);
    Ok(f)
}

/// `exp(−2πi ε)`.
pub fn jump_of_exponent(eps: C64) -> C64 {
    (-2.0 * PI * I * eps).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, from_rows, identity};

    fn scalar_symbol(p: f64, angles: Vec<f64>, values: &[C64]) -> PiecewiseSymbol {
        let arcs = values.iter().map(|v| from_rows(1, &[*v])).collect();
        PiecewiseSymbol::new(1, p, angles, arcs).unwrap()
    }

    #[test]
    fn constant_symbol_has_trivial_jumps() {
        let a = from_rows(2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(3.0, 0.0)]);
        let sym = PiecewiseSymbol::new(2, 2.0, vec![0.0, 2.0, 4.0], vec![a.clone(), a.clone(), a]).unwrap();
        for m in jump_matrices(&sym).unwrap() {
            assert!((m - identity(2)).norm() < 1e-14);
        }
        let data = extract_data(&sym).unwrap();
        assert_eq!(data.kappa, 0);
        assert!(data.es.iter().all(|e| e.norm() < 1e-14));
    }

    #[test]
    fn scalar_sign_flip_jumps() {
        let sym = scalar_symbol(2.0, vec![0.0, PI], &[c(1.0, 0.0), c(-1.0, 0.0)]);
        let ms = jump_matrices(&sym).unwrap();
        assert!((ms[0][(0, 0)] + 1.0).norm() < 1e-15 && (ms[1][(0, 0)] + 1.0).norm() < 1e-15);
        // arg(−1)/2π + 1/2 = 1 is an integer
        assert!(!phi_criterion(&sym).is_ok());
        assert!(matches!(extract_data(&sym), Err(Error::BranchOnBoundary { .. })));
        // p = 4: ε = −1/2 ∈ (−3/4, 1/4)
        let sym4 = scalar_symbol(4.0, vec![0.0, PI], &[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(phi_criterion(&sym4).is_ok());
        let data = extract_data(&sym4).unwrap();
        for e in &data.es {
            assert!((e[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-14);
        }
        assert_eq!(data.kappa, -1);
    }

    #[test]
    fn scalar_quarter_turn_data() {
        let sym = scalar_symbol(2.0, vec![0.0, PI], &[c(1.0, 0.0), c(0.0, 1.0)]);
        let data = extract_data(&sym).unwrap();
        // jumps are arc[k−1]/arc[k]: M at a₀ is i/1, at a₁ it is 1/i
        assert!((data.ms[0][(0, 0)] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((data.ms[1][(0, 0)] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((data.es[0][(0, 0)] - c(-0.25, 0.0)).norm() < 1e-14);
        assert!((data.es[1][(0, 0)] - c(0.25, 0.0)).norm() < 1e-14);
        assert_eq!(data.kappa, 0);

        let sym43 = scalar_symbol(4.0 / 3.0, vec![0.0, PI], &[c(1.0, 0.0), c(0.0, 1.0)]);
        assert!(matches!(extract_data(&sym43), Err(Error::BranchOnBoundary { .. })));
    }

    #[test]
    fn scalar_factorization_examples() {
        let sym = scalar_symbol(2.0, vec![0.3, 2.5], &[c(5.0, 0.0), c(5.0, 0.0)]);
        let f = scalar_factorize(&sym).unwrap();
        assert_eq!(f.kappa, 0);
        assert!((f.constant - c(5.0, 0.0)).norm() < 1e-14);
        assert!(f.residual(&sym, 64) < 1e-12);

        let sym = scalar_symbol(2.0, vec![0.0, PI], &[c(1.0, 0.0), c(0.0, 1.0)]);
        let f = scalar_factorize(&sym).unwrap();
        assert_eq!(f.kappa, 0);
        assert!(f.residual(&sym, 64) < 1e-10);

        // with J = (−1/6, 5/6) the exponents are 3/4 and 1/4
        let sym = scalar_symbol(1.2, vec![0.0, PI], &[c(1.0, 0.0), c(0.0, -1.0)]);
        let f = scalar_factorize(&sym).unwrap();
        assert_eq!(f.kappa, 1);
        assert!(f.residual(&sym, 64) < 1e-10);
    }

    #[test]
    fn commuting_examples() {
        let two = |m1: CMatrix, p: f64| {
            // arcs (I, M₁) give jumps (M₁, M₁⁻¹)
            PiecewiseSymbol::new(m1.nrows(), p, vec![0.5, 3.0], vec![identity(m1.nrows()), m1]).unwrap()
        };
        let f = commuting_factorize_m2(&two(identity(2), 2.0)).unwrap();
        assert_eq!(f.indices, vec![0, 0]);

        let sym = two(diag(&[c(0.0, 1.0), c(0.0, -1.0)]), 2.0);
        let data = extract_data(&sym).unwrap();
        assert!((&data.es[0] - diag(&[c(-0.25, 0.0), c(0.25, 0.0)])).norm() < 1e-14);
        let f = commuting_factorize_m2(&sym).unwrap();
        assert_eq!(f.indices, vec![0, 0]);
        assert!(f.residual(&sym, 64) < 1e-10);

        let mu = jump_of_exponent(c(0.4, 0.0));
        let m1 = diag(&[mu, c(1.0, 0.0)]);
        let f = commuting_factorize_m2(&two(m1.clone(), 2.0)).unwrap();
        assert_eq!(f.indices, vec![0, 0]);
        // J = (−1/3, 2/3): the inverse jump takes exponent 0.6, total 1
        let sym = two(m1, 1.5);
        let f = commuting_factorize_m2(&sym).unwrap();
        assert_eq!(f.indices, vec![1, 0]);
        assert!(f.residual(&sym, 64) < 1e-10);

        let jb = from_rows(2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let sym = two(jb, 2.0);
        let f = commuting_factorize_m2(&sym).unwrap();
        assert_eq!(f.indices, vec![0, 0]);
        assert!(f.residual(&sym, 64) < 1e-10);
    }

    #[test]
    fn generated_arcs_reproduce_jump_tuple() {
        // G₀ = I, G_k = M_k⁻¹ G_{k−1} realises a prescribed tuple with product I
        let m0 = from_rows(2, &[c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        let m1 = from_rows(2, &[c(1.0, 0.0), c(0.0, 0.0), c(2.0, -1.0), c(1.0, 0.5)]);
        let m2 = linalg::inverse(&(&m0 * &m1)).unwrap();
        let ms = [m0, m1, m2];
        let mut arcs = vec![identity(2)];
        for k in 1..3 {
            let next = linalg::inverse(&ms[k]).unwrap() * &arcs[k - 1];
            arcs.push(next);
        }
        let sym = PiecewiseSymbol::new(2, 2.0, vec![0.1, 1.0, 4.0], arcs).unwrap();
        let got = jump_matrices(&sym).unwrap();
        for k in 0..3 {
            assert!((&got[k] - &ms[k]).norm() < 1e-12, "jump {k}");
        }
    }
}
