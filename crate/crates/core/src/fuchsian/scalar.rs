//! Scalar Fuchsian equations `y^{(n)} + q₁ y^{(n−1)} + … + q_n y = 0` with
//! `q_j = Q_j / p^{d_j}`, their companion systems and one-parameter families
//! with prescribed local exponents and an ordinary point at infinity.

use super::{check_separated, derivative_at, MatrixField};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};
use crate::poly::Poly;
use serde::{Deserialize, Serialize};

/// Relative threshold for singular values treated as zero in the family solve.
const RANK_TOL: f64 = 1e-9;
/// Admissible residual of the linear constraints and the Fuchs relation.
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFuchsEq {
    pub n: usize,
    pub singularities: Vec<C64>,
    /// `Q_1 … Q_n`.
    pub numerators: Vec<Poly>,
    /// `d_1 … d_n`; `d_j = j` for equations built here.
    pub pole_orders: Vec<usize>,
}

fn falling(n: usize) -> Poly {
    (0..n).fold(Poly::constant(c(1.0, 0.0)), |acc, i| &acc * &Poly::linear_root(c(i as f64, 0.0)))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Point at infinity in error reports.
fn infinity() -> C64 {
    c(f64::INFINITY, 0.0)
}

impl ScalarFuchsEq {
    /// Equation with the natural pole orders `d_j = j`.
    pub fn new(singularities: Vec<C64>, numerators: Vec<Poly>) -> Self {
        let n = numerators.len();
        ScalarFuchsEq { n, singularities, numerators, pole_orders: (1..=n).collect() }
    }

    pub fn m(&self) -> usize {
        self.singularities.len()
    }

    /// `q_j(z)` for `j ∈ 1..=n`.
    pub fn q(&self, j: usize, z: C64) -> C64 {
        let p: C64 = self.singularities.iter().map(|&a| z - a).product();
        self.numerators[j - 1].eval(z) / p.powu(self.pole_orders[j - 1] as u32)
    }

    /// `r_j = lim (z − a_k)^j q_j(z)`, `j = 1..n`.
    pub fn local_coefficients(&self, k: usize) -> Result<Vec<C64>> {
        check_separated(&self.singularities)?;
        let a = self.singularities[k];
        let pk = derivative_at(&self.singularities, k);
        let mut out = Vec::with_capacity(self.n);
        for j in 1..=self.n {
            let d = self.pole_orders[j - 1];
            let q = &self.numerators[j - 1];
            let excess = d as i64 - j as i64;
            if excess <= 0 {
                out.push(if excess == 0 { q.eval(a) / pk.powu(d as u32) } else { c(0.0, 0.0) });
                continue;
            }
            // the pole order exceeds j unless Q_j vanishes to order `excess` at a_k
            let scale = q.coeffs.iter().fold(1.0f64, |s, z| s.max(z.norm()));
            let mut deriv = q.clone();
            for r in 0..excess as usize {
                if deriv.eval(a).norm() > 1e-9 * scale * (1.0 + factorial(r)) {
                    return Err(Error::NotFuchsianAt(a));
                }
                deriv = deriv.derivative();
            }
            out.push(deriv.eval(a) / factorial(excess as usize) / pk.powu(d as u32));
        }
        Ok(out)
    }

    pub fn is_fuchsian_at(&self, k: usize) -> bool {
        self.local_coefficients(k).is_ok()
    }

    /// Roots of `ρ^{(n)} + Σ_j r_j ρ^{(n−j)}` (falling factorials).
    pub fn exponents_at(&self, k: usize) -> Result<Vec<C64>> {
        let r = self.local_coefficients(k)?;
        let mut poly = falling(self.n);
        for (j, rj) in r.iter().enumerate() {
            poly = &poly + &falling(self.n - j - 1).scale(*rj);
        }
        Ok(poly.roots())
    }

    /// `c_j = lim z^j q_j(z)`, the coefficients at infinity.
    fn infinity_coefficients(&self) -> Result<Vec<C64>> {
        let m = self.m();
        let mut out = Vec::with_capacity(self.n);
        for j in 1..=self.n {
            let q = &self.numerators[j - 1];
            let top = (m * self.pole_orders[j - 1]) as i64 - j as i64;
            let scale = q.coeffs.iter().fold(1.0f64, |s, z| s.max(z.norm()));
            if q.numerical_degree(1e-12 * scale).is_some_and(|d| d as i64 > top) {
                return Err(Error::NotFuchsianAt(infinity()));
            }
            out.push(if top >= 0 { q.coeff(top as usize) } else { c(0.0, 0.0) });
        }
        Ok(out)
    }

    /// Exponents at infinity in the local variable `w = 1/z`; an ordinary point
    /// has exponents `0, 1, …, n−1`.
    pub fn exponents_at_infinity(&self) -> Result<Vec<C64>> {
        let cs = self.infinity_coefficients()?;
        let minus = |k: usize| {
            // (−ρ)(−ρ−1)…(−ρ−k+1) as a polynomial in ρ
            (0..k).fold(Poly::constant(c(1.0, 0.0)), |acc, i| &acc * &Poly::new(vec![c(-(i as f64), 0.0), c(-1.0, 0.0)]))
        };
        let mut poly = minus(self.n);
        for (j, cj) in cs.iter().enumerate() {
            poly = &poly + &minus(self.n - j - 1).scale(*cj);
        }
        Ok(poly.roots())
    }

    /// `|Σ exponents − (m' − 2) n(n−1)/2|` over the `m' = m + 1` points including
    /// infinity; an ordinary point at infinity contributes `n(n−1)/2`, so this is
    /// the usual relation over the genuinely singular points.
    pub fn fuchs_residual(&self) -> Result<f64> {
        let mut sum = c(0.0, 0.0);
        for k in 0..self.m() {
            sum += self.exponents_at(k)?.iter().sum::<C64>();
        }
        sum += self.exponents_at_infinity()?.iter().sum::<C64>();
        let n = self.n as f64;
        Ok((sum - c((self.m() as f64 - 1.0) * n * (n - 1.0) / 2.0, 0.0)).norm())
    }
}

/// `W' = A₀ W` for `W = (y^{(n−1)}, …, y', y)ᵀ`.
#[derive(Debug, Clone)]
pub struct CompanionSystem {
    pub eq: ScalarFuchsEq,
}

impl CompanionSystem {
    pub fn new(eq: ScalarFuchsEq) -> Self {
        CompanionSystem { eq }
    }
}

impl MatrixField for CompanionSystem {
    fn dim(&self) -> usize {
        self.eq.n
    }

    fn singularities(&self) -> &[C64] {
        &self.eq.singularities
    }

    fn eval(&self, z: C64) -> CMatrix {
        let n = self.eq.n;
        let mut a = CMatrix::zeros(n, n);
        for j in 1..=n {
            a[(0, j - 1)] = -self.eq.q(j, z);
        }
        for i in 1..n {
            a[(i, i - 1)] = c(1.0, 0.0);
        }
        a
    }
}

/// Family `Q(t) = Q_p + t·v` of numerators with fixed local exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessoryFamily {
    pub n: usize,
    pub singularities: Vec<C64>,
    pub exponents: Vec<Vec<C64>>,
    /// Minimum-norm solution of the constraints, stacked `Q_1, …, Q_n`.
    pub particular: Vec<C64>,
    /// Unit null direction, phase-fixed so its largest entry is real positive.
    pub direction: Vec<C64>,
    /// Largest singular value of the constraint matrix over the smallest kept one.
    pub condition: f64,
}

impl AccessoryFamily {
    fn degrees(&self) -> Vec<usize> {
        let m = self.singularities.len();
        (1..=self.n).map(|j| j * (m - 1)).collect()
    }

    pub fn at(&self, t: C64) -> ScalarFuchsEq {
        let mut offset = 0;
        let mut numerators = Vec::with_capacity(self.n);
        for d in self.degrees() {
            let coeffs = (offset..=offset + d).map(|i| self.particular[i] + t * self.direction[i]).collect();
            numerators.push(Poly::new(coeffs));
            offset += d + 1;
        }
        ScalarFuchsEq::new(self.singularities.clone(), numerators)
    }

    pub fn companion(&self, t: C64) -> CompanionSystem {
        CompanionSystem::new(self.at(t))
    }
}

/// Coefficients `r_1..r_n` with `∏(s − ρ_i) = s^{(n)} + Σ_j r_j s^{(n−j)}`.
fn indicial_coefficients(exps: &[C64]) -> Vec<C64> {
    let n = exps.len();
    let target = Poly::from_roots(exps);
    // evaluating at s = 0, 1, …, n−1 leaves a triangular system in r_n, r_{n−1}, …
    let mut r = vec![c(0.0, 0.0); n + 1];
    r[0] = c(1.0, 0.0);
    for s in 0..n {
        let x = c(s as f64, 0.0);
        let known: C64 = (0..n - s).map(|j| r[j] * falling(n - j).eval(x)).sum::<C64>()
            + (n - s + 1..=n).map(|j| r[j] * falling(n - j).eval(x)).sum::<C64>();
        // the coefficient of r_{n−s} is s^{(s)} = s!
        r[n - s] = (target.eval(x) - known) / factorial(s);
    }
    r.split_off(1)
}

/// Series coefficients of `1/∏(1 − a_k w)` up to `w^{len−1}`.
fn inverse_series(points: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); len];
    out[0] = c(1.0, 0.0);
    for &a in points {
        // multiply by 1/(1 − a w) = Σ a^i w^i
        for i in 1..len {
            let prev = out[i - 1];
            out[i] += a * prev;
        }
    }
    out
}

fn series_mul(x: &[C64], y: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); len];
    for (i, &a) in x.iter().enumerate().take(len) {
        for (j, &b) in y.iter().enumerate().take(len - i) {
            out[i + j] += a * b;
        }
    }
    out
}

/// `(−w² d/dw)^k = Σ_l b_{k,l}(w) d^l/dw^l`, returned as `b[k][l]`.
fn derivation_powers(n: usize) -> Vec<Vec<Poly>> {
    let minus_w2 = Poly::monomial(c(-1.0, 0.0), 2);
    let mut b = vec![vec![Poly::constant(c(1.0, 0.0))]];
    for k in 0..n {
        let prev = &b[k];
        let next: Vec<Poly> = (0..=k + 1)
            .map(|l| {
                let from_derivative = prev.get(l).map_or(Poly::zero(), |p| &minus_w2 * &p.derivative());
                let from_shift = if l > 0 { prev.get(l - 1).map_or(Poly::zero(), |p| &minus_w2 * p) } else { Poly::zero() };
                &from_derivative + &from_shift
            })
            .collect();
        b.push(next);
    }
    b
}

/// One-parameter family of order-`n` equations with singularities `points`,
/// local exponents `exponents[k]` at `a_k` and an ordinary point at infinity.
pub fn accessory_family(n: usize, points: &[C64], exponents: &[Vec<C64>]) -> Result<AccessoryFamily> {
    let m = points.len();
    if n == 0 || m < 2 || exponents.len() != m || exponents.iter().any(|e| e.len() != n) {
        return Err(Error::Precondition(format!("need {m} exponent lists of length {n} and m >= 2")));
    }
    check_separated(points)?;
    let total: C64 = exponents.iter().flatten().sum();
    let fuchs = (m as f64 - 2.0) * (n * (n - 1)) as f64 / 2.0;
    let residual = (total - c(fuchs, 0.0)).norm();
    if residual > CONSISTENCY_TOL {
        return Err(Error::FuchsViolation(residual));
    }

    let degrees: Vec<usize> = (1..=n).map(|j| j * (m - 1)).collect();
    let offsets: Vec<usize> = degrees.iter().scan(0, |acc, d| {
        let o = *acc;
        *acc += d + 1;
        Some(o)
    }).collect();
    let unknowns: usize = degrees.iter().map(|d| d + 1).sum();
    let mut rows: Vec<(Vec<C64>, C64)> = Vec::new();

    // local exponents: Q_j(a_k) = r_j^{(k)} p'(a_k)^j
    for k in 0..m {
        let r = indicial_coefficients(&exponents[k]);
        let pk = derivative_at(points, k);
        for j in 1..=n {
            let mut row = vec![c(0.0, 0.0); unknowns];
            let mut power = c(1.0, 0.0);
            for i in 0..=degrees[j - 1] {
                row[offsets[j - 1] + i] = power;
                power *= points[k];
            }
            rows.push((row, r[j - 1] * pk.powu(j as u32)));
        }
    }

    // ordinary point at infinity: in w = 1/z the coefficient C_l(w) of u^{(l)},
    // l < n, must vanish to order 2n at w = 0
    let len = 2 * n;
    let b = derivation_powers(n);
    let base = inverse_series(points, len);
    let mut powers = vec![vec![c(1.0, 0.0)]];
    for j in 1..=n {
        powers.push(series_mul(&powers[j - 1], &base, len));
    }
    for l in 0..n {
        for r in 0..len {
            let mut row = vec![c(0.0, 0.0); unknowns];
            for j in 1..=n {
                let coeff_l = b[n - j].get(l).map_or(Poly::zero(), |p| p.clone());
                let g = series_mul(&powers[j], &coeff_l.coeffs, len);
                // q_j(1/w) = Σ_i Q_{j,i} w^{jm − i} · powers[j]
                for i in 0..=degrees[j - 1] {
                    let shift = j * m - i;
                    if r >= shift {
                        row[offsets[j - 1] + i] += g[r - shift];
                    }
                }
            }
            let rhs = -b[n].get(l).map_or(c(0.0, 0.0), |p| p.coeff(r));
            rows.push((row, rhs));
        }
    }

    let a = CMatrix::from_fn(rows.len(), unknowns, |i, j| rows[i].0[j]);
    let rhs = CVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let svd = linalg::svd(&a)?;
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = RANK_TOL * smax;
    let null: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= cut).collect();
    let nullity = null.len() + unknowns.saturating_sub(sv.len());
    if nullity != 1 {
        return Err(Error::Precondition(format!(
            "accessory family for n = {n}, m = {m} has {nullity} free parameters, expected 1"
        )));
    }
    let x = svd.solve(&rhs, cut);
    let defect = (&a * &x - &rhs).norm();
    if defect > CONSISTENCY_TOL * (1.0 + rhs.norm()) {
        return Err(Error::FuchsViolation(defect));
    }
    let mut v: CVector = svd.v.column(null[0]).into_owned();
    let big = v.iter().copied().max_by(|p, q| p.norm().total_cmp(&q.norm())).unwrap_or(c(1.0, 0.0));
    v *= big.conj() / big.norm();
    let smin_kept = sv.iter().copied().filter(|&s| s > cut).fold(f64::INFINITY, f64::min);
    Ok(AccessoryFamily {
        n,
        singularities: points.to_vec(),
        exponents: exponents.to_vec(),
        particular: x.iter().copied().collect(),
        direction: v.iter().copied().collect(),
        condition: smax / smin_kept,
    })
}
