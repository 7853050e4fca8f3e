//! Complex polynomials in the monomial basis, coefficients in ascending powers.

use crate::linalg::{c, CMatrix, C64};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Poly {
    pub coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|z| *z == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(v: C64) -> Self {
        Poly::new(vec![v])
    }

    /// `z − a`
    pub fn linear_root(a: C64) -> Self {
        Poly::new(vec![-a, c(1.0, 0.0)])
    }

    /// `∏ (z − r)`
    pub fn from_roots(roots: &[C64]) -> Self {
        roots.iter().fold(Poly::constant(c(1.0, 0.0)), |acc, &r| &acc * &Poly::linear_root(r))
    }

    /// `v · z^k`
    pub fn monomial(v: C64, k: usize) -> Self {
        let mut coeffs = vec![c(0.0, 0.0); k + 1];
        coeffs[k] = v;
        Poly::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree after discarding trailing coefficients below `tol` in modulus.
    pub fn numerical_degree(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().rposition(|z| z.norm() > tol)
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(c(0.0, 0.0), |acc, &a| acc * z + a)
    }

    pub fn derivative(&self) -> Self {
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &a)| a * k as f64).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        Poly::new(self.coeffs.iter().map(|&a| a * s).collect())
    }

    /// Quotient and remainder of division by `d` (nonzero).
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.coeffs[dd];
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![c(0.0, 0.0); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let f = rem[k + dd] / lead;
            quot[k] = f;
            for (i, &b) in d.coeffs.iter().enumerate() {
                rem[k + i] -= f * b;
            }
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    /// Interpolating polynomial of degree < `points.len()` (Newton form,
    /// expanded to monomials).
    pub fn interpolate(points: &[C64], values: &[C64]) -> Self {
        assert_eq!(points.len(), values.len());
        let k = points.len();
        let mut dd = values.to_vec();
        for level in 1..k {
            for i in (level..k).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / (points[i] - points[i - level]);
            }
        }
        let mut out = Poly::zero();
        let mut basis = Poly::constant(c(1.0, 0.0));
        for i in 0..k {
            out = &out + &basis.scale(dd[i]);
            basis = &basis * &Poly::linear_root(points[i]);
        }
        out
    }

    /// Roots via the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<C64> {
        let Some(d) = self.degree() else { return Vec::new() };
        if d == 0 {
            return Vec::new();
        }
        if d == 1 {
            return vec![-self.coeffs[0] / self.coeffs[1]];
        }
        let lead = self.coeffs[d];
        let mut comp = CMatrix::zeros(d, d);
        for j in 0..d {
            comp[(0, j)] = -self.coeffs[d - 1 - j] / lead;
        }
        for i in 1..d {
            comp[(i, i - 1)] = c(1.0, 0.0);
        }
        let schur = nalgebra::linalg::Schur::new(comp);
        let (_, t) = schur.unpack();
        let mut roots: Vec<C64> = (0..d).map(|i| t[(i, i)]).collect();
        // one Newton step per root sharpens clustered-free roots
        let dp = self.derivative();
        for r in roots.iter_mut() {
            let (f, g) = (self.eval(*r), dp.eval(*r));
            if g.norm() > 1e-12 * (1.0 + f.norm()) {
                let next = *r - f / g;
                if self.eval(next).norm() < f.norm() {
                    *r = next;
                }
            }
        }
        roots
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(c(-1.0, 0.0))
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![c(0.0, 0.0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_eval() {
        let p = Poly::from_roots(&[c(1.0, 0.0), c(0.0, 1.0)]);
        assert!(p.eval(c(1.0, 0.0)).norm() < 1e-15);
        assert!(p.eval(c(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(p.degree(), Some(2));
        let q = &p * &Poly::linear_root(c(2.0, 0.0));
        let (quot, rem) = q.div_rem(&p);
        assert!(rem.coeffs.iter().all(|z| z.norm() < 1e-14));
        assert!((&quot - &Poly::linear_root(c(2.0, 0.0))).coeffs.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn interpolation_reproduces_values() {
        let pts = [c(1.0, 0.0), c(-1.0, 0.5), c(0.0, -1.0), c(0.3, 0.3)];
        let vals = [c(2.0, 1.0), c(0.0, 0.0), c(-1.0, 3.0), c(0.5, 0.0)];
        let p = Poly::interpolate(&pts, &vals);
        assert!(p.degree().unwrap() <= 3);
        for (z, v) in pts.iter().zip(vals) {
            assert!((p.eval(*z) - v).norm() < 1e-12);
        }
    }

    #[test]
    fn roots_of_cubic() {
        let rs = [c(0.5, 0.1), c(-1.0, 0.0), c(0.2, -2.0)];
        let found = Poly::from_roots(&rs).roots();
        for r in rs {
            assert!(found.iter().any(|f| (f - r).norm() < 1e-12));
        }
    }
}
