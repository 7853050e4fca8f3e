//! Seeded generators of standard-form systems with prescribed indices and
//! residue spectra: triangular, block-triangular and extremal shapes.

use super::{degree_bound, derivative_at, RationalSystem};
use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::poly::Poly;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Off-diagonal entry kind in a generator pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Zero,
    /// Random polynomial of the maximal admissible degree.
    Random,
    /// Random nonzero constant (requires degree bound ≥ 0).
    Constant,
}

const SUM_TOL: f64 = 1e-9;
/// Partial exponent sums must stay this far from the integers.
const GENERIC_MARGIN: f64 = 0.05;

pub struct Generator {
    rng: ChaCha8Rng,
}

/// Exponent `1/p` placed in the middle of the window keeping every real part of
/// `eps` at least `margin` inside `J_p = (1/p − 1, 1/p)`.
pub fn choose_p(eps: &[Vec<C64>], margin: f64) -> Option<f64> {
    let re = eps.iter().flatten().map(|z| z.re);
    let (lo, hi) = re.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let low = (hi + margin).max(margin);
    let high = (lo - margin + 1.0).min(1.0 - margin);
    (low < high).then(|| 1.0 / (0.5 * (low + high)))
}

fn check_ordered(indices: &[i64]) -> Result<()> {
    if indices.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Precondition(format!("indices {indices:?} are not non-increasing")));
    }
    Ok(())
}

fn check_table(eps: &[Vec<C64>], m: usize, n: usize) -> Result<()> {
    if eps.len() != m || eps.iter().any(|r| r.len() != n) {
        return Err(Error::Precondition(format!("exponent table must be {m} x {n}")));
    }
    Ok(())
}

fn column_sum(eps: &[Vec<C64>], j: usize) -> C64 {
    eps.iter().map(|r| r[j]).sum()
}

fn check_column_sum(eps: &[Vec<C64>], j: usize, kappa: i64) -> Result<()> {
    let s = column_sum(eps, j);
    if (s - c(kappa as f64, 0.0)).norm() > SUM_TOL {
        return Err(Error::Precondition(format!("exponents of slot {j} sum to {s}, expected {kappa}")));
    }
    Ok(())
}

/// `Σ_k ε_k ∏_{l≠k}(z − a_l)` with leading coefficient pinned to `kappa`.
fn diagonal_entry(points: &[C64], eps: &[C64], kappa: i64) -> Poly {
    let mut out = Poly::zero();
    for k in 0..points.len() {
        let others: Vec<C64> = points.iter().enumerate().filter(|(l, _)| *l != k).map(|(_, &a)| a).collect();
        out = &out + &Poly::from_roots(&others).scale(eps[k]);
    }
    pin_leading(out, points.len() - 1, kappa)
}

fn pin_leading(p: Poly, degree: usize, value: i64) -> Poly {
    let mut coeffs = p.coeffs;
    coeffs.resize(degree + 1, c(0.0, 0.0));
    coeffs[degree] = c(value as f64, 0.0);
    Poly::new(coeffs)
}

fn truncate(p: Poly, bound: i64) -> Poly {
    let mut coeffs = p.coeffs;
    coeffs.truncate((bound + 1).max(0) as usize);
    Poly::new(coeffs)
}

fn finish(sys: RationalSystem) -> Result<RationalSystem> {
    let violations = sys.validate();
    if violations.is_empty() {
        Ok(sys)
    } else {
        Err(Error::Precondition(format!("generated system is not of standard form: {violations:?}")))
    }
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Uniform sample from the closed unit disk.
    pub fn disk(&mut self) -> C64 {
        let r = self.rng.random::<f64>().sqrt();
        C64::from_polar(r, 2.0 * PI * self.rng.random::<f64>())
    }

    fn nonzero(&mut self, min: f64) -> C64 {
        loop {
            let z = self.disk();
            if z.norm() >= min {
                return z;
            }
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// Random polynomial of degree ≤ `degree` (zero when the bound is negative).
    pub fn random_poly(&mut self, degree: i64) -> Poly {
        if degree < 0 {
            return Poly::zero();
        }
        Poly::new((0..=degree).map(|_| self.disk()).collect())
    }

    /// A system drawn directly from the standard-form conditions: every
    /// off-diagonal numerator is a random polynomial of maximal allowed degree,
    /// every diagonal one `κ_i z^{m−1} +` a random `P_{m−2}`. Redrawn until the
    /// residues are non-resonant.
    pub fn random_standard_form(&mut self, points: &[C64], indices: &[i64]) -> Result<RationalSystem> {
        let (m, n) = (points.len(), indices.len());
        check_ordered(indices)?;
        if m == 0 || !(1..=3).contains(&n) {
            return Err(Error::Precondition(format!("{n} indices on {m} points is not a supported shape")));
        }
        for _ in 0..100 {
            let numerators = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                &Poly::monomial(c(indices[i] as f64, 0.0), m - 1) + &self.random_poly(m as i64 - 2)
                            } else {
                                self.random_poly(degree_bound(m, indices, i, j))
                            }
                        })
                        .collect()
                })
                .collect();
            let sys = RationalSystem { n, singularities: points.to_vec(), indices: indices.to_vec(), numerators };
            if sys.is_valid() {
                return Ok(sys);
            }
        }
        Err(Error::Precondition(format!("no non-resonant system with indices {indices:?} on {m} points")))
    }

    /// Random polynomial of degree ≤ `degree` bounded away from zero on `points`.
    fn poly_nonvanishing(&mut self, degree: i64, points: &[C64]) -> Poly {
        loop {
            let p = self.random_poly(degree);
            if points.iter().all(|&a| p.eval(a).norm() > 0.2) {
                return p;
            }
        }
    }

    /// `m` points on the unit circle near a rotated set of roots of unity,
    /// sorted by angle in `[0, 2π)`.
    pub fn singularities(&mut self, m: usize) -> Vec<C64> {
        let step = 2.0 * PI / m as f64;
        let jitter = if m <= 6 { 0.2 } else { 0.0 };
        let offset = self.uniform(0.0, step);
        let mut angles: Vec<f64> = (0..m)
            .map(|k| {
                let j = if jitter > 0.0 { self.uniform(-jitter, jitter) } else { 0.0 };
                (offset + step * (k as f64 + j)).rem_euclid(2.0 * PI)
            })
            .collect();
        angles.sort_by(f64::total_cmp);
        angles.into_iter().map(|t| C64::from_polar(1.0, t)).collect()
    }

    fn centred_offsets(&mut self, count: usize, spread: f64) -> Vec<C64> {
        let raw: Vec<C64> =
            (0..count).map(|_| c(self.uniform(-spread, spread), self.uniform(-spread, spread) * 0.25)).collect();
        let mean: C64 = raw.iter().sum::<C64>() / count as f64;
        raw.into_iter().map(|z| z - mean).collect()
    }

    /// Table `ε[k][j]` with `Σ_k ε_k^{(j)} = κ_j`, each entry near `κ_j/m`.
    pub fn reducible_exponents(&mut self, m: usize, indices: &[i64], spread: f64) -> Vec<Vec<C64>> {
        let mut eps = vec![vec![c(0.0, 0.0); indices.len()]; m];
        for (j, &kappa) in indices.iter().enumerate() {
            let base = kappa as f64 / m as f64;
            for (k, d) in self.centred_offsets(m, spread).into_iter().enumerate() {
                eps[k][j] = c(base, 0.0) + d;
            }
        }
        eps
    }

    /// Table `ε[k][j]` (`n` slots) with total sum `total` and no integer partial
    /// sum over any choice of a proper nonempty subset of slots at every point.
    pub fn generic_exponents(&mut self, m: usize, n: usize, total: i64, spread: f64) -> Vec<Vec<C64>> {
        let base = c(total as f64 / (n * m) as f64, 0.0);
        loop {
            let flat = self.centred_offsets(n * m, spread);
            let eps: Vec<Vec<C64>> = (0..m).map(|k| (0..n).map(|j| base + flat[k * n + j]).collect()).collect();
            if is_generic(&eps) {
                return eps;
            }
        }
    }

    /// Entries from a pattern: diagonal from the exponent table, off-diagonal by
    /// slot kind. Residue spectra equal the table whenever the pattern is
    /// triangular up to a permutation.
    pub fn patterned(
        &mut self,
        points: &[C64],
        indices: &[i64],
        eps: &[Vec<C64>],
        pattern: &[Vec<Slot>],
    ) -> Result<RationalSystem> {
        let (n, m) = (indices.len(), points.len());
        check_ordered(indices)?;
        check_table(eps, m, n)?;
        let mut numerators = vec![vec![Poly::zero(); n]; n];
        for i in 0..n {
            check_column_sum(eps, i, indices[i])?;
            let col: Vec<C64> = eps.iter().map(|r| r[i]).collect();
            numerators[i][i] = diagonal_entry(points, &col, indices[i]);
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let bound = degree_bound(m, indices, i, j);
                numerators[i][j] = match pattern[i][j] {
                    Slot::Zero => Poly::zero(),
                    _ if bound < 0 => {
                        return Err(Error::Precondition(format!("entry ({i},{j}) must vanish for indices {indices:?}")))
                    }
                    Slot::Random => self.random_poly(bound),
                    Slot::Constant => Poly::constant(self.nonzero(0.3)),
                };
            }
        }
        finish(RationalSystem { n, singularities: points.to_vec(), indices: indices.to_vec(), numerators })
    }

    fn upper(n: usize) -> Vec<Vec<Slot>> {
        (0..n).map(|i| (0..n).map(|j| if j > i { Slot::Random } else { Slot::Zero }).collect()).collect()
    }

    pub fn triangular_2(&mut self, points: &[C64], indices: &[i64], eps: &[Vec<C64>]) -> Result<RationalSystem> {
        if indices.len() != 2 {
            return Err(Error::Precondition("triangular_2 expects two indices".into()));
        }
        self.patterned(points, indices, eps, &Self::upper(2))
    }

    pub fn triangular_3(&mut self, points: &[C64], indices: &[i64], eps: &[Vec<C64>]) -> Result<RationalSystem> {
        if indices.len() != 3 {
            return Err(Error::Precondition("triangular_3 expects three indices".into()));
        }
        self.patterned(points, indices, eps, &Self::upper(3))
    }

    /// Scalar slot 0 over an irreducible 2×2 block in slots 1, 2. Slot 0 of the
    /// table must sum to `κ₁`; slots 1 and 2 together to `κ₂ + κ₃`.
    pub fn block12_3(
        &mut self,
        points: &[C64],
        indices: &[i64],
        eps: &[Vec<C64>],
        coupled: bool,
    ) -> Result<RationalSystem> {
        self.block_3(points, indices, eps, coupled, 0, (1, 2))
    }

    /// Irreducible 2×2 block in slots 0, 1 over the scalar slot 2.
    pub fn block21_3(
        &mut self,
        points: &[C64],
        indices: &[i64],
        eps: &[Vec<C64>],
        coupled: bool,
    ) -> Result<RationalSystem> {
        self.block_3(points, indices, eps, coupled, 2, (0, 1))
    }

    fn block_3(
        &mut self,
        points: &[C64],
        indices: &[i64],
        eps: &[Vec<C64>],
        coupled: bool,
        single: usize,
        (a, b): (usize, usize),
    ) -> Result<RationalSystem> {
        let m = points.len();
        if indices.len() != 3 {
            return Err(Error::Precondition("block systems expect three indices".into()));
        }
        check_ordered(indices)?;
        check_table(eps, m, 3)?;
        if indices[a] - indices[b] > m as i64 - 2 {
            return Err(Error::Precondition(format!(
                "block indices {} and {} differ by more than m - 2 = {}",
                indices[a],
                indices[b],
                m as i64 - 2
            )));
        }
        check_column_sum(eps, single, indices[single])?;
        let mut numerators = vec![vec![Poly::zero(); 3]; 3];
        let col: Vec<C64> = eps.iter().map(|r| r[single]).collect();
        numerators[single][single] = diagonal_entry(points, &col, indices[single]);
        let pairs: Vec<(C64, C64)> = eps.iter().map(|r| (r[a], r[b])).collect();
        self.fill_block(&mut numerators, points, indices, (a, b), &pairs)?;
        if coupled {
            // the block sits below slot 0 or above slot 2: couple from the upper rows
            let (rows, cols): (Vec<usize>, Vec<usize>) = if single == 0 { (vec![0], vec![a, b]) } else { (vec![a, b], vec![2]) };
            for &i in &rows {
                for &j in &cols {
                    numerators[i][j] = self.random_poly(degree_bound(m, indices, i, j));
                }
            }
        }
        finish(RationalSystem { n: 3, singularities: points.to_vec(), indices: indices.to_vec(), numerators })
    }

    /// Fills rows/columns `a, b` with a 2×2 block whose residue at `a_k` has
    /// eigenvalues `pairs[k]`. Uses trace interpolation for the diagonal and
    /// determinant interpolation for one off-diagonal entry.
    fn fill_block(
        &mut self,
        num: &mut [Vec<Poly>],
        points: &[C64],
        indices: &[i64],
        (a, b): (usize, usize),
        pairs: &[(C64, C64)],
    ) -> Result<()> {
        let m = points.len();
        if m < 3 {
            // two jumps commute, so a coupled block would be reducible anyway
            return Err(Error::Precondition("a coupled block needs at least three singularities".into()));
        }
        let (ka, kb) = (indices[a], indices[b]);
        let dp: Vec<C64> = (0..m).map(|k| derivative_at(points, k)).collect();
        let traces: Vec<C64> = (0..m).map(|k| (pairs[k].0 + pairs[k].1) * dp[k]).collect();
        let dets: Vec<C64> = (0..m).map(|k| pairs[k].0 * pairs[k].1 * dp[k] * dp[k]).collect();
        let lead: C64 = pairs.iter().map(|(x, y)| x + y).sum();
        if (lead - c((ka + kb) as f64, 0.0)).norm() > SUM_TOL {
            return Err(Error::Precondition(format!("block exponents sum to {lead}, expected {}", ka + kb)));
        }
        let s = pin_leading(Poly::interpolate(points, &traces), m - 1, ka + kb);
        let mut paa = &Poly::monomial(c(ka as f64, 0.0), m - 1) + &self.random_poly(m as i64 - 2);
        // (given, solved) off-diagonal slots: the solved one needs room for an interpolant
        let (given, solved) = if ka >= kb { ((b, a), (a, b)) } else { ((a, b), (b, a)) };
        let given_bound = degree_bound(m, indices, given.0, given.1);
        let solved_bound = degree_bound(m, indices, solved.0, solved.1);
        let g = self.poly_nonvanishing(given_bound, points);
        let gv: Vec<C64> = points.iter().map(|&z| g.eval(z)).collect();
        if ka == kb {
            // the interpolant must lose its z^{m−1} term: shift the constant of paa
            let sv: Vec<C64> = points.iter().map(|&z| s.eval(z)).collect();
            let av: Vec<C64> = points.iter().map(|&z| paa.eval(z)).collect();
            let w: Vec<C64> = (0..m).map(|k| 1.0 / (gv[k] * dp[k])).collect();
            let qa: C64 = -w.iter().sum::<C64>();
            let qb: C64 = (0..m).map(|k| w[k] * (sv[k] - 2.0 * av[k])).sum();
            let qc: C64 = (0..m).map(|k| w[k] * (av[k] * (sv[k] - av[k]) - dets[k])).sum();
            let x = if qa.norm() < 1e-12 {
                if qb.norm() < 1e-12 {
                    return Err(Error::Precondition("degenerate block constraint".into()));
                }
                -qc / qb
            } else {
                let root = (qb * qb - 4.0 * qa * qc).sqrt();
                let sign = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
                (-qb + sign * root) / (2.0 * qa)
            };
            paa = &paa + &Poly::constant(x);
        }
        let pbb = &s - &paa;
        let values: Vec<C64> =
            (0..m).map(|k| (paa.eval(points[k]) * pbb.eval(points[k]) - dets[k]) / gv[k]).collect();
        let interp = Poly::interpolate(points, &values);
        let extra = &Poly::from_roots(points) * &self.random_poly(solved_bound - m as i64);
        let solved_poly = truncate(&interp + &extra, solved_bound);
        num[a][a] = paa;
        num[b][b] = pbb;
        num[given.0][given.1] = g;
        num[solved.0][solved.1] = solved_poly;
        Ok(())
    }

    /// Shape with `κ_k − κ_{k+1} = m − 2`, nonzero constant subdiagonal and
    /// residue spectra `eps[k]`; requires `Σ ε = n(n−1)(m−2)/2 + nκ_n`.
    pub fn extremal(&mut self, points: &[C64], kappa_n: i64, eps: &[Vec<C64>]) -> Result<RationalSystem> {
        let m = points.len();
        let n = eps.first().map_or(0, |r| r.len());
        if !(1..=3).contains(&n) {
            return Err(Error::Precondition(format!("extremal systems need 1..3 slots, got {n}")));
        }
        check_table(eps, m, n)?;
        let gap = m as i64 - 2;
        if gap < 0 {
            return Err(Error::Precondition("extremal systems need at least two singularities".into()));
        }
        let indices: Vec<i64> = (0..n).map(|j| kappa_n + gap * (n - 1 - j) as i64).collect();
        let total: C64 = eps.iter().flatten().sum();
        let expected = indices.iter().sum::<i64>();
        if (total - c(expected as f64, 0.0)).norm() > SUM_TOL {
            return Err(Error::Precondition(format!("exponents sum to {total}, expected {expected}")));
        }
        let mut numerators = vec![vec![Poly::zero(); n]; n];
        match n {
            1 => numerators[0][0] = diagonal_entry(points, &eps.iter().map(|r| r[0]).collect::<Vec<_>>(), indices[0]),
            2 => {
                let pairs: Vec<(C64, C64)> = eps.iter().map(|r| (r[0], r[1])).collect();
                self.fill_block(&mut numerators, points, &indices, (0, 1), &pairs)?;
            }
            _ => self.fill_extremal_3(&mut numerators, points, &indices, eps)?,
        }
        finish(RationalSystem { n, singularities: points.to_vec(), indices, numerators }.balanced()?)
    }

    fn fill_extremal_3(
        &mut self,
        num: &mut [Vec<Poly>],
        points: &[C64],
        indices: &[i64],
        eps: &[Vec<C64>],
    ) -> Result<()> {
        let m = points.len();
        if m < 3 {
            return Err(Error::Precondition("3x3 extremal systems need m >= 3".into()));
        }
        let dp: Vec<C64> = (0..m).map(|k| derivative_at(points, k)).collect();
        let e1: Vec<C64> = (0..m).map(|k| eps[k].iter().sum::<C64>() * dp[k]).collect();
        let e2: Vec<C64> = (0..m)
            .map(|k| {
                let r = &eps[k];
                (r[0] * r[1] + r[0] * r[2] + r[1] * r[2]) * dp[k] * dp[k]
            })
            .collect();
        let e3: Vec<C64> = (0..m).map(|k| eps[k][0] * eps[k][1] * eps[k][2] * dp[k].powi(3)).collect();
        let s = pin_leading(Poly::interpolate(points, &e1), m - 1, indices.iter().sum());
        let top = |k: i64| Poly::monomial(c(k as f64, 0.0), m - 1);
        let d1 = &top(indices[0]) + &self.random_poly(m as i64 - 2);
        let d2 = &top(indices[1]) + &self.random_poly(m as i64 - 2);
        let d3 = &(&s - &d1) - &d2;
        let (al1, al2) = (self.nonzero(0.3), self.nonzero(0.3));
        let b12 = degree_bound(m, indices, 0, 1);
        let b13 = degree_bound(m, indices, 0, 2);
        let p23 = self.random_poly(degree_bound(m, indices, 1, 2));
        let at = |p: &Poly, k: usize| p.eval(points[k]);
        let v12: Vec<C64> = (0..m)
            .map(|k| {
                let (x1, x2, x3) = (at(&d1, k), at(&d2, k), at(&d3, k));
                (x1 * x2 + x1 * x3 + x2 * x3 - al2 * at(&p23, k) - e2[k]) / al1
            })
            .collect();
        let root = Poly::from_roots(points);
        let p12 = truncate(&Poly::interpolate(points, &v12) + &(&root * &self.random_poly(b12 - m as i64)), b12);
        let v13: Vec<C64> = (0..m)
            .map(|k| {
                let (x1, x2, x3) = (at(&d1, k), at(&d2, k), at(&d3, k));
                (e3[k] - x1 * x2 * x3 + al2 * x1 * at(&p23, k) + al1 * x3 * at(&p12, k)) / (al1 * al2)
            })
            .collect();
        let p13 = truncate(&Poly::interpolate(points, &v13) + &(&root * &self.random_poly(b13 - m as i64)), b13);
        num[0] = vec![d1, p12, p13];
        num[1] = vec![Poly::constant(al1), d2, p23];
        num[2] = vec![Poly::zero(), Poly::constant(al2), d3];
        Ok(())
    }
}

/// No partial sum over a proper nonempty choice of slots per point is within
/// the genericity margin of an integer.
pub fn is_generic(eps: &[Vec<C64>]) -> bool {
    let n = eps.first().map_or(0, |r| r.len());
    let subsets: Vec<usize> = (1..(1usize << n) - 1).collect();
    for size in 1..n {
        let choices: Vec<usize> = subsets.iter().copied().filter(|s| s.count_ones() as usize == size).collect();
        let mut sums = vec![c(0.0, 0.0)];
        for row in eps {
            let mut next = Vec::with_capacity(sums.len() * choices.len());
            for s in &sums {
                for &mask in &choices {
                    let add: C64 = (0..n).filter(|j| mask >> j & 1 == 1).map(|j| row[j]).sum();
                    next.push(s + add);
                }
            }
            sums = next;
        }
        if sums.iter().any(|s| (s.re - s.re.round()).abs() < GENERIC_MARGIN) {
            return false;
        }
    }
    true
}
