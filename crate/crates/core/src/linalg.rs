//! Dense complex matrix primitives for dimensions 1–3.
//!
//! Everything downstream branches on exact eigenvalue multiplicities and on
//! exact subspace counts, so the routines here collapse numerically close
//! eigenvalues into clusters and make rank decisions against explicit,
//! norm-relative tolerances.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative threshold for collapsing eigenvalues into one cluster.
pub const CLUSTER_REL_TOL: f64 = 1e-8;
/// Distance from the ends of the branch interval below which a logarithm is rejected.
pub const TOL_BRANCH: f64 = 1e-6;
/// Relative determinant threshold for invertibility.
pub const DET_REL_TOL: f64 = 1e-12;
pub const RCOND_TOL: f64 = 1e-14;
/// Default relative threshold for null-space decisions in subspace searches.
pub const SUBSPACE_REL_TOL: f64 = 1e-7;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds a matrix from row-major complex entries.
pub fn from_rows(n: usize, entries: &[C64]) -> CMatrix {
    CMatrix::from_row_slice(n, n, entries)
}

/// Builds a matrix from row-major real entries.
pub fn from_real_rows(n: usize, entries: &[f64]) -> CMatrix {
    let v: Vec<C64> = entries.iter().map(|&x| c(x, 0.0)).collect();
    from_rows(n, &v)
}

pub fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

/// Frobenius norm.
pub fn norm(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn cluster_tol(m: &CMatrix) -> f64 {
    CLUSTER_REL_TOL * (1.0 + norm(m))
}

fn det_tol(m: &CMatrix) -> f64 {
    DET_REL_TOL * norm(m).powi(m.nrows() as i32)
}

pub fn det(m: &CMatrix) -> C64 {
    m.clone().determinant()
}

pub fn is_invertible(m: &CMatrix) -> bool {
    let d = det(m).norm();
    d > det_tol(m) && d.is_finite()
}

/// Numerical inverse, refused when `σ_min/σ_max` falls below `RCOND_TOL`.
/// Input validation uses the determinant rule of `is_invertible` instead; that
/// rule rejects well-conditioned but strongly non-normal transport matrices.
pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    let d = det(m).norm();
    let sv = singular_values(m)?;
    let (lo, hi) = (sv.last().copied().unwrap_or(0.0), sv.first().copied().unwrap_or(0.0));
    if !(lo > RCOND_TOL * hi) {
        return Err(Error::Singular { det: d });
    }
    m.clone().try_inverse().ok_or(Error::Singular { det: d })
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Raw eigenvalues (with repetition) from a complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonConvergence);
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 10_000).ok_or(Error::NonConvergence)?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// One cluster of numerically equal eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigencluster {
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
    /// Orthonormal basis of the generalized eigenspace `ker (M − λ)^algebraic`.
    pub chain: Vec<CVector>,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub clusters: Vec<Eigencluster>,
}

impl Spectrum {
    pub fn values(&self) -> Vec<C64> {
        self.clusters.iter().map(|c| c.value).collect()
    }

    /// Eigenvalues repeated by algebraic multiplicity.
    pub fn with_multiplicity(&self) -> Vec<C64> {
        self.clusters
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.value, c.algebraic))
            .collect()
    }
}

/// Groups values whose mutual distance is below `tol` (single linkage);
/// returns `(mean value, multiplicity)` pairs.
pub fn cluster_values(values: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let k = values.len();
    let mut label: Vec<usize> = (0..k).collect();
    for i in 0..k {
        for j in 0..i {
            if (values[i] - values[j]).norm() < tol {
                let (a, b) = (label[i], label[j]);
                for l in label.iter_mut() {
                    if *l == a {
                        *l = b;
                    }
                }
            }
        }
    }
    let mut out: Vec<(usize, C64, usize)> = Vec::new();
    for i in 0..k {
        match out.iter_mut().find(|(l, _, _)| *l == label[i]) {
            Some(entry) => {
                entry.1 += values[i];
                entry.2 += 1;
            }
            None => out.push((label[i], values[i], 1)),
        }
    }
    out.into_iter().map(|(_, s, cnt)| (s / cnt as f64, cnt)).collect()
}

/// Thin singular value decomposition `a = U·diag(σ)·Vᴴ`, `σ` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

impl Svd {
    /// Minimum-norm least-squares solution, treating `σ ≤ cut` as zero.
    pub fn solve(&self, b: &CVector, cut: f64) -> CVector {
        let mut coeffs = self.u.adjoint() * b;
        for (c, &s) in coeffs.iter_mut().zip(&self.singular_values) {
            *c = if s > cut { *c / s } else { C64::new(0.0, 0.0) };
        }
        &self.v * coeffs
    }
}

// nalgebra's complex SVD loses up to four digits on some tall matrices, so
// decompositions go through faer.
pub fn svd(a: &CMatrix) -> Result<Svd> {
    let (r, n) = a.shape();
    if r == 0 || n == 0 {
        return Ok(Svd { singular_values: vec![], u: CMatrix::zeros(r, 0), v: CMatrix::zeros(n, 0) });
    }
    if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonConvergence);
    }
    let fa = faer::Mat::<C64>::from_fn(r, n, |i, j| a[(i, j)]);
    let d = fa.thin_svd().map_err(|_| Error::NonConvergence)?;
    let k = r.min(n);
    let s = d.S().column_vector();
    Ok(Svd {
        singular_values: (0..k).map(|i| s[i].re).collect(),
        u: CMatrix::from_fn(r, k, |i, j| d.U()[(i, j)]),
        v: CMatrix::from_fn(n, k, |i, j| d.V()[(i, j)]),
    })
}

pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.singular_values)
}

/// Singular values (descending) and all right singular vectors of `a`.
fn svd_right(a: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let (r, n) = a.shape();
    // Pad so that the decomposition exposes all `n` right singular vectors.
    let a = if r < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (r, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    match svd(&a) {
        Ok(d) => {
            let vecs = (0..n).map(|i| d.v.column(i).into_owned()).collect();
            (d.singular_values, vecs)
        }
        // non-finite input: nothing is numerically null
        Err(_) => (vec![f64::INFINITY; n], (0..n).map(|i| CVector::from_fn(n, |j, _| C64::new((i == j) as u8 as f64, 0.0))).collect()),
    }
}

/// Orthonormal basis of the numerical null space `{x : ‖a x‖ ≤ tol ‖x‖}`.
pub fn null_space(a: &CMatrix, tol: f64) -> Vec<CVector> {
    let (sv, vecs) = svd_right(a);
    sv.iter()
        .zip(vecs)
        .filter(|(s, _)| **s <= tol)
        .map(|(_, v)| v)
        .collect()
}

pub fn rank(a: &CMatrix, tol: f64) -> usize {
    let (sv, _) = svd_right(a);
    sv.iter().filter(|s| **s > tol).count()
}

/// Orthonormal basis of the orthogonal complement of `span(vs)` in `C^n`.
pub fn orthogonal_complement(vs: &[CVector], n: usize) -> Vec<CVector> {
    if vs.is_empty() {
        return (0..n).map(|i| CVector::from_fn(n, |j, _| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })).collect();
    }
    let mut a = CMatrix::zeros(vs.len(), n);
    for (i, v) in vs.iter().enumerate() {
        a.row_mut(i).copy_from(&v.adjoint());
    }
    null_space(&a, 1e-10 * (1.0 + a.norm()))
}

fn mat_pow(m: &CMatrix, k: usize) -> CMatrix {
    let mut out = identity(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

fn rank_tol(m: &CMatrix) -> f64 {
    10.0 * cluster_tol(m)
}

/// Spectrum with multiplicities and generalized eigenspaces.
pub fn eigen(m: &CMatrix) -> Result<Spectrum> {
    let n = m.nrows();
    if n == 0 || n > 3 || m.ncols() != n {
        return Err(Error::InvalidInput(format!("eigen expects a square matrix of size 1..3, got {}x{}", n, m.ncols())));
    }
    let raw = eigenvalues(m)?;
    let tol = cluster_tol(m);
    let rt = rank_tol(m);
    let clusters = cluster_values(&raw, tol)
        .into_iter()
        .map(|(value, algebraic)| {
            let shifted = m - identity(n) * value;
            let geometric = n - rank(&shifted, rt);
            let chain = null_space(&mat_pow(&shifted, algebraic), rt.max(rt.powi(algebraic as i32) * 10.0));
            Eigencluster { value, algebraic, geometric, chain }
        })
        .collect();
    Ok(Spectrum { clusters })
}

/// Open interval `(lo, lo + 1)` selecting the branch of the logarithm.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BranchInterval {
    pub lo: f64,
}

impl BranchInterval {
    /// The interval `(1/p − 1, 1/p)` attached to the space `L^p`.
    pub fn for_exponent(p: f64) -> Self {
        BranchInterval { lo: 1.0 / p - 1.0 }
    }

    pub fn hi(&self) -> f64 {
        self.lo + 1.0
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi()
    }
}

/// The unique `ε` with `exp(−2πiε) = μ` and `Re ε` in the closed interval;
/// rejected when `Re ε` is within `TOL_BRANCH` of an endpoint.
pub fn scalar_branch_log(mu: C64, j: BranchInterval) -> Result<C64> {
    if !(mu.norm() > 0.0) || !mu.re.is_finite() || !mu.im.is_finite() {
        return Err(Error::Singular { det: mu.norm() });
    }
    // exp(−2πiε) = μ  ⇔  ε = (i ln|μ| − arg μ) / 2π  (mod 1)
    let base = -mu.arg() / (2.0 * PI);
    let shift = (j.lo - base).ceil();
    let mut re = base + shift;
    if re >= j.hi() {
        re -= 1.0;
    }
    let distance = (re - j.lo).min(j.hi() - re);
    if distance < TOL_BRANCH {
        return Err(Error::BranchOnBoundary { mu, distance });
    }
    Ok(c(re, mu.norm().ln() / (2.0 * PI)))
}

/// Evaluates the primary matrix function `f(M)` by Hermite interpolation on
/// the clustered spectrum. `derivative(μ, r)` must return `f^{(r)}(μ)` for
/// `r` below the algebraic multiplicity. The result is a polynomial in `M`,
/// exact for `n ≤ 3` up to rounding.
pub fn primary_function<F>(m: &CMatrix, spectrum: &Spectrum, derivative: F) -> Result<CMatrix>
where
    F: Fn(C64, usize) -> Result<C64>,
{
    let n = m.nrows();
    // Nodes grouped by cluster so that confluent entries are adjacent.
    let mut nodes: Vec<(usize, C64)> = Vec::new();
    for (id, cl) in spectrum.clusters.iter().enumerate() {
        for _ in 0..cl.algebraic {
            nodes.push((id, cl.value));
        }
    }
    let k = nodes.len();
    let mut factorial = [1.0; 4];
    for i in 1..4 {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    // table[i] holds the divided difference f[x_i, ..., x_{i+level}]
    let mut table: Vec<C64> = Vec::with_capacity(k);
    for &(_, x) in &nodes {
        table.push(derivative(x, 0)?);
    }
    let mut coeffs = vec![table[0]];
    for level in 1..k {
        let mut next = Vec::with_capacity(k - level);
        for i in 0..k - level {
            let (ci, xi) = nodes[i];
            let (cj, xj) = nodes[i + level];
            if ci == cj {
                next.push(derivative(xi, level)? / factorial[level]);
            } else {
                next.push((table[i + 1] - table[i]) / (xj - xi));
            }
        }
        coeffs.push(next[0]);
        table = next;
    }
    let mut out = CMatrix::zeros(n, n);
    let mut basis = identity(n);
    for (level, coef) in coeffs.iter().enumerate() {
        out += &basis * *coef;
        if level + 1 < k {
            basis = &basis * (m - identity(n) * nodes[level].1);
        }
    }
    Ok(out)
}

/// Branch-selected logarithm `E` with `exp(−2πiE) = M` and the real parts of
/// all eigenvalues of `E` inside `j`.
pub fn branch_log(m: &CMatrix, j: BranchInterval) -> Result<CMatrix> {
    inverse(m)?;
    let spectrum = eigen(m)?;
    for cl in &spectrum.clusters {
        scalar_branch_log(cl.value, j)?;
    }
    let two_pi_i = I * (2.0 * PI);
    primary_function(m, &spectrum, |mu, r| match r {
        0 => scalar_branch_log(mu, j),
        1 => Ok(-1.0 / (two_pi_i * mu)),
        2 => Ok(1.0 / (two_pi_i * mu * mu)),
        _ => Err(Error::InvalidInput("branch_log supports multiplicities up to 3".into())),
    })
}

/// `exp(w · L)` evaluated through the spectrum of `L` (a primary function of `L`).
pub fn exp_scaled(l: &CMatrix, w: C64) -> Result<CMatrix> {
    let spectrum = eigen(l)?;
    primary_function(l, &spectrum, |x, r| Ok((w * x).exp() * w.powi(r as i32)))
}

/// Degree of the minimal polynomial.
pub fn minimal_poly_degree(m: &CMatrix) -> Result<usize> {
    let n = m.nrows();
    let spectrum = eigen(m)?;
    let rt = rank_tol(m);
    let mut degree = 0;
    for cl in &spectrum.clusters {
        let shifted = m - identity(n) * cl.value;
        let target = n - cl.algebraic;
        let mut power = identity(n);
        let mut index = cl.algebraic;
        for k in 1..=cl.algebraic {
            power = &power * &shifted;
            if rank(&power, rt.max(rt.powi(k as i32) * 10.0)) <= target {
                index = k;
                break;
            }
        }
        degree += index;
    }
    Ok(degree)
}

/// Jordan-structure similarity test.
pub fn similar(a: &CMatrix, b: &CMatrix) -> bool {
    let n = a.nrows();
    if b.nrows() != n {
        return false;
    }
    let (sa, sb) = match (eigen(a), eigen(b)) {
        (Ok(x), Ok(y)) => (x, y),
        _ => return false,
    };
    if sa.clusters.len() != sb.clusters.len() {
        return false;
    }
    let tol = 10.0 * cluster_tol(a).max(cluster_tol(b));
    let rt = rank_tol(a).max(rank_tol(b));
    for ca in &sa.clusters {
        let Some(cb) = sb.clusters.iter().find(|cb| (cb.value - ca.value).norm() < tol) else {
            return false;
        };
        if cb.algebraic != ca.algebraic {
            return false;
        }
        let lambda = (ca.value + cb.value) * 0.5;
        let sha = a - identity(n) * lambda;
        let shb = b - identity(n) * lambda;
        let (mut pa, mut pb) = (identity(n), identity(n));
        for k in 1..=n {
            pa = &pa * &sha;
            pb = &pb * &shb;
            let t = rt.max(rt.powi(k as i32) * 10.0);
            if rank(&pa, t) != rank(&pb, t) {
                return false;
            }
        }
    }
    true
}

/// Orthonormal basis of a subspace of `C^n`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SubspaceBasis {
    pub dim: usize,
    #[serde(with = "crate::json::vectors")]
    pub basis: Vec<CVector>,
}

impl SubspaceBasis {
    pub fn new(vectors: Vec<CVector>) -> Self {
        SubspaceBasis { dim: vectors.len(), basis: vectors }
    }

    /// Projector-based containment test `v ∈ self`.
    pub fn contains(&self, v: &CVector, tol: f64) -> bool {
        let mut residual = v.clone();
        for b in &self.basis {
            let coef = b.dotc(v);
            residual -= b * coef;
        }
        residual.norm() <= tol * v.norm().max(1e-300)
    }

    pub fn contains_subspace(&self, other: &SubspaceBasis, tol: f64) -> bool {
        other.basis.iter().all(|v| self.contains(v, tol))
    }

    pub fn same_as(&self, other: &SubspaceBasis, tol: f64) -> bool {
        self.dim == other.dim && self.contains_subspace(other, tol)
    }
}

/// An invariant subspace together with the eigenvalue of each matrix of the
/// tuple on it (for lines) or on the quotient by it (for hyperplanes).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InvariantSubspace {
    pub space: SubspaceBasis,
    pub eigenvalues: Vec<C64>,
}

/// A family of invariant subspaces that is not finite.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Continuum {
    /// Every line inside `span` is invariant.
    LinesIn { span: SubspaceBasis, eigenvalues: Vec<C64> },
    /// Every hyperplane containing `axis` is invariant (`axis` may be `{0}`).
    HyperplanesThrough { axis: SubspaceBasis, eigenvalues: Vec<C64> },
}

impl Continuum {
    pub fn eigenvalues(&self) -> &[C64] {
        match self {
            Continuum::LinesIn { eigenvalues, .. } | Continuum::HyperplanesThrough { eigenvalues, .. } => eigenvalues,
        }
    }
}

/// Result of a common invariant subspace search for one dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InvariantSubspaces {
    pub dim: usize,
    /// Isolated invariant subspaces.
    pub isolated: Vec<InvariantSubspace>,
    /// Continuum families (the "continuum flag").
    pub continua: Vec<Continuum>,
}

impl InvariantSubspaces {
    pub fn is_empty(&self) -> bool {
        self.isolated.is_empty() && self.continua.is_empty()
    }

    /// 0, 1 or 2 (meaning "at least two", continua included).
    pub fn count_capped(&self) -> usize {
        if !self.continua.is_empty() {
            2
        } else {
            self.isolated.len().min(2)
        }
    }
}

fn eigenvalue_combinations(ms: &[CMatrix]) -> Result<Vec<Vec<C64>>> {
    let mut combos: Vec<Vec<C64>> = vec![Vec::new()];
    for m in ms {
        let values = eigen(m)?.values();
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    Ok(combos)
}

/// Common eigenvectors of the tuple, grouped by eigenvalue combination.
fn common_eigenspaces(ms: &[CMatrix], tol_rel: f64) -> Result<Vec<(Vec<CVector>, Vec<C64>)>> {
    let n = ms[0].nrows();
    let scale = 1.0 + ms.iter().map(norm).fold(0.0, f64::max);
    let mut out = Vec::new();
    for combo in eigenvalue_combinations(ms)? {
        let mut stacked = CMatrix::zeros(n * ms.len(), n);
        for (k, (m, lambda)) in ms.iter().zip(&combo).enumerate() {
            stacked.view_mut((k * n, 0), (n, n)).copy_from(&(m - identity(n) * *lambda));
        }
        let ns = null_space(&stacked, tol_rel * scale);
        if !ns.is_empty() {
            out.push((ns, combo));
        }
    }
    Ok(out)
}

/// All `d`-dimensional subspaces invariant under every matrix of the tuple,
/// for `d = 1` (common eigenvectors) and `d = n − 1` (hyperplanes, via the
/// transposed tuple).
pub fn common_invariant_subspaces(ms: &[CMatrix], d: usize) -> Result<InvariantSubspaces> {
    common_invariant_subspaces_tol(ms, d, SUBSPACE_REL_TOL)
}

pub fn common_invariant_subspaces_tol(ms: &[CMatrix], d: usize, tol_rel: f64) -> Result<InvariantSubspaces> {
    let n = ms.first().map(|m| m.nrows()).ok_or_else(|| Error::InvalidInput("empty tuple".into()))?;
    if d == 0 || d >= n {
        return Err(Error::InvalidInput(format!("subspace dimension {d} must lie in 1..{}", n - 1)));
    }
    if d != 1 && d != n - 1 {
        return Err(Error::InvalidInput("only lines and hyperplanes are supported".into()));
    }
    let mut result = InvariantSubspaces { dim: d, isolated: Vec::new(), continua: Vec::new() };
    if d == 1 {
        for (space, eigenvalues) in common_eigenspaces(ms, tol_rel)? {
            if space.len() == 1 {
                result.isolated.push(InvariantSubspace { space: SubspaceBasis::new(space), eigenvalues });
            } else {
                result.continua.push(Continuum::LinesIn { span: SubspaceBasis::new(space), eigenvalues });
            }
        }
    } else {
        let transposed: Vec<CMatrix> = ms.iter().map(|m| m.transpose()).collect();
        for (normals, eigenvalues) in common_eigenspaces(&transposed, tol_rel)? {
            // w^T x = 0  ⇔  x ⊥ conj(w)
            let conj: Vec<CVector> = normals.iter().map(|w| w.map(|z| z.conj())).collect();
            let complement = orthogonal_complement(&conj, n);
            let space = SubspaceBasis::new(complement);
            if normals.len() == 1 {
                result.isolated.push(InvariantSubspace { space, eigenvalues });
            } else {
                result.continua.push(Continuum::HyperplanesThrough { axis: space, eigenvalues });
            }
        }
    }
    Ok(result)
}

/// Traces of single matrices, of all pairs `i < j`, and (for triples) of the
/// full product. Invariant under simultaneous conjugation.
pub fn similarity_fingerprint(ms: &[CMatrix]) -> Vec<C64> {
    let mut out: Vec<C64> = ms.iter().map(|m| m.trace()).collect();
    for i in 0..ms.len() {
        for j in i + 1..ms.len() {
            out.push((&ms[i] * &ms[j]).trace());
        }
    }
    if ms.len() == 3 {
        out.push((&ms[0] * &ms[1] * &ms[2]).trace());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_taylor(a: &CMatrix) -> CMatrix {
        // scaling and squaring with a long Taylor series: independent of the spectral path
        let n = a.nrows();
        let s = (a.norm().log2().ceil().max(0.0) as i32) + 4;
        let b = a / c(2f64.powi(s), 0.0);
        let mut term = identity(n);
        let mut sum = identity(n);
        for k in 1..30 {
            term = &term * &b / c(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    fn j2() -> BranchInterval {
        BranchInterval::for_exponent(2.0)
    }

    #[test]
    fn eigen_identity_is_semisimple() {
        let s = eigen(&identity(2)).unwrap();
        assert_eq!(s.clusters.len(), 1);
        assert_eq!((s.clusters[0].algebraic, s.clusters[0].geometric), (2, 2));
        assert!((s.clusters[0].value - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eigen_jordan_block_is_defective() {
        let s = eigen(&from_real_rows(2, &[1.0, 1.0, 0.0, 1.0])).unwrap();
        assert_eq!(s.clusters.len(), 1);
        assert_eq!((s.clusters[0].algebraic, s.clusters[0].geometric), (2, 1));
        assert_eq!(s.clusters[0].chain.len(), 2);
    }

    #[test]
    fn eigen_diagonal_distinct() {
        let s = eigen(&diag(&[c(2.0, 0.0), c(0.0, 3.0)])).unwrap();
        let mut vals = s.values();
        vals.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((vals[0] - c(0.0, 3.0)).norm() < 1e-12 && (vals[1] - c(2.0, 0.0)).norm() < 1e-12);
        assert!(s.clusters.iter().all(|c| c.algebraic == 1 && c.geometric == 1));
    }

    #[test]
    fn branch_log_scalars() {
        let e = branch_log(&from_real_rows(1, &[1.0]), j2()).unwrap();
        assert!(e[(0, 0)].norm() < 1e-15);
        let e = branch_log(&from_rows(1, &[c(0.0, 1.0)]), j2()).unwrap();
        assert!((e[(0, 0)] - c(-0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn branch_log_jordan_block() {
        let m = from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]);
        let e = branch_log(&m, j2()).unwrap();
        let expected = from_rows(2, &[c(0.0, 0.0), c(0.0, 1.0 / (2.0 * PI)), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((&e - &expected).norm() < 1e-14);
        let back = exp_taylor(&(&e * (-2.0 * PI * I)));
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn branch_log_rejects_boundary_and_singular() {
        assert!(matches!(
            branch_log(&from_real_rows(1, &[-1.0]), j2()),
            Err(Error::BranchOnBoundary { .. })
        ));
        assert!(matches!(branch_log(&from_real_rows(2, &[1.0, 2.0, 2.0, 4.0]), j2()), Err(Error::Singular { .. })));
    }

    #[test]
    fn branch_log_three_fold_jordan() {
        let m = from_rows(3, &[c(0.0, 1.0), c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
        let e = branch_log(&m, j2()).unwrap();
        let back = exp_taylor(&(&e * (-2.0 * PI * I)));
        assert!((back - &m).norm() < 1e-11);
        for v in eigenvalues(&e).unwrap() {
            assert!((v - c(-0.25, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn minimal_poly_examples() {
        assert_eq!(minimal_poly_degree(&identity(3)).unwrap(), 1);
        let j = from_real_rows(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(minimal_poly_degree(&j).unwrap(), 3);
        let d = diag(&[c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        // oracle: (M − I)(M − 2I) = 0 while no degree-1 polynomial annihilates M
        let prod = (&d - identity(3)) * (&d - identity(3) * c(2.0, 0.0));
        assert!(prod.norm() < 1e-15);
        assert_eq!(minimal_poly_degree(&d).unwrap(), 2);
    }

    #[test]
    fn similarity_examples() {
        assert!(similar(&identity(2), &identity(2)));
        assert!(!similar(&from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]), &identity(2)));
        // explicit conjugator: S = [[1,1],[0,1]] maps diag(1,2) to [[1,1],[0,2]]
        let a = from_real_rows(2, &[1.0, 1.0, 0.0, 2.0]);
        let s = from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]);
        let d = diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert!((&s * &d * inverse(&s).unwrap() - &a).norm() < 1e-14);
        assert!(similar(&a, &d));
    }

    #[test]
    fn invariant_lines_examples() {
        let r = common_invariant_subspaces(&[identity(2), identity(2)], 1).unwrap();
        assert!(r.isolated.is_empty());
        assert!(matches!(&r.continua[..], [Continuum::LinesIn { span, .. }] if span.dim == 2));

        let r = common_invariant_subspaces(&[from_real_rows(2, &[1.0, 1.0, 0.0, 1.0])], 1).unwrap();
        assert_eq!(r.isolated.len(), 1);
        assert!(r.continua.is_empty());
        let e1 = CVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(r.isolated[0].space.contains(&e1, 1e-10));

        let rot = from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]);
        let jb = from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(common_invariant_subspaces(&[rot, jb], 1).unwrap().is_empty());
    }

    #[test]
    fn invariant_planes_of_flag() {
        let u = from_rows(3, &[c(1.0, 0.0), c(1.0, 0.0), c(0.3, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let planes = common_invariant_subspaces(&[u.clone()], 2).unwrap();
        // distinct eigenvalues: three invariant planes
        assert_eq!(planes.isolated.len(), 3);
        let e1e2 = SubspaceBasis::new(vec![
            CVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            CVector::from_column_slice(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        ]);
        assert!(planes.isolated.iter().any(|p| p.space.same_as(&e1e2, 1e-9)));
        // quotient of C³ by span(e₁, e₂) carries the eigenvalue 3
        let q = planes.isolated.iter().find(|p| p.space.same_as(&e1e2, 1e-9)).unwrap();
        assert!((q.eigenvalues[0] - c(3.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn fingerprint_example() {
        let rot = from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]);
        let rinv = inverse(&rot).unwrap();
        let fp = similarity_fingerprint(&[rot, rinv, identity(2)]);
        // direct multiplication: traces (0,0,2), pairs (2,0,0), product R·R⁻¹·I = I has trace 2
        let expected = [0.0, 0.0, 2.0, 2.0, 0.0, 0.0, 2.0];
        for (a, b) in fp.iter().zip(expected) {
            assert!((a - c(b, 0.0)).norm() < 1e-14);
        }
    }
}
