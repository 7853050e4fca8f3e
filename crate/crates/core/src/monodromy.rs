//! Monodromy of linear systems by transport along loops, and the symbol and
//! factorization obtained from interior/exterior solutions of a standard-form
//! system with singularities on the unit circle.

use crate::error::{Error, Result};
use crate::fuchsian::{check_separated, MatrixField, RationalSystem};
use crate::linalg::{self, c, CMatrix, C64, I};
use crate::ode::{integrate, IntegratorConfig};
use crate::symbol::PiecewiseSymbol;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Relative spread allowed between samples of one arc value.
pub const TOL_CONST: f64 = 1e-6;
/// Samples per arc when reconstructing a symbol.
pub const ARC_SAMPLES: usize = 8;
/// Samples per arc in the factorization residual.
pub const RESIDUAL_SAMPLES: usize = 64;
/// Normalisation point of the exterior solution.
pub const EXTERIOR_BASE: f64 = -2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Line { from: C64, to: C64 },
    Arc { center: C64, radius: f64, start: f64, sweep: f64 },
}

impl Segment {
    pub fn point(&self, s: f64) -> C64 {
        match *self {
            Segment::Line { from, to } => from + (to - from) * s,
            Segment::Arc { center, radius, start, sweep } => center + C64::from_polar(radius, start + s * sweep),
        }
    }

    pub fn velocity(&self, s: f64) -> C64 {
        match *self {
            Segment::Line { from, to } => to - from,
            Segment::Arc { radius, start, sweep, .. } => I * sweep * C64::from_polar(radius, start + s * sweep),
        }
    }

    pub fn end(&self) -> C64 {
        self.point(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopPath {
    pub target: usize,
    pub base: C64,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyTuple {
    #[serde(with = "crate::json::matrices")]
    pub chis: Vec<CMatrix>,
    pub base: C64,
    pub product_defect: f64,
    /// Integrator tolerance the tuple was finally computed at.
    pub rel_tol: f64,
}

/// Winding number of a polygonal sampling of `segments` around `a`.
pub fn winding_number(segments: &[Segment], a: C64) -> f64 {
    let mut total = 0.0;
    for seg in segments {
        let steps = 400;
        let mut prev = seg.point(0.0) - a;
        for i in 1..=steps {
            let cur = seg.point(i as f64 / steps as f64) - a;
            total += (cur / prev).arg();
            prev = cur;
        }
    }
    total / (2.0 * PI)
}

fn distance_to_segment(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let t = ((p - a) * d.conj()).re / d.norm_sqr();
    (p - (a + d * t.clamp(0.0, 1.0))).norm()
}

/// Loop radius used around every singularity.
pub fn loop_radius(singularities: &[C64], base: C64, config: &IntegratorConfig) -> f64 {
    let mut d = f64::INFINITY;
    for (k, &a) in singularities.iter().enumerate() {
        d = d.min((a - base).norm());
        for &b in &singularities[k + 1..] {
            d = d.min((a - b).norm());
        }
    }
    config.clearance * d
}

/// Radial corridor from `base`, one positive circle around `a_k`, and back.
/// Points must be listed counter-clockwise around the base so that the loops
/// compose to a circle around all of them.
pub fn build_loops(singularities: &[C64], base: C64, config: &IntegratorConfig) -> Result<Vec<LoopPath>> {
    config.check()?;
    check_separated(singularities)?;
    if singularities.iter().any(|&a| (a - base).norm() < 1e-9) {
        return Err(Error::Precondition("base point coincides with a singularity".into()));
    }
    let angles: Vec<f64> = singularities.iter().map(|&a| (a - base).arg()).collect();
    let descents = (0..angles.len()).filter(|&k| angles[(k + 1) % angles.len()] <= angles[k]).count();
    if angles.len() > 1 && descents != 1 {
        return Err(Error::GeometryFailure("singularities are not in counter-clockwise order around the base".into()));
    }
    let r = loop_radius(singularities, base, config);
    let mut loops = Vec::with_capacity(singularities.len());
    for (k, &a) in singularities.iter().enumerate() {
        let u = (a - base) / (a - base).norm();
        let entry = a - u * r;
        for (l, &b) in singularities.iter().enumerate() {
            if l != k && distance_to_segment(b, base, entry) < 1.5 * r {
                return Err(Error::GeometryFailure(format!("corridor to singularity {k} passes singularity {l}")));
            }
        }
        let start = (-u).arg();
        let segments = vec![
            Segment::Line { from: base, to: entry },
            Segment::Arc { center: a, radius: r, start, sweep: 2.0 * PI },
            Segment::Line { from: entry, to: base },
        ];
        loops.push(LoopPath { target: k, base, segments });
    }
    Ok(loops)
}

/// Solution of `Y' = A(z) Y` along the path with initial value `y0`.
pub fn transport<F: MatrixField + ?Sized>(
    field: &F,
    path: &[Segment],
    y0: CMatrix,
    config: &IntegratorConfig,
) -> Result<CMatrix> {
    let mut y = y0;
    for (i, seg) in path.iter().enumerate() {
        let (next, _) = integrate(|s, y| field.eval(seg.point(s)) * seg.velocity(s) * y, y, config, i)?;
        y = next;
    }
    Ok(y)
}

struct OneSingularity {
    a: [C64; 1],
    eps: C64,
}

impl MatrixField for OneSingularity {
    fn dim(&self) -> usize {
        1
    }
    fn singularities(&self) -> &[C64] {
        &self.a
    }
    fn eval(&self, z: C64) -> CMatrix {
        CMatrix::from_element(1, 1, self.eps / (z - self.a[0]))
    }
}

fn raw_monodromy<F: MatrixField + ?Sized>(field: &F, config: &IntegratorConfig) -> Result<MonodromyTuple> {
    let base = c(0.0, 0.0);
    let loops = build_loops(field.singularities(), base, config)?;
    let n = field.dim();
    let chis = loops
        .par_iter()
        .map(|l| transport(field, &l.segments, linalg::identity(n), config).and_then(|t| linalg::inverse(&t)))
        .collect::<Result<Vec<_>>>()?;
    let product_defect = crate::symbol::product_defect(&chis);
    Ok(MonodromyTuple { chis, base, product_defect, rel_tol: config.rel_tol })
}

/// Checks once per process that `ε/(z − a)` yields `χ = exp(−2πiε)`.
pub fn ensure_convention() -> Result<()> {
    static CHECK: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    CHECK
        .get_or_init(|| {
            let eps = c(0.3, 0.1);
            let field = OneSingularity { a: [c(0.6, 0.2)], eps };
            let tuple = raw_monodromy(&field, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
            let want = (-2.0 * PI * I * eps).exp();
            let err = (tuple.chis[0][(0, 0)] - want).norm();
            if err < 1e-8 {
                Ok(())
            } else {
                Err(format!("scalar loop gave {} instead of {want} (error {err:e})", tuple.chis[0][(0, 0)]))
            }
        })
        .clone()
        .map_err(Error::SelfTest)
}

/// Product defect a tuple must reach before refinement stops.
pub const DEFECT_TARGET: f64 = 1e-9;
/// Tightest tolerance the refinement will request.
pub const REL_TOL_FLOOR: f64 = 1e-13;

/// `χ_k = T_k⁻¹` where `T_k` transports `I` around the loop of `a_k` from the
/// origin. Non-normal monodromy amplifies the integrator's error, so while
/// `‖χ₁⋯χ_m − I‖` misses `DEFECT_TARGET` the tolerance is tightened tenfold,
/// down to `REL_TOL_FLOOR`. The returned defect is honest either way.
pub fn monodromy<F: MatrixField + ?Sized>(field: &F, config: &IntegratorConfig) -> Result<MonodromyTuple> {
    ensure_convention()?;
    let mut cfg = *config;
    loop {
        let tuple = raw_monodromy(field, &cfg)?;
        if tuple.product_defect <= DEFECT_TARGET || cfg.rel_tol <= REL_TOL_FLOOR {
            return Ok(tuple);
        }
        cfg.rel_tol = (cfg.rel_tol * 0.1).max(REL_TOL_FLOOR);
    }
}

/// Monodromy at exactly the given tolerance, for callers (parameter scans)
/// that trade accuracy for speed.
pub fn monodromy_at_tolerance<F: MatrixField + ?Sized>(field: &F, config: &IntegratorConfig) -> Result<MonodromyTuple> {
    ensure_convention()?;
    raw_monodromy(field, config)
}

fn require_unit_circle(sys: &RationalSystem, p: f64) -> Result<Vec<f64>> {
    let violations = sys.validate();
    if !violations.is_empty() {
        return Err(Error::Precondition(format!("system is not of standard form: {violations:?}")));
    }
    if sys.singularities.iter().any(|a| (a.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::Precondition("singularities must lie on the unit circle".into()));
    }
    let angles: Vec<f64> = sys.singularities.iter().map(|a| a.arg().rem_euclid(2.0 * PI)).collect();
    if angles.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("singularities must be sorted by angle in [0, 2π)".into()));
    }
    let j = linalg::BranchInterval::for_exponent(p);
    for r in sys.residues()? {
        for mu in linalg::eigenvalues(&r)? {
            if !j.contains(mu.re) {
                return Err(Error::Precondition(format!(
                    "residue eigenvalue {mu} has real part outside ({}, {})",
                    j.lo,
                    j.hi()
                )));
            }
        }
    }
    Ok(angles)
}

/// Straight path from the origin to `z` (inside the unit disk).
fn interior_path(z: C64) -> Vec<Segment> {
    vec![Segment::Line { from: c(0.0, 0.0), to: z }]
}

/// Path from `EXTERIOR_BASE` along the circle of radius 2, then radially to `z`.
fn exterior_path(z: C64) -> Vec<Segment> {
    let start = PI;
    let sweep = (z.arg() - start + PI).rem_euclid(2.0 * PI) - PI;
    let arc = Segment::Arc { center: c(0.0, 0.0), radius: -EXTERIOR_BASE, start, sweep };
    vec![arc, Segment::Line { from: arc.end(), to: z }]
}

fn g_tilde(sys: &RationalSystem, t: C64, config: &IntegratorConfig) -> Result<CMatrix> {
    let n = sys.n;
    let y1 = transport(sys, &interior_path(t), linalg::identity(n), config)?;
    let y2 = transport(sys, &exterior_path(t), linalg::identity(n), config)?;
    Ok(linalg::inverse(&y1)? * y2)
}

/// Piecewise constant `G̃ = Y₁⁻¹Y₂` on the unit circle, where `Y₁(0) = I` and
/// `Y₂(−2) = I`; its jump at `a_k` equals `χ_k`.
pub fn symbol_from_system(sys: &RationalSystem, p: f64, config: &IntegratorConfig) -> Result<PiecewiseSymbol> {
    let angles = require_unit_circle(sys, p)?;
    ensure_convention()?;
    let n = sys.n;
    let m = sys.m();
    let frame = PiecewiseSymbol::new(n, p, angles.clone(), vec![linalg::identity(n); m])?;
    let arc_values = (0..m)
        .into_par_iter()
        .map(|k| {
            let samples = frame
                .arc_chebyshev_angles(k, ARC_SAMPLES)
                .into_iter()
                .map(|theta| g_tilde(sys, C64::from_polar(1.0, theta), config))
                .collect::<Result<Vec<_>>>()?;
            let mean = samples.iter().fold(CMatrix::zeros(n, n), |acc, g| acc + g) / c(samples.len() as f64, 0.0);
            let spread = samples.iter().map(|g| (g - &mean).norm()).fold(0.0, f64::max) / linalg::norm(&mean);
            if spread > TOL_CONST {
                return Err(Error::NotConstant { arc: k, spread });
            }
            Ok(mean)
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseSymbol::new(n, p, angles, arc_values)
}

/// Factors `G₊ = Y₁⁻¹`, `Λ = diag(t^{κ_j})`, `G₋ = Λ⁻¹Y₂` of the reconstructed symbol.
#[derive(Debug, Clone)]
pub struct FactorAssembly {
    pub system: RationalSystem,
    pub symbol: PiecewiseSymbol,
    pub config: IntegratorConfig,
    /// `max ‖G₊ΛG₋ − G̃‖` over the residual samples.
    pub residual: f64,
    pub samples_per_arc: usize,
}

impl FactorAssembly {
    pub fn indices(&self) -> &[i64] {
        &self.system.indices
    }

    /// `G₊(z)` for `|z| < 1`.
    pub fn g_plus(&self, z: C64) -> Result<CMatrix> {
        let y1 = transport(&self.system, &interior_path(z), linalg::identity(self.system.n), &self.config)?;
        linalg::inverse(&y1)
    }

    pub fn lambda(&self, t: C64) -> CMatrix {
        linalg::diag(&self.system.indices.iter().map(|&k| t.powi(k as i32)).collect::<Vec<_>>())
    }

    /// `G₋(z)` for `|z| > 1`.
    pub fn g_minus(&self, z: C64) -> Result<CMatrix> {
        let y2 = transport(&self.system, &exterior_path(z), linalg::identity(self.system.n), &self.config)?;
        Ok(linalg::inverse(&self.lambda(z))? * y2)
    }
}

pub fn factor_assembly(sys: &RationalSystem, p: f64, config: &IntegratorConfig) -> Result<FactorAssembly> {
    let symbol = symbol_from_system(sys, p, config)?;
    let mut assembly =
        FactorAssembly { system: sys.clone(), symbol, config: *config, residual: 0.0, samples_per_arc: RESIDUAL_SAMPLES };
    let points: Vec<f64> = (0..sys.m()).flat_map(|k| assembly.symbol.arc_sample_angles(k, RESIDUAL_SAMPLES)).collect();
    let residual = points
        .par_iter()
        .map(|&theta| {
            let t = C64::from_polar(1.0, theta);
            let product = assembly.g_plus(t)? * assembly.lambda(t) * assembly.g_minus(t)?;
            Ok((product - assembly.symbol.value_at(theta)).norm())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    assembly.residual = residual;
    Ok(assembly)
}

/// Coordinate subspaces `span{e_j : j ∈ S}` left invariant by `A(z)`, as masks.
pub fn visible_invariant_subspaces(sys: &RationalSystem) -> Vec<usize> {
    let n = sys.n;
    (1..(1usize << n) - 1)
        .filter(|&mask| {
            (0..n).all(|i| (0..n).all(|j| mask >> j & 1 == 0 || mask >> i & 1 == 1 || sys.numerators[i][j].is_zero()))
        })
        .collect()
}

/// Whether every coordinate subspace invariant for `A(z)` is invariant for
/// the monodromy tuple, to relative tolerance `tol`.
pub fn invariant_subspace_propagation_check(sys: &RationalSystem, tuple: &MonodromyTuple, tol: f64) -> bool {
    let n = sys.n;
    visible_invariant_subspaces(sys).into_iter().all(|mask| {
        tuple.chis.iter().all(|chi| {
            let scale = linalg::norm(chi);
            (0..n).all(|i| (0..n).all(|j| mask >> j & 1 == 0 || mask >> i & 1 == 1 || chi[(i, j)].norm() <= tol * scale))
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::Generator;
    use crate::poly::Poly;

    fn scalar(eps: &[C64], pts: &[C64]) -> RationalSystem {
        let num = (0..pts.len()).fold(Poly::zero(), |acc, k| {
            let others: Vec<C64> = pts.iter().enumerate().filter(|(l, _)| *l != k).map(|(_, &a)| a).collect();
            &acc + &Poly::from_roots(&others).scale(eps[k])
        });
        let kappa = eps.iter().sum::<C64>().re.round() as i64;
        RationalSystem { n: 1, singularities: pts.to_vec(), indices: vec![kappa], numerators: vec![vec![num]] }
    }

    #[test]
    fn loops_wind_once_around_their_target() {
        let cfg = IntegratorConfig::default();
        let single = build_loops(&[c(1.0, 0.0)], c(0.0, 0.0), &cfg).unwrap();
        assert!((winding_number(&single[0].segments, c(1.0, 0.0)) - 1.0).abs() < 1e-9);
        let pts: Vec<C64> = (0..3).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0)).collect();
        let loops = build_loops(&pts, c(0.0, 0.0), &cfg).unwrap();
        for l in &loops {
            for (k, &a) in pts.iter().enumerate() {
                let w = winding_number(&l.segments, a);
                assert!((w - if k == l.target { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
        assert!(matches!(build_loops(&pts, pts[1], &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_field_has_trivial_monodromy() {
        let pts: Vec<C64> = (0..3).map(|k| C64::from_polar(1.0, 0.5 + 2.0 * k as f64)).collect();
        let zero = RationalSystem {
            n: 2,
            singularities: pts,
            indices: vec![0, 0],
            numerators: vec![vec![Poly::zero(); 2]; 2],
        };
        let tuple = monodromy(&zero, &IntegratorConfig::default()).unwrap();
        for chi in &tuple.chis {
            assert!((chi - linalg::identity(2)).norm() < 1e-14);
        }
    }

    #[test]
    fn scalar_loops_match_closed_form() {
        let pts = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        let eps = [c(0.3, 0.1), c(-0.2, 0.05), c(0.45, 0.0), c(0.1, -0.3)];
        let tuple = monodromy(&scalar(&eps, &pts), &IntegratorConfig::default()).unwrap();
        for (chi, e) in tuple.chis.iter().zip(eps) {
            assert!((chi[(0, 0)] - (-2.0 * PI * I * e).exp()).norm() < 1e-8);
        }
    }

    #[test]
    fn reversal_composes_to_identity() {
        let mut g = Generator::new(5);
        let pts = g.singularities(3);
        let eps = g.reducible_exponents(3, &[1, 0], 0.1);
        let sys = g.triangular_2(&pts, &[1, 0], &eps).unwrap();
        let cfg = IntegratorConfig::default();
        let path = [Segment::Line { from: c(0.0, 0.0), to: c(0.5, 0.6) }, Segment::Arc { center: c(0.0, 0.0), radius: 0.781, start: 0.876, sweep: 2.0 }];
        let forward = transport(&sys, &path, linalg::identity(2), &cfg).unwrap();
        let back: Vec<Segment> = path
            .iter()
            .rev()
            .map(|s| match *s {
                Segment::Line { from, to } => Segment::Line { from: to, to: from },
                Segment::Arc { center, radius, start, sweep } => Segment::Arc { center, radius, start: start + sweep, sweep: -sweep },
            })
            .collect();
        let round = transport(&sys, &back, forward, &cfg).unwrap();
        assert!((round - linalg::identity(2)).norm() < 1e-8);
    }

    #[test]
    fn triangular_flag_propagates() {
        let mut g = Generator::new(9);
        let pts = g.singularities(4);
        let eps = g.reducible_exponents(4, &[1, 0], 0.1);
        let sys = g.triangular_2(&pts, &[1, 0], &eps).unwrap();
        let tuple = monodromy(&sys, &IntegratorConfig::default()).unwrap();
        assert!(tuple.product_defect < 1e-8, "{}", tuple.product_defect);
        assert_eq!(visible_invariant_subspaces(&sys), vec![1]);
        assert!(invariant_subspace_propagation_check(&sys, &tuple, 1e-8));
        for (chi, r) in tuple.chis.iter().zip(sys.residues().unwrap()) {
            let expected = linalg::exp_scaled(&r, -2.0 * PI * I).unwrap();
            assert!(linalg::similar(chi, &expected));
        }
    }

    #[test]
    fn scalar_symbol_and_factors() {
        let pts: Vec<C64> = [0.3, 2.0, 4.1].iter().map(|&t| C64::from_polar(1.0, t)).collect();
        let eps = [c(0.3, 0.1), c(0.4, -0.1), c(0.3, 0.0)];
        let sys = scalar(&eps, &pts);
        let cfg = IntegratorConfig::default();
        let sym = symbol_from_system(&sys, 2.0, &cfg).unwrap();
        let jumps = crate::symbol::jump_matrices(&sym).unwrap();
        for (mk, e) in jumps.iter().zip(eps) {
            assert!((mk[(0, 0)] - (-2.0 * PI * I * e).exp()).norm() < 1e-8);
        }
        let closed = crate::symbol::scalar_factorize(&sym).unwrap();
        assert_eq!(closed.kappa, 1);
        let fa = factor_assembly(&sys, 2.0, &cfg).unwrap();
        assert!(fa.residual < 1e-8, "{}", fa.residual);
        let ratio0 = fa.g_plus(c(0.1, 0.2)).unwrap()[(0, 0)] / closed.g_plus(c(0.1, 0.2));
        for z in [c(-0.3, 0.4), c(0.5, -0.5), c(0.0, 0.0)] {
            let ratio = fa.g_plus(z).unwrap()[(0, 0)] / closed.g_plus(z);
            assert!((ratio - ratio0).norm() < 1e-8 * ratio0.norm());
        }
    }
}
