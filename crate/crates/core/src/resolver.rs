//! Numerical resolution of the balanced/extremal dichotomy: search the
//! accessory family with the prescribed exponents for a member whose companion
//! monodromy is simultaneously similar to the target tuple.

use crate::error::{Error, Result};
use crate::fuchsian::{accessory_family, AccessoryFamily};
use crate::index::ResolverRequest;
use crate::linalg::{self, c, CMatrix, C64};
use crate::monodromy::{monodromy, monodromy_at_tolerance};
use crate::ode::IntegratorConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Integrator tolerance used while scanning the grid; polishing uses the
/// caller's configuration.
pub const SCAN_REL_TOL: f64 = 1e-7;
/// Grid minima handed to the local polish.
const POLISH_CANDIDATES: usize = 6;
/// Relative tolerance of the conjugacy null vector.
const CONJUGACY_TOL: f64 = 1e-6;

/// Word traces invariant under simultaneous conjugation: single traces,
/// `tr χ_iχ_j`, `tr χ_iχ_j⁻¹`, `tr χ_i²χ_j`, `tr χ_iχ_j²` and commutator traces
/// for `i < j`. For three matrices with product `I` the pair traces alone are
/// fixed by the local data, hence the longer words.
pub fn word_fingerprint(ms: &[CMatrix]) -> Vec<C64> {
    let inv: Vec<CMatrix> = ms.iter().map(|m| linalg::inverse(m).unwrap_or_else(|_| m.clone() * c(f64::NAN, 0.0))).collect();
    let mut out: Vec<C64> = ms.iter().map(|m| m.trace()).collect();
    for i in 0..ms.len() {
        for j in i + 1..ms.len() {
            let (a, b) = (&ms[i], &ms[j]);
            let ab = a * b;
            out.push(ab.trace());
            out.push((a * &inv[j]).trace());
            out.push((a * &ab).trace());
            out.push((&ab * b).trace());
            out.push((&ab * &inv[i] * &inv[j]).trace());
        }
    }
    out
}

/// Componentwise `(x − y)/(1 + |y|)`, `y` from the reference fingerprint.
fn scaled_difference(fa: &[C64], fb: &[C64]) -> Vec<C64> {
    fa.iter().zip(fb).map(|(x, y)| (x - y) / (1.0 + y.norm())).collect()
}

/// Euclidean norm of the scaled differences of word fingerprints, `b` being
/// the reference. Word traces of monodromy tuples easily reach 1e6, so an
/// unscaled difference could not meet a 1e−7 tolerance in double precision.
pub fn fingerprint_defect(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    let (fa, fb) = (word_fingerprint(a), word_fingerprint(b));
    if fa.len() != fb.len() {
        return f64::INFINITY;
    }
    let d: f64 = scaled_difference(&fa, &fb).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

/// Solves `χ_k X = X M_k` for all `k`; returns the relative null residual and
/// the reciprocal condition number of `X`.
pub fn conjugacy_check(chis: &[CMatrix], targets: &[CMatrix]) -> (f64, f64) {
    let n = chis[0].nrows();
    let mut big = CMatrix::zeros(n * n * chis.len().max(1), n * n);
    let id = linalg::identity(n);
    for (k, (chi, m)) in chis.iter().zip(targets).enumerate() {
        // vec(χX − XM) = (I⊗χ − Mᵀ⊗I) vec X, column-major
        let block = id.kronecker(chi) - m.transpose().kronecker(&id);
        big.view_mut((k * n * n, 0), (n * n, n * n)).copy_from(&block);
    }
    let scale = big.norm().max(1e-300);
    let Ok(svd) = linalg::svd(&big) else { return (f64::INFINITY, 0.0) };
    let imin = svd.singular_values.len() - 1;
    let smin = svd.singular_values[imin];
    let x = CMatrix::from_column_slice(n, n, svd.v.column(imin).as_slice());
    let sv = linalg::singular_values(&x).unwrap_or_default();
    let (lo, hi) = (sv.last().copied().unwrap_or(0.0), sv.first().copied().unwrap_or(1.0));
    (smin / scale, lo / hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub radius: f64,
    pub grid: usize,
    pub evaluated: usize,
    pub failed: usize,
    pub polished: usize,
    pub best_parameter: Option<C64>,
    pub best_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ResolverVerdict {
    ExtremalConfirmed {
        parameter: C64,
        defect: f64,
        conjugacy_residual: f64,
        conjugator_rcond: f64,
        indices: Vec<i64>,
        scan: ScanReport,
    },
    /// No member matched. This is not a proof that the indices are balanced.
    Unresolved { balanced: Vec<i64>, extremal: Vec<i64>, scan: ScanReport },
}

impl ResolverVerdict {
    pub fn is_confirmed(&self) -> bool {
        matches!(self, ResolverVerdict::ExtremalConfirmed { .. })
    }

    pub fn indices(&self) -> Option<&[i64]> {
        match self {
            ResolverVerdict::ExtremalConfirmed { indices, .. } => Some(indices),
            ResolverVerdict::Unresolved { .. } => None,
        }
    }

    pub fn scan(&self) -> &ScanReport {
        match self {
            ResolverVerdict::ExtremalConfirmed { scan, .. } | ResolverVerdict::Unresolved { scan, .. } => scan,
        }
    }
}

struct Objective<'a> {
    family: &'a AccessoryFamily,
    target: &'a [CMatrix],
    target_fp: Vec<C64>,
    config: IntegratorConfig,
}

impl Objective<'_> {
    fn chis(&self, t: C64) -> Result<Vec<CMatrix>> {
        Ok(monodromy_at_tolerance(&self.family.companion(t), &self.config)?.chis)
    }

    fn residual_vector(&self, t: C64) -> Result<Vec<C64>> {
        let fp = word_fingerprint(&self.chis(t)?);
        if fp.len() != self.target_fp.len() {
            return Err(Error::InvalidInput("target tuple has the wrong length".into()));
        }
        Ok(scaled_difference(&fp, &self.target_fp))
    }

    fn defect(&self, t: C64) -> f64 {
        match self.residual_vector(t) {
            Ok(r) => {
                let d = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if d.is_finite() {
                    d
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    }
}

/// Derivative-free simplex descent in the complex plane.
fn nelder_mead(f: &dyn Fn(C64) -> f64, start: C64, size: f64, iters: usize, stop: f64) -> (C64, f64) {
    let mut simplex: Vec<(C64, f64)> =
        [start, start + c(size, 0.0), start + c(0.0, size)].iter().map(|&z| (z, f(z))).collect();
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < stop || (simplex[2].0 - simplex[0].0).norm() < 1e-12 {
            break;
        }
        let centroid = (simplex[0].0 + simplex[1].0) / 2.0;
        let worst = simplex[2];
        let reflect = centroid + (centroid - worst.0);
        let fr = f(reflect);
        if fr < simplex[0].1 {
            let expand = centroid + (centroid - worst.0) * 2.0;
            let fe = f(expand);
            simplex[2] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflect, fr);
        } else {
            let contract = centroid + (worst.0 - centroid) * 0.5;
            let fc = f(contract);
            if fc < worst.1 {
                simplex[2] = (contract, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    let z = best + (s.0 - best) * 0.5;
                    *s = (z, f(z));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Gauss–Newton on the holomorphic residual vector with a central
/// finite-difference derivative.
fn gauss_newton(obj: &Objective, start: C64, start_defect: f64) -> (C64, f64) {
    let (mut t, mut best) = (start, start_defect);
    for _ in 0..12 {
        let h = 1e-5 * (1.0 + t.norm());
        let (Ok(r), Ok(rp), Ok(rm)) =
            (obj.residual_vector(t), obj.residual_vector(t + h), obj.residual_vector(t - h))
        else {
            break;
        };
        let d: Vec<C64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let num: C64 = d.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = d.iter().map(|a| a.norm_sqr()).sum();
        if den == 0.0 || !den.is_finite() {
            break;
        }
        let next = t - num / den;
        let value = obj.defect(next);
        if value < best {
            let done = best - value < 1e-3 * best;
            t = next;
            best = value;
            if done {
                break;
            }
        } else {
            break;
        }
    }
    (t, best)
}

fn grid_points(radius: f64, grid: usize) -> Vec<C64> {
    let g = grid.max(2);
    let step = 2.0 * radius / (g - 1) as f64;
    let mut pts = Vec::new();
    for i in 0..g {
        for j in 0..g {
            let z = c(-radius + i as f64 * step, -radius + j as f64 * step);
            if z.norm() <= radius + 1e-12 {
                pts.push(z);
            }
        }
    }
    pts
}

/// Grid indices that are no worse than their 8 neighbours.
fn local_minima(values: &[(C64, f64)], step: f64) -> Vec<(C64, f64)> {
    let mut out: Vec<(C64, f64)> = values
        .iter()
        .filter(|(z, v)| {
            v.is_finite()
                && values.iter().all(|(w, u)| (w - z).norm() > 1.5 * step || (w - z).norm() < 1e-12 || *u >= *v)
        })
        .copied()
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

/// Scans `|t| ≤ R` on a square grid, polishes the best local minima and
/// confirms a match by fingerprint and by solving for the conjugator.
pub fn resolve(req: &ResolverRequest, config: &IntegratorConfig) -> Result<ResolverVerdict> {
    if req.target.len() != req.m || req.singularities.len() != req.m {
        return Err(Error::InvalidInput("request target and singularities must have m entries".into()));
    }
    let family = accessory_family(req.n, &req.singularities, &req.exponents)?;
    let target_fp = word_fingerprint(&req.target);
    let scan_config = IntegratorConfig { rel_tol: config.rel_tol.max(SCAN_REL_TOL), ..*config };
    let scan_obj = Objective { family: &family, target: &req.target, target_fp: target_fp.clone(), config: scan_config };
    let fine = Objective { family: &family, target: &req.target, target_fp, config: *config };
    let points = grid_points(req.scan_radius, req.grid);
    let step = 2.0 * req.scan_radius / (req.grid.max(2) - 1) as f64;
    let values: Vec<(C64, f64)> = points.par_iter().map(|&t| (t, scan_obj.defect(t))).collect();
    let failed = values.iter().filter(|v| !v.1.is_finite()).count();
    let minima = local_minima(&values, step);

    let mut best: Option<(C64, f64)> = None;
    let mut polished = 0;
    for &(start, _) in minima.iter().take(POLISH_CANDIDATES) {
        polished += 1;
        let f = |t: C64| fine.defect(t);
        let (t, d) = nelder_mead(&f, start, 0.5 * step, 120, req.match_tol * 1e-2);
        let (t, d) = gauss_newton(&fine, t, d);
        if best.is_none_or(|b| d < b.1) {
            best = Some((t, d));
        }
        if d < req.match_tol {
            break;
        }
    }
    let mut scan = ScanReport {
        radius: req.scan_radius,
        grid: req.grid,
        evaluated: values.len(),
        failed,
        polished,
        best_parameter: best.map(|b| b.0),
        best_defect: best.map_or(f64::INFINITY, |b| b.1),
    };
    if let Some((t, defect)) = best {
        if defect < req.match_tol {
            let chis = fine.chis(t)?;
            let (residual, rcond) = conjugacy_check(&chis, fine.target);
            if residual < CONJUGACY_TOL && rcond > CONJUGACY_TOL {
                return Ok(ResolverVerdict::ExtremalConfirmed {
                    parameter: t,
                    defect,
                    conjugacy_residual: residual,
                    conjugator_rcond: rcond,
                    indices: req.extremal.clone(),
                    scan,
                });
            }
            scan.best_defect = defect;
        }
    }
    Ok(ResolverVerdict::Unresolved { balanced: req.balanced.clone(), extremal: req.extremal.clone(), scan })
}

/// Companion monodromy of the family member at `t0`, for planted round trips.
pub fn planted_target(
    n: usize,
    singularities: &[C64],
    exponents: &[Vec<C64>],
    t0: C64,
    config: &IntegratorConfig,
) -> Result<Vec<CMatrix>> {
    let family = accessory_family(n, singularities, exponents)?;
    Ok(monodromy(&family.companion(t0), config)?.chis)
}
