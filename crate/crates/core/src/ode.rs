//! Dormand–Prince 5(4) with PI step control for matrix ODEs `dY/ds = F(s, Y)`
//! on `s ∈ [0, 1]`.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in the unit path parameter.
    pub max_step: f64,
    /// Loop radius as a fraction of the minimum pairwise singularity distance.
    pub clearance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 0.125, clearance: 0.25 }
    }
}

impl IntegratorConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        IntegratorConfig { rel_tol, ..Self::default() }
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_step > 0.0
            && self.clearance > 0.0
            && self.clearance < 0.5;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("integrator configuration {self:?} out of range")))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

const MIN_STEP: f64 = 1e-13;
const MAX_STEPS: usize = 2_000_000;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Integrates from `s = 0` to `s = 1`; `segment` only labels errors.
pub fn integrate<F>(f: F, y0: CMatrix, config: &IntegratorConfig, segment: usize) -> Result<(CMatrix, Stats)>
where
    F: Fn(f64, &CMatrix) -> CMatrix,
{
    let (alpha, beta) = (0.7 / 4.0, 0.4 / 4.0);
    let mut stats = Stats::default();
    let mut s = 0.0;
    let mut y = y0;
    let mut k1 = f(s, &y);
    let mut h = config.max_step.min(0.01);
    let mut err_prev: f64 = 1e-4;
    let mut rejected_last = false;
    while s < 1.0 {
        if stats.accepted + stats.rejected > MAX_STEPS || h < MIN_STEP {
            return Err(Error::StepUnderflow { segment, s });
        }
        let h_eff = h.min(1.0 - s);
        let mut k = Vec::with_capacity(7);
        k.push(k1.clone());
        for i in 1..7 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate().take(i) {
                if A[i][j] != 0.0 {
                    yi += kj * nalgebra::Complex::new(h_eff * A[i][j], 0.0);
                }
            }
            if i == 6 {
                // FSAL stage: the 7th evaluation is at the 5th-order solution
                let k7 = f(s + h_eff, &yi);
                k.push(k7);
                let mut err = CMatrix::zeros(y.nrows(), y.ncols());
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        err += kj * nalgebra::Complex::new(h_eff * E[j], 0.0);
                    }
                }
                let scale = config.abs_tol + config.rel_tol * max_abs(&y).max(max_abs(&yi));
                // error per unit step: the local bound shrinks with h, so the global
                // error over the unit interval stays proportional to the tolerance
                let e = (max_abs(&err) / (scale * h_eff)).max(1e-16);
                if !e.is_finite() {
                    h *= 0.2;
                    stats.rejected += 1;
                    rejected_last = true;
                    break;
                }
                if e <= 1.0 {
                    stats.accepted += 1;
                    s += h_eff;
                    y = yi;
                    k1 = k.pop().expect("seven stages");
                    let mut fac = 0.9 * e.powf(-alpha) * err_prev.powf(beta);
                    fac = fac.clamp(0.2, 5.0);
                    if rejected_last {
                        fac = fac.min(1.0);
                    }
                    h = (h_eff * fac).min(config.max_step);
                    err_prev = e.max(1e-4);
                    rejected_last = false;
                } else {
                    stats.rejected += 1;
                    h = h_eff * (0.9 * e.powf(-0.25)).max(0.2);
                    rejected_last = true;
                }
                break;
            }
            k.push(f(s + C[i] * h_eff, &yi));
        }
    }
    Ok((y, stats))
}
