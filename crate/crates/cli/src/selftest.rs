//! Fast subset of the acceptance checks, runnable from an installed binary.

use pi_core::fuchsian::{Construction, Generator, MatrixField};
use pi_core::index::{self, IndexResult};
use pi_core::linalg::{c, CMatrix, C64, I};
use pi_core::monodromy::{ensure_convention, monodromy, symbol_from_system};
use pi_core::symbol::extract_data;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::commands::{construction_sample, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst residual observed, where the check has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub config: RunConfig,
}

struct Scalar {
    points: Vec<C64>,
    eps: Vec<C64>,
}

impl MatrixField for Scalar {
    fn dim(&self) -> usize {
        1
    }
    fn singularities(&self) -> &[C64] {
        &self.points
    }
    fn eval(&self, z: C64) -> CMatrix {
        CMatrix::from_element(1, 1, self.points.iter().zip(&self.eps).map(|(a, e)| e / (z - a)).sum())
    }
}

fn check(name: &str, tol: f64, run: impl FnOnce() -> Result<(f64, String), String>) -> Check {
    match run() {
        Ok((residual, detail)) => Check { name: name.into(), passed: residual < tol, residual: Some(residual), detail },
        Err(detail) => Check { name: name.into(), passed: false, residual: None, detail },
    }
}

fn index_round_trip(build: impl Fn(&mut Generator) -> pi_core::Result<(pi_core::fuchsian::RationalSystem, f64)>, cfg: &RunConfig) -> Result<(f64, String), String> {
    let mut mismatches = 0;
    for seed in 0..4 {
        let mut g = Generator::new(seed);
        let (sys, p) = build(&mut g).map_err(|e| e.to_string())?;
        let sym = symbol_from_system(&sys, p, &cfg.integrator).map_err(|e| e.to_string())?;
        let data = extract_data(&sym).map_err(|e| e.to_string())?;
        let rep = index::classify(&data).map_err(|e| e.to_string())?;
        let res: IndexResult = index::indices(&rep, &data).map_err(|e| e.to_string())?;
        if res.determined() != Some(&sys.indices[..]) {
            mismatches += 1;
        }
    }
    Ok((mismatches as f64, format!("{mismatches} of 4 index vectors differ from the construction")))
}

pub fn run(cfg: &RunConfig) -> SelfTestReport {
    let mut checks = vec![check("orientation convention", 0.5, || {
        ensure_convention().map(|_| (0.0, "scalar loop matches exp(−2πiε)".into())).map_err(|e| e.to_string())
    })];
    checks.push(check("scalar monodromy", 1e-8, || {
        let mut worst: f64 = 0.0;
        for seed in 0..8u64 {
            let mut g = Generator::new(seed);
            let m = 1 + seed as usize % 4;
            let points = g.singularities(m);
            let eps: Vec<C64> = (0..m).map(|_| c(g.uniform(-0.45, 0.45), g.uniform(-0.2, 0.2))).collect();
            let tuple = monodromy(&Scalar { points, eps: eps.clone() }, &cfg.integrator).map_err(|e| e.to_string())?;
            for (chi, e) in tuple.chis.iter().zip(&eps) {
                worst = worst.max((chi[(0, 0)] - (-2.0 * PI * I * e).exp()).norm());
            }
        }
        Ok((worst, "8 random scalar fields".into()))
    }));
    checks.push(check("product identity", 1e-8, || {
        let mut worst: f64 = 0.0;
        for seed in 0..6u64 {
            let mut g = Generator::new(seed);
            let (sys, _) = match seed % 3 {
                0 => g.construct_triangular_2(3, &[1, 0]),
                1 => g.construct_extremal(2, 4, 0),
                _ => g.construct_3x3(Construction::Flag),
            }
            .map_err(|e| e.to_string())?;
            worst = worst.max(sys.trace_residual().map_err(|e| e.to_string())?);
            worst = worst.max(monodromy(&sys, &cfg.integrator).map_err(|e| e.to_string())?.product_defect);
        }
        Ok((worst, "6 generated systems, also covering the residue trace identity".into()))
    }));
    checks.push(check("reducible index recovery", 0.5, || {
        index_round_trip(|g| g.construct_triangular_2(3, &[1, 0]), cfg)
    }));
    checks.push(check("three-jump irreducible index recovery", 0.5, || {
        index_round_trip(|g| g.construct_extremal(2, 3, 0), cfg)
    }));
    checks.push(check("3x3 table index recovery", 0.5, || {
        let mut mismatches = 0;
        for row in 1..=8 {
            let (sys, p) = construction_sample(row, row as u64).map_err(|e| e.message)?;
            let sym = symbol_from_system(&sys, p, &cfg.integrator).map_err(|e| e.to_string())?;
            let data = extract_data(&sym).map_err(|e| e.to_string())?;
            let rep = index::classify(&data).map_err(|e| e.to_string())?;
            let res = index::indices(&rep, &data).map_err(|e| e.to_string())?;
            if res.determined() != Some(&sys.indices[..]) {
                mismatches += 1;
            }
        }
        Ok((mismatches as f64, format!("{mismatches} of 8 table constructions differ")))
    }));
    SelfTestReport { passed: checks.iter().all(|c| c.passed), checks, config: cfg.clone() }
}
