use pi_core::fuchsian::{choose_p, Construction, Generator, RationalSystem};
use pi_core::index::{self, IndexResult, Reducibility, ResolverRequest};
use pi_core::monodromy::{factor_assembly, monodromy, MonodromyTuple};
use pi_core::ode::IntegratorConfig;
use pi_core::resolver::{resolve, ResolverVerdict};
use pi_core::symbol::{
    commuting_factorize_m2, extract_data, phi_criterion, product_defect, scalar_factorize, CommutingFactorization,
    DataPair, PhiStatus, ScalarFactorization,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::schema::{CliError, GeneratedSystem, SymbolFile};

/// Samples per arc when measuring factorization residuals.
pub const RESIDUAL_SAMPLES: usize = 64;

/// Everything needed to rerun a command byte-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub integrator: IntegratorConfig,
    pub scan_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(rel_tol: f64, scan_radius: f64, seed: Option<u64>) -> Result<Self, CliError> {
        let integrator = IntegratorConfig::with_rel_tol(rel_tol);
        integrator.check()?;
        if !(scan_radius > 0.0 && scan_radius.is_finite()) {
            return Err(CliError::input(format!("scan radius {scan_radius} must be positive")));
        }
        Ok(RunConfig { integrator, scan_radius, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub config: RunConfig,
    /// `‖M₁⋯M_m − I‖` of the extracted jumps.
    pub jump_product_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub symbol: SymbolFile,
    pub phi: PhiStatus,
    pub data: DataPair,
    pub reducibility: Reducibility,
    pub indices: IndexResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolver: Option<ResolverVerdict>,
    pub diagnostics: Diagnostics,
}

impl AnalysisReport {
    pub fn summary(&self) -> String {
        match (&self.indices, &self.resolver) {
            (_, Some(ResolverVerdict::ExtremalConfirmed { indices, defect, .. })) => {
                format!("indices {indices:?} (extremal confirmed, defect {defect:.1e})")
            }
            (IndexResult::Dichotomy { balanced, extremal, .. }, verdict) => {
                let tail = if verdict.is_some() { "; scan found no extremal match, which is not a proof" } else { "" };
                format!("indices {balanced:?} or {extremal:?}{tail}")
            }
            (other, _) => format!("indices {:?} ({:?})", other.candidates()[0], other.rule()),
        }
    }
}

pub fn analyze(symbol: &SymbolFile, p: Option<f64>, run_resolver: bool, cfg: &RunConfig) -> Result<AnalysisReport, CliError> {
    let sym = symbol.to_symbol(p)?;
    let phi = phi_criterion(&sym);
    if !phi.is_ok() {
        let detail = serde_json::to_value(&phi)?;
        return Err(CliError::domain("the symbol is not Φ-factorizable at this p", Some(detail)));
    }
    let data = extract_data(&sym)?;
    let reducibility = index::classify(&data)?;
    let indices = index::indices(&reducibility, &data)?;
    let resolver = match (&indices, run_resolver) {
        (IndexResult::Dichotomy { request, .. }, true) => {
            let request = ResolverRequest { scan_radius: cfg.scan_radius, ..(**request).clone() };
            Some(resolve(&request, &cfg.integrator)?)
        }
        _ => None,
    };
    let diagnostics = Diagnostics { config: cfg.clone(), jump_product_defect: product_defect(&data.ms) };
    Ok(AnalysisReport { symbol: SymbolFile::from_symbol(&sym), phi, data, reducibility, indices, resolver, diagnostics })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Shape {
    Triangular2,
    Triangular3,
    Block12,
    Block21,
    Extremal,
}

fn default_points(shape: Shape, indices: &[i64]) -> usize {
    match (shape, indices) {
        (Shape::Extremal, [a, b]) => (a - b + 2).max(2) as usize,
        _ => 3,
    }
}

pub fn generate(shape: Shape, indices: &[i64], points: Option<usize>, seed: u64) -> Result<GeneratedSystem, CliError> {
    const SPREAD: f64 = 0.3;
    const MARGIN: f64 = 0.02;
    let n = indices.len();
    let expected_n = match shape {
        Shape::Triangular2 => Some(2),
        Shape::Triangular3 | Shape::Block12 | Shape::Block21 => Some(3),
        Shape::Extremal => None,
    };
    if expected_n.is_some_and(|e| e != n) || !(1..=3).contains(&n) {
        return Err(CliError::input(format!("{shape:?} does not take {n} indices")));
    }
    let m = points.unwrap_or_else(|| default_points(shape, indices));
    if m == 0 {
        return Err(CliError::input("at least one singularity is required"));
    }
    let mut g = Generator::new(seed);
    let (system, p) = match shape {
        Shape::Triangular2 => g.construct_triangular_2(m, indices)?,
        Shape::Extremal => {
            let kappa_n = indices[n - 1];
            let (sys, p) = g.construct_extremal(n, m, kappa_n)?;
            if sys.indices != indices {
                return Err(CliError::input(format!(
                    "{indices:?} is not extremal for {m} singularities; the nearest extremal vector is {:?}",
                    sys.indices
                )));
            }
            (sys, p)
        }
        Shape::Triangular3 | Shape::Block12 | Shape::Block21 => {
            let mut found = None;
            for _ in 0..100 {
                let pts = g.singularities(m);
                let eps: Vec<Vec<_>> = match shape {
                    Shape::Triangular3 => g.reducible_exponents(m, indices, SPREAD),
                    Shape::Block12 => {
                        let line = g.reducible_exponents(m, &indices[..1], SPREAD);
                        let pair = g.generic_exponents(m, 2, indices[1] + indices[2], 1.5 * SPREAD);
                        (0..m).map(|k| vec![line[k][0], pair[k][0], pair[k][1]]).collect()
                    }
                    _ => {
                        let pair = g.generic_exponents(m, 2, indices[0] + indices[1], 1.5 * SPREAD);
                        let line = g.reducible_exponents(m, &indices[2..], SPREAD);
                        (0..m).map(|k| vec![pair[k][0], pair[k][1], line[k][0]]).collect()
                    }
                };
                let Some(p) = choose_p(&eps, MARGIN) else { continue };
                let sys = match shape {
                    Shape::Triangular3 => g.triangular_3(&pts, indices, &eps)?,
                    Shape::Block12 => g.block12_3(&pts, indices, &eps, true)?,
                    _ => g.block21_3(&pts, indices, &eps, true)?,
                };
                found = Some((sys, p));
                break;
            }
            found.ok_or_else(|| CliError::numeric("no admissible exponent table found"))?
        }
    };
    Ok(GeneratedSystem { shape: shape_name(shape).into(), seed, p, system })
}

fn shape_name(shape: Shape) -> &'static str {
    match shape {
        Shape::Triangular2 => "triangular2",
        Shape::Triangular3 => "triangular3",
        Shape::Block12 => "block12",
        Shape::Block21 => "block21",
        Shape::Extremal => "extremal",
    }
}

/// The 3×3 table constructions, exposed for the self-test.
pub fn construction_sample(row: usize, seed: u64) -> Result<(RationalSystem, f64), CliError> {
    let construction = Construction::for_table_row(row)[0];
    Ok(Generator::new(seed).construct_3x3(construction)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyReport {
    #[serde(flatten)]
    pub tuple: MonodromyTuple,
    pub config: RunConfig,
}

pub fn check_system(sys: &RationalSystem) -> Result<(), CliError> {
    let violations = sys.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        let detail = serde_json::to_value(&violations)?;
        Err(CliError::domain("the system is not in standard form", Some(detail)))
    }
}

pub fn monodromy_report(sys: &RationalSystem, cfg: &RunConfig) -> Result<MonodromyReport, CliError> {
    check_system(sys)?;
    Ok(MonodromyReport { tuple: monodromy(sys, &cfg.integrator)?, config: cfg.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorReport {
    Scalar { factorization: ScalarFactorization, residual: f64, samples_per_arc: usize },
    Commuting { factorization: CommutingFactorization, residual: f64, samples_per_arc: usize },
    /// Factors assembled from the interior and exterior fundamental solutions of a system.
    Assembled { indices: Vec<i64>, p: f64, residual: f64, samples_per_arc: usize, config: RunConfig },
}

/// Factors a symbol file (closed forms for `n = 1` or two jumps) or a
/// standard-form system (via its fundamental solutions).
pub fn factor(input: &Value, p: Option<f64>, cfg: &RunConfig) -> Result<FactorReport, CliError> {
    if input.get("numerators").is_some() {
        let sys: RationalSystem = serde_json::from_value(input.clone())?;
        check_system(&sys)?;
        let p = p.or_else(|| input.get("p").and_then(Value::as_f64)).unwrap_or(2.0);
        let fa = factor_assembly(&sys, p, &cfg.integrator)?;
        return Ok(FactorReport::Assembled {
            indices: fa.indices().to_vec(),
            p,
            residual: fa.residual,
            samples_per_arc: fa.samples_per_arc,
            config: cfg.clone(),
        });
    }
    let file: SymbolFile = serde_json::from_value(input.clone())?;
    let sym = file.to_symbol(p)?;
    if sym.n == 1 {
        let f = scalar_factorize(&sym)?;
        let residual = f.residual(&sym, RESIDUAL_SAMPLES);
        Ok(FactorReport::Scalar { factorization: f, residual, samples_per_arc: RESIDUAL_SAMPLES })
    } else if sym.m() == 2 {
        let f = commuting_factorize_m2(&sym)?;
        let residual = f.residual(&sym, RESIDUAL_SAMPLES);
        Ok(FactorReport::Commuting { factorization: f, residual, samples_per_arc: RESIDUAL_SAMPLES })
    } else {
        Err(CliError::input(
            "closed-form factors exist for scalar symbols and two-jump symbols; pass a standard-form system instead",
        ))
    }
}

/// Accepts a resolver request, an index result, or a full analysis report.
pub fn resolve_input(input: &Value, scan_radius: Option<f64>, cfg: &RunConfig) -> Result<ResolverVerdict, CliError> {
    let request = if input.get("target").is_some() {
        input.clone()
    } else if let Some(r) = input.get("request") {
        r.clone()
    } else if let Some(r) = input.get("indices").and_then(|i| i.get("request")) {
        r.clone()
    } else {
        return Err(CliError::input("input carries no dichotomy to resolve"));
    };
    let mut request: ResolverRequest = serde_json::from_value(request)?;
    if let Some(r) = scan_radius {
        request.scan_radius = r;
    }
    Ok(resolve(&request, &cfg.integrator)?)
}
