//! On-disk JSON shapes and the error type that maps onto exit codes.

use pi_core::fuchsian::RationalSystem;
use pi_core::json::{matrix_to_rows, rows_to_matrix};
use pi_core::symbol::PiecewiseSymbol;
use pi_core::{ErrorKind, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub angle: f64,
}

/// `{"n", "p", "jumps": [{"angle"}], "arcs": [[[re, im], ...], ...]}`.
/// `arcs[k]` is the value on the arc that starts at `jumps[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub jumps: Vec<Jump>,
    pub arcs: Vec<Vec<Vec<C64>>>,
}

impl SymbolFile {
    pub fn from_symbol(sym: &PiecewiseSymbol) -> Self {
        SymbolFile {
            n: sym.n,
            p: Some(sym.p),
            jumps: sym.jump_angles.iter().map(|&angle| Jump { angle }).collect(),
            arcs: sym.arc_values.iter().map(matrix_to_rows).collect(),
        }
    }

    /// `p_flag` overrides the file's exponent; 2 if neither is given.
    pub fn to_symbol(&self, p_flag: Option<f64>) -> Result<PiecewiseSymbol, CliError> {
        let p = p_flag.or(self.p).unwrap_or(2.0);
        let arcs = self
            .arcs
            .iter()
            .map(|rows| rows_to_matrix(rows))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::input)?;
        let angles = self.jumps.iter().map(|j| j.angle).collect();
        Ok(PiecewiseSymbol::new(self.n, p, angles, arcs)?)
    }
}

/// A generated system together with what is needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSystem {
    pub shape: String,
    pub seed: u64,
    /// An exponent placing every residue eigenvalue strictly inside `J_p`.
    pub p: f64,
    #[serde(flatten)]
    pub system: RationalSystem,
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { kind: "input", message: message.into(), detail: None }
    }

    pub fn domain(message: impl Into<String>, detail: Option<Value>) -> Self {
        CliError { kind: "domain", message: message.into(), detail }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError { kind: "numeric", message: message.into(), detail: None }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            "input" => 2,
            "domain" => 3,
            _ => 4,
        }
    }
}

impl From<pi_core::Error> for CliError {
    fn from(e: pi_core::Error) -> Self {
        let message = e.to_string();
        match e.kind() {
            ErrorKind::Input => CliError::input(message),
            ErrorKind::Domain => CliError::domain(message, None),
            ErrorKind::Numeric => CliError::numeric(message),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::input(format!("malformed JSON: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}
