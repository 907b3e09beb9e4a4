//! Correlation measures: trace-norm discord (closed form and numeric),
//! mutual-information discord and negativity.

pub mod analytic;
pub mod mutual_info;
pub mod trace_norm;

use serde::{Deserialize, Serialize};

pub use analytic::{
    classify_zero_discord, d1_analytic, d2_analytic, d2_with_form, discord_geo_analytic,
    discord_geo_analytic_qubit, discord_geo_analytic_with, transition_lambda,
    transition_lambda_for, transition_lambda_qubit, Branch, D2Form, GeometricDiscordBreakdown,
    ZeroDiscordSet,
};
pub use mutual_info::{discord_mi, mutual_information};
pub use trace_norm::{
    discord_trace_norm_numeric, nearest_quantum_classical, NearestQuantumClassical,
    QuantumClassicalState,
};

use crate::channels::DephasingLevel;
use crate::density::{partial_transpose, DensityMatrix};
use crate::error::Result;
use crate::linalg::trace_norm;

/// (‖ρ^{T_B}‖₁ − 1) / 2, clipped at 0.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    rho.require_bipartite()?;
    let pt = partial_transpose(rho, 1)?;
    Ok(((trace_norm(&pt, true)? - 1.0) / 2.0).max(0.0))
}

/// Everything known about one state on a trajectory. Measures that were not
/// requested are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub lambda: f64,
    pub time_us: Option<f64>,
    pub geo: Option<GeometricDiscordBreakdown>,
    pub geo_numeric: Option<f64>,
    pub mi_discord: Option<f64>,
    pub negativity: Option<f64>,
}

impl CorrelationReport {
    pub fn empty(lambda: DephasingLevel, time_us: Option<f64>) -> Self {
        Self {
            lambda: lambda.value(),
            time_us,
            geo: None,
            geo_numeric: None,
            mi_discord: None,
            negativity: None,
        }
    }
}
