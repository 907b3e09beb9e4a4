//! Dynamics sweeps, freezing-interval detection and the freezing index
//! F = (Q̄ ∫ Q dγ)^{1/4} over parametrized time γ = 1 − λ.

use serde::{Deserialize, Serialize};

use crate::channels::{
    dephase_local, dephased_bell_diagonal_qubit, dephased_bell_diagonal_qutrit, lambda_of_time,
    time_of_lambda, DephasingLevel, DephasingSchedule,
};
use crate::correlations::{
    discord_geo_analytic_qubit, discord_geo_analytic_with, discord_mi, discord_trace_norm_numeric,
    negativity, CorrelationReport, D2Form,
};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::optimize::derive_seed;
use crate::states::{BellParams2, BellParams3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    /// Closed-form trace-norm discord.
    Geo,
    /// Numerical upper bound on trace-norm discord.
    GeoNumeric,
    /// Mutual-information discord (bits).
    Mi,
    Negativity,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Geo,
        Measure::GeoNumeric,
        Measure::Mi,
        Measure::Negativity,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FamilyParams {
    Qutrit(BellParams3),
    Qubit(BellParams2),
}

impl FamilyParams {
    pub fn state(&self, lambda: DephasingLevel) -> DensityMatrix {
        match *self {
            FamilyParams::Qutrit(p) => dephased_bell_diagonal_qutrit(p, lambda),
            FamilyParams::Qubit(p) => dephased_bell_diagonal_qubit(p, lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub measures: Vec<Measure>,
    pub seed: u64,
    /// Restarts for the numeric trace-norm discord.
    pub geo_budget: usize,
    /// Restarts for the MI discord.
    pub mi_budget: usize,
    pub mi_measured_side: usize,
    pub d2_form: D2Form,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            measures: vec![Measure::Geo, Measure::Negativity],
            seed: 42,
            geo_budget: crate::correlations::trace_norm::DEFAULT_RESTARTS,
            mi_budget: crate::correlations::mutual_info::DEFAULT_RESTARTS,
            mi_measured_side: crate::correlations::mutual_info::DEFAULT_MEASURED_SIDE,
            d2_form: D2Form::Corrected,
        }
    }
}

impl SweepOptions {
    pub fn with_measures(measures: &[Measure]) -> Self {
        Self {
            measures: measures.to_vec(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSample {
    pub t_us: f64,
    pub lambda: f64,
    pub report: CorrelationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsTrace {
    pub schedule: DephasingSchedule,
    pub samples: Vec<DynamicsSample>,
}

impl DynamicsTrace {
    /// (γ, Q) pairs for one measure, in sample order.
    pub fn series(&self, measure: Measure) -> Result<Vec<(f64, f64)>> {
        self.samples
            .iter()
            .map(|s| {
                let r = &s.report;
                let q = match measure {
                    Measure::Geo => r.geo.map(|g| g.discord),
                    Measure::GeoNumeric => r.geo_numeric,
                    Measure::Mi => r.mi_discord,
                    Measure::Negativity => r.negativity,
                };
                q.map(|q| (1.0 - s.lambda, q))
                    .ok_or(Error::MeasureMissing(measure))
            })
            .collect()
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let ordered = t_grid.windows(2).all(|w| w[1] > w[0]);
    if !ordered || t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::UnsortedGrid);
    }
    Ok(())
}

fn evaluate(
    rho: &DensityMatrix,
    family: Option<&FamilyParams>,
    lambda: DephasingLevel,
    t_us: f64,
    options: &SweepOptions,
    index: usize,
) -> Result<CorrelationReport> {
    let mut report = CorrelationReport::empty(lambda, Some(t_us));
    let seed = derive_seed(options.seed, index as u64);
    for &m in &options.measures {
        match m {
            Measure::Geo => {
                report.geo = Some(match family {
                    Some(FamilyParams::Qutrit(p)) => {
                        discord_geo_analytic_with(*p, lambda, options.d2_form)
                    }
                    Some(FamilyParams::Qubit(p)) => discord_geo_analytic_qubit(*p, lambda),
                    None => return Err(Error::MeasureUnavailable(Measure::Geo)),
                });
            }
            Measure::GeoNumeric => {
                report.geo_numeric = Some(discord_trace_norm_numeric(
                    rho,
                    1,
                    options.geo_budget,
                    seed,
                )?);
            }
            Measure::Mi => {
                report.mi_discord = Some(discord_mi(
                    rho,
                    options.mi_measured_side,
                    options.mi_budget,
                    seed,
                )?);
            }
            Measure::Negativity => report.negativity = Some(negativity(rho)?),
        }
    }
    Ok(report)
}

/// Evaluates the selected measures on the dephased family state at every time.
pub fn sweep_dynamics(
    family: FamilyParams,
    schedule: DephasingSchedule,
    t_grid: &[f64],
    options: &SweepOptions,
) -> Result<DynamicsTrace> {
    check_grid(t_grid)?;
    let samples = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let lambda = lambda_of_time(t, &schedule)?;
            let rho = family.state(lambda);
            let report = evaluate(&rho, Some(&family), lambda, t, options, k)?;
            Ok(DynamicsSample {
                t_us: t,
                lambda: lambda.value(),
                report,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DynamicsTrace { schedule, samples })
}

/// Like [`sweep_dynamics`] but starting from an arbitrary state, dephasing
/// subsystem 0. The closed-form measure is unavailable here.
pub fn sweep_dynamics_from_state(
    initial: &DensityMatrix,
    schedule: DephasingSchedule,
    t_grid: &[f64],
    options: &SweepOptions,
) -> Result<DynamicsTrace> {
    check_grid(t_grid)?;
    initial.require_bipartite()?;
    let samples = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let lambda = lambda_of_time(t, &schedule)?;
            let rho = dephase_local(initial, 0, lambda)?;
            let report = evaluate(&rho, None, lambda, t, options, k)?;
            Ok(DynamicsSample {
                t_us: t,
                lambda: lambda.value(),
                report,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DynamicsTrace { schedule, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezingReport {
    pub gamma_ini: f64,
    pub gamma_fin: f64,
    pub plateau_mean: f64,
    pub transition_lambda: f64,
    pub index: f64,
}

impl FreezingReport {
    fn degenerate() -> Self {
        Self {
            gamma_ini: 0.0,
            gamma_fin: 0.0,
            plateau_mean: 0.0,
            transition_lambda: 1.0,
            index: 0.0,
        }
    }

    pub fn interval(&self) -> f64 {
        self.gamma_fin - self.gamma_ini
    }
}

/// Plateau below this initial value is treated as no correlation at all.
const ZERO_PLATEAU: f64 = 1e-12;
/// Slack when checking that samples cover an interval.
const COVER_TOL: f64 = 1e-12;

pub const DEFAULT_REL_TOL: f64 = 0.01;

fn interpolate(samples: &[(f64, f64)], gamma: f64) -> f64 {
    let k = samples.partition_point(|&(g, _)| g < gamma);
    if k == 0 {
        return samples[0].1;
    }
    if k == samples.len() {
        return samples[k - 1].1;
    }
    let (g0, q0) = samples[k - 1];
    let (g1, q1) = samples[k];
    if g1 == g0 {
        return q1;
    }
    q0 + (q1 - q0) * (gamma - g0) / (g1 - g0)
}

/// F = (Q̄ ∫_{γ_ini}^{γ_fin} Q dγ)^{1/4}. `samples` are (γ, Q) sorted by γ.
/// The integral is trapezoidal with linearly interpolated endpoints; Q̄ is
/// the mean of the samples inside the interval.
pub fn freezing_index(samples: &[(f64, f64)], gamma_ini: f64, gamma_fin: f64) -> Result<f64> {
    if samples.is_empty() || !(gamma_fin >= gamma_ini) {
        return Err(Error::EmptyInterval);
    }
    if samples.windows(2).any(|w| !(w[1].0 >= w[0].0)) {
        return Err(Error::UnsortedGrid);
    }
    if let Some(&(_, q)) = samples.iter().find(|s| s.1 < 0.0 || s.1.is_nan()) {
        return Err(Error::NegativeDiscord(q));
    }
    let first = samples[0].0;
    let last = samples[samples.len() - 1].0;
    if gamma_ini < first - COVER_TOL || gamma_fin > last + COVER_TOL {
        return Err(Error::EmptyInterval);
    }
    if gamma_fin == gamma_ini {
        return Ok(0.0);
    }

    let mut points = vec![(gamma_ini, interpolate(samples, gamma_ini))];
    points.extend(
        samples
            .iter()
            .copied()
            .filter(|&(g, _)| g > gamma_ini && g < gamma_fin),
    );
    points.push((gamma_fin, interpolate(samples, gamma_fin)));
    let integral: f64 = points
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum();

    let inside: Vec<f64> = samples
        .iter()
        .filter(|&&(g, _)| g >= gamma_ini - COVER_TOL && g <= gamma_fin + COVER_TOL)
        .map(|s| s.1)
        .collect();
    let mean = if inside.is_empty() {
        0.5 * (points[0].1 + points[points.len() - 1].1)
    } else {
        inside.iter().sum::<f64>() / inside.len() as f64
    };
    Ok((mean * integral).max(0.0).powf(0.25))
}

/// Finds the initial plateau of `measure`: the longest prefix whose values
/// stay within `rel_tol` of the first one. The end of the plateau is then
/// refined by extending the line through the first two samples outside the
/// band back up to the initial level.
pub fn detect_freezing_interval(
    trace: &DynamicsTrace,
    measure: Measure,
    rel_tol: f64,
) -> Result<FreezingReport> {
    let series = trace.series(measure)?;
    detect_freezing_in_series(&series, rel_tol)
}

/// Same as [`detect_freezing_interval`] on raw (γ, Q) pairs sorted by γ.
pub fn detect_freezing_in_series(series: &[(f64, f64)], rel_tol: f64) -> Result<FreezingReport> {
    if series.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (g_start, q_start) = series[0];
    if q_start < ZERO_PLATEAU {
        return Ok(FreezingReport::degenerate());
    }
    let band = rel_tol * q_start;
    let end = series
        .iter()
        .position(|&(_, q)| (q - q_start).abs() > band)
        .unwrap_or(series.len());
    let last_in = end - 1;
    let gamma_fin = if end == series.len() {
        series[last_in].0
    } else {
        // samples just past the true kink can still sit inside the band, so
        // the crossing may lie anywhere after the start
        let lo = g_start;
        let hi = series[end].0;
        let (ga, qa) = series[end];
        let (gb, qb) = if end + 1 < series.len() {
            series[end + 1]
        } else {
            series[last_in]
        };
        let crossing = if qb != qa {
            ga + (q_start - qa) * (gb - ga) / (qb - qa)
        } else {
            lo
        };
        if crossing.is_finite() {
            crossing.clamp(lo, hi)
        } else {
            lo
        }
    };
    let gamma_ini = g_start;
    let index = freezing_index(series, gamma_ini, gamma_fin)?;
    let inside: Vec<f64> = series[..end].iter().map(|s| s.1).collect();
    Ok(FreezingReport {
        gamma_ini,
        gamma_fin,
        plateau_mean: inside.iter().sum::<f64>() / inside.len() as f64,
        transition_lambda: 1.0 - gamma_fin,
        index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezingComparison {
    pub param: f64,
    pub q_qubit: f64,
    pub q_qutrit: f64,
    pub interval_qubit: f64,
    pub interval_qutrit: f64,
    pub f_qubit: f64,
    pub f_qutrit: f64,
}

/// γ resolution of the comparison sweep.
pub const COMPARISON_POINTS: usize = 4000;

/// Qubit (b0 = p) against qutrit (c0 = p, c1 = 0, c2 = 1 − p) freezing on
/// the closed-form discord, for each p in (0, 1/2).
pub fn compare_freezing(
    param_grid: &[f64],
    schedule: DephasingSchedule,
) -> Result<Vec<FreezingComparison>> {
    compare_freezing_with(param_grid, schedule, COMPARISON_POINTS)
}

pub fn compare_freezing_with(
    param_grid: &[f64],
    schedule: DephasingSchedule,
    points: usize,
) -> Result<Vec<FreezingComparison>> {
    if param_grid.is_empty() {
        return Err(Error::InvalidGrid("no parameter values".into()));
    }
    if let Some(bad) = param_grid.iter().find(|p| !(**p > 0.0 && **p < 0.5)) {
        return Err(Error::InvalidGrid(format!(
            "parameter {bad} is outside (0, 0.5)"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidGrid("need at least two γ points".into()));
    }
    // λ from 1 down to 1/points; λ = 0 would sit at infinite time
    let t_grid: Vec<f64> = (0..points)
        .map(|k| {
            let lambda = DephasingLevel::new(1.0 - k as f64 / points as f64).expect("in range");
            time_of_lambda(lambda, &schedule)
        })
        .collect();
    let options = SweepOptions::with_measures(&[Measure::Geo]);

    param_grid
        .iter()
        .map(|&p| {
            let qubit = FamilyParams::Qubit(BellParams2::from_b0(p)?);
            let qutrit = FamilyParams::Qutrit(BellParams3::from_c0_c2(p, 1.0 - p)?);
            let rq = detect_freezing_interval(
                &sweep_dynamics(qubit, schedule, &t_grid, &options)?,
                Measure::Geo,
                DEFAULT_REL_TOL,
            )?;
            let rt = detect_freezing_interval(
                &sweep_dynamics(qutrit, schedule, &t_grid, &options)?,
                Measure::Geo,
                DEFAULT_REL_TOL,
            )?;
            Ok(FreezingComparison {
                param: p,
                q_qubit: rq.plateau_mean,
                q_qutrit: rt.plateau_mean,
                interval_qubit: rq.interval(),
                interval_qutrit: rt.interval(),
                f_qubit: rq.index,
                f_qutrit: rt.index,
            })
        })
        .collect()
}
