//! `qcorr`: CSV/JSON artifacts for correlation dynamics of Bell-diagonal
//! states under local dephasing. All times are in microseconds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qcorr_core::channels::{
    dephase_local, dephased_bell_diagonal_qutrit, DephasingLevel, DephasingSchedule,
};
use qcorr_core::correlations::{
    d1_analytic, discord_geo_analytic_with, discord_mi, discord_trace_norm_numeric, negativity,
    transition_lambda_for, CorrelationReport, D2Form, GeometricDiscordBreakdown,
};
use qcorr_core::density::{fidelity, DensityMatrix};
use qcorr_core::freezing::{
    compare_freezing_with, sweep_dynamics, sweep_dynamics_from_state, DynamicsTrace, FamilyParams,
    Measure, SweepOptions, COMPARISON_POINTS,
};
use qcorr_core::states::{
    prepare_bell_diagonal_circuit, BellParams2, BellParams3, PolarizationModel,
};
use qcorr_core::tomography::{
    default_settings, mle_reconstruct, simulate_counts, MeasurementRecord,
};
use qcorr_core::Error;

use output::{g12, opt, sink, write_csv, write_json_rows};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "qcorr",
    version,
    about = "Correlation dynamics of Bell-diagonal states under local dephasing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Output file; standard output when omitted.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Output format for the tabular commands (tomo always writes JSON).
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Use the d2 prefactor without the 1/3 correction.
    #[arg(long, global = true)]
    compat_uncorrected_d2: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Correlations along λ(t) = exp[−(t/T2*)^n]; times in µs.
    Dynamics(DynamicsArgs),
    /// Transition level λ* over the (c0, c2) simplex.
    Surface(SurfaceArgs),
    /// Freezing interval and index, qubit against qutrit, over a shared parameter.
    FreezingIndex(FreezingArgs),
    /// Simulated tomography round trip; writes JSON.
    Tomo(TomoArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct ScheduleArgs {
    /// T2* in µs.
    #[arg(long, default_value_t = 44.0)]
    t2star: f64,
    /// Stretch exponent n.
    #[arg(long, default_value_t = 2.0)]
    stretch: f64,
}

impl ScheduleArgs {
    fn build(self) -> Result<DephasingSchedule, Failure> {
        Ok(DephasingSchedule::new(self.t2star, self.stretch)?)
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct BudgetArgs {
    /// Restarts for the numeric trace-norm discord.
    #[arg(long, default_value_t = 32)]
    geo_budget: usize,
    /// Restarts for the mutual-information discord.
    #[arg(long, default_value_t = 64)]
    mi_budget: usize,
    /// Subsystem measured in the mutual-information discord (0 electron, 1 nuclear).
    #[arg(long, default_value_t = 1)]
    measured_side: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Geo,
    GeoNumeric,
    Mi,
    Neg,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Geo => Measure::Geo,
            MeasureArg::GeoNumeric => Measure::GeoNumeric,
            MeasureArg::Mi => Measure::Mi,
            MeasureArg::Neg => Measure::Negativity,
        }
    }
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    /// Qutrit weight of |Ψ00⟩.
    #[arg(long, requires = "c2", conflicts_with = "b0")]
    c0: Option<f64>,
    /// Qutrit weight of |Ψ02⟩.
    #[arg(long, requires = "c0")]
    c2: Option<f64>,
    /// Qubit weight of |Φ0⟩.
    #[arg(long)]
    b0: Option<f64>,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Last time in µs.
    #[arg(long, default_value_t = 100.0)]
    tmax: f64,
    /// Number of intervals; rows are t = k·tmax/steps for k = 0..=steps.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "geo,neg")]
    measures: Vec<MeasureArg>,
    /// Prepare through the pulse sequence with electron and nuclear
    /// polarizations "pe,pn" (qutrit only, c0 + c2 = 1).
    #[arg(long, value_parser = parse_pair)]
    polarization: Option<(f64, f64)>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    /// Grid points per simplex edge.
    #[arg(long, default_value_t = 61)]
    resolution: usize,
}

#[derive(Args, Debug)]
struct FreezingArgs {
    /// start:stop:step, stop inclusive; values must lie in (0, 0.5).
    #[arg(long)]
    grid: String,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// γ resolution of each sweep.
    #[arg(long, default_value_t = COMPARISON_POINTS)]
    points: usize,
}

#[derive(Args, Debug)]
struct TomoArgs {
    #[arg(long)]
    c0: f64,
    #[arg(long)]
    c2: f64,
    /// Dephasing level applied before readout.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Mean counts per setting; 0 gives noiseless records.
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    /// "pe,pn"; prepares through the pulse sequence (c0 + c2 = 1).
    #[arg(long, value_parser = parse_pair)]
    polarization: Option<(f64, f64)>,
    #[command(flatten)]
    budget: BudgetArgs,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    let a = a.trim().parse::<f64>().map_err(|e| format!("{a:?}: {e}"))?;
    let b = b.trim().parse::<f64>().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((a, b))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::LambdaOutOfRange(_)
            | Error::NegativeTime(_)
            | Error::InvalidGrid(_)
            | Error::EmptyGrid
            | Error::UnsortedGrid
            | Error::BadSubsystemIndex { .. }
            | Error::BudgetZero
            | Error::UnsupportedDims(_)
            | Error::BadIndex(_)
            | Error::BadLevels { .. }
            | Error::MeasureUnavailable(_) => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("write failed: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Numeric(format!("serialization failed: {e}"))
    }
}

fn d2_form(cli: &Cli) -> D2Form {
    if cli.compat_uncorrected_d2 {
        D2Form::Uncorrected
    } else {
        D2Form::Corrected
    }
}

fn emit(cli: &Cli, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut out = sink(cli.output.as_deref())?;
    match cli.format {
        Format::Csv => write_csv(&mut *out, header, rows)?,
        Format::Json => write_json_rows(&mut *out, header, rows)?,
    }
    Ok(())
}

const DYNAMICS_HEADER: [&str; 8] = [
    "t_us",
    "lambda",
    "d1",
    "d2",
    "discord_geo",
    "discord_geo_numeric",
    "discord_mi",
    "negativity",
];

fn cmd_dynamics(cli: &Cli, a: &DynamicsArgs) -> Result<(), Failure> {
    let schedule = a.schedule.build()?;
    if a.steps == 0 {
        return Err(Failure::Usage("--steps must be at least 1".into()));
    }
    if !(a.tmax > 0.0 && a.tmax.is_finite()) {
        return Err(Failure::Usage("--tmax must be positive".into()));
    }
    let t_grid: Vec<f64> = (0..=a.steps)
        .map(|k| {
            if k == a.steps {
                a.tmax
            } else {
                a.tmax * k as f64 / a.steps as f64
            }
        })
        .collect();
    let mut measures: Vec<Measure> = Vec::new();
    for m in &a.measures {
        let m = Measure::from(*m);
        if !measures.contains(&m) {
            measures.push(m);
        }
    }
    let options = SweepOptions {
        measures: measures.clone(),
        seed: cli.seed,
        geo_budget: a.budget.geo_budget,
        mi_budget: a.budget.mi_budget,
        mi_measured_side: a.budget.measured_side,
        d2_form: d2_form(cli),
    };

    let trace: DynamicsTrace = match (a.c0, a.c2, a.b0, a.polarization) {
        (Some(c0), Some(c2), None, None) => sweep_dynamics(
            FamilyParams::Qutrit(BellParams3::from_c0_c2(c0, c2)?),
            schedule,
            &t_grid,
            &options,
        )?,
        (Some(c0), Some(c2), None, Some((pe, pn))) => {
            let initial = prepare_bell_diagonal_circuit(c0, c2, PolarizationModel::new(pe, pn)?)?;
            // the closed form only describes the ideal family
            let options = SweepOptions {
                measures: measures
                    .iter()
                    .copied()
                    .filter(|m| *m != Measure::Geo)
                    .collect(),
                ..options
            };
            sweep_dynamics_from_state(&initial, schedule, &t_grid, &options)?
        }
        (None, None, Some(b0), None) => sweep_dynamics(
            FamilyParams::Qubit(BellParams2::from_b0(b0)?),
            schedule,
            &t_grid,
            &options,
        )?,
        (None, None, Some(_), Some(_)) => {
            return Err(Failure::Usage(
                "--polarization applies to the qutrit family only".into(),
            ))
        }
        _ => return Err(Failure::Usage("give either --c0 and --c2, or --b0".into())),
    };

    let rows: Vec<Vec<String>> = trace
        .samples
        .iter()
        .map(|s| {
            let r = &s.report;
            vec![
                g12(s.t_us),
                g12(s.lambda),
                opt(r.geo.map(|g| g.d1)),
                opt(r.geo.map(|g| g.d2)),
                opt(r.geo.map(|g| g.discord)),
                opt(r.geo_numeric),
                opt(r.mi_discord),
                opt(r.negativity),
            ]
        })
        .collect();
    emit(cli, &DYNAMICS_HEADER, &rows)
}

fn cmd_surface(cli: &Cli, a: &SurfaceArgs) -> Result<(), Failure> {
    if a.resolution < 2 {
        return Err(Failure::Usage("--resolution must be at least 2".into()));
    }
    let n = a.resolution - 1;
    let form = d2_form(cli);
    let mut rows = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            let (c0, c2) = (i as f64 / n as f64, j as f64 / n as f64);
            let c1 = (n - i - j) as f64 / n as f64;
            let p = BellParams3::new(c0, c1, c2)?;
            let star = transition_lambda_for(d1_analytic(p), form);
            rows.push(vec![g12(c0), g12(c2), g12(star.value())]);
        }
    }
    emit(cli, &["c0", "c2", "lambda_star"], &rows)
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(Failure::Usage(format!(
            "--grid expects start:stop:step, got {text:?}"
        )));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Failure::Usage(format!("--grid value {s:?}: {e}")))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || !step.is_finite() {
        return Err(Failure::Usage(
            "--grid step must be positive and all values finite".into(),
        ));
    }
    let mut grid = Vec::new();
    let mut k = 0u32;
    loop {
        let v = start + f64::from(k) * step;
        if v > stop + 1e-9 * step {
            break;
        }
        // keep printed parameters clean (0.3, not 0.30000000000000004)
        grid.push((v * 1e12).round() / 1e12);
        k += 1;
    }
    if grid.is_empty() {
        return Err(Failure::Usage(format!("--grid {text:?} is empty")));
    }
    Ok(grid)
}

fn cmd_freezing_index(cli: &Cli, a: &FreezingArgs) -> Result<(), Failure> {
    let grid = parse_grid(&a.grid)?;
    let rows: Vec<Vec<String>> = compare_freezing_with(&grid, a.schedule.build()?, a.points)?
        .iter()
        .map(|r| {
            vec![
                g12(r.param),
                g12(r.q_qubit),
                g12(r.q_qutrit),
                g12(r.interval_qubit),
                g12(r.interval_qutrit),
                g12(r.f_qubit),
                g12(r.f_qutrit),
            ]
        })
        .collect();
    emit(
        cli,
        &[
            "param",
            "Q_qubit",
            "Q_qutrit",
            "interval_qubit",
            "interval_qutrit",
            "F_qubit",
            "F_qutrit",
        ],
        &rows,
    )
}

#[derive(Serialize)]
struct TruthSummary {
    c0: f64,
    c1: f64,
    c2: f64,
    lambda: f64,
    polarization: Option<[f64; 2]>,
    /// Closed form for the ideal family state at this λ.
    discord_geo: GeometricDiscordBreakdown,
    negativity: f64,
}

#[derive(Serialize)]
struct MatrixJson {
    real: Vec<Vec<f64>>,
    imag: Vec<Vec<f64>>,
}

impl MatrixJson {
    fn of(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let n = m.rows();
        Self {
            real: (0..n)
                .map(|i| (0..n).map(|j| m[(i, j)].re).collect())
                .collect(),
            imag: (0..n)
                .map(|i| (0..n).map(|j| m[(i, j)].im).collect())
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct TomoOutput {
    truth: TruthSummary,
    shots: u64,
    seed: u64,
    records: Vec<MeasurementRecord>,
    rho_mle: MatrixJson,
    /// Against the ideal family state.
    fidelity: f64,
    /// Against the state that generated the records.
    fidelity_vs_prepared: f64,
    log_likelihood: f64,
    iterations: usize,
    report: CorrelationReport,
}

fn cmd_tomo(cli: &Cli, a: &TomoArgs) -> Result<(), Failure> {
    let p = BellParams3::from_c0_c2(a.c0, a.c2)?;
    let lambda = DephasingLevel::new(a.lambda)?;
    let ideal = dephased_bell_diagonal_qutrit(p, lambda);
    let truth = match a.polarization {
        Some((pe, pn)) => {
            let prepared =
                prepare_bell_diagonal_circuit(a.c0, a.c2, PolarizationModel::new(pe, pn)?)?;
            dephase_local(&prepared, 0, lambda)?
        }
        None => ideal.clone(),
    };
    let settings = default_settings(&[3, 3])?;
    let records = simulate_counts(&truth, &settings, a.shots, cli.seed)?;
    let mut result = mle_reconstruct(&records, &[3, 3], None)?;
    let fidelity_vs_prepared = result.set_truth(&truth)?;
    let rho = &result.rho_mle;

    let mut report = CorrelationReport::empty(lambda, None);
    report.geo_numeric = Some(discord_trace_norm_numeric(
        rho,
        1,
        a.budget.geo_budget,
        cli.seed,
    )?);
    report.mi_discord = Some(discord_mi(
        rho,
        a.budget.measured_side,
        a.budget.mi_budget,
        cli.seed,
    )?);
    report.negativity = Some(negativity(rho)?);

    let [c0, c1, c2] = p.weights();
    let out = TomoOutput {
        truth: TruthSummary {
            c0,
            c1,
            c2,
            lambda: a.lambda,
            polarization: a.polarization.map(|(x, y)| [x, y]),
            discord_geo: discord_geo_analytic_with(p, lambda, d2_form(cli)),
            negativity: negativity(&truth)?,
        },
        shots: a.shots,
        seed: cli.seed,
        fidelity: fidelity(rho, &ideal)?,
        fidelity_vs_prepared,
        rho_mle: MatrixJson::of(rho),
        log_likelihood: result.log_likelihood,
        iterations: result.iterations,
        records,
        report,
    };
    let mut sink = sink(cli.output.as_deref())?;
    serde_json::to_writer_pretty(&mut *sink, &out)?;
    writeln!(sink)?;
    sink.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Dynamics(a) => cmd_dynamics(cli, a),
        Command::Surface(a) => cmd_surface(cli, a),
        Command::FreezingIndex(a) => cmd_freezing_index(cli, a),
        Command::Tomo(a) => cmd_tomo(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("qcorr: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("qcorr: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_exit_classes() {
        assert!(matches!(
            Failure::from(Error::LambdaOutOfRange(2.0)),
            Failure::Usage(_)
        ));
        assert!(matches!(Failure::from(Error::EmptyGrid), Failure::Usage(_)));
        assert!(matches!(
            Failure::from(Error::NoConvergence(5000)),
            Failure::Numeric(_)
        ));
        assert!(matches!(
            Failure::from(Error::DidNotConverge(100)),
            Failure::Numeric(_)
        ));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("0.25:0.25:1").unwrap(), vec![0.25]);
        assert!(parse_grid("0.3:0.1:0.1").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }
}
