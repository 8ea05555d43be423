mod args;

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use qbattery_core::counterexamples::{
    degenerate_scenario_with, parallel_baseline_with, rabi_scenario_with, turning_point_probe,
    ScenarioOptions, ScenarioRow, SCENARIO_SCHEMA, TURNING_POINT_SCHEMA,
};
use qbattery_core::floquet::{battery_hamiltonian, charger_hamiltonian, evolve, ChargerForm};
use qbattery_core::observables::{bound_series, BOUND_SERIES_SCHEMA};
use qbattery_core::scaling::{emit, fit_csv_columns, run_sweep, SweepConfig};
use qbattery_core::spectral::{spectra_table, SPECTRA_SCHEMA};
use qbattery_core::spin::{coherent_state, SpinSector};
use qbattery_core::table::write_table;
use qbattery_core::Error;

use args::{Cli, Command, FitArgs, GridArgs, OutputArgs, Scenario, SpectraFormArg};

#[derive(Debug)]
enum Failure {
    /// Invalid configuration, exit code 2.
    Config(String),
    /// Failure while computing or writing, exit code 1.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::TooManySpins { .. }
            | Error::NonPositive { .. }
            | Error::InsufficientPoints(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Buffers the whole table and only then writes it, so a failure never
/// leaves a truncated file behind.
fn write_rows<T: Serialize>(rows: &[T], output: &OutputArgs, schema: &str) -> CliResult {
    let mut buf = Vec::new();
    write_table(rows, &mut buf, output.format.into(), Some(schema))?;
    deliver(&buf, output.out.as_deref())
}

fn deliver(bytes: &[u8], out: Option<&Path>) -> CliResult {
    match out {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(bytes))
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn require_positive(name: &str, value: f64) -> CliResult {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Failure::Config(format!(
            "--{name} must be positive, got {value}"
        )))
    }
}

fn simulate(a: &args::SimulateArgs) -> CliResult {
    let params = a.model.params();
    params.validate()?;
    let t = &a.trajectory;
    if t.steps == 0 {
        return Err(Failure::Config("--steps must be at least 1".into()));
    }
    if !t.theta.is_finite() || !t.phi.is_finite() {
        return Err(Failure::Config("--theta and --phi must be finite".into()));
    }
    let sector = SpinSector::new(a.n)?;
    let h_b = battery_hamiltonian(sector, params.convention);
    let h_c = charger_hamiltonian(sector, &params, t.charger_form.into());
    let traj = evolve(&coherent_state(sector, t.theta, t.phi)?, &params, t.steps)?;
    let rows = bound_series(&traj, &h_b, &h_c, t.grouping.into())?;
    write_rows(&rows, &a.output, BOUND_SERIES_SCHEMA)
}

fn sweep(a: &args::SweepArgs) -> CliResult {
    let t = &a.trajectory;
    let config = SweepConfig {
        n_list: a.n.0.clone(),
        params: a.model.params(),
        steps: t.steps,
        theta: t.theta,
        phi: t.phi,
        grouping: t.grouping.into(),
        charger: t.charger_form.into(),
        instant: a.instant.into(),
        include_initial: a.include_initial,
    };
    config.validate()?;
    let records = run_sweep(&config)?;
    let mut buf = Vec::new();
    emit(&records, a.output.format.into(), &mut buf)?;
    deliver(&buf, a.output.out.as_deref())
}

fn spectra(a: &args::SpectraArgs) -> CliResult {
    let params = a.model.params();
    params.validate()?;
    let keep = |form: ChargerForm| match a.charger_form {
        SpectraFormArg::Both => true,
        SpectraFormArg::AtKicks => form == ChargerForm::AtKicks,
        SpectraFormArg::BetweenKicks => form == ChargerForm::BetweenKicks,
    };
    let rows: Vec<_> = spectra_table(&a.n.0, &params)?
        .into_iter()
        .filter(|r| keep(r.form))
        .collect();
    write_rows(&rows, &a.output, SPECTRA_SCHEMA)
}

fn grid(g: &GridArgs) -> CliResult<(f64, ScenarioOptions)> {
    require_positive("lambda", g.lambda)?;
    require_positive("dt", g.dt)?;
    let t_max = g.t_max.unwrap_or(std::f64::consts::PI / g.lambda);
    require_positive("t-max", t_max)?;
    if g.samples < 2 {
        return Err(Failure::Config(format!(
            "--samples must be at least 2, got {}",
            g.samples
        )));
    }
    Ok((
        t_max,
        ScenarioOptions {
            dt: g.dt,
            ..ScenarioOptions::default()
        },
    ))
}

fn counterexample(s: &Scenario) -> CliResult {
    match s {
        Scenario::Rabi {
            gap,
            grid: g,
            output,
        } => {
            require_positive("gap", *gap)?;
            let (t_max, opts) = grid(g)?;
            let r = rabi_scenario_with(*gap, g.lambda, t_max, g.samples, &opts)?;
            write_rows(&r.rows(), output, SCENARIO_SCHEMA)
        }
        Scenario::Degenerate { grid: g, output } => {
            let (t_max, opts) = grid(g)?;
            let d = degenerate_scenario_with(g.lambda, t_max, g.samples, &opts)?;
            let mut rows: Vec<ScenarioRow> = d.per_eigenvector.rows();
            rows.extend(d.per_distinct_energy.rows());
            write_rows(&rows, output, SCENARIO_SCHEMA)
        }
        Scenario::Parallel { n, grid: g, output } => {
            if *n == 0 {
                return Err(Failure::Config("--n must be at least 1".into()));
            }
            let (t_max, opts) = grid(g)?;
            let r = parallel_baseline_with(*n, g.lambda, t_max, g.samples, &opts)?;
            write_rows(&r.rows(), output, SCENARIO_SCHEMA)
        }
        Scenario::TurningPoint {
            lambda,
            dt,
            offsets,
            output,
        } => {
            require_positive("lambda", *lambda)?;
            for &d in &dt.0 {
                require_positive("dt", d)?;
            }
            let offsets: Vec<f64> = offsets.0.iter().map(|o| o / lambda).collect();
            let rows = turning_point_probe(*lambda, &dt.0, &offsets)?;
            write_rows(&rows, output, TURNING_POINT_SCHEMA)
        }
    }
}

#[derive(Serialize)]
struct FitReport<'a> {
    x: &'a str,
    column: &'a str,
    exponent: f64,
    prefactor: f64,
    log_prefactor: f64,
    r_squared: f64,
    points: usize,
}

fn fit(a: &FitArgs) -> CliResult {
    let file = File::open(&a.input)
        .map_err(|e| Failure::Config(format!("cannot open {}: {e}", a.input.display())))?;
    let fit = fit_csv_columns(file, &a.x, &a.column).map_err(|e| match e {
        Error::Schema(msg) => Failure::Config(msg),
        other => other.into(),
    })?;
    let report = FitReport {
        x: &a.x,
        column: &a.column,
        exponent: fit.exponent,
        prefactor: fit.prefactor,
        log_prefactor: fit.log_prefactor,
        r_squared: fit.r_squared,
        points: fit.points,
    };
    let mut text =
        serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    deliver(text.as_bytes(), None)
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Spectra(a) => spectra(a),
        Command::Counterexample(s) => counterexample(s),
        Command::Fit(a) => fit(a),
    }
}

/// Usage problems keep clap's usage text; bad flag values get a one-line
/// diagnostic.
fn parse_failure(e: clap::Error) -> ExitCode {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp
        | ErrorKind::DisplayVersion
        | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
        | ErrorKind::InvalidSubcommand
        | ErrorKind::MissingSubcommand => e.exit(),
        _ => {
            let text = e.render().to_string();
            let paragraph: Vec<&str> = text
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(str::trim)
                .collect();
            let joined = paragraph.join(" ");
            let msg = joined.strip_prefix("error: ").unwrap_or(&joined);
            eprintln!("qbattery: configuration error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => return parse_failure(e),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("qbattery: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("qbattery: {msg}");
            ExitCode::from(1)
        }
    }
}
