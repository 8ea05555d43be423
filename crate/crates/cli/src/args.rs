use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qbattery_core::floquet::{ChargerForm, FloquetParams, KickOrder};
use qbattery_core::observables::Grouping;
use qbattery_core::scaling::SampleInstant;
use qbattery_core::spin::Convention;
use qbattery_core::table::Format;

#[derive(Debug, Parser)]
#[command(
    name = "qbattery",
    version,
    about = "Collective-spin quantum battery toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One kicked trajectory with per-step powers and bounds.
    Simulate(SimulateArgs),
    /// Time-averaged variances, bound and KL divergence over a list of N.
    Sweep(SweepArgs),
    /// Full-space charger spectral statistics over a list of N.
    Spectra(SpectraArgs),
    /// Closed-form scenarios where the energy-space Fisher bound misleads.
    #[command(subcommand)]
    Counterexample(Scenario),
    /// Power-law fit of a CSV column against N.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupingArg {
    #[value(name = "per_distinct_energy", alias = "per-distinct-energy")]
    PerDistinctEnergy,
    #[value(name = "per_eigenvector", alias = "per-eigenvector")]
    PerEigenvector,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConventionArg {
    #[value(name = "spin_half", alias = "spin-half")]
    SpinHalf,
    Pauli,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    #[value(name = "kick_then_rotate", alias = "kick-then-rotate")]
    KickThenRotate,
    #[value(name = "rotate_then_kick", alias = "rotate-then-kick")]
    RotateThenKick,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormArg {
    #[value(name = "at_kicks", alias = "at-kicks")]
    AtKicks,
    #[value(name = "between_kicks", alias = "between-kicks")]
    BetweenKicks,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InstantArg {
    #[value(name = "period_end", alias = "period-end")]
    PeriodEnd,
    #[value(name = "after_kick", alias = "after-kick")]
    AfterKick,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<GroupingArg> for Grouping {
    fn from(g: GroupingArg) -> Self {
        match g {
            GroupingArg::PerDistinctEnergy => Grouping::PerDistinctEnergy,
            GroupingArg::PerEigenvector => Grouping::PerEigenvector,
        }
    }
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::SpinHalf => Convention::SpinHalf,
            ConventionArg::Pauli => Convention::Pauli,
        }
    }
}

impl From<OrderArg> for KickOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::KickThenRotate => KickOrder::KickThenRotate,
            OrderArg::RotateThenKick => KickOrder::RotateThenKick,
        }
    }
}

impl From<FormArg> for ChargerForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::AtKicks => ChargerForm::AtKicks,
            FormArg::BetweenKicks => ChargerForm::BetweenKicks,
        }
    }
}

impl From<InstantArg> for SampleInstant {
    fn from(i: InstantArg) -> Self {
        match i {
            InstantArg::PeriodEnd => SampleInstant::PeriodEnd,
            InstantArg::AfterKick => SampleInstant::AfterKick,
        }
    }
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 7.0, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, value_enum, default_value = "spin_half")]
    pub convention: ConventionArg,
    #[arg(long, value_enum, default_value = "kick_then_rotate")]
    pub order: OrderArg,
}

impl ModelArgs {
    pub fn params(&self) -> FloquetParams {
        FloquetParams {
            beta: self.beta,
            order: self.order.into(),
            convention: self.convention.into(),
            ..FloquetParams::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, default_value_t = PI, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, value_enum, default_value = "per_distinct_energy")]
    pub grouping: GroupingArg,
    /// Charger entering the variance and Fisher rates.
    #[arg(long = "charger-form", value_enum, default_value = "at_kicks")]
    pub charger_form: FormArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `a..b:step`, `a..b` or a comma list.
    #[arg(long, default_value = "4..64:4", value_parser = parse_n_list)]
    pub n: NList,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
    #[arg(long, value_enum, default_value = "period_end")]
    pub instant: InstantArg,
    /// Include the initial snapshot in the variance averages.
    #[arg(long)]
    pub include_initial: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpectraFormArg {
    Both,
    #[value(name = "at_kicks", alias = "at-kicks")]
    AtKicks,
    #[value(name = "between_kicks", alias = "between-kicks")]
    BetweenKicks,
}

#[derive(Debug, Args)]
pub struct SpectraArgs {
    #[arg(long, default_value = "4..64:4", value_parser = parse_n_list)]
    pub n: NList,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "charger-form", value_enum, default_value = "both")]
    pub charger_form: SpectraFormArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// End of the time grid; defaults to `pi / lambda`.
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Step of the discrete Fisher estimator.
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
}

#[derive(Debug, Subcommand)]
pub enum Scenario {
    /// Two-level battery charged by a resonant drive.
    Rabi {
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Drive confined to a degenerate level, under both groupings.
    Degenerate {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// N independent Rabi cells.
    Parallel {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Discrete Fisher estimate at and near the full-charge turning point.
    TurningPoint {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Comma list of estimator steps.
        #[arg(long, default_value = "1e-2,1e-3,1e-4", value_parser = parse_f64_list)]
        dt: FloatList,
        /// Comma list of offsets from the turning point, in units of `1/lambda`.
        #[arg(long, default_value = "0,-0.1,0.1", value_parser = parse_f64_list, allow_hyphen_values = true)]
        offsets: FloatList,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub column: String,
    #[arg(long, default_value = "N")]
    pub x: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NList(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

/// Parses `a..b:step` (inclusive), `a..b`, a comma list or a single value.
pub fn parse_n_list(s: &str) -> Result<NList, String> {
    let s = s.trim();
    let number = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid N value {t:?}"))
    };
    let values = if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (number(hi)?, number(step)?),
            None => (number(rest)?, 1),
        };
        let lo = number(lo)?;
        if step == 0 {
            return Err("N range step must be positive".into());
        }
        if hi < lo {
            return Err(format!("empty N range {s:?}"));
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("empty N list".into());
    }
    Ok(NList(values))
}

pub fn parse_f64_list(s: &str) -> Result<FloatList, String> {
    let values = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid number {t:?}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(FloatList(values))
}
