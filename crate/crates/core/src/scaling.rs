//! N-sweeps of the kicked battery, time averages over the charging window,
//! and log-log power-law regression.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::floquet::{
    battery_hamiltonian, charger_hamiltonian, evolve, kick_operator, ChargerForm, FloquetParams,
    KickOrder,
};
use crate::observables::{
    average_power, expectation, kl_divergence, variance, EnergyBasis, Grouping, LogBase,
};
use crate::spin::{coherent_state, SpinSector};
use crate::table::{self, nan_as_null, Format, NumericColumns};

pub const SWEEP_SCHEMA: &str = "qbattery-sweep/v1";

/// Column order of the sweep CSV.
pub const SWEEP_COLUMNS: [&str; 11] = [
    "N",
    "beta",
    "steps",
    "var_hb",
    "var_hc",
    "bound",
    "kl_bits",
    "final_energy",
    "avg_power",
    "kl_nats",
    "kl_violations",
];

/// Instant within a period at which variances are sampled.
#[derive(Debug, Copy, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleInstant {
    /// After the full period, i.e. the stroboscopic snapshot.
    #[default]
    PeriodEnd,
    /// Right after the kick of each period.
    AfterKick,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub params: FloquetParams,
    pub steps: usize,
    pub theta: f64,
    pub phi: f64,
    pub grouping: Grouping,
    pub charger: ChargerForm,
    pub instant: SampleInstant,
    /// Include snapshot 0 in the variance averages.
    pub include_initial: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_list: default_n_list(),
            params: FloquetParams::default(),
            steps: 50,
            theta: PI,
            phi: 0.0,
            grouping: Grouping::PerDistinctEnergy,
            charger: ChargerForm::AtKicks,
            instant: SampleInstant::PeriodEnd,
            include_initial: false,
        }
    }
}

/// `N = 4, 8, ..., 64`.
pub fn default_n_list() -> Vec<usize> {
    (4..=64).step_by(4).collect()
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(invalid("empty N list"));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(invalid(format!("sweep needs N >= 2, got {n}")));
        }
        if self.steps == 0 {
            return Err(invalid("sweep needs at least one step"));
        }
        if !self.theta.is_finite() || !self.phi.is_finite() {
            return Err(invalid("initial-state angles must be finite"));
        }
        self.params.validate()
    }
}

/// Time-averaged diagnostics for one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    pub steps: usize,
    pub var_hb: f64,
    pub var_hc: f64,
    /// Mean of `2 Delta H_B Delta H_C`.
    pub bound: f64,
    /// Mean consecutive-step KL divergence over finite steps; `NaN` if none.
    #[serde(with = "nan_as_null")]
    pub kl_bits: f64,
    pub final_energy: f64,
    pub avg_power: f64,
    #[serde(with = "nan_as_null")]
    pub kl_nats: f64,
    /// Steps whose KL divergence was infinite (support violation).
    pub kl_violations: usize,
}

fn sweep_point(n: usize, config: &SweepConfig) -> Result<SweepRecord> {
    let sector = SpinSector::new(n)?;
    let params = &config.params;
    let h_b = battery_hamiltonian(sector, params.convention);
    let h_c = charger_hamiltonian(sector, params, config.charger);
    let basis = EnergyBasis::new(&h_b)?;
    let initial = coherent_state(sector, config.theta, config.phi)?;
    let traj = evolve(&initial, params, config.steps)?;
    let kick = kick_operator(sector, params);

    let first = if config.include_initial { 0 } else { 1 };
    let (mut sum_hb, mut sum_hc, mut sum_bound) = (0.0, 0.0, 0.0);
    for step in first..=config.steps {
        let snapshot = traj.state(step).expect("evolved");
        let sampled = match (config.instant, step, params.order) {
            (SampleInstant::PeriodEnd, ..) | (SampleInstant::AfterKick, 0, _) => snapshot.clone(),
            (SampleInstant::AfterKick, _, KickOrder::KickThenRotate) => {
                kick.apply(traj.state(step - 1).expect("evolved"))?
            }
            (SampleInstant::AfterKick, _, KickOrder::RotateThenKick) => snapshot.clone(),
        };
        let vb = variance(&h_b, &sampled)?;
        let vc = variance(&h_c, &sampled)?;
        sum_hb += vb;
        sum_hc += vc;
        sum_bound += 2.0 * (vb * vc).sqrt();
    }
    let count = (config.steps + 1 - first) as f64;

    let mut previous = basis.populations(traj.initial(), config.grouping)?;
    let (mut kl_sum, mut kl_finite, mut kl_violations) = (0.0, 0usize, 0usize);
    for (_, state) in traj.snapshots().skip(1) {
        let current = basis.populations(state, config.grouping)?;
        match kl_divergence(&current, &previous, LogBase::Nats)?.finite() {
            Some(v) => {
                kl_sum += v;
                kl_finite += 1;
            }
            None => kl_violations += 1,
        }
        previous = current;
    }
    let kl_nats = if kl_finite > 0 {
        kl_sum / kl_finite as f64
    } else {
        f64::NAN
    };

    let last = traj.state(config.steps).expect("evolved");
    Ok(SweepRecord {
        n,
        beta: params.beta,
        steps: config.steps,
        var_hb: sum_hb / count,
        var_hc: sum_hc / count,
        bound: sum_bound / count,
        kl_bits: kl_nats / std::f64::consts::LN_2,
        final_energy: expectation(&h_b, last)?,
        avg_power: average_power(&traj, &h_b, config.steps)?,
        kl_nats,
        kl_violations,
    })
}

/// One record per entry of `config.n_list`, in list order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    config
        .n_list
        .iter()
        .map(|&n| sweep_point(n, config))
        .collect()
}

/// `y = prefactor * x^exponent` fitted by least squares on `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.prefactor * x.powf(self.exponent)
    }
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints(points.len()));
    }
    if let Some(&(x, value)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::NonPositive { x, value });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid(
            "power-law fit needs at least two distinct abscissae",
        ));
    }
    let exponent = sxy / sxx;
    let log_prefactor = mean_y - exponent * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - log_prefactor - exponent * p.0).powi(2))
        .sum();
    let r_squared = if syy <= f64::EPSILON * n {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        exponent,
        log_prefactor,
        prefactor: log_prefactor.exp(),
        r_squared,
        points: logs.len(),
    })
}

/// Fits column `y` against column `x` of a CSV table.
pub fn fit_csv_columns<R: Read>(input: R, x: &str, y: &str) -> Result<PowerLawFit> {
    let table = NumericColumns::read(input)?;
    let xs = table.column(x)?;
    let ys = table.column(y)?;
    let points: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    fit_power_law(&points)
}

/// Values of a named sweep column, as `(N, value)` points.
pub fn sweep_points(records: &[SweepRecord], column: &str) -> Result<Vec<(f64, f64)>> {
    let pick = |r: &SweepRecord| -> Option<f64> {
        Some(match column {
            "var_hb" => r.var_hb,
            "var_hc" => r.var_hc,
            "bound" => r.bound,
            "kl_bits" => r.kl_bits,
            "kl_nats" => r.kl_nats,
            "final_energy" => r.final_energy,
            "avg_power" => r.avg_power,
            _ => return None,
        })
    };
    records
        .iter()
        .map(|r| {
            pick(r)
                .map(|v| (r.n as f64, v))
                .ok_or_else(|| Error::Schema(format!("no fittable sweep column {column:?}")))
        })
        .collect()
}

pub fn emit<W: Write>(records: &[SweepRecord], format: Format, out: W) -> Result<()> {
    table::write_table(records, out, format, Some(SWEEP_SCHEMA))
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    table::read_csv(input, Some(SWEEP_SCHEMA))
}

pub fn read_sweep_json<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    table::read_json(input)
}
