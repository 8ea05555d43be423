//! Closed-form charging scenarios in which the energy-space Fisher
//! information misreads the charging: energy-scale blindness, sign blindness
//! (charging vs discharging), activity inside a degenerate level, and the
//! turning-point instability of the discrete estimator. Also the parallel
//! (independent-cell) baseline.
//!
//! Two-level batteries have the ground level at energy 0 (the initial state)
//! and the excited level at `gap`, driven by `H_C = lambda sigma_x`:
//! `|psi(t)> = cos(lambda t)|g> - i sin(lambda t)|e>`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::observables::{
    fisher_analytic, fisher_discrete, has_zero_over_zero, EnergyDistribution, ExtendedReal,
    Grouping, ZERO_TOL,
};
use crate::table::nan_as_null;

pub const SCENARIO_SCHEMA: &str = "qbattery-scenario/v1";
pub const TURNING_POINT_SCHEMA: &str = "qbattery-turning-point/v1";

/// Default finite-difference step of the discrete Fisher estimator.
pub const DEFAULT_DT: f64 = 1e-4;

#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioFlag {
    /// The discrete estimator saw population appear on an empty level.
    SupportViolation,
    /// A `0/0` term was dropped from the analytic Fisher sum.
    ZeroOverZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPoint {
    pub t: f64,
    pub energy: f64,
    pub power: f64,
    pub var_hb: f64,
    pub var_hc: f64,
    pub robertson: f64,
    pub i_e_analytic: ExtendedReal,
    pub i_e_discrete: ExtendedReal,
    pub fisher_bound: Option<f64>,
    pub flags: Vec<ScenarioFlag>,
}

impl ScenarioPoint {
    pub fn is_generic(&self) -> bool {
        self.flags.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub name: String,
    pub points: Vec<ScenarioPoint>,
}

impl ScenarioResult {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    /// `(t, flag)` for every flagged point.
    pub fn flags(&self) -> Vec<(f64, ScenarioFlag)> {
        self.points
            .iter()
            .flat_map(|p| p.flags.iter().map(move |&f| (p.t, f)))
            .collect()
    }

    pub fn rows(&self) -> Vec<ScenarioRow> {
        self.points
            .iter()
            .map(|p| ScenarioRow::new(&self.name, p))
            .collect()
    }
}

/// Flat CSV/JSON form of a [`ScenarioPoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub t: f64,
    pub energy: f64,
    pub power: f64,
    pub var_hb: f64,
    pub var_hc: f64,
    pub robertson: f64,
    pub i_e_analytic: ExtendedReal,
    pub i_e_discrete: ExtendedReal,
    #[serde(with = "nan_as_null")]
    pub fisher_bound: f64,
    /// `;`-separated flag names, empty when generic.
    pub flags: String,
}

impl ScenarioRow {
    pub fn new(scenario: &str, p: &ScenarioPoint) -> Self {
        let flags = p
            .flags
            .iter()
            .map(|f| match f {
                ScenarioFlag::SupportViolation => "support_violation",
                ScenarioFlag::ZeroOverZero => "zero_over_zero",
            })
            .collect::<Vec<_>>()
            .join(";");
        Self {
            scenario: scenario.to_owned(),
            t: p.t,
            energy: p.energy,
            power: p.power,
            var_hb: p.var_hb,
            var_hc: p.var_hc,
            robertson: p.robertson,
            i_e_analytic: p.i_e_analytic,
            i_e_discrete: p.i_e_discrete,
            fisher_bound: p.fisher_bound.unwrap_or(f64::NAN),
            flags,
        }
    }
}

#[derive(Debug, Copy, Clone, PartialEq)]
pub struct ScenarioOptions {
    pub dt: f64,
    pub zero_tol: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            zero_tol: ZERO_TOL,
        }
    }
}

fn time_grid(t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(invalid(format!("need at least 2 samples, got {samples}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid(format!("t_max must be positive, got {t_max}")));
    }
    let step = t_max / (samples - 1) as f64;
    Ok((0..samples).map(|k| k as f64 * step).collect())
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {value}")))
    }
}

/// Rabi populations `(p_g, p_e)` and their rates.
fn rabi_populations(lambda: f64, t: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = (lambda * t).sin_cos();
    let rate = lambda * (2.0 * lambda * t).sin();
    ([c * c, s * s], [-rate, rate])
}

struct RabiCell {
    energy: f64,
    power: f64,
    var_hb: f64,
    var_hc: f64,
    i_e_analytic: ExtendedReal,
    i_e_discrete: ExtendedReal,
    zero_over_zero: bool,
}

fn rabi_cell(gap: f64, lambda: f64, t: f64, opts: &ScenarioOptions) -> Result<RabiCell> {
    let (p, rates) = rabi_populations(lambda, t);
    let (p_next, _) = rabi_populations(lambda, t + opts.dt);
    let levels = [0.0, gap];
    let now = EnergyDistribution::from_parts(&levels, &p, Grouping::PerDistinctEnergy)?;
    let next = EnergyDistribution::from_parts(&levels, &p_next, Grouping::PerDistinctEnergy)?;
    Ok(RabiCell {
        energy: gap * p[1],
        power: gap * rates[1],
        var_hb: gap * gap * p[0] * p[1],
        // <sigma_x> = 2 Re(cos * (-i sin)) = 0 along the orbit
        var_hc: lambda * lambda,
        i_e_analytic: fisher_analytic(&p, &rates, opts.zero_tol)?,
        i_e_discrete: fisher_discrete(&next, &now, opts.dt)?,
        zero_over_zero: has_zero_over_zero(&p, &rates, opts.zero_tol),
    })
}

fn flags_for(zero_over_zero: bool, discrete: ExtendedReal) -> Vec<ScenarioFlag> {
    let mut flags = Vec::new();
    if discrete.is_infinite() {
        flags.push(ScenarioFlag::SupportViolation);
    }
    if zero_over_zero {
        flags.push(ScenarioFlag::ZeroOverZero);
    }
    flags
}

fn bound_from(var_hb: f64, i_e: ExtendedReal) -> Option<f64> {
    i_e.finite().map(|i| (var_hb * i).sqrt())
}

/// Rabi-charged two-level battery with excited level at `gap`.
pub fn rabi_scenario(gap: f64, lambda: f64, t_max: f64, samples: usize) -> Result<ScenarioResult> {
    rabi_scenario_with(gap, lambda, t_max, samples, &ScenarioOptions::default())
}

pub fn rabi_scenario_with(
    gap: f64,
    lambda: f64,
    t_max: f64,
    samples: usize,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult> {
    check_positive("gap", gap)?;
    check_positive("lambda", lambda)?;
    check_positive("dt", opts.dt)?;
    let points = time_grid(t_max, samples)?
        .into_iter()
        .map(|t| {
            let cell = rabi_cell(gap, lambda, t, opts)?;
            Ok(ScenarioPoint {
                t,
                energy: cell.energy,
                power: cell.power,
                var_hb: cell.var_hb,
                var_hc: cell.var_hc,
                robertson: 2.0 * (cell.var_hb * cell.var_hc).sqrt(),
                i_e_analytic: cell.i_e_analytic,
                i_e_discrete: cell.i_e_discrete,
                fisher_bound: bound_from(cell.var_hb, cell.i_e_analytic),
                flags: flags_for(cell.zero_over_zero, cell.i_e_discrete),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult {
        name: "rabi".into(),
        points,
    })
}

/// The same drive seen under both population groupings.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateResult {
    pub per_eigenvector: ScenarioResult,
    pub per_distinct_energy: ScenarioResult,
}

/// Battery `diag(0, 0, 1)` driven by `lambda (|g1><g2| + h.c.)` from `|g1>`.
///
/// The excited level is never populated and is left out of the `0/0`
/// flagging.
pub fn degenerate_scenario(lambda: f64, t_max: f64, samples: usize) -> Result<DegenerateResult> {
    degenerate_scenario_with(lambda, t_max, samples, &ScenarioOptions::default())
}

pub fn degenerate_scenario_with(
    lambda: f64,
    t_max: f64,
    samples: usize,
    opts: &ScenarioOptions,
) -> Result<DegenerateResult> {
    check_positive("lambda", lambda)?;
    check_positive("dt", opts.dt)?;
    let grid = time_grid(t_max, samples)?;
    let energies = [0.0, 0.0, 1.0];
    let run = |grouping: Grouping| -> Result<ScenarioResult> {
        let group = |p: [f64; 3]| -> (Vec<f64>, Vec<f64>) {
            match grouping {
                Grouping::PerEigenvector => (energies.to_vec(), p.to_vec()),
                Grouping::PerDistinctEnergy => (vec![0.0, 1.0], vec![p[0] + p[1], p[2]]),
            }
        };
        let points = grid
            .iter()
            .map(|&t| {
                let ([g1, g2], [r1, r2]) = rabi_populations(lambda, t);
                let ([n1, n2], _) = rabi_populations(lambda, t + opts.dt);
                let (levels, p) = group([g1, g2, 0.0]);
                let (_, rates) = group([r1, r2, 0.0]);
                let (_, p_next) = group([n1, n2, 0.0]);
                let now = EnergyDistribution::from_parts(&levels, &p, grouping)?;
                let next = EnergyDistribution::from_parts(&levels, &p_next, grouping)?;
                let i_e_analytic = fisher_analytic(&p, &rates, opts.zero_tol)?;
                let i_e_discrete = fisher_discrete(&next, &now, opts.dt)?;
                let active = p.len() - 1;
                let zero_over_zero =
                    has_zero_over_zero(&p[..active], &rates[..active], opts.zero_tol);
                // both populated levels sit at E = 0
                let var_hb = 0.0;
                let var_hc = lambda * lambda;
                Ok(ScenarioPoint {
                    t,
                    energy: 0.0,
                    power: 0.0,
                    var_hb,
                    var_hc,
                    robertson: 2.0 * (var_hb * var_hc).sqrt(),
                    i_e_analytic,
                    i_e_discrete,
                    fisher_bound: bound_from(var_hb, i_e_analytic),
                    flags: flags_for(zero_over_zero, i_e_discrete),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScenarioResult {
            name: match grouping {
                Grouping::PerEigenvector => "degenerate/per_eigenvector".into(),
                Grouping::PerDistinctEnergy => "degenerate/per_distinct_energy".into(),
            },
            points,
        })
    };
    Ok(DegenerateResult {
        per_eigenvector: run(Grouping::PerEigenvector)?,
        per_distinct_energy: run(Grouping::PerDistinctEnergy)?,
    })
}

/// `N` independent unit-gap Rabi cells, each with its own charger.
///
/// Energy, power, variances and Fisher information (analytic and discrete)
/// add over independent cells.
pub fn parallel_baseline(
    n: usize,
    lambda: f64,
    t_max: f64,
    samples: usize,
) -> Result<ScenarioResult> {
    parallel_baseline_with(n, lambda, t_max, samples, &ScenarioOptions::default())
}

pub fn parallel_baseline_with(
    n: usize,
    lambda: f64,
    t_max: f64,
    samples: usize,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult> {
    if n == 0 {
        return Err(invalid("parallel baseline needs N >= 1"));
    }
    check_positive("lambda", lambda)?;
    check_positive("dt", opts.dt)?;
    let cells = n as f64;
    let points = time_grid(t_max, samples)?
        .into_iter()
        .map(|t| {
            let cell = rabi_cell(1.0, lambda, t, opts)?;
            let var_hb = cells * cell.var_hb;
            let var_hc = cells * cell.var_hc;
            let i_e_analytic = cell.i_e_analytic.map(|i| cells * i);
            let i_e_discrete = cell.i_e_discrete.map(|i| cells * i);
            Ok(ScenarioPoint {
                t,
                energy: cells * cell.energy,
                power: cells * cell.power,
                var_hb,
                var_hc,
                robertson: 2.0 * (var_hb * var_hc).sqrt(),
                i_e_analytic,
                i_e_discrete,
                fisher_bound: bound_from(var_hb, i_e_analytic),
                flags: flags_for(cell.zero_over_zero, i_e_discrete),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult {
        name: format!("parallel/N={n}"),
        points,
    })
}

/// Discrete Fisher estimate started at `t_turn + offset`, where
/// `t_turn = pi / (2 lambda)` is the full-charge turning point of the unit-gap
/// Rabi battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningPointRow {
    pub offset: f64,
    pub t: f64,
    pub dt: f64,
    pub power: f64,
    pub i_e_analytic: ExtendedReal,
    pub i_e_discrete: ExtendedReal,
    /// `|I_discrete / (4 lambda^2) - 1|`; `NaN` on a support violation.
    #[serde(with = "nan_as_null")]
    pub relative_error: f64,
}

pub fn turning_point_probe(
    lambda: f64,
    dts: &[f64],
    offsets: &[f64],
) -> Result<Vec<TurningPointRow>> {
    check_positive("lambda", lambda)?;
    if dts.is_empty() || offsets.is_empty() {
        return Err(invalid(
            "turning-point probe needs at least one dt and one offset",
        ));
    }
    let t_turn = PI / (2.0 * lambda);
    let target = 4.0 * lambda * lambda;
    let mut rows = Vec::with_capacity(dts.len() * offsets.len());
    for &offset in offsets {
        for &dt in dts {
            let opts = ScenarioOptions {
                dt,
                ..ScenarioOptions::default()
            };
            check_positive("dt", dt)?;
            let t = t_turn + offset;
            let cell = rabi_cell(1.0, lambda, t, &opts)?;
            rows.push(TurningPointRow {
                offset,
                t,
                dt,
                power: cell.power,
                i_e_analytic: cell.i_e_analytic,
                i_e_discrete: cell.i_e_discrete,
                relative_error: cell
                    .i_e_discrete
                    .finite()
                    .map_or(f64::NAN, |v| (v / target - 1.0).abs()),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_argument_checks() {
        assert!(rabi_scenario(1.0, 1.0, PI, 1).is_err());
        assert!(rabi_scenario(0.0, 1.0, PI, 10).is_err());
        assert!(rabi_scenario(1.0, -1.0, PI, 10).is_err());
        assert!(degenerate_scenario(1.0, 0.0, 10).is_err());
        assert!(parallel_baseline(0, 1.0, PI, 10).is_err());
        assert!(turning_point_probe(1.0, &[], &[0.0]).is_err());
        let r = rabi_scenario(1.0, 1.0, 2.0, 5).unwrap();
        assert_eq!(r.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn rabi_start_is_flagged() {
        let r = rabi_scenario(1.0, 1.0, PI, 11).unwrap();
        let first = &r.points[0];
        assert_eq!(first.energy, 0.0);
        assert!(first.flags.contains(&ScenarioFlag::ZeroOverZero));
        assert!(first.flags.contains(&ScenarioFlag::SupportViolation));
        assert!(r.points[3].is_generic());
    }

    #[test]
    fn turning_point_on_grid() {
        let lambda = 2.0;
        let r = rabi_scenario(1.0, lambda, PI / lambda, 101).unwrap();
        let mid = &r.points[50];
        assert!((mid.t - PI / (2.0 * lambda)).abs() < 1e-15);
        assert!(mid.power.abs() < 1e-14);
        assert!((mid.energy - 1.0).abs() < 1e-15);
        assert!(mid.flags.contains(&ScenarioFlag::ZeroOverZero));
        assert!(mid.flags.contains(&ScenarioFlag::SupportViolation));
        assert!(mid.i_e_discrete.is_infinite());
    }

    #[test]
    fn degenerate_levels() {
        let lambda = 0.8;
        let d = degenerate_scenario(lambda, 2.0 * PI / lambda, 17).unwrap();
        let t = PI / (8.0 * lambda);
        let one = degenerate_scenario(lambda, t, 2).unwrap();
        let at = &one.per_eigenvector.points[1];
        assert!((at.i_e_analytic.finite().unwrap() - 4.0 * lambda * lambda).abs() < 1e-12);
        for p in &d.per_distinct_energy.points {
            assert_eq!(p.i_e_analytic, ExtendedReal::Finite(0.0));
            assert_eq!(p.energy, 0.0);
        }
    }

    #[test]
    fn rows_carry_flags() {
        let r = rabi_scenario(1.0, 1.0, PI, 3).unwrap();
        let rows = r.rows();
        assert_eq!(rows[0].flags, "support_violation;zero_over_zero");
        assert_eq!(rows.len(), 3);
        assert_eq!(r.flags().len(), 2 + 2 + 2);
    }
}
