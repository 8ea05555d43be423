//! Browser bindings: each export takes plain numbers and returns a JSON
//! string that the demo page plots. The `*_json` functions hold the logic
//! and are usable (and tested) natively.

use std::f64::consts::PI;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qbattery_core::counterexamples::rabi_scenario;
use qbattery_core::floquet::{
    battery_hamiltonian, charger_hamiltonian, evolve, ChargerForm, FloquetParams,
};
use qbattery_core::observables::{bound_series, Grouping};
use qbattery_core::spectral::{block_spectrum, trace_moments};
use qbattery_core::spin::{coherent_state, SpinSector};

/// Largest `N` the page may request for a trajectory.
pub const MAX_TRAJECTORY_SPINS: usize = 256;

#[derive(Serialize)]
struct RabiCurves {
    t: Vec<f64>,
    energy: Vec<f64>,
    power: Vec<f64>,
    robertson: Vec<f64>,
    fisher_bound: Vec<Option<f64>>,
    i_e: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct TrajectorySeries {
    n: usize,
    beta: f64,
    step: Vec<usize>,
    energy: Vec<f64>,
    power: Vec<f64>,
    var_hb: Vec<f64>,
    var_hc: Vec<f64>,
    robertson: Vec<f64>,
    fisher_bound: Vec<Option<f64>>,
    mean_robertson: f64,
}

#[derive(Serialize)]
struct SpectrumView {
    n: usize,
    beta: f64,
    form: ChargerForm,
    mean: f64,
    mean_abs: f64,
    max_abs: f64,
    variance: f64,
    trace_variance: f64,
    bin_centers: Vec<f64>,
    weights: Vec<f64>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Rabi-charged two-level battery on `[0, t_max]`.
pub fn rabi_curves_json(
    gap: f64,
    lambda: f64,
    t_max: f64,
    samples: usize,
) -> Result<String, String> {
    let r = rabi_scenario(gap, lambda, t_max, samples).map_err(|e| e.to_string())?;
    let p = &r.points;
    to_json(&RabiCurves {
        t: p.iter().map(|x| x.t).collect(),
        energy: p.iter().map(|x| x.energy).collect(),
        power: p.iter().map(|x| x.power).collect(),
        robertson: p.iter().map(|x| x.robertson).collect(),
        fisher_bound: p.iter().map(|x| x.fisher_bound).collect(),
        i_e: p.iter().map(|x| x.i_e_analytic.finite()).collect(),
    })
}

/// Kicked-top trajectory from the coherent state at polar angle `theta`.
pub fn kicked_trajectory_json(
    n: usize,
    beta: f64,
    steps: usize,
    theta: f64,
) -> Result<String, String> {
    if n > MAX_TRAJECTORY_SPINS {
        return Err(format!(
            "N is limited to {MAX_TRAJECTORY_SPINS} in the browser"
        ));
    }
    if steps == 0 {
        return Err("need at least one step".into());
    }
    let run = || -> qbattery_core::Result<TrajectorySeries> {
        let sector = SpinSector::new(n)?;
        let params = FloquetParams::with_beta(beta);
        let h_b = battery_hamiltonian(sector, params.convention);
        let h_c = charger_hamiltonian(sector, &params, ChargerForm::AtKicks);
        let traj = evolve(&coherent_state(sector, theta, 0.0)?, &params, steps)?;
        let rows = bound_series(&traj, &h_b, &h_c, Grouping::PerDistinctEnergy)?;
        let mean_robertson = rows.iter().map(|r| r.robertson).sum::<f64>() / rows.len() as f64;
        Ok(TrajectorySeries {
            n,
            beta,
            step: rows.iter().map(|r| r.step).collect(),
            energy: rows.iter().map(|r| r.energy).collect(),
            power: rows.iter().map(|r| r.power).collect(),
            var_hb: rows.iter().map(|r| r.var_hb).collect(),
            var_hc: rows.iter().map(|r| r.var_hc).collect(),
            robertson: rows.iter().map(|r| r.robertson).collect(),
            fisher_bound: rows.iter().map(|r| r.fisher_bound).collect(),
            mean_robertson,
        })
    };
    to_json(&run().map_err(|e| e.to_string())?)
}

/// Full-space charger spectrum at the kicks (`at_kicks = true`) or between
/// them, as a multiplicity-weighted histogram.
pub fn charger_spectrum_json(
    n: usize,
    beta: f64,
    at_kicks: bool,
    bins: usize,
) -> Result<String, String> {
    let form = if at_kicks {
        ChargerForm::AtKicks
    } else {
        ChargerForm::BetweenKicks
    };
    let params = FloquetParams::with_beta(beta);
    params.validate().map_err(|e| e.to_string())?;
    let spectrum = block_spectrum(form, n, &params).map_err(|e| e.to_string())?;
    let trace = trace_moments(form, n, &params).map_err(|e| e.to_string())?;
    let (bin_centers, weights) = spectrum.histogram(bins).into_iter().unzip();
    let s = spectrum.stats;
    to_json(&SpectrumView {
        n,
        beta,
        form,
        mean: s.mean,
        mean_abs: s.mean_abs,
        max_abs: s.max_abs,
        variance: s.variance,
        trace_variance: trace.variance,
        bin_centers,
        weights,
    })
}

#[wasm_bindgen]
pub fn rabi_curves(gap: f64, lambda: f64, samples: usize) -> Result<String, JsValue> {
    rabi_curves_json(gap, lambda, PI / lambda, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn kicked_trajectory(n: usize, beta: f64, steps: usize, theta: f64) -> Result<String, JsValue> {
    kicked_trajectory_json(n, beta, steps, theta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn charger_spectrum(
    n: usize,
    beta: f64,
    at_kicks: bool,
    bins: usize,
) -> Result<String, JsValue> {
    charger_spectrum_json(n, beta, at_kicks, bins).map_err(|e| JsValue::from_str(&e))
}
