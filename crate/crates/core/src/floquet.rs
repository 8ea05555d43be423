//! Kicked-top charger: battery `H_B = J_z`, charger
//! `H_C = (pi/2) J_y + beta J_z^2 / (2j) sum_n delta(t - n tau)`, and the
//! stroboscopic one-period propagator.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spin::{
    unitary_from_generator, CMatrix, CVector, CollectiveSpin, Convention, HermitianOperator,
    SpinSector, StateVector, Unitary, C64,
};

/// Which factor of the period acts first.
#[derive(Debug, Copy, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickOrder {
    /// `U = R * K`: the kick acts at the start of every period.
    #[default]
    KickThenRotate,
    /// `U = K * R`.
    RotateThenKick,
}

/// Static charger Hamiltonian at a given instant.
#[derive(Debug, Copy, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargerForm {
    /// `(pi/2) J_y + beta J_z^2 / (2j)`.
    #[default]
    AtKicks,
    /// `(pi/2) J_y`.
    BetweenKicks,
}

#[derive(Debug, Copy, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetParams {
    pub beta: f64,
    /// Precession rate of the `J_y` term per unit time.
    pub precession: f64,
    pub tau: f64,
    pub order: KickOrder,
    pub convention: Convention,
}

impl Default for FloquetParams {
    fn default() -> Self {
        Self {
            beta: 7.0,
            precession: FRAC_PI_2,
            tau: 1.0,
            order: KickOrder::default(),
            convention: Convention::default(),
        }
    }
}

impl FloquetParams {
    pub fn with_beta(beta: f64) -> Self {
        Self {
            beta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() {
            return Err(invalid(format!(
                "kick strength must be finite, got {}",
                self.beta
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!(
                "period must be positive, got {}",
                self.tau
            )));
        }
        if !self.precession.is_finite() {
            return Err(invalid("precession rate must be finite"));
        }
        Ok(())
    }
}

/// `H_B = J_z` under the given convention.
pub fn battery_hamiltonian(sector: SpinSector, convention: Convention) -> HermitianOperator {
    CollectiveSpin::new(sector, convention).z
}

/// Drive generating the continuous precession between kicks, `(pi/2) J_y`.
pub fn precession_drive(sector: SpinSector, params: &FloquetParams) -> HermitianOperator {
    CollectiveSpin::new(sector, params.convention)
        .y
        .scaled(params.precession)
}

/// Kick generator `beta J_z^2 / (2j)`.
pub fn kick_generator(sector: SpinSector, params: &FloquetParams) -> HermitianOperator {
    let jz = CollectiveSpin::new(sector, params.convention).z;
    jz.squared().scaled(params.beta / (2.0 * sector.j()))
}

/// Static charger Hamiltonian of the chosen form.
pub fn charger_hamiltonian(
    sector: SpinSector,
    params: &FloquetParams,
    form: ChargerForm,
) -> HermitianOperator {
    let drive = precession_drive(sector, params);
    match form {
        ChargerForm::BetweenKicks => drive,
        ChargerForm::AtKicks => drive
            .plus(&kick_generator(sector, params))
            .expect("operators share a sector"),
    }
}

/// Diagonal kick `exp(-i beta J_z^2 / (2j))`.
pub fn kick_operator(sector: SpinSector, params: &FloquetParams) -> Unitary {
    let s = params.convention.scale();
    let j = sector.j();
    let phases = CVector::from_iterator(
        sector.dim(),
        sector.m_values().into_iter().map(|m| {
            let m = s * m;
            C64::from_polar(1.0, -params.beta * m * m / (2.0 * j))
        }),
    );
    Unitary::from_matrix(sector, CMatrix::from_diagonal(&phases))
}

/// Precession over `fraction` of one period: `exp(-i fraction tau (pi/2) J_y)`.
pub fn rotation_operator(
    sector: SpinSector,
    params: &FloquetParams,
    fraction: f64,
) -> Result<Unitary> {
    unitary_from_generator(&precession_drive(sector, params), fraction * params.tau)
}

/// One-period Floquet operator.
pub fn build_floquet(sector: SpinSector, params: &FloquetParams) -> Result<Unitary> {
    params.validate()?;
    let rotation = rotation_operator(sector, params, 1.0)?;
    let kick = kick_operator(sector, params);
    match params.order {
        KickOrder::KickThenRotate => rotation.then_after(&kick),
        KickOrder::RotateThenKick => kick.then_after(&rotation),
    }
}

/// Applies part of the between-kick precession to a state.
pub fn rotate_partial(
    state: &StateVector,
    params: &FloquetParams,
    fraction: f64,
) -> Result<StateVector> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(invalid(format!("fraction {fraction} outside [0, 1]")));
    }
    if fraction == 0.0 {
        return Ok(state.clone());
    }
    rotation_operator(state.sector(), params, fraction)?.apply(state)
}

/// Stroboscopic snapshots `psi_0, U psi_0, U^2 psi_0, ...`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    params: FloquetParams,
    sector: SpinSector,
    snapshots: Vec<StateVector>,
}

impl Trajectory {
    pub fn params(&self) -> &FloquetParams {
        &self.params
    }

    pub fn sector(&self) -> SpinSector {
        self.sector
    }

    /// Index of the last snapshot (the number of periods evolved).
    pub fn last_step(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn state(&self, step: usize) -> Option<&StateVector> {
        self.snapshots.get(step)
    }

    pub fn initial(&self) -> &StateVector {
        &self.snapshots[0]
    }

    /// `(step, state)` pairs, starting with the initial state.
    pub fn snapshots(&self) -> impl Iterator<Item = (usize, &StateVector)> {
        self.snapshots.iter().enumerate()
    }
}

/// Evolves `initial` for `n_steps` full periods.
pub fn evolve(initial: &StateVector, params: &FloquetParams, n_steps: usize) -> Result<Trajectory> {
    let sector = initial.sector();
    let floquet = build_floquet(sector, params)?;
    let mut snapshots = Vec::with_capacity(n_steps + 1);
    snapshots.push(initial.clone());
    for _ in 0..n_steps {
        let next = floquet.apply(snapshots.last().expect("non-empty"))?;
        snapshots.push(next);
    }
    Ok(Trajectory {
        params: *params,
        sector,
        snapshots,
    })
}
