//! Expectations, charging power, the variance (Robertson) bound, energy-basis
//! populations, KL divergence and the energy-space Fisher information bound.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::floquet::Trajectory;
use crate::spin::{check_sector, CMatrix, HermitianOperator, StateVector, C64};

/// Default support threshold for population decisions.
pub const ZERO_TOL: f64 = 1e-12;

const ENERGY_MERGE_TOL: f64 = 1e-9;

/// A non-negative quantity that may be `+infinity` for a structural reason
/// (support violation), as opposed to overflow. Serialises as a number or
/// the string `"inf"`.
#[derive(Debug, Copy, Clone, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }

    /// `f64` view, mapping the tag onto `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Self {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(f(v)),
            ExtendedReal::Infinite => ExtendedReal::Infinite,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Clone, Copy)]
        struct Visitor;

        impl serde::de::Visitor<'_> for Visitor {
            type Value = ExtendedReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Ok(if v == f64::INFINITY {
                    ExtendedReal::Infinite
                } else {
                    ExtendedReal::Finite(v)
                })
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }

            fn visit_str<E: serde::de::Error>(
                self,
                v: &str,
            ) -> std::result::Result<Self::Value, E> {
                match v.trim() {
                    "inf" | "+inf" | "infinity" => Ok(ExtendedReal::Infinite),
                    other => other
                        .parse::<f64>()
                        .map(|x| self.visit_f64::<E>(x).expect("infallible"))
                        .map_err(|_| E::invalid_value(serde::de::Unexpected::Str(v), &self)),
                }
            }
        }

        d.deserialize_any(Visitor)
    }
}

#[derive(Debug, Copy, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// One entry per eigenvector of `H_B`.
    PerEigenvector,
    /// Populations summed over each eigenspace.
    #[default]
    PerDistinctEnergy,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    Nats,
    Bits,
}

#[derive(Debug, Copy, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    pub energy: f64,
    pub population: f64,
}

/// Populations over the energy levels of a battery Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDistribution {
    levels: Vec<EnergyLevel>,
    grouping: Grouping,
}

impl EnergyDistribution {
    /// Validates non-negativity, normalisation (`1e-10`) and, for
    /// `PerDistinctEnergy`, strictly increasing energies.
    pub fn new(levels: Vec<EnergyLevel>, grouping: Grouping) -> Result<Self> {
        if levels.is_empty() {
            return Err(invalid("an energy distribution needs at least one level"));
        }
        if let Some(bad) = levels
            .iter()
            .find(|l| l.population.is_nan() || l.population < 0.0)
        {
            return Err(invalid(format!("negative population {}", bad.population)));
        }
        let total: f64 = levels.iter().map(|l| l.population).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("populations sum to {total}")));
        }
        if grouping == Grouping::PerDistinctEnergy
            && levels
                .windows(2)
                .any(|w| w[1].energy.partial_cmp(&w[0].energy) != Some(std::cmp::Ordering::Greater))
        {
            return Err(invalid(
                "distinct-energy levels must be strictly increasing",
            ));
        }
        Ok(Self { levels, grouping })
    }

    pub fn from_parts(energies: &[f64], populations: &[f64], grouping: Grouping) -> Result<Self> {
        if energies.len() != populations.len() {
            return Err(Error::DimensionMismatch {
                expected: energies.len(),
                found: populations.len(),
            });
        }
        let levels = energies
            .iter()
            .zip(populations)
            .map(|(&energy, &population)| EnergyLevel { energy, population })
            .collect();
        Self::new(levels, grouping)
    }

    pub fn levels(&self) -> &[EnergyLevel] {
        &self.levels
    }

    pub fn grouping(&self) -> Grouping {
        self.grouping
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.population).collect()
    }

    pub fn mean_energy(&self) -> f64 {
        self.levels.iter().map(|l| l.energy * l.population).sum()
    }

    fn same_levels(&self, other: &EnergyDistribution) -> bool {
        self.grouping == other.grouping
            && self.levels.len() == other.levels.len()
            && self.levels.iter().zip(&other.levels).all(|(a, b)| {
                (a.energy - b.energy).abs() <= ENERGY_MERGE_TOL * a.energy.abs().max(1.0)
            })
    }
}

fn apply(op: &HermitianOperator, state: &StateVector) -> Result<nalgebra::DVector<C64>> {
    check_sector(op.sector(), state.sector())?;
    Ok(op.matrix() * state.amplitudes())
}

/// `<psi|A|psi>`.
pub fn expectation(op: &HermitianOperator, state: &StateVector) -> Result<f64> {
    let value = state.amplitudes().dotc(&apply(op, state)?);
    debug_assert!(
        value.im.abs() <= 1e-10 * value.re.abs().max(1.0),
        "imaginary residue {} in a Hermitian expectation",
        value.im
    );
    Ok(value.re)
}

/// `<A^2> - <A>^2`, clamped at zero.
pub fn variance(op: &HermitianOperator, state: &StateVector) -> Result<f64> {
    let a_psi = apply(op, state)?;
    let mean = state.amplitudes().dotc(&a_psi).re;
    let second = a_psi.norm_squared();
    Ok((second - mean * mean).max(0.0))
}

/// `(<H_B>_step - <H_B>_0) / (step * tau)`.
pub fn average_power(traj: &Trajectory, h_b: &HermitianOperator, step: usize) -> Result<f64> {
    let last = traj.last_step();
    if step == 0 || step > last {
        return Err(Error::StepOutOfRange { step, last });
    }
    let e0 = expectation(h_b, traj.initial())?;
    let e1 = expectation(h_b, traj.state(step).expect("step checked"))?;
    Ok((e1 - e0) / (step as f64 * traj.params().tau))
}

/// `dE/dt = i <[drive, H_B]>` for a state evolving under `drive`.
pub fn instantaneous_power(
    state: &StateVector,
    drive: &HermitianOperator,
    h_b: &HermitianOperator,
) -> Result<f64> {
    check_sector(drive.sector(), state.sector())?;
    let comm = drive.commutator(h_b)?;
    let value = state.amplitudes().dotc(&(comm * state.amplitudes())) * C64::new(0.0, 1.0);
    debug_assert!(value.im.abs() <= 1e-10 * value.re.abs().max(1.0));
    Ok(value.re)
}

/// `2 Delta H_B Delta H_C`.
pub fn robertson_bound(
    state: &StateVector,
    h_b: &HermitianOperator,
    h_c: &HermitianOperator,
) -> Result<f64> {
    Ok(2.0 * (variance(h_b, state)? * variance(h_c, state)?).sqrt())
}

/// Eigenbasis of a battery Hamiltonian, ordered by ascending energy, with the
/// grouping of eigenvectors into eigenspaces. Diagonal Hamiltonians keep the
/// working basis as eigenbasis.
#[derive(Debug, Clone)]
pub struct EnergyBasis {
    energies: Vec<f64>,
    /// `None` when the working basis is already the eigenbasis; the vector
    /// then holds the working-basis index of each sorted level.
    vectors: Option<CMatrix>,
    index: Vec<usize>,
    groups: Vec<(f64, Vec<usize>)>,
    sector: crate::spin::SpinSector,
}

impl EnergyBasis {
    pub fn new(h_b: &HermitianOperator) -> Result<Self> {
        let (energies, vectors, index) = if h_b.is_diagonal() {
            let diag = h_b.diagonal_entries();
            let mut index: Vec<usize> = (0..diag.len()).collect();
            index.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
            (
                index.iter().map(|&i| diag[i]).collect::<Vec<_>>(),
                None,
                index,
            )
        } else {
            let (values, vectors) = h_b.eigen()?;
            let n = values.len();
            (values, Some(vectors), (0..n).collect())
        };
        let scale = energies.iter().fold(1.0_f64, |acc, e| acc.max(e.abs()));
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (k, &e) in energies.iter().enumerate() {
            match groups.last_mut() {
                Some((e0, members)) if (e - *e0).abs() <= ENERGY_MERGE_TOL * scale => {
                    members.push(k)
                }
                _ => groups.push((e, vec![k])),
            }
        }
        Ok(Self {
            energies,
            vectors,
            index,
            groups,
            sector: h_b.sector(),
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn distinct_energies(&self) -> Vec<f64> {
        self.groups.iter().map(|(e, _)| *e).collect()
    }

    fn coefficients(&self, amplitudes: &nalgebra::DVector<C64>) -> Vec<C64> {
        match &self.vectors {
            None => self.index.iter().map(|&i| amplitudes[i]).collect(),
            Some(v) => (0..self.energies.len())
                .map(|k| v.column(k).dotc(amplitudes))
                .collect(),
        }
    }

    fn grouped(&self, per_vector: Vec<f64>, grouping: Grouping) -> (Vec<f64>, Vec<f64>) {
        match grouping {
            Grouping::PerEigenvector => (self.energies.clone(), per_vector),
            Grouping::PerDistinctEnergy => self
                .groups
                .iter()
                .map(|(e, members)| (*e, members.iter().map(|&k| per_vector[k]).sum::<f64>()))
                .unzip(),
        }
    }

    pub fn populations(
        &self,
        state: &StateVector,
        grouping: Grouping,
    ) -> Result<EnergyDistribution> {
        check_sector(self.sector, state.sector())?;
        let per_vector: Vec<f64> = self
            .coefficients(state.amplitudes())
            .iter()
            .map(|c| c.norm_sqr())
            .collect();
        let (energies, pops) = self.grouped(per_vector, grouping);
        EnergyDistribution::from_parts(&energies, &pops, grouping)
    }

    /// Population rates `dp_k/dt` for a state evolving under `drive`,
    /// aligned with [`EnergyBasis::populations`].
    pub fn rates(
        &self,
        state: &StateVector,
        drive: &HermitianOperator,
        grouping: Grouping,
    ) -> Result<Vec<f64>> {
        check_sector(self.sector, state.sector())?;
        let coeffs = self.coefficients(state.amplitudes());
        let driven = self.coefficients(&apply(drive, state)?);
        // d|c_k|^2/dt = 2 Im(conj(c_k) <e_k|H psi>)
        let per_vector = coeffs
            .iter()
            .zip(&driven)
            .map(|(c, h)| 2.0 * (c.conj() * h).im)
            .collect();
        Ok(self.grouped(per_vector, grouping).1)
    }
}

/// `p_k = |<e_k|psi>|^2` over the eigenlevels of `h_b`.
pub fn energy_populations(
    state: &StateVector,
    h_b: &HermitianOperator,
    grouping: Grouping,
) -> Result<EnergyDistribution> {
    EnergyBasis::new(h_b)?.populations(state, grouping)
}

/// `dp_k/dt` under `drive`, aligned with [`energy_populations`].
pub fn population_rates(
    state: &StateVector,
    drive: &HermitianOperator,
    h_b: &HermitianOperator,
    grouping: Grouping,
) -> Result<Vec<f64>> {
    EnergyBasis::new(h_b)?.rates(state, drive, grouping)
}

/// `D_KL(p || q) = sum p_k log(p_k / q_k)`.
///
/// Returns [`ExtendedReal::Infinite`] when some `p_k > ZERO_TOL` sits on a
/// level with `q_k < ZERO_TOL`.
pub fn kl_divergence(
    p: &EnergyDistribution,
    q: &EnergyDistribution,
    base: LogBase,
) -> Result<ExtendedReal> {
    if !p.same_levels(q) {
        return Err(Error::MismatchedLevels);
    }
    let mut sum = 0.0;
    for (a, b) in p.levels.iter().zip(&q.levels) {
        let (pk, qk) = (a.population, b.population);
        if pk == 0.0 {
            continue;
        }
        if qk < ZERO_TOL {
            if pk > ZERO_TOL {
                return Ok(ExtendedReal::Infinite);
            }
            if qk == 0.0 {
                continue;
            }
        }
        sum += pk * (pk / qk).ln();
    }
    let nats = sum.max(0.0);
    Ok(ExtendedReal::Finite(match base {
        LogBase::Nats => nats,
        LogBase::Bits => nats / LN_2,
    }))
}

/// `I_E = sum_k pdot_k^2 / p_k` in natural-log units.
///
/// Levels with `p_k < zero_tol` are dropped when `|pdot_k| < sqrt(zero_tol)`
/// and make the result infinite otherwise.
pub fn fisher_analytic(p: &[f64], p_dot: &[f64], zero_tol: f64) -> Result<ExtendedReal> {
    if p.len() != p_dot.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: p_dot.len(),
        });
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("probabilities sum to {total}")));
    }
    let rate_sum: f64 = p_dot.iter().sum();
    let rate_scale = p_dot.iter().map(|r| r.abs()).sum::<f64>().max(1.0);
    if rate_sum.abs() > 1e-9 * rate_scale {
        return Err(invalid(format!("population rates sum to {rate_sum}")));
    }
    let mut sum = 0.0;
    for (&pk, &rk) in p.iter().zip(p_dot) {
        if pk >= zero_tol {
            sum += rk * rk / pk;
        } else if rk.abs() >= zero_tol.sqrt() {
            return Ok(ExtendedReal::Infinite);
        }
    }
    Ok(ExtendedReal::Finite(sum))
}

/// Whether [`fisher_analytic`] dropped a `0/0` term at these populations.
pub fn has_zero_over_zero(p: &[f64], p_dot: &[f64], zero_tol: f64) -> bool {
    p.iter()
        .zip(p_dot)
        .any(|(&pk, &rk)| pk < zero_tol && rk.abs() < zero_tol.sqrt())
}

/// `2 D_KL(p_next || p_now) / dt^2` in nats.
pub fn fisher_discrete(
    p_next: &EnergyDistribution,
    p_now: &EnergyDistribution,
    dt: f64,
) -> Result<ExtendedReal> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    Ok(kl_divergence(p_next, p_now, LogBase::Nats)?.map(|kl| 2.0 * kl / (dt * dt)))
}

/// `sqrt(Delta H_B^2 * I_E)`.
pub fn fisher_bound(state: &StateVector, h_b: &HermitianOperator, i_e: f64) -> Result<f64> {
    if i_e.is_nan() || i_e < 0.0 {
        return Err(invalid(format!(
            "Fisher information must be non-negative, got {i_e}"
        )));
    }
    Ok((variance(h_b, state)? * i_e).sqrt())
}

pub const BOUND_SERIES_SCHEMA: &str = "qbattery-bound-series/v1";

/// Per-period diagnostics of a kicked trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub avg_power: f64,
    pub power: f64,
    pub var_hb: f64,
    pub var_hc: f64,
    pub robertson: f64,
    pub kl_bits: ExtendedReal,
    pub fisher_info: ExtendedReal,
    pub fisher_bound: Option<f64>,
}

/// Diagnostics for steps `1..=last` of `traj`, with `h_c` both as driver of
/// the instantaneous power and as the charger in the variance bound.
pub fn bound_series(
    traj: &Trajectory,
    h_b: &HermitianOperator,
    h_c: &HermitianOperator,
    grouping: Grouping,
) -> Result<Vec<BoundSample>> {
    let basis = EnergyBasis::new(h_b)?;
    let mut previous = basis.populations(traj.initial(), grouping)?;
    let tau = traj.params().tau;
    let mut out = Vec::with_capacity(traj.last_step());
    for (step, state) in traj.snapshots().skip(1) {
        let dist = basis.populations(state, grouping)?;
        let rates = basis.rates(state, h_c, grouping)?;
        let fisher_info = fisher_analytic(&dist.populations(), &rates, ZERO_TOL)?;
        let fisher_bound = match fisher_info {
            ExtendedReal::Finite(i) => Some(self::fisher_bound(state, h_b, i)?),
            ExtendedReal::Infinite => None,
        };
        out.push(BoundSample {
            step,
            time: step as f64 * tau,
            energy: expectation(h_b, state)?,
            avg_power: average_power(traj, h_b, step)?,
            power: instantaneous_power(state, h_c, h_b)?,
            var_hb: variance(h_b, state)?,
            var_hc: variance(h_c, state)?,
            robertson: robertson_bound(state, h_b, h_c)?,
            kl_bits: kl_divergence(&dist, &previous, LogBase::Bits)?,
            fisher_info,
            fisher_bound,
        });
        previous = dist;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{
        battery_hamiltonian, charger_hamiltonian, evolve, kick_generator, kick_operator,
        precession_drive, rotate_partial, ChargerForm, FloquetParams,
    };
    use crate::spin::{
        build_collective_operator, coherent_state, Axis, CVector, Convention, SpinSector,
    };
    use std::f64::consts::PI;

    fn sector(n: usize) -> SpinSector {
        SpinSector::new(n).unwrap()
    }

    fn dist(p: &[f64]) -> EnergyDistribution {
        let e: Vec<f64> = (0..p.len()).map(|k| k as f64).collect();
        EnergyDistribution::from_parts(&e, p, Grouping::PerDistinctEnergy).unwrap()
    }

    #[test]
    fn expectation_basics() {
        let s = sector(6);
        let jz = build_collective_operator(s, Axis::Z);
        let jx = build_collective_operator(s, Axis::X);
        for m in s.m_values() {
            let psi = StateVector::dicke(s, m).unwrap();
            assert!((expectation(&jz, &psi).unwrap() - m).abs() < 1e-14);
            assert!(variance(&jz, &psi).unwrap() < 1e-14);
        }
        for m in [3.0, -3.0] {
            let psi = StateVector::dicke(s, m).unwrap();
            assert!(expectation(&jx, &psi).unwrap().abs() < 1e-14);
        }
        let flipped = coherent_state(s, PI, 0.0).unwrap();
        assert!((expectation(&jz, &flipped).unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn sector_mismatch_is_error() {
        let jz = build_collective_operator(sector(3), Axis::Z);
        let psi = StateVector::basis(sector(4), 0).unwrap();
        assert!(matches!(
            expectation(&jz, &psi),
            Err(Error::SectorMismatch { .. })
        ));
        assert!(variance(&jz, &psi).is_err());
        assert!(instantaneous_power(&psi, &jz, &jz).is_err());
    }

    #[test]
    fn equatorial_coherent_variance() {
        for n in 1..=12 {
            let s = sector(n);
            let jz = build_collective_operator(s, Axis::Z);
            let psi = coherent_state(s, PI / 2.0, 0.0).unwrap();
            assert!((variance(&jz, &psi).unwrap() - s.j() / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_of_square_consistent_with_moments() {
        let s = sector(7);
        let jz = build_collective_operator(s, Axis::Z);
        let jz2 = jz.squared();
        let jz4 = jz2.squared();
        let psi = coherent_state(s, 1.2, 0.3).unwrap();
        let direct = variance(&jz2, &psi).unwrap();
        let m2 = expectation(&jz2, &psi).unwrap();
        let m4 = expectation(&jz4, &psi).unwrap();
        assert!((direct - (m4 - m2 * m2)).abs() < 1e-10);
    }

    #[test]
    fn average_power_step_range_and_first_step() {
        let s = sector(4);
        let h_b = battery_hamiltonian(s, Convention::SpinHalf);
        let psi = coherent_state(s, PI, 0.0).unwrap();
        let traj = evolve(&psi, &FloquetParams::default(), 3).unwrap();
        assert!(matches!(
            average_power(&traj, &h_b, 0),
            Err(Error::StepOutOfRange { .. })
        ));
        assert!(average_power(&traj, &h_b, 4).is_err());
        let e0 = expectation(&h_b, &psi).unwrap();
        let e1 = expectation(&h_b, traj.state(1).unwrap()).unwrap();
        assert!((average_power(&traj, &h_b, 1).unwrap() - (e1 - e0)).abs() < 1e-15);
    }

    #[test]
    fn full_cycle_average_power_vanishes() {
        for n in [2, 4, 6, 10] {
            let s = sector(n);
            let h_b = battery_hamiltonian(s, Convention::SpinHalf);
            let psi = coherent_state(s, 0.9, 0.2).unwrap();
            let traj = evolve(&psi, &FloquetParams::with_beta(0.0), 4).unwrap();
            assert!(average_power(&traj, &h_b, 4).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn kick_term_gives_no_power() {
        let s = sector(8);
        let params = FloquetParams::default();
        let h_b = battery_hamiltonian(s, params.convention);
        let psi = coherent_state(s, 1.0, 0.5).unwrap();
        let p = instantaneous_power(&psi, &kick_generator(s, &params), &h_b).unwrap();
        assert!(p.abs() < 1e-12);
    }

    #[test]
    fn instantaneous_power_is_minus_half_pi_jx() {
        let s = sector(9);
        let params = FloquetParams::default();
        let h_b = battery_hamiltonian(s, params.convention);
        let jx = build_collective_operator(s, Axis::X);
        let psi = coherent_state(s, 2.0, 0.8).unwrap();
        let p = instantaneous_power(&psi, &precession_drive(s, &params), &h_b).unwrap();
        let expected = -PI / 2.0 * expectation(&jx, &psi).unwrap();
        assert!((p - expected).abs() < 1e-12);
    }

    #[test]
    fn instantaneous_power_matches_central_difference() {
        let s = sector(6);
        let params = FloquetParams::default();
        let h_b = battery_hamiltonian(s, params.convention);
        let drive = precession_drive(s, &params);
        let psi = coherent_state(s, 2.3, 0.6).unwrap();
        let t = 0.4;
        let h = 1e-5;
        let at = |f: f64| expectation(&h_b, &rotate_partial(&psi, &params, f).unwrap()).unwrap();
        let numeric = (at(t + h) - at(t - h)) / (2.0 * h);
        let state = rotate_partial(&psi, &params, t).unwrap();
        let exact = instantaneous_power(&state, &drive, &h_b).unwrap();
        assert!((numeric - exact).abs() < 1e-6, "{numeric} vs {exact}");
    }

    #[test]
    fn robertson_holds_on_kicked_trajectory() {
        let s = sector(8);
        let params = FloquetParams::default();
        let h_b = battery_hamiltonian(s, params.convention);
        let h_c = charger_hamiltonian(s, &params, ChargerForm::AtKicks);
        let psi = coherent_state(s, PI, 0.0).unwrap();
        let traj = evolve(&psi, &params, 50).unwrap();
        assert_eq!(robertson_bound(&psi, &h_b, &h_c).unwrap(), 0.0);
        for (_, state) in traj.snapshots() {
            let p = instantaneous_power(state, &h_c, &h_b).unwrap();
            assert!(robertson_bound(state, &h_b, &h_c).unwrap() >= p.abs() - 1e-9);
        }
    }

    #[test]
    fn populations_of_dicke_and_coherent_states() {
        let s = sector(5);
        let h_b = battery_hamiltonian(s, Convention::SpinHalf);
        let psi = StateVector::dicke(s, 0.5).unwrap();
        let d = energy_populations(&psi, &h_b, Grouping::PerDistinctEnergy).unwrap();
        assert_eq!(d.energies(), vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]);
        assert_eq!(d.populations(), vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);

        let theta: f64 = 1.1;
        let coh = coherent_state(s, theta, 0.0).unwrap();
        let d = energy_populations(&coh, &h_b, Grouping::PerEigenvector).unwrap();
        let (c, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let binom = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
        for (level, p) in d.levels().iter().zip(d.populations()) {
            let up = (level.energy + 2.5).round() as i32; // j + m
            let expected = binom[up as usize] * c.powi(2 * up) * sn.powi(2 * (5 - up));
            assert!((p - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn kick_preserves_distribution() {
        let s = sector(10);
        let params = FloquetParams::default();
        let h_b = battery_hamiltonian(s, params.convention);
        let psi = coherent_state(s, 2.0, 1.0).unwrap();
        let before = energy_populations(&psi, &h_b, Grouping::PerEigenvector).unwrap();
        let kicked = kick_operator(s, &params).apply(&psi).unwrap();
        let after = energy_populations(&kicked, &h_b, Grouping::PerEigenvector).unwrap();
        for (a, b) in before.populations().iter().zip(after.populations()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_diagonal_battery_uses_eigenbasis() {
        let s = sector(1);
        let sx = build_collective_operator(s, Axis::X);
        let plus = StateVector::new(
            s,
            CVector::from_vec(vec![
                C64::new(0.5_f64.sqrt(), 0.0),
                C64::new(0.5_f64.sqrt(), 0.0),
            ]),
        )
        .unwrap();
        let d = energy_populations(&plus, &sx, Grouping::PerDistinctEnergy).unwrap();
        assert!((d.energies()[1] - 0.5).abs() < 1e-14);
        assert!((d.populations()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_grouping_merges() {
        let s = sector(2);
        let h = HermitianOperator::diagonal(s, &[0.0, 0.0, 1.0]).unwrap();
        let psi = StateVector::new(
            s,
            CVector::from_vec(vec![
                C64::new(0.6, 0.0),
                C64::new(0.0, 0.8),
                C64::new(0.0, 0.0),
            ]),
        )
        .unwrap();
        let per_vec = energy_populations(&psi, &h, Grouping::PerEigenvector).unwrap();
        let per_e = energy_populations(&psi, &h, Grouping::PerDistinctEnergy).unwrap();
        assert_eq!(per_vec.levels().len(), 3);
        assert_eq!(per_e.energies(), vec![0.0, 1.0]);
        assert!((per_e.populations()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distribution_validation() {
        assert!(
            EnergyDistribution::from_parts(&[0.0, 1.0], &[0.5, 0.6], Grouping::PerEigenvector)
                .is_err()
        );
        assert!(EnergyDistribution::from_parts(
            &[0.0, 1.0],
            &[1.5, -0.5],
            Grouping::PerEigenvector
        )
        .is_err());
        assert!(EnergyDistribution::from_parts(
            &[1.0, 1.0],
            &[0.5, 0.5],
            Grouping::PerDistinctEnergy
        )
        .is_err());
        assert!(
            EnergyDistribution::from_parts(&[1.0, 1.0], &[0.5, 0.5], Grouping::PerEigenvector)
                .is_ok()
        );
    }

    #[test]
    fn kl_examples() {
        let p = dist(&[0.3, 0.7]);
        assert_eq!(
            kl_divergence(&p, &p, LogBase::Nats).unwrap(),
            ExtendedReal::Finite(0.0)
        );
        let one_bit = kl_divergence(&dist(&[1.0, 0.0]), &dist(&[0.5, 0.5]), LogBase::Bits).unwrap();
        assert!((one_bit.finite().unwrap() - 1.0).abs() < 1e-15);
        let violated =
            kl_divergence(&dist(&[0.9, 0.1]), &dist(&[0.0, 1.0]), LogBase::Nats).unwrap();
        assert!(violated.is_infinite());
        assert!(matches!(
            kl_divergence(&dist(&[1.0]), &dist(&[0.5, 0.5]), LogBase::Nats),
            Err(Error::MismatchedLevels)
        ));
    }

    #[test]
    fn fisher_analytic_examples() {
        let lambda: f64 = 1.7;
        let t = 0.37;
        let (s, c) = ((lambda * t).sin(), (lambda * t).cos());
        let rate = lambda * (2.0 * lambda * t).sin();
        let i = fisher_analytic(&[s * s, c * c], &[rate, -rate], ZERO_TOL).unwrap();
        assert!((i.finite().unwrap() - 4.0 * lambda * lambda).abs() < 1e-12);
        assert_eq!(
            fisher_analytic(&[0.2, 0.8], &[0.0, 0.0], ZERO_TOL).unwrap(),
            ExtendedReal::Finite(0.0)
        );
        assert!(fisher_analytic(&[1.0, 0.0], &[-0.5, 0.5], ZERO_TOL)
            .unwrap()
            .is_infinite());
        assert!(fisher_analytic(&[1.0], &[0.0, 0.0], ZERO_TOL).is_err());
        assert!(fisher_analytic(&[0.5, 0.6], &[0.0, 0.0], ZERO_TOL).is_err());
        assert!(has_zero_over_zero(&[1.0, 0.0], &[0.0, 0.0], ZERO_TOL));
    }

    #[test]
    fn fisher_discrete_and_bound_edges() {
        let p = dist(&[0.4, 0.6]);
        assert_eq!(
            fisher_discrete(&p, &p, 0.1).unwrap(),
            ExtendedReal::Finite(0.0)
        );
        assert!(fisher_discrete(&p, &p, 0.0).is_err());
        let s = sector(3);
        let h_b = battery_hamiltonian(s, Convention::SpinHalf);
        let psi = coherent_state(s, 1.0, 0.0).unwrap();
        assert_eq!(fisher_bound(&psi, &h_b, 0.0).unwrap(), 0.0);
        assert!(fisher_bound(&psi, &h_b, -1.0).is_err());
    }

    #[test]
    fn series_is_consistent() {
        let s = sector(6);
        let params = FloquetParams::default();
        let h_b = battery_hamiltonian(s, params.convention);
        let h_c = charger_hamiltonian(s, &params, ChargerForm::AtKicks);
        let traj = evolve(&coherent_state(s, PI, 0.0).unwrap(), &params, 20).unwrap();
        let series = bound_series(&traj, &h_b, &h_c, Grouping::PerDistinctEnergy).unwrap();
        assert_eq!(series.len(), 20);
        assert!(
            series[0].kl_bits.is_infinite(),
            "point-mass start violates support"
        );
        for row in &series {
            assert!(row.robertson >= row.power.abs() - 1e-9);
            if let Some(fb) = row.fisher_bound {
                assert!(fb <= row.robertson + 1e-9);
                assert!(fb >= row.power.abs() - 1e-9);
            }
        }
    }
}
