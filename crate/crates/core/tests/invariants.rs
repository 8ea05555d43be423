use proptest::prelude::*;

use qbattery_core::floquet::{
    battery_hamiltonian, charger_hamiltonian, ChargerForm, FloquetParams,
};
use qbattery_core::observables::{
    expectation, instantaneous_power, kl_divergence, robertson_bound, EnergyDistribution,
    ExtendedReal, Grouping, LogBase,
};
use qbattery_core::scaling::{emit, fit_power_law, read_sweep_csv, SweepRecord};
use qbattery_core::spin::{
    coherent_state, CMatrix, CVector, CollectiveSpin, Convention, HermitianOperator, SpinSector,
    StateVector, C64,
};
use qbattery_core::table::Format;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_state(sector: SpinSector, raw: &[(f64, f64)]) -> Option<StateVector> {
    let v = CVector::from_iterator(sector.dim(), raw.iter().map(|&(re, im)| C64::new(re, im)));
    let norm = v.norm();
    if norm < 1e-3 {
        return None;
    }
    StateVector::new(sector, v / C64::new(norm, 0.0)).ok()
}

fn amplitudes(dim: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
}

fn distribution() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..12).prop_flat_map(|len| {
        (
            prop::collection::vec(0.0f64..1.0, len),
            prop::collection::vec(1e-3f64..1.0, len),
        )
    })
}

fn normalise(raw: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = raw.iter().sum();
    (total > 1e-6).then(|| raw.iter().map(|x| x / total).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn su2_algebra_and_casimir(n in 1usize..=64) {
        let sector = SpinSector::new(n).unwrap();
        let spin = CollectiveSpin::new(sector, Convention::SpinHalf);
        let i = C64::new(0.0, 1.0);
        let comm = spin.x.commutator(&spin.y).unwrap();
        let scale = sector.j().max(1.0);
        prop_assert!(max_abs(&(comm - spin.z.matrix() * i)) < 1e-12 * scale);
        let casimir = spin.x.squared().matrix() + spin.y.squared().matrix() + spin.z.squared().matrix();
        let j = sector.j();
        let expected = CMatrix::identity(sector.dim(), sector.dim()) * C64::new(j * (j + 1.0), 0.0);
        prop_assert!(max_abs(&(casimir - expected)) < 1e-11 * scale * scale);
    }

    #[test]
    fn coherent_state_moments(n in 1usize..=40, theta in 0.0f64..std::f64::consts::PI, phi in -3.2f64..3.2) {
        let sector = SpinSector::new(n).unwrap();
        let psi = coherent_state(sector, theta, phi).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        let spin = CollectiveSpin::new(sector, Convention::SpinHalf);
        let j = sector.j();
        let tol = 1e-10 * j;
        prop_assert!((expectation(&spin.z, &psi).unwrap() - j * theta.cos()).abs() < tol);
        prop_assert!((expectation(&spin.x, &psi).unwrap() - j * theta.sin() * phi.cos()).abs() < tol);
        prop_assert!((expectation(&spin.y, &psi).unwrap() - j * theta.sin() * phi.sin()).abs() < tol);
    }

    #[test]
    fn robertson_holds_on_random_states(raw in amplitudes(9), beta in -20.0f64..20.0) {
        let sector = SpinSector::new(8).unwrap();
        prop_assume!(random_state(sector, &raw).is_some());
        let psi = random_state(sector, &raw).unwrap();
        let params = FloquetParams::with_beta(beta);
        let h_b = battery_hamiltonian(sector, params.convention);
        for form in [ChargerForm::AtKicks, ChargerForm::BetweenKicks] {
            let h_c = charger_hamiltonian(sector, &params, form);
            let p = instantaneous_power(&psi, &h_c, &h_b).unwrap();
            let bound = robertson_bound(&psi, &h_b, &h_c).unwrap();
            prop_assert!(p.abs() <= bound + 1e-9, "P={p} bound={bound}");
        }
    }

    #[test]
    fn robertson_holds_for_random_hermitian_pairs(raw in amplitudes(5), a in amplitudes(25), b in amplitudes(25)) {
        let sector = SpinSector::new(4).unwrap();
        prop_assume!(random_state(sector, &raw).is_some());
        let psi = random_state(sector, &raw).unwrap();
        let herm = |entries: &[(f64, f64)]| {
            let m = CMatrix::from_iterator(5, 5, entries.iter().map(|&(r, i)| C64::new(r, i)));
            HermitianOperator::new(sector, (&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
        };
        let (x, y) = (herm(&a), herm(&b));
        let p = instantaneous_power(&psi, &y, &x).unwrap();
        prop_assert!(p.abs() <= robertson_bound(&psi, &x, &y).unwrap() + 1e-9);
    }

    #[test]
    fn kl_is_non_negative_and_zero_on_self((p_raw, q_raw) in distribution()) {
        let p = normalise(&p_raw);
        prop_assume!(p.is_some());
        let p = p.unwrap();
        let q = normalise(&q_raw).unwrap();
        let levels: Vec<f64> = (0..p.len()).map(|k| k as f64).collect();
        let dp = EnergyDistribution::from_parts(&levels, &p, Grouping::PerDistinctEnergy).unwrap();
        let dq = EnergyDistribution::from_parts(&levels, &q, Grouping::PerDistinctEnergy).unwrap();
        let kl = kl_divergence(&dp, &dq, LogBase::Nats).unwrap();
        match kl {
            ExtendedReal::Finite(v) => prop_assert!(v >= 0.0),
            ExtendedReal::Infinite => prop_assert!(false, "q has full support"),
        }
        prop_assert_eq!(kl_divergence(&dp, &dp, LogBase::Bits).unwrap(), ExtendedReal::Finite(0.0));
    }

    #[test]
    fn sweep_csv_round_trip(n in 1usize..200, values in prop::collection::vec(-1e6f64..1e6, 8), violations in 0usize..60, nan_kl in any::<bool>()) {
        let kl = if nan_kl { f64::NAN } else { values[5].abs() };
        let record = SweepRecord {
            n,
            beta: values[0],
            steps: 50,
            var_hb: values[1],
            var_hc: values[2],
            bound: values[3],
            kl_bits: kl,
            final_energy: values[4],
            avg_power: values[6],
            kl_nats: kl * std::f64::consts::LN_2,
            kl_violations: violations,
        };
        let mut buf = Vec::new();
        emit(std::slice::from_ref(&record), Format::Csv, &mut buf).unwrap();
        let back = read_sweep_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), 1);
        let got = &back[0];
        prop_assert_eq!(got.n, record.n);
        prop_assert_eq!(got.var_hb, record.var_hb);
        prop_assert_eq!(got.avg_power, record.avg_power);
        prop_assert_eq!(got.kl_violations, record.kl_violations);
        prop_assert_eq!(got.kl_bits.is_nan(), nan_kl);
    }

    #[test]
    fn exact_power_laws_are_recovered(exponent in -3.0f64..3.0, prefactor in 1e-3f64..1e3) {
        let points: Vec<(f64, f64)> = (1..=12).map(|k| {
            let x = 4.0 * k as f64;
            (x, prefactor * x.powf(exponent))
        }).collect();
        let fit = fit_power_law(&points).unwrap();
        prop_assert!((fit.exponent - exponent).abs() < 1e-10);
        prop_assert!((fit.prefactor / prefactor - 1.0).abs() < 1e-9);
    }
}
