use std::f64::consts::PI;

use qbattery_core::floquet::{
    battery_hamiltonian, charger_hamiltonian, evolve, ChargerForm, FloquetParams, KickOrder,
};
use qbattery_core::observables::{bound_series, expectation, variance, Grouping};
use qbattery_core::oracle::{
    build_full, dicke_embedding, full_energy_trajectory, full_floquet, product_coherent_state,
    FullTarget,
};
use qbattery_core::scaling::{run_sweep, SweepConfig};
use qbattery_core::spin::{coherent_state, Axis, CMatrix, CVector, Convention, SpinSector};

#[test]
fn sector_matches_full_space_for_all_variants() {
    for n in [7, 8] {
        for order in [KickOrder::KickThenRotate, KickOrder::RotateThenKick] {
            for convention in [Convention::SpinHalf, Convention::Pauli] {
                let params = FloquetParams {
                    beta: 5.3,
                    order,
                    convention,
                    ..FloquetParams::default()
                };
                let (theta, phi) = (1.1, -0.4);
                let sector = SpinSector::new(n).unwrap();
                let h_b = battery_hamiltonian(sector, convention);
                let initial = coherent_state(sector, theta, phi).unwrap();
                let traj = evolve(&initial, &params, 20).unwrap();
                let full = full_energy_trajectory(n, &params, theta, phi, 20).unwrap();
                for ((_, psi), e) in traj.snapshots().zip(full) {
                    let diff = (expectation(&h_b, psi).unwrap() - e).abs();
                    assert!(diff < 1e-9, "N={n} {order:?} {convention:?}: {diff}");
                }
            }
        }
    }
}

#[test]
fn full_floquet_is_unitary_and_preserves_symmetric_subspace() {
    let n = 6;
    let params = FloquetParams::default();
    let u = full_floquet(n, &params).unwrap();
    let v = dicke_embedding(n).unwrap();
    let uv = &u * &v;
    // U V stays in the range of V
    let leak = &uv - &v * (v.adjoint() * &uv);
    assert!(leak.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    let psi = product_coherent_state(n, PI, 0.0).unwrap();
    assert!(((&u * &psi).norm() - 1.0).abs() < 1e-12);
}

#[test]
fn bound_ordering_along_kicked_trajectories() {
    for n in [4, 9, 16] {
        let sector = SpinSector::new(n).unwrap();
        let params = FloquetParams::default();
        let h_b = battery_hamiltonian(sector, params.convention);
        let traj = evolve(&coherent_state(sector, PI, 0.0).unwrap(), &params, 30).unwrap();
        for form in [ChargerForm::AtKicks, ChargerForm::BetweenKicks] {
            let h_c = charger_hamiltonian(sector, &params, form);
            for grouping in [Grouping::PerDistinctEnergy, Grouping::PerEigenvector] {
                for s in bound_series(&traj, &h_b, &h_c, grouping).unwrap() {
                    let Some(fb) = s.fisher_bound else { continue };
                    let tol = 1e-9 * s.robertson.max(1.0);
                    assert!(
                        s.power.abs() <= fb + tol,
                        "N={n} step {}: P={} fisher={fb}",
                        s.step,
                        s.power
                    );
                    assert!(
                        fb <= s.robertson + tol,
                        "N={n} step {}: fisher={fb} robertson={}",
                        s.step,
                        s.robertson
                    );
                }
            }
        }
    }
}

#[test]
fn kick_order_does_not_change_energies_from_the_ground_state() {
    let sector = SpinSector::new(12).unwrap();
    let a = FloquetParams::default();
    let b = FloquetParams {
        order: KickOrder::RotateThenKick,
        ..a
    };
    let h_b = battery_hamiltonian(sector, a.convention);
    let psi = coherent_state(sector, PI, 0.0).unwrap();
    let ta = evolve(&psi, &a, 40).unwrap();
    let tb = evolve(&psi, &b, 40).unwrap();
    for ((_, x), (_, y)) in ta.snapshots().zip(tb.snapshots()) {
        assert!((expectation(&h_b, x).unwrap() - expectation(&h_b, y).unwrap()).abs() < 1e-9);
    }
}

fn real_expectation(op: &CMatrix, psi: &CVector) -> f64 {
    psi.dotc(&(op * psi)).re
}

fn full_variance(op: &CMatrix, psi: &CVector) -> f64 {
    let mean = real_expectation(op, psi);
    (real_expectation(&(op * op), psi) - mean * mean).max(0.0)
}

/// Populations of the `J_z` eigenvalues `j - k`, `k = 0..=N`.
fn full_level_populations(n: usize, psi: &CVector) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    for (index, amp) in psi.iter().enumerate() {
        p[index.count_ones() as usize] += amp.norm_sqr();
    }
    p
}

#[test]
fn sweep_records_match_full_space_recomputation() {
    let config = SweepConfig {
        n_list: (2..=6).collect(),
        ..SweepConfig::default()
    };
    let records = run_sweep(&config).unwrap();
    let params = config.params;
    for record in records {
        let n = record.n;
        let jz = build_full(FullTarget::Spin(Axis::Z), n, &params).unwrap();
        let h_c = build_full(FullTarget::Charger(ChargerForm::AtKicks), n, &params).unwrap();
        let u = full_floquet(n, &params).unwrap();
        let mut psi = product_coherent_state(n, config.theta, config.phi).unwrap();
        let e0 = real_expectation(&jz, &psi);
        let mut previous = full_level_populations(n, &psi);
        let (mut vb_sum, mut vc_sum, mut bound_sum) = (0.0, 0.0, 0.0);
        let (mut kl_sum, mut kl_count, mut violations) = (0.0, 0usize, 0usize);
        for _ in 0..config.steps {
            psi = &u * psi;
            let (vb, vc) = (full_variance(&jz, &psi), full_variance(&h_c, &psi));
            vb_sum += vb;
            vc_sum += vc;
            bound_sum += 2.0 * (vb * vc).sqrt();
            let current = full_level_populations(n, &psi);
            let mut kl = 0.0;
            let mut infinite = false;
            for (p, q) in current.iter().zip(&previous) {
                if *p > 1e-12 && *q < 1e-12 {
                    infinite = true;
                } else if *p > 0.0 {
                    kl += p * (p / q).ln();
                }
            }
            if infinite {
                violations += 1;
            } else {
                kl_sum += kl.max(0.0);
                kl_count += 1;
            }
            previous = current;
        }
        let steps = config.steps as f64;
        let e_final = real_expectation(&jz, &psi);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
        assert!(close(record.var_hb, vb_sum / steps), "N={n}");
        assert!(close(record.var_hc, vc_sum / steps), "N={n}");
        assert!(close(record.bound, bound_sum / steps), "N={n}");
        assert!(close(record.final_energy, e_final), "N={n}");
        assert!(close(record.avg_power, (e_final - e0) / steps), "N={n}");
        assert_eq!(record.kl_violations, violations, "N={n}");
        assert!(close(record.kl_nats, kl_sum / kl_count as f64), "N={n}");
    }
}

#[test]
fn transverse_coherent_variance_is_half_j() {
    for n in 1..=6 {
        let params = FloquetParams::default();
        let jz = build_full(FullTarget::Spin(Axis::Z), n, &params).unwrap();
        let psi = product_coherent_state(n, PI / 2.0, 0.0).unwrap();
        let expected = 0.5 * (0.5 * n as f64);
        assert!((full_variance(&jz, &psi) - expected).abs() < 1e-12);
        let sector = SpinSector::new(n).unwrap();
        let h_b = battery_hamiltonian(sector, Convention::SpinHalf);
        let sector_psi = coherent_state(sector, PI / 2.0, 0.0).unwrap();
        assert!((variance(&h_b, &sector_psi).unwrap() - expected).abs() < 1e-12);
    }
}
