//! Full-space (`2^N`) eigenvalue statistics of the static charger forms,
//! from closed-form Pauli trace identities and, independently, from the
//! decomposition into total-spin sectors weighted by their multiplicities.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::floquet::{ChargerForm, FloquetParams};
use crate::spin::{hermitian_eigen, spin_matrices, C64};

/// Largest `N` accepted by [`block_spectrum`].
pub const MAX_BLOCK_SPINS: usize = 128;

pub const SPECTRA_SCHEMA: &str = "qbattery-spectra/v1";

pub(crate) fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Total spin `j' = two_j / 2` appearing `multiplicity` times in the
/// decomposition of `N` spin-1/2 particles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorMultiplicity {
    pub two_j: usize,
    pub multiplicity: BigUint,
}

impl SectorMultiplicity {
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }
}

/// `d(N, j') = C(N, N/2 - j') - C(N, N/2 - j' - 1)` for `j' = N/2, N/2 - 1, ...`.
pub fn sector_multiplicities(n: usize) -> Result<Vec<SectorMultiplicity>> {
    if n == 0 {
        return Err(invalid("sector decomposition needs N >= 1"));
    }
    Ok((0..=n / 2)
        .map(|k| {
            let lower = if k == 0 {
                BigUint::zero()
            } else {
                binomial(n, k - 1)
            };
            SectorMultiplicity {
                two_j: n - 2 * k,
                multiplicity: binomial(n, k) - lower,
            }
        })
        .collect())
}

/// Number of product configurations with projection `m`: `C(N, j + m)`.
pub fn zeeman_degeneracy(n: usize, m: f64) -> Result<BigUint> {
    let up = n as f64 / 2.0 + m;
    let rounded = up.round();
    if (up - rounded).abs() > 1e-9 || rounded < 0.0 || rounded > n as f64 {
        return Err(invalid(format!("m = {m} is not a projection for N = {n}")));
    }
    Ok(binomial(n, rounded as usize))
}

/// `2^N`.
pub fn hilbert_dim(n: usize) -> BigUint {
    BigUint::one() << n
}

/// Coefficients `(a, b)` of `H = a J_y + b J_z^2` in the chosen convention.
pub fn charger_coefficients(form: ChargerForm, n: usize, params: &FloquetParams) -> (f64, f64) {
    let s = params.convention.scale();
    let a = params.precession * s;
    let b = match form {
        ChargerForm::BetweenKicks => 0.0,
        ChargerForm::AtKicks => params.beta * s * s / n as f64,
    };
    (a, b)
}

/// Mean and variance over the `2^N` eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Closed-form moments of `H = a J_y + b J_z^2` over the full space.
///
/// With independent spin-1/2 moments `Tr(J_y^2)/2^N = N/4`,
/// `Tr(J_z^2)/2^N = N/4`, `Tr(J_z^4)/2^N = (3N^2 - 2N)/16` and vanishing
/// `Tr(J_y J_z^2)`: mean `bN/4`, variance `a^2 N/4 + b^2 N(N-1)/8`.
pub fn trace_moments(form: ChargerForm, n: usize, params: &FloquetParams) -> Result<TraceMoments> {
    if n == 0 {
        return Err(invalid("trace moments need N >= 1"));
    }
    let (a, b) = charger_coefficients(form, n, params);
    let nf = n as f64;
    Ok(TraceMoments {
        mean: b * nf / 4.0,
        variance: a * a * nf / 4.0 + b * b * nf * (nf - 1.0) / 8.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    pub n_spins: usize,
    pub mean: f64,
    pub mean_abs: f64,
    /// Operator norm.
    pub max_abs: f64,
    pub variance: f64,
}

/// One block eigenvalue carried with the multiplicity of its sector.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLevel {
    pub energy: f64,
    pub two_j: usize,
    pub multiplicity: BigUint,
}

#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub stats: SpectralStats,
    pub levels: Vec<WeightedLevel>,
}

impl BlockSpectrum {
    /// Sum of multiplicities; equals `2^N`.
    pub fn total_weight(&self) -> BigUint {
        self.levels.iter().map(|l| &l.multiplicity).sum()
    }

    /// Multiplicity-weighted histogram over `bins` equal-width bins spanning
    /// `[-max_abs, max_abs]`, as `(bin_center, weight / 2^N)`.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, f64)> {
        let bins = bins.max(1);
        let span = self.stats.max_abs.max(f64::MIN_POSITIVE);
        let width = 2.0 * span / bins as f64;
        let total = hilbert_dim(self.stats.n_spins)
            .to_f64()
            .unwrap_or(f64::INFINITY);
        let mut counts = vec![0.0; bins];
        for level in &self.levels {
            let idx = (((level.energy + span) / width).floor() as usize).min(bins - 1);
            counts[idx] += level.multiplicity.to_f64().unwrap_or(f64::INFINITY) / total;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, w)| (-span + (i as f64 + 0.5) * width, w))
            .collect()
    }
}

/// Diagonalises `a J_y + b J_z^2` in every total-spin sector (keeping the
/// global `b`), weighting each eigenvalue by its sector multiplicity.
pub fn block_spectrum(
    form: ChargerForm,
    n: usize,
    params: &FloquetParams,
) -> Result<BlockSpectrum> {
    if n > MAX_BLOCK_SPINS {
        return Err(Error::TooManySpins {
            n,
            max: MAX_BLOCK_SPINS,
        });
    }
    let sectors = sector_multiplicities(n)?;
    let (a, b) = charger_coefficients(form, n, params);
    let total = hilbert_dim(n).to_f64().expect("2^128 fits in f64");

    let mut levels = Vec::new();
    for sector in &sectors {
        let (_, jy, jz) = spin_matrices(sector.two_j);
        let jz2 = &jz * &jz;
        let h = jy * C64::new(a, 0.0) + jz2 * C64::new(b, 0.0);
        let (values, _) = hermitian_eigen(&h)?;
        levels.extend(values.into_iter().map(|energy| WeightedLevel {
            energy,
            two_j: sector.two_j,
            multiplicity: sector.multiplicity.clone(),
        }));
    }

    let weight = |l: &WeightedLevel| l.multiplicity.to_f64().expect("finite") / total;
    let mean: f64 = levels.iter().map(|l| weight(l) * l.energy).sum();
    let mean_abs: f64 = levels.iter().map(|l| weight(l) * l.energy.abs()).sum();
    let variance: f64 = levels
        .iter()
        .map(|l| weight(l) * (l.energy - mean).powi(2))
        .sum();
    let max_abs = levels.iter().map(|l| l.energy.abs()).fold(0.0, f64::max);
    Ok(BlockSpectrum {
        stats: SpectralStats {
            n_spins: n,
            mean,
            mean_abs,
            max_abs,
            variance,
        },
        levels,
    })
}

/// One row of the `spectra` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub form: ChargerForm,
    pub beta: f64,
    pub mean: f64,
    pub mean_abs: f64,
    pub max_abs: f64,
    pub variance: f64,
    pub trace_mean: f64,
    pub trace_variance: f64,
}

/// Both routes for each `N` and both charger forms.
pub fn spectra_table(n_list: &[usize], params: &FloquetParams) -> Result<Vec<SpectraRecord>> {
    if n_list.is_empty() {
        return Err(invalid("empty N list"));
    }
    let mut rows = Vec::with_capacity(2 * n_list.len());
    for form in [ChargerForm::BetweenKicks, ChargerForm::AtKicks] {
        for &n in n_list {
            let block = block_spectrum(form, n, params)?.stats;
            let trace = trace_moments(form, n, params)?;
            rows.push(SpectraRecord {
                n,
                form,
                beta: params.beta,
                mean: block.mean,
                mean_abs: block.mean_abs,
                max_abs: block.max_abs,
                variance: block.variance,
                trace_mean: trace.mean,
                trace_variance: trace.variance,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mult(n: usize) -> Vec<(usize, u64)> {
        sector_multiplicities(n)
            .unwrap()
            .into_iter()
            .map(|s| (s.two_j, s.multiplicity.to_u64().unwrap()))
            .collect()
    }

    #[test]
    fn small_decompositions() {
        assert_eq!(mult(2), vec![(2, 1), (0, 1)]);
        assert_eq!(mult(3), vec![(3, 1), (1, 2)]);
        assert_eq!(mult(4), vec![(4, 1), (2, 3), (0, 2)]);
        assert!(sector_multiplicities(0).is_err());
    }

    #[test]
    fn completeness_is_exact() {
        for n in 1..=128 {
            let total: BigUint = sector_multiplicities(n)
                .unwrap()
                .iter()
                .map(|s| &s.multiplicity * (s.two_j + 1))
                .sum();
            assert_eq!(total, hilbert_dim(n), "N={n}");
        }
    }

    #[test]
    fn zeeman_counts() {
        assert_eq!(zeeman_degeneracy(4, 0.0).unwrap(), BigUint::from(6u32));
        assert_eq!(zeeman_degeneracy(4, 2.0).unwrap(), BigUint::from(1u32));
        let sum: BigUint = (0..=10)
            .map(|k| zeeman_degeneracy(10, k as f64 - 5.0).unwrap())
            .sum();
        assert_eq!(sum, BigUint::from(1024u32));
        assert!(zeeman_degeneracy(4, 3.0).is_err());
        assert!(zeeman_degeneracy(3, 0.0).is_err());
    }

    #[test]
    fn single_spin_between_kicks() {
        let m = trace_moments(ChargerForm::BetweenKicks, 1, &FloquetParams::default()).unwrap();
        assert_eq!(m.mean, 0.0);
        assert!((m.variance - PI * PI / 16.0).abs() < 1e-15);
        let b = block_spectrum(ChargerForm::BetweenKicks, 1, &FloquetParams::default()).unwrap();
        let energies: Vec<f64> = b.levels.iter().map(|l| l.energy).collect();
        assert!((energies[0] + PI / 4.0).abs() < 1e-15 && (energies[1] - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn at_kick_variance_closed_form() {
        for &beta in &[0.0, 1.0, 7.0, 15.0] {
            let params = FloquetParams::with_beta(beta);
            for n in 1..=30 {
                let m = trace_moments(ChargerForm::AtKicks, n, &params).unwrap();
                let nf = n as f64;
                let expected = PI * PI * nf / 16.0 + beta * beta * (nf - 1.0) / (8.0 * nf);
                assert!((m.variance - expected).abs() < 1e-12);
                assert!((m.mean - beta / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn block_route_agrees_with_traces() {
        for &beta in &[0.0, 1.0, 7.0, 15.0] {
            let params = FloquetParams::with_beta(beta);
            for n in 1..=24 {
                for form in [ChargerForm::BetweenKicks, ChargerForm::AtKicks] {
                    let b = block_spectrum(form, n, &params).unwrap();
                    let t = trace_moments(form, n, &params).unwrap();
                    assert!((b.stats.mean - t.mean).abs() < 1e-10, "N={n} {form:?}");
                    assert!(
                        (b.stats.variance - t.variance).abs() < 1e-10,
                        "N={n} {form:?}"
                    );
                    assert_eq!(b.total_weight(), hilbert_dim(n));
                    assert!(b.stats.max_abs >= b.stats.mean.abs());
                }
            }
        }
    }

    #[test]
    fn between_kick_norm_is_linear() {
        for n in [1, 4, 9, 32] {
            let b =
                block_spectrum(ChargerForm::BetweenKicks, n, &FloquetParams::default()).unwrap();
            assert!((b.stats.max_abs - PI / 2.0 * n as f64 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn guard_and_histogram() {
        let err = block_spectrum(ChargerForm::AtKicks, 129, &FloquetParams::default()).unwrap_err();
        assert!(matches!(err, Error::TooManySpins { .. }));
        let b = block_spectrum(ChargerForm::AtKicks, 10, &FloquetParams::default()).unwrap();
        let hist = b.histogram(16);
        let total: f64 = hist.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
