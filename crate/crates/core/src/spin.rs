//! Collective spin-1/2 operators on the symmetric (Dicke) sector.
//!
//! For `N` spins the symmetric sector carries total spin `j = N/2` and has
//! dimension `N + 1`. Basis vectors are ordered by descending projection,
//! index `k` holding `m = j - k`. Collective operators use the spin-1/2
//! normalisation `J_a = sum_i sigma_a^i / 2` unless a [`Convention`] rescales
//! them.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

pub use nalgebra::Complex;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const HERMITICITY_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;

/// Symmetric sector of `n_spins` spin-1/2 particles.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinSector {
    n_spins: usize,
}

impl SpinSector {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(invalid("a spin sector needs at least one spin"));
        }
        Ok(Self { n_spins })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Total spin `j = N/2`.
    pub fn j(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.n_spins + 1
    }

    /// Projection quantum number of basis index `k`.
    pub fn m(&self, k: usize) -> f64 {
        self.j() - k as f64
    }

    /// `m` values in basis order: `j, j-1, ..., -j`.
    pub fn m_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.m(k)).collect()
    }

    /// Basis index of projection `m`, if `m` belongs to the sector.
    pub fn index_of(&self, m: f64) -> Option<usize> {
        let k = self.j() - m;
        let rounded = k.round();
        if (k - rounded).abs() > 1e-9 || rounded < 0.0 || rounded > self.n_spins as f64 {
            None
        } else {
            Some(rounded as usize)
        }
    }
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Normalisation of the collective operators.
///
/// `SpinHalf` uses `J_a = sum sigma_a / 2`; `Pauli` uses the bare Pauli sum,
/// i.e. every collective operator is doubled.
#[derive(Debug, Copy, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    SpinHalf,
    Pauli,
}

impl Convention {
    pub fn scale(self) -> f64 {
        match self {
            Convention::SpinHalf => 1.0,
            Convention::Pauli => 2.0,
        }
    }
}

/// Spin matrices `(J_x, J_y, J_z)` for total spin `two_j / 2`, basis ordered
/// by descending `m`. `two_j = 0` gives the 1x1 zero matrices.
pub(crate) fn spin_matrices(two_j: usize) -> (CMatrix, CMatrix, CMatrix) {
    let dim = two_j + 1;
    let j = two_j as f64 / 2.0;
    let mut raise = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        let m = j - k as f64;
        raise[(k - 1, k)] = C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let jx = (&raise + &lower) * C64::new(0.5, 0.0);
    let jy = (&raise - &lower) * C64::new(0.0, -0.5);
    let jz = CMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        (0..dim).map(|k| C64::new(j - k as f64, 0.0)),
    ));
    (jx, jy, jz)
}

pub(crate) fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs_entry(&(m - m.adjoint()))
}

/// Dense Hermitian matrix acting on a spin sector.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    sector: SpinSector,
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Wraps `matrix`, checking its shape against the sector and its
    /// Hermiticity to `1e-12` relative to the largest entry.
    pub fn new(sector: SpinSector, matrix: CMatrix) -> Result<Self> {
        let dim = sector.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let deviation = hermiticity_deviation(&matrix);
        if deviation > HERMITICITY_TOL * max_abs_entry(&matrix).max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { sector, matrix })
    }

    /// Real diagonal operator.
    pub fn diagonal(sector: SpinSector, entries: &[f64]) -> Result<Self> {
        if entries.len() != sector.dim() {
            return Err(Error::DimensionMismatch {
                expected: sector.dim(),
                found: entries.len(),
            });
        }
        let diag = CVector::from_iterator(entries.len(), entries.iter().map(|&e| C64::new(e, 0.0)));
        Ok(Self {
            sector,
            matrix: CMatrix::from_diagonal(&diag),
        })
    }

    pub fn sector(&self) -> SpinSector {
        self.sector
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            sector: self.sector,
            matrix: &self.matrix * C64::new(factor, 0.0),
        }
    }

    /// `self + other`.
    pub fn plus(&self, other: &HermitianOperator) -> Result<Self> {
        check_sector(self.sector, other.sector)?;
        Ok(Self {
            sector: self.sector,
            matrix: &self.matrix + &other.matrix,
        })
    }

    /// `self * self`, which is Hermitian whenever `self` is.
    pub fn squared(&self) -> Self {
        let sq = &self.matrix * &self.matrix;
        Self {
            sector: self.sector,
            matrix: (&sq + sq.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|r| (0..n).all(|c| r == c || self.matrix[(r, c)].is_zero()))
    }

    /// Real parts of the diagonal.
    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.matrix[(k, k)].re).collect()
    }

    /// Commutator `[self, other] = self*other - other*self` (anti-Hermitian).
    pub fn commutator(&self, other: &HermitianOperator) -> Result<CMatrix> {
        check_sector(self.sector, other.sector)?;
        Ok(&self.matrix * &other.matrix - &other.matrix * &self.matrix)
    }

    /// Eigen-decomposition with eigenvalues in ascending order; eigenvectors
    /// are the matching columns.
    pub fn eigen(&self) -> Result<(Vec<f64>, CMatrix)> {
        hermitian_eigen(&self.matrix)
    }
}

pub(crate) fn check_sector(expected: SpinSector, found: SpinSector) -> Result<()> {
    if expected != found {
        return Err(Error::SectorMismatch {
            expected: expected.n_spins(),
            found: found.n_spins(),
        });
    }
    Ok(())
}

/// Ascending eigenvalues and eigenvectors of a Hermitian matrix.
pub(crate) fn hermitian_eigen(matrix: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let dim = matrix.nrows();
    let max_iter = (200 * dim).max(1000);
    let eig = matrix
        .clone()
        .try_symmetric_eigen(f64::EPSILON, max_iter)
        .ok_or_else(|| Error::EigenFailure {
            dim,
            frobenius: matrix.norm(),
            hermiticity: hermiticity_deviation(matrix),
        })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Collective operator `J_axis` on the sector, spin-1/2 normalisation.
pub fn build_collective_operator(sector: SpinSector, axis: Axis) -> HermitianOperator {
    let (jx, jy, jz) = spin_matrices(sector.n_spins());
    let matrix = match axis {
        Axis::X => jx,
        Axis::Y => jy,
        Axis::Z => jz,
    };
    HermitianOperator { sector, matrix }
}

/// `J_x, J_y, J_z` on one sector, scaled by a convention.
#[derive(Debug, Clone)]
pub struct CollectiveSpin {
    pub x: HermitianOperator,
    pub y: HermitianOperator,
    pub z: HermitianOperator,
}

impl CollectiveSpin {
    pub fn new(sector: SpinSector, convention: Convention) -> Self {
        let s = convention.scale();
        let (jx, jy, jz) = spin_matrices(sector.n_spins());
        let wrap = |m: CMatrix| HermitianOperator {
            sector,
            matrix: m * C64::new(s, 0.0),
        };
        Self {
            x: wrap(jx),
            y: wrap(jy),
            z: wrap(jz),
        }
    }

    pub fn axis(&self, axis: Axis) -> &HermitianOperator {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

/// Unitary matrix on a sector.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    sector: SpinSector,
    matrix: CMatrix,
}

impl Unitary {
    pub fn identity(sector: SpinSector) -> Self {
        Self {
            sector,
            matrix: CMatrix::identity(sector.dim(), sector.dim()),
        }
    }

    pub(crate) fn from_matrix(sector: SpinSector, matrix: CMatrix) -> Self {
        Self { sector, matrix }
    }

    pub fn sector(&self) -> SpinSector {
        self.sector
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `self * other`: `other` acts first.
    pub fn then_after(&self, other: &Unitary) -> Result<Unitary> {
        check_sector(self.sector, other.sector)?;
        Ok(Unitary {
            sector: self.sector,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary {
            sector: self.sector,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        check_sector(self.sector, state.sector)?;
        Ok(StateVector {
            sector: self.sector,
            amplitudes: &self.matrix * &state.amplitudes,
        })
    }

    /// `max |U^dagger U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.matrix.nrows();
        max_abs_entry(&(self.matrix.adjoint() * &self.matrix - CMatrix::identity(n, n)))
    }
}

/// `exp(-i * scale * g)` via Hermitian eigendecomposition.
///
/// Diagonal generators are exponentiated entrywise.
pub fn unitary_from_generator(g: &HermitianOperator, scale: f64) -> Result<Unitary> {
    if !scale.is_finite() {
        return Err(invalid(format!(
            "generator scale must be finite, got {scale}"
        )));
    }
    let sector = g.sector();
    let dim = g.dim();
    if scale == 0.0 {
        return Ok(Unitary::identity(sector));
    }
    if g.is_diagonal() {
        let phases = CVector::from_iterator(
            dim,
            (0..dim).map(|k| C64::from_polar(1.0, -scale * g.matrix[(k, k)].re)),
        );
        return Ok(Unitary::from_matrix(
            sector,
            CMatrix::from_diagonal(&phases),
        ));
    }
    let (values, vectors) = g.eigen()?;
    let mut scaled_cols = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -scale * lambda);
        for r in 0..dim {
            scaled_cols[(r, c)] *= phase;
        }
    }
    Ok(Unitary::from_matrix(
        sector,
        scaled_cols * vectors.adjoint(),
    ))
}

/// Normalised pure state over the Dicke basis of a sector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    sector: SpinSector,
    amplitudes: CVector,
}

impl StateVector {
    /// Checks length and unit norm (to `1e-10`).
    pub fn new(sector: SpinSector, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != sector.dim() {
            return Err(Error::DimensionMismatch {
                expected: sector.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { sector, amplitudes })
    }

    /// Basis vector with index `k` (projection `m = j - k`).
    pub fn basis(sector: SpinSector, k: usize) -> Result<Self> {
        if k >= sector.dim() {
            return Err(Error::DimensionMismatch {
                expected: sector.dim(),
                found: k + 1,
            });
        }
        let mut amplitudes = CVector::zeros(sector.dim());
        amplitudes[k] = C64::new(1.0, 0.0);
        Ok(Self { sector, amplitudes })
    }

    /// Dicke state `|j, m>`.
    pub fn dicke(sector: SpinSector, m: f64) -> Result<Self> {
        let k = sector
            .index_of(m)
            .ok_or_else(|| invalid(format!("m = {m} is not a projection of j = {}", sector.j())))?;
        Self::basis(sector, k)
    }

    pub fn sector(&self) -> SpinSector {
        self.sector
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `|<k|psi>|^2` in basis order.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        check_sector(self.sector, other.sector)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Distance modulo global phase: `1 - |<self|other>|`.
    pub fn phase_distance(&self, other: &StateVector) -> Result<f64> {
        Ok(1.0 - self.overlap(other)?.norm())
    }
}

/// Spin coherent state `exp(i theta (J_x sin phi - J_y cos phi)) |j, j>`.
pub fn coherent_state(sector: SpinSector, theta: f64, phi: f64) -> Result<StateVector> {
    if !theta.is_finite() || !phi.is_finite() {
        return Err(invalid("coherent-state angles must be finite"));
    }
    let spin = CollectiveSpin::new(sector, Convention::SpinHalf);
    // exp(i theta (Jx sin phi - Jy cos phi)) = exp(-i theta G), G = Jy cos phi - Jx sin phi
    let generator = spin.y.scaled(phi.cos()).plus(&spin.x.scaled(-phi.sin()))?;
    let rotation = unitary_from_generator(&generator, theta)?;
    rotation.apply(&StateVector::basis(sector, 0)?)
}
