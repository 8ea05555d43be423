//! Brute-force reference on the full `2^N` tensor-product space.
//!
//! Collective operators are sums of single-site Pauli matrices, the
//! precession is a product of `2x2` rotations and coherent states are
//! product states, so nothing here goes through the symmetric-sector
//! construction. Site basis: `|0> = up`, `|1> = down`.

use num_traits::ToPrimitive;

use crate::error::{invalid, Error, Result};
use crate::floquet::{ChargerForm, FloquetParams, KickOrder};
use crate::spectral::binomial;
use crate::spin::{hermitian_eigen, Axis, CMatrix, CVector, Convention, C64};

pub const MAX_FULL_SPINS: usize = 8;

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("full space needs N >= 1"));
    }
    if n > MAX_FULL_SPINS {
        return Err(Error::TooManySpins {
            n,
            max: MAX_FULL_SPINS,
        });
    }
    Ok(())
}

fn pauli() -> [CMatrix; 3] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

/// `sum_i op_i` with `op` on site `i` and identities elsewhere.
fn site_sum(n: usize, op: &CMatrix) -> CMatrix {
    let dim = 1usize << n;
    let id = CMatrix::identity(2, 2);
    let mut total = CMatrix::zeros(dim, dim);
    for site in 0..n {
        let factors: Vec<CMatrix> = (0..n)
            .map(|k| if k == site { op.clone() } else { id.clone() })
            .collect();
        total += kron_all(&factors);
    }
    total
}

/// Number of down spins in the basis state `index`.
fn downs(index: usize) -> usize {
    index.count_ones() as usize
}

/// Collective spin operators on the full space.
#[derive(Debug, Clone)]
pub struct FullSpace {
    n: usize,
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
}

impl FullSpace {
    pub fn new(n: usize, convention: Convention) -> Result<Self> {
        check_size(n)?;
        let half = 0.5 * convention.scale();
        let [x, y, z] = pauli();
        Ok(Self {
            n,
            jx: site_sum(n, &x) * C64::new(half, 0.0),
            jy: site_sum(n, &y) * C64::new(half, 0.0),
            jz: site_sum(n, &z) * C64::new(half, 0.0),
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// `J^2 = Jx^2 + Jy^2 + Jz^2`.
    pub fn casimir(&self) -> CMatrix {
        &self.jx * &self.jx + &self.jy * &self.jy + &self.jz * &self.jz
    }

    /// Full-space charger Hamiltonian of the given form.
    pub fn charger(&self, params: &FloquetParams, form: ChargerForm) -> CMatrix {
        let drive = &self.jy * C64::new(params.precession, 0.0);
        match form {
            ChargerForm::BetweenKicks => drive,
            ChargerForm::AtKicks => {
                let j = 0.5 * self.n as f64;
                drive + &self.jz * &self.jz * C64::new(params.beta / (2.0 * j), 0.0)
            }
        }
    }
}

/// Operator selector for [`build_full`].
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum FullTarget {
    Spin(Axis),
    Charger(ChargerForm),
}

/// Full-space collective spin component or static charger.
pub fn build_full(target: FullTarget, n: usize, params: &FloquetParams) -> Result<CMatrix> {
    let space = FullSpace::new(n, params.convention)?;
    Ok(match target {
        FullTarget::Spin(Axis::X) => space.jx,
        FullTarget::Spin(Axis::Y) => space.jy,
        FullTarget::Spin(Axis::Z) => space.jz,
        FullTarget::Charger(form) => space.charger(params, form),
    })
}

/// Columns are the symmetric Dicke states `|j, j-k>`, `k = 0..=N`, written
/// in the full basis.
pub fn dicke_embedding(n: usize) -> Result<CMatrix> {
    check_size(n)?;
    let dim = 1usize << n;
    let mut v = CMatrix::zeros(dim, n + 1);
    for k in 0..=n {
        let count = binomial(n, k).to_f64().expect("small binomial");
        let amp = C64::new(count.sqrt().recip(), 0.0);
        for index in (0..dim).filter(|&i| downs(i) == k) {
            v[(index, k)] = amp;
        }
    }
    Ok(v)
}

/// `exp(-i angle sigma_y / 2)` on every site.
fn product_y_rotation(n: usize, angle: f64) -> CMatrix {
    let (s, c) = (0.5 * angle).sin_cos();
    let single = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ],
    );
    kron_all(&vec![single; n])
}

/// Full-space one-period Floquet operator.
pub fn full_floquet(n: usize, params: &FloquetParams) -> Result<CMatrix> {
    check_size(n)?;
    params.validate()?;
    let scale = params.convention.scale();
    let j = 0.5 * n as f64;
    let rotation = product_y_rotation(n, scale * params.precession * params.tau);
    let phases = CVector::from_iterator(
        1 << n,
        (0..1usize << n).map(|i| {
            let m = scale * (j - downs(i) as f64);
            C64::from_polar(1.0, -params.beta * m * m / (2.0 * j))
        }),
    );
    let kick = CMatrix::from_diagonal(&phases);
    Ok(match params.order {
        KickOrder::KickThenRotate => rotation * kick,
        KickOrder::RotateThenKick => kick * rotation,
    })
}

/// Product state with every spin pointing at polar angle `theta`, azimuth
/// `phi`; equals the collective coherent state.
pub fn product_coherent_state(n: usize, theta: f64, phi: f64) -> Result<CVector> {
    check_size(n)?;
    let half = 0.5 * theta;
    let single =
        CVector::from_column_slice(&[C64::new(half.cos(), 0.0), C64::from_polar(half.sin(), phi)]);
    let mut state = single.clone();
    for _ in 1..n {
        state = state.kronecker(&single);
    }
    Ok(state)
}

fn real_expectation(op: &CMatrix, psi: &CVector) -> f64 {
    psi.dotc(&(op * psi)).re
}

/// `<H_B>` after each of `0..=steps` periods from a product coherent state.
pub fn full_energy_trajectory(
    n: usize,
    params: &FloquetParams,
    theta: f64,
    phi: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let space = FullSpace::new(n, params.convention)?;
    let u = full_floquet(n, params)?;
    let mut psi = product_coherent_state(n, theta, phi)?;
    let mut energies = Vec::with_capacity(steps + 1);
    energies.push(real_expectation(&space.jz, &psi));
    for _ in 0..steps {
        psi = &u * psi;
        energies.push(real_expectation(&space.jz, &psi));
    }
    Ok(energies)
}

/// Ascending eigenvalues of the full-space charger, with multiplicity.
pub fn full_charger_spectrum(
    n: usize,
    params: &FloquetParams,
    form: ChargerForm,
) -> Result<Vec<f64>> {
    let space = FullSpace::new(n, params.convention)?;
    let (values, _) = hermitian_eigen(&space.charger(params, form))?;
    Ok(values)
}
