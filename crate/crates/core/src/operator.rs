use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::hilbert::HilbertSpace;
use crate::state::StateVector;
use crate::C64;

/// Projector onto the excited qubit, |1><1| tensor identity.
pub fn qubit_number(space: HilbertSpace) -> DMatrix<C64> {
    diagonal(space, |q, _, _| q as f64)
}

/// Photon number of cavity a.
pub fn number_a(space: HilbertSpace) -> DMatrix<C64> {
    diagonal(space, |_, n_a, _| n_a as f64)
}

/// Photon number of cavity b.
pub fn number_b(space: HilbertSpace) -> DMatrix<C64> {
    diagonal(space, |_, _, n_b| n_b as f64)
}

fn diagonal(space: HilbertSpace, f: impl Fn(u8, usize, usize) -> f64) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(space.dim(), space.dim());
    for (i, l) in space.labels().enumerate() {
        m[(i, i)] = C64::new(f(l.q, l.n_a, l.n_b), 0.0);
    }
    m
}

/// Excitation-conserving qubit/cavity-a exchange, sigma_+ a + sigma_- a^dag.
/// Couples |0, n_a, n_b> and |1, n_a - 1, n_b> with strength sqrt(n_a).
pub fn qubit_swap_a(space: HilbertSpace) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(space.dim(), space.dim());
    for n_a in 1..=space.na_max {
        for n_b in 0..=space.nb_max {
            let lo = space.index_unchecked(0, n_a, n_b);
            let hi = space.index_unchecked(1, n_a - 1, n_b);
            let g = C64::new((n_a as f64).sqrt(), 0.0);
            m[(hi, lo)] = g;
            m[(lo, hi)] = g;
        }
    }
    m
}

/// Excitation-conserving qubit/cavity-b exchange, sigma_+ b + sigma_- b^dag.
pub fn qubit_swap_b(space: HilbertSpace) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(space.dim(), space.dim());
    for n_a in 0..=space.na_max {
        for n_b in 1..=space.nb_max {
            let lo = space.index_unchecked(0, n_a, n_b);
            let hi = space.index_unchecked(1, n_a, n_b - 1);
            let g = C64::new((n_b as f64).sqrt(), 0.0);
            m[(hi, lo)] = g;
            m[(lo, hi)] = g;
        }
    }
    m
}

/// Qubit raising operator sigma_+ = |1><0| tensor identity on the cavities.
pub fn qubit_raise(space: HilbertSpace) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(space.dim(), space.dim());
    for n_a in 0..=space.na_max {
        for n_b in 0..=space.nb_max {
            let lo = space.index_unchecked(0, n_a, n_b);
            let hi = space.index_unchecked(1, n_a, n_b);
            m[(hi, lo)] = C64::new(1.0, 0.0);
        }
    }
    m
}

/// Largest modulus of H - H^dag, the Hermiticity defect.
pub fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).camax()
}

/// Largest modulus of U^dag U - I, the unitarity defect.
pub fn unitarity_deviation(m: &DMatrix<C64>) -> f64 {
    let mut p = m.adjoint() * m;
    for i in 0..p.nrows() {
        p[(i, i)] -= C64::new(1.0, 0.0);
    }
    p.camax()
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues and a
/// unitary eigenvector matrix, columns matching eigenvalue order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl HermitianEigen {
    /// Decomposes `matrix`, rejecting non-square or non-Hermitian input.
    /// The Hermiticity gate scales with the largest matrix element so
    /// rad/s-sized entries are judged at machine precision.
    pub fn new(matrix: &DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(CoreError::InvalidParams {
                reason: format!("matrix is {}x{}, not square", matrix.nrows(), matrix.ncols()),
            });
        }
        let scale = matrix.camax().max(1.0);
        let dev = hermiticity_deviation(matrix);
        if dev > 1e-9 * scale {
            return Err(CoreError::NotHermitian { max_dev: dev });
        }
        let eig = SymmetricEigen::new(matrix.clone());
        Ok(Self {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }
}

/// Time evolution under a constant Hermitian generator H, computed as
/// V diag(e^{-i lambda t}) V^dag through one eigendecomposition. Reusable
/// across many times and initial states.
#[derive(Debug, Clone)]
pub struct EigenPropagator {
    space: HilbertSpace,
    eig: HermitianEigen,
}

impl EigenPropagator {
    pub fn new(space: HilbertSpace, hamiltonian: &DMatrix<C64>) -> Result<Self> {
        if hamiltonian.nrows() != space.dim() {
            return Err(CoreError::InvalidParams {
                reason: format!(
                    "Hamiltonian dim {} does not match space dim {}",
                    hamiltonian.nrows(),
                    space.dim()
                ),
            });
        }
        Ok(Self {
            space,
            eig: HermitianEigen::new(hamiltonian)?,
        })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    /// e^{-i H t} |state>.
    pub fn evolve(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        Ok(self.prepare(state)?.state_at(t))
    }

    /// Projects a state onto the eigenbasis once so that evaluation at
    /// many times costs one matrix-vector product each.
    pub fn prepare(&self, state: &StateVector) -> Result<PreparedEvolution<'_>> {
        if state.space() != self.space {
            return Err(CoreError::SpaceMismatch {
                left: state.space(),
                right: self.space,
            });
        }
        Ok(PreparedEvolution {
            prop: self,
            coeffs: self.eig.eigenvectors.adjoint() * state.amplitudes(),
        })
    }
}

/// Initial state expressed in the eigenbasis of one [`EigenPropagator`].
#[derive(Debug, Clone)]
pub struct PreparedEvolution<'a> {
    prop: &'a EigenPropagator,
    coeffs: DVector<C64>,
}

impl PreparedEvolution<'_> {
    pub fn state_at(&self, t: f64) -> StateVector {
        let rotated = self.rotated_coeffs(t);
        let amps = &self.prop.eig.eigenvectors * rotated;
        StateVector::from_amplitudes(self.prop.space, amps).expect("dims match by construction")
    }

    /// Amplitude of one basis state at time t, O(dim) instead of O(dim^2).
    pub fn amplitude_at(&self, index: usize, t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.coeffs.len() {
            let phase = C64::from_polar(1.0, -self.prop.eig.eigenvalues[k] * t);
            acc += self.prop.eig.eigenvectors[(index, k)] * phase * self.coeffs[k];
        }
        acc
    }

    pub fn population_at(&self, index: usize, t: f64) -> f64 {
        self.amplitude_at(index, t).norm_sqr()
    }

    fn rotated_coeffs(&self, t: f64) -> DVector<C64> {
        DVector::from_fn(self.coeffs.len(), |k, _| {
            self.coeffs[k] * C64::from_polar(1.0, -self.prop.eig.eigenvalues[k] * t)
        })
    }
}
