//! Dense-matrix primitives: Hermitian operators, spectral decomposition,
//! matrix exponential, thermal states, and the ρ-weighted operator inner
//! product together with the operator fidelity built on it.
//!
//! All types own plain `Array2<Complex64>` storage and validate their
//! defining invariant on construction. Everything here is a pure function of
//! its inputs; values are immutable after construction and safe to share
//! across threads.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{OfsError, Result};

/// Dense complex matrix, the common currency of every module.
pub type CMatrix = Array2<C64>;

/// Per-entry absolute tolerance for Hermiticity and scalar identities.
pub const SCALAR_TOL: f64 = 1e-12;
/// Max-norm tolerance for structural identities (unitarity, reconstruction).
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// Conjugate transpose.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Max-norm of the deviation between two matrices.
pub fn max_dev(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest Hermiticity violation |m[i][j] - conj(m[j][i])| over all entries.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

pub fn identity(dim: usize) -> CMatrix {
    Array2::<f64>::eye(dim).mapv(C64::from)
}

pub fn pauli_x() -> CMatrix {
    ndarray::array![
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    ]
}

pub fn pauli_y() -> CMatrix {
    ndarray::array![
        [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
        [C64::new(0.0, 1.0), C64::new(0.0, 0.0)]
    ]
}

pub fn pauli_z() -> CMatrix {
    ndarray::array![
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]
    ]
}

/// Dense Hermitian operator: houses Hamiltonians, their λ-derivatives and
/// bath coupling operators.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    dim: usize,
    entries: CMatrix,
}

impl HermitianOperator {
    /// Validates the Hermiticity invariant (1e-12 per entry, absolute).
    pub fn new(entries: CMatrix) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(OfsError::InvalidParameter(format!(
                "expected a square matrix with dim >= 1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let dev = hermiticity_deviation(&entries);
        if dev > SCALAR_TOL {
            return Err(OfsError::NonHermitianInput { max_dev: dev });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_real(entries: Array2<f64>) -> Result<Self> {
        Self::new(entries.mapv(C64::from))
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: Array2::zeros((dim, dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }
}

/// Unitary operator: houses finite-time evolutions U(λ), V_n(t).
#[derive(Debug, Clone)]
pub struct UnitaryOperator {
    dim: usize,
    entries: CMatrix,
}

impl UnitaryOperator {
    /// Validates U†U = 1 within 1e-10 (max-norm).
    pub fn new(entries: CMatrix) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(OfsError::InvalidParameter(format!(
                "expected a square matrix with dim >= 1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let gram = dagger(&entries).dot(&entries);
        let dev = max_dev(&gram, &identity(dim));
        if dev > STRUCTURAL_TOL {
            return Err(OfsError::NonUnitaryInput { max_dev: dev });
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// operator; the n-th column of `eigenvectors` is |n⟩.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Array1<f64>,
    eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from parts, e.g. after re-orthonormalizing a
    /// degenerate cluster. No reconstruction check is performed here; callers
    /// that consume the basis validate it against their Hamiltonian.
    pub fn from_parts(eigenvalues: Array1<f64>, eigenvectors: CMatrix) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.nrows() != d || eigenvectors.ncols() != d {
            return Err(OfsError::DimensionMismatch {
                expected: d,
                got: eigenvectors.nrows(),
            });
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// Σ_n E_n |n⟩⟨n|.
    pub fn reconstruct(&self) -> CMatrix {
        let scaled = &self.eigenvectors * &self.eigenvalues.mapv(C64::from);
        scaled.dot(&dagger(&self.eigenvectors))
    }

    /// exp(-i t H) through the eigenphases, exactly unitary up to eigensolver
    /// error.
    pub fn evolve(&self, t: f64) -> UnitaryOperator {
        let phases = self.eigenvalues.mapv(|e| (-C64::i() * e * t).exp());
        let entries = (&self.eigenvectors * &phases).dot(&dagger(&self.eigenvectors));
        UnitaryOperator {
            dim: self.dim(),
            entries,
        }
    }

    /// Gap between the two lowest levels.
    pub fn ground_gap(&self) -> f64 {
        if self.dim() < 2 {
            f64::INFINITY
        } else {
            self.eigenvalues[1] - self.eigenvalues[0]
        }
    }

    /// Ground-state column |0⟩.
    pub fn ground_state(&self) -> Array1<C64> {
        self.eigenvectors.column(0).to_owned()
    }
}

/// Eigendecomposition of a Hermitian matrix with eigenvectors in columns
/// (ascending eigenvalues). The LAPACK binding hands back the eigenvectors of
/// the transposed (= conjugated) matrix for row-major complex input, so the
/// returned matrix is conjugated here once; the reconstruction invariant
/// tests pin this orientation.
pub(crate) fn eigh_hermitian(m: &CMatrix) -> Result<(Array1<f64>, CMatrix)> {
    let standard = m.as_standard_layout().to_owned();
    let (vals, vecs) = standard
        .eigh(UPLO::Lower)
        .map_err(|e| OfsError::Eigensolver(e.to_string()))?;
    Ok((vals, vecs.mapv(|z| z.conj())))
}

/// Full spectral decomposition of a Hermitian operator, eigenvalues ascending.
pub fn spectral_decompose(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    let (eigenvalues, eigenvectors) = eigh_hermitian(h.entries())?;
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// exp(-i t H) via spectral decomposition (eigenphase method).
pub fn matrix_exponential(h: &HermitianOperator, t: f64) -> Result<UnitaryOperator> {
    Ok(spectral_decompose(h)?.evolve(t))
}

/// Density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone)]
pub struct DensityState {
    dim: usize,
    entries: CMatrix,
}

impl DensityState {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(OfsError::InvalidDensity {
                reason: format!("not square: {}x{}", entries.nrows(), entries.ncols()),
            });
        }
        let herm_dev = hermiticity_deviation(&entries);
        if herm_dev > SCALAR_TOL {
            return Err(OfsError::InvalidDensity {
                reason: format!("not Hermitian (deviation {herm_dev:.3e})"),
            });
        }
        let trace: C64 = entries.diag().sum();
        if (trace - C64::new(1.0, 0.0)).norm() > SCALAR_TOL {
            return Err(OfsError::InvalidDensity {
                reason: format!("trace {trace} differs from 1"),
            });
        }
        let (vals, _) = entries
            .eigh(UPLO::Lower)
            .map_err(|e| OfsError::Eigensolver(e.to_string()))?;
        if let Some(&min) = vals
            .iter()
            .min_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"))
        {
            if min < -SCALAR_TOL {
                return Err(OfsError::InvalidDensity {
                    reason: format!("negative eigenvalue {min:.3e}"),
                });
            }
        }
        Ok(Self { dim, entries })
    }

    /// |φ⟩⟨φ| for a normalized vector.
    pub fn pure(phi: &Array1<C64>) -> Result<Self> {
        let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > SCALAR_TOL {
            return Err(OfsError::InvalidDensity {
                reason: format!("state vector norm {} differs from 1", norm.sqrt()),
            });
        }
        let d = phi.len();
        let mut entries = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                entries[[i, j]] = phi[i] * phi[j].conj();
            }
        }
        Ok(Self { dim: d, entries })
    }

    /// Maximally mixed state 1/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            dim,
            entries: identity(dim).mapv(|z| z / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
}

/// Probability weights ρ_nn over an eigenbasis: the diagonal representation
/// of a state commuting with the Hamiltonian that produced the basis.
#[derive(Debug, Clone)]
pub struct StateWeights {
    weights: Array1<f64>,
    basis: Arc<SpectralDecomposition>,
    /// Inverse temperature when the weights are thermal; NaN for arbitrary
    /// caller-supplied weights.
    beta: f64,
}

impl StateWeights {
    pub fn new(basis: Arc<SpectralDecomposition>, weights: Array1<f64>) -> Result<Self> {
        if weights.len() != basis.dim() {
            return Err(OfsError::DimensionMismatch {
                expected: basis.dim(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(-SCALAR_TOL..=1.0 + SCALAR_TOL).contains(&w)) {
            return Err(OfsError::InvalidWeights {
                reason: "weights must lie in [0, 1]".into(),
            });
        }
        let sum: f64 = weights.sum();
        if (sum - 1.0).abs() > SCALAR_TOL {
            return Err(OfsError::InvalidWeights {
                reason: format!("weights sum to {sum}, expected 1"),
            });
        }
        Ok(Self {
            weights,
            basis,
            beta: f64::NAN,
        })
    }

    /// Gibbs weights e^{-βE_n}/Z. The largest exponent is shifted out before
    /// exponentiating so β as large as 1e6 cannot overflow.
    pub fn thermal(basis: Arc<SpectralDecomposition>, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(OfsError::InvalidParameter(format!(
                "inverse temperature must be finite and >= 0, got {beta}"
            )));
        }
        let e_min = basis
            .eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let mut weights = basis.eigenvalues().mapv(|e| (-beta * (e - e_min)).exp());
        let z: f64 = weights.sum();
        weights.mapv_inplace(|w| w / z);
        Ok(Self {
            weights,
            basis,
            beta,
        })
    }

    /// Uniform weights 1/d: the β = 0 Gibbs state.
    pub fn uniform(basis: Arc<SpectralDecomposition>) -> Self {
        let d = basis.dim();
        Self {
            weights: Array1::from_elem(d, 1.0 / d as f64),
            basis,
            beta: 0.0,
        }
    }

    /// All weight on one eigenstate.
    pub fn pure(basis: Arc<SpectralDecomposition>, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(OfsError::InvalidWeights {
                reason: format!("index {index} out of range for dim {}", basis.dim()),
            });
        }
        let mut weights = Array1::zeros(basis.dim());
        weights[index] = 1.0;
        Ok(Self {
            weights,
            basis,
            beta: f64::NAN,
        })
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn basis(&self) -> &Arc<SpectralDecomposition> {
        &self.basis
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Σ_n ρ_nn |n⟩⟨n| as a dense density matrix.
    pub fn density(&self) -> Result<DensityState> {
        let v = self.basis.eigenvectors();
        let entries = (v * &self.weights.mapv(C64::from)).dot(&dagger(v));
        DensityState::new(entries)
    }
}

/// Gibbs weights over a spectral decomposition.
pub fn thermal_weights(basis: &Arc<SpectralDecomposition>, beta: f64) -> Result<StateWeights> {
    StateWeights::thermal(Arc::clone(basis), beta)
}

fn check_dims(rho: &DensityState, x: &CMatrix, y: &CMatrix) -> Result<()> {
    for m in [x, y] {
        if m.nrows() != rho.dim() || m.ncols() != rho.dim() {
            return Err(OfsError::DimensionMismatch {
                expected: rho.dim(),
                got: m.nrows(),
            });
        }
    }
    Ok(())
}

/// The ρ-weighted Hermitian product ⟨X,Y⟩_ρ = Tr(ρ X† Y).
pub fn inner_product(rho: &DensityState, x: &CMatrix, y: &CMatrix) -> Result<C64> {
    check_dims(rho, x, y)?;
    let xy = dagger(x).dot(y);
    // Tr(ρ·M) without forming the product matrix.
    let d = rho.dim();
    let r = rho.entries();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += r[[i, j]] * xy[[j, i]];
        }
    }
    Ok(acc)
}

/// Operator fidelity F_ρ(X,Y) = |⟨X,Y⟩_ρ|. For unitaries the value is ≤ 1,
/// with equality iff they agree on the support of ρ up to a global phase.
pub fn operator_fidelity(rho: &DensityState, x: &CMatrix, y: &CMatrix) -> Result<f64> {
    Ok(inner_product(rho, x, y)?.norm())
}

/// ρ-seminorm ‖X‖_ρ = sqrt(⟨X,X⟩_ρ). A true norm only for full-rank ρ;
/// computed regardless, with no special-casing of kernel directions.
pub fn rho_norm(rho: &DensityState, x: &CMatrix) -> Result<f64> {
    Ok(inner_product(rho, x, x)?.re.max(0.0).sqrt())
}

/// Operator norm (largest singular value).
pub fn operator_norm(x: &CMatrix) -> Result<f64> {
    let gram = dagger(x).dot(x);
    let (vals, _) = gram
        .eigh(UPLO::Lower)
        .map_err(|e| OfsError::Eigensolver(e.to_string()))?;
    Ok(vals.iter().copied().fold(0.0, f64::max).max(0.0).sqrt())
}

/// Evaluates ⟨X,Y⟩_ρ through the purification |Ψ_ρ⟩ = Σ_i √p_i |i⟩⊗|i⟩:
/// builds the bipartite vectors (X⊗1)|Ψ_ρ⟩ and (Y⊗1)|Ψ_ρ⟩ explicitly and
/// returns their inner product. Used as an independent oracle for
/// [`inner_product`].
pub fn purify_check(rho: &DensityState, x: &CMatrix, y: &CMatrix) -> Result<C64> {
    check_dims(rho, x, y)?;
    let (p, w) = eigh_hermitian(rho.entries())?;
    let sqrt_p = p.mapv(|v| C64::from(v.max(0.0).sqrt()));
    let d = rho.dim();
    let embed = |a: &CMatrix| -> Array1<C64> {
        // (A⊗1)|Ψ_ρ⟩ laid out as a length-d² vector indexed by (row, copy).
        let aw = a.dot(&w);
        let mut psi = Array1::zeros(d * d);
        for i in 0..d {
            for row in 0..d {
                for copy in 0..d {
                    psi[row * d + copy] += sqrt_p[i] * aw[[row, i]] * w[[copy, i]];
                }
            }
        }
        psi
    };
    let psi_x = embed(x);
    let psi_y = embed(y);
    Ok(psi_x
        .iter()
        .zip(psi_y.iter())
        .map(|(a, b)| a.conj() * b)
        .sum())
}
