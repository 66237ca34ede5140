//! Generic operator-fidelity-susceptibility computation for a parametrized
//! Hamiltonian family H(λ).
//!
//! Everything runs over eigenpair indices of H(λ); the commutator
//! superoperator, its kernel projector and the F_t function of it are never
//! materialized as d²×d² objects, so memory stays O(d²).
//!
//! The state enters through [`StateWeights`]: diagonal weights ρ_nn over the
//! eigenbasis of H(λ). Weights expressed in any other basis are rejected —
//! the χ⁽¹⁾/χ⁽²⁾ split is only derived for [ρ, H] = 0 and this crate does not
//! extend it.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{OfsError, Result};
use crate::operator_space::{
    dagger, matrix_exponential, operator_fidelity, CMatrix, HermitianOperator, StateWeights,
};

/// Below this gap |E_n - E_m| the closed-form ΔE → 0 limit of a pair term is
/// used instead of the ratio, avoiding catastrophic cancellation.
pub const GAP_LIMIT_TOL: f64 = 1e-8;

/// Default symmetric-stencil step for susceptibility finite differences,
/// balancing O(δ²) truncation against 1e-16/δ² rounding.
pub const DEFAULT_FD_DELTA: f64 = 1e-3;

/// Default central-difference step for ∂H/∂λ.
pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e-5;

/// Residual tolerance for "weights basis diagonalizes H(λ)", relative to the
/// spectral scale.
const BASIS_RESIDUAL_TOL: f64 = 1e-8;

/// Which computational path produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Spectral,
    FiniteDifference,
    TfimAnalytic,
    TfimThermo,
    Oracle,
}

impl Backend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::Spectral => "spectral",
            Backend::FiniteDifference => "finite_difference",
            Backend::TfimAnalytic => "tfim_analytic",
            Backend::TfimThermo => "tfim_thermo",
            Backend::Oracle => "oracle",
        }
    }
}

/// One susceptibility evaluation record.
#[derive(Debug, Clone, Copy)]
pub struct OfsSample {
    pub lambda: f64,
    /// Inverse temperature of the weights; NaN when the weights were not
    /// thermal.
    pub beta: f64,
    pub t: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub chi_total: f64,
    pub backend: Backend,
}

/// λ ↦ H(λ) with its derivative, either analytic or by central finite
/// difference.
pub struct HamiltonianFamily {
    dim: usize,
    hamiltonian: Box<dyn Fn(f64) -> HermitianOperator + Send + Sync>,
    derivative: DerivativeSpec,
}

enum DerivativeSpec {
    Analytic(Box<dyn Fn(f64) -> HermitianOperator + Send + Sync>),
    CentralDifference { step: f64 },
}

impl HamiltonianFamily {
    /// Family with a central-difference derivative (default step 1e-5).
    pub fn new<F>(dim: usize, hamiltonian: F) -> Self
    where
        F: Fn(f64) -> HermitianOperator + Send + Sync + 'static,
    {
        Self {
            dim,
            hamiltonian: Box::new(hamiltonian),
            derivative: DerivativeSpec::CentralDifference {
                step: DEFAULT_DERIVATIVE_STEP,
            },
        }
    }

    pub fn with_derivative_step(mut self, step: f64) -> Self {
        self.derivative = DerivativeSpec::CentralDifference { step };
        self
    }

    /// Family with a caller-supplied analytic derivative λ ↦ ∂H/∂λ.
    pub fn with_analytic_derivative<F, G>(dim: usize, hamiltonian: F, derivative: G) -> Self
    where
        F: Fn(f64) -> HermitianOperator + Send + Sync + 'static,
        G: Fn(f64) -> HermitianOperator + Send + Sync + 'static,
    {
        Self {
            dim,
            hamiltonian: Box::new(hamiltonian),
            derivative: DerivativeSpec::Analytic(Box::new(derivative)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self, lambda: f64) -> HermitianOperator {
        (self.hamiltonian)(lambda)
    }

    /// ∂H/∂λ at λ.
    pub fn derivative(&self, lambda: f64) -> Result<HermitianOperator> {
        match &self.derivative {
            DerivativeSpec::Analytic(f) => Ok(f(lambda)),
            DerivativeSpec::CentralDifference { step } => {
                let plus = self.hamiltonian(lambda + step);
                let minus = self.hamiltonian(lambda - step);
                let entries =
                    (plus.entries() - minus.entries()).mapv(|z| z / C64::from(2.0 * step));
                HermitianOperator::new(entries)
            }
        }
    }
}

/// F_t(x) = sin(xt/2)/(x/2), with the x → 0 limit t taken explicitly.
pub fn ft_kernel(x: f64, t: f64) -> f64 {
    if x.abs() < GAP_LIMIT_TOL {
        t
    } else {
        (0.5 * x * t).sin() / (0.5 * x)
    }
}

/// The generator of eigenbasis transport: 𝒜_nm = ⟨n|H'|m⟩/(E_n − E_m) off
/// the diagonal, zero on it. Entries for near-degenerate pairs
/// (|ΔE| < [`GAP_LIMIT_TOL`]) are set to zero; their susceptibility
/// contribution is handled by the analytic gap limit in [`chi_split`].
#[derive(Debug, Clone)]
pub struct AdiabaticGenerator {
    entries: CMatrix,
}

impl AdiabaticGenerator {
    fn new(entries: CMatrix) -> Result<Self> {
        let d = entries.nrows();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                dev = dev.max((entries[[i, j]] + entries[[j, i]].conj()).norm());
            }
        }
        if dev > 1e-10 {
            return Err(OfsError::InvalidParameter(format!(
                "adiabatic generator lost anti-Hermiticity (deviation {dev:.3e})"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
}

/// Spectral data of one (family, λ, weights) evaluation point.
struct EigenFrame {
    energies: Vec<f64>,
    /// H' expressed in the weights' eigenbasis.
    hp: CMatrix,
}

/// Validates that the weights' basis diagonalizes H(λ) (with the stored
/// eigenvalues on the diagonal) and rotates H' into that basis.
fn eigen_frame(fam: &HamiltonianFamily, lambda: f64, weights: &StateWeights) -> Result<EigenFrame> {
    let h = fam.hamiltonian(lambda);
    let basis = weights.basis();
    if h.dim() != basis.dim() {
        return Err(OfsError::DimensionMismatch {
            expected: basis.dim(),
            got: h.dim(),
        });
    }
    let v = basis.eigenvectors();
    let vd = dagger(v);
    let h_in_basis = vd.dot(h.entries()).dot(v);
    let d = h.dim();
    let scale = basis
        .eigenvalues()
        .iter()
        .fold(1.0f64, |acc, &e| acc.max(e.abs()));
    let mut residual: f64 = 0.0;
    for i in 0..d {
        residual = residual.max((h_in_basis[[i, i]] - basis.eigenvalues()[i]).norm());
        for j in (i + 1)..d {
            residual = residual.max(h_in_basis[[i, j]].norm());
        }
    }
    if residual > BASIS_RESIDUAL_TOL * scale {
        return Err(OfsError::WeightsBasisMismatch { residual });
    }
    let hp = fam.derivative(lambda)?;
    let hp_in_basis = vd.dot(hp.entries()).dot(v);
    Ok(EigenFrame {
        energies: basis.eigenvalues().to_vec(),
        hp: hp_in_basis,
    })
}

fn check_finite(value: f64, n: usize, m: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(OfsError::DegenerateGap { n, m })
    }
}

/// OFS through the spectral formula. With M = H' in the H(λ) eigenbasis:
///
/// - χ⁽²⁾ = Σ_{n≠m} ρ_nn |M_nm|² F_t²(E_n − E_m),
/// - χ⁽¹⁾ = t² (Σ_n ρ_nn |M_nn|² − |Σ_n ρ_nn M_nn|²),
///
/// and χ = χ⁽¹⁾ + χ⁽²⁾. With uniform weights 1/d this is the
/// fixed-time-evolution result for the maximally mixed state. Pair terms with
/// |ΔE| below [`GAP_LIMIT_TOL`] take their analytic limit t²|M_nm|² through
/// [`ft_kernel`].
pub fn chi_spectral(
    fam: &HamiltonianFamily,
    lambda: f64,
    t: f64,
    weights: &StateWeights,
) -> Result<OfsSample> {
    let frame = eigen_frame(fam, lambda, weights)?;
    let w = weights.weights();
    let d = frame.energies.len();

    let mut diag_sq = 0.0;
    let mut diag_mean = C64::new(0.0, 0.0);
    for n in 0..d {
        diag_sq += w[n] * frame.hp[[n, n]].norm_sqr();
        diag_mean += C64::from(w[n]) * frame.hp[[n, n]];
    }
    let chi1 = t * t * (diag_sq - diag_mean.norm_sqr());

    let mut chi2 = 0.0;
    for n in 0..d {
        if w[n] == 0.0 {
            continue;
        }
        for m in 0..d {
            if m == n {
                continue;
            }
            let gap = frame.energies[n] - frame.energies[m];
            let f = ft_kernel(gap, t);
            let term = w[n] * frame.hp[[n, m]].norm_sqr() * f * f;
            chi2 += check_finite(term, n, m)?;
        }
    }

    Ok(OfsSample {
        lambda,
        beta: weights.beta(),
        t,
        chi1,
        chi2,
        chi_total: chi1 + chi2,
        backend: Backend::Spectral,
    })
}

/// The eigenvalue/eigenvector split of the OFS:
///
/// - χ⁽¹⁾ = t² · Var_ρ(diag of H' in the H eigenbasis),
/// - χ⁽²⁾ = 2 Σ_{m,n} ρ_nn |𝒜_mn|² (1 − cos[(E_n − E_m) t]),
///
/// returned together with the adiabatic generator 𝒜. The parts agree with
/// [`chi_spectral`] through the identity F_t²(x)·x²/2 = 1 − cos(xt).
pub fn chi_split(
    fam: &HamiltonianFamily,
    lambda: f64,
    t: f64,
    weights: &StateWeights,
) -> Result<(f64, f64, AdiabaticGenerator)> {
    let frame = eigen_frame(fam, lambda, weights)?;
    let w = weights.weights();
    let d = frame.energies.len();

    let diag: Vec<f64> = (0..d).map(|n| frame.hp[[n, n]].re).collect();
    let mean: f64 = (0..d).map(|n| w[n] * diag[n]).sum();
    let var: f64 = (0..d).map(|n| w[n] * (diag[n] - mean).powi(2)).sum();
    let chi1 = t * t * var;

    let mut gen: CMatrix = Array2::zeros((d, d));
    for n in 0..d {
        for m in 0..d {
            if m == n {
                continue;
            }
            let gap = frame.energies[n] - frame.energies[m];
            if gap.abs() >= GAP_LIMIT_TOL {
                gen[[n, m]] = frame.hp[[n, m]] / C64::from(gap);
            }
        }
    }

    let mut chi2 = 0.0;
    for n in 0..d {
        if w[n] == 0.0 {
            continue;
        }
        for m in 0..d {
            if m == n {
                continue;
            }
            let gap = frame.energies[n] - frame.energies[m];
            let term = if gap.abs() < GAP_LIMIT_TOL {
                // lim_{ΔE→0} 2|M/ΔE|²(1 − cos(ΔE t)) = t²|M|²
                t * t * frame.hp[[m, n]].norm_sqr()
            } else {
                2.0 * gen[[m, n]].norm_sqr() * (1.0 - (gap * t).cos())
            };
            chi2 += check_finite(w[n] * term, n, m)?;
        }
    }

    Ok((chi1, chi2, AdiabaticGenerator::new(gen)?))
}

/// Susceptibility straight from fidelities: 2[1 − F_ρ(U(λ−δ), U(λ+δ))]/(2δ)²
/// with ρ = Σ_n ρ_nn |n⟩⟨n|. The symmetric stencil has O(δ²) bias; callers
/// compare against the spectral value.
pub fn chi_finite_difference(
    fam: &HamiltonianFamily,
    lambda: f64,
    t: f64,
    weights: &StateWeights,
    delta: f64,
) -> Result<f64> {
    if delta <= 0.0 {
        return Err(OfsError::InvalidParameter(format!(
            "finite-difference step must be positive, got {delta}"
        )));
    }
    let rho = weights.density()?;
    let u_minus = matrix_exponential(&fam.hamiltonian(lambda - delta), t)?;
    let u_plus = matrix_exponential(&fam.hamiltonian(lambda + delta), t)?;
    let f = operator_fidelity(&rho, u_minus.entries(), u_plus.entries())?;
    Ok(2.0 * (1.0 - f) / (2.0 * delta).powi(2))
}

/// OFS of the one-parameter group U_t = e^{-itH} in the time parameter:
/// the variance ⟨φ|H²|φ⟩ − ⟨φ|H|φ⟩².
pub fn chi_time_group(h: &HermitianOperator, phi: &ndarray::Array1<C64>) -> Result<f64> {
    if phi.len() != h.dim() {
        return Err(OfsError::DimensionMismatch {
            expected: h.dim(),
            got: phi.len(),
        });
    }
    let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(OfsError::InvalidParameter(format!(
            "state vector norm {} differs from 1",
            norm.sqrt()
        )));
    }
    let h_phi = h.entries().dot(phi);
    let h_sq: f64 = h_phi.iter().map(|z| z.norm_sqr()).sum();
    let h_mean: C64 = phi.iter().zip(h_phi.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(h_sq - h_mean.norm_sqr())
}
