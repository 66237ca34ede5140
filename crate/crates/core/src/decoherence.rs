//! Dephasing dynamics of a central system coupled to a bath through
//! H_I = Σ_n |n⟩⟨n| ⊗ B_n.
//!
//! The pointer populations |c_n|² are conserved; each coherence picks up the
//! ρ_B-weighted overlap of two effective bath evolutions
//! V_n(t) = exp[−it(H_B + B_n)]:
//!
//!   ρ_S(t)_{nm} = c_n c_m^* e^{−i(E_n−E_m)t} ⟨V_m, V_n⟩_{ρ_B}.
//!
//! The total Hamiltonian is block diagonal over pointer states, so the
//! evolution is computed per block — O(K·d_B³) instead of O((K·d_B)³); the
//! full-matrix route lives in [`crate::oracle::dephasing_full_evolution`] as
//! the independent check of exactly this shortcut.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{OfsError, Result};
use crate::operator_space::{
    inner_product, spectral_decompose, thermal_weights, CMatrix, DensityState, HermitianOperator,
    SpectralDecomposition, StateWeights, UnitaryOperator,
};
use crate::oracle::{build_spin_tfim, SpinChainSpec};

/// Central system with energies E_n and initial amplitudes c_n in the pointer
/// basis, coupled to a bath by one Hermitian operator B_n per pointer state.
#[derive(Debug, Clone)]
pub struct DephasingModel {
    system_energies: Vec<f64>,
    amplitudes: Vec<C64>,
    bath_hamiltonian: HermitianOperator,
    couplings: Vec<HermitianOperator>,
    bath_state: DensityState,
}

impl DephasingModel {
    pub fn new(
        system_energies: Vec<f64>,
        amplitudes: Vec<C64>,
        bath_hamiltonian: HermitianOperator,
        couplings: Vec<HermitianOperator>,
        bath_state: DensityState,
    ) -> Result<Self> {
        let k = system_energies.len();
        if k < 2 {
            return Err(OfsError::InvalidParameter(
                "dephasing model needs at least 2 pointer states".into(),
            ));
        }
        if amplitudes.len() != k || couplings.len() != k {
            return Err(OfsError::DimensionMismatch {
                expected: k,
                got: amplitudes.len().min(couplings.len()),
            });
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(OfsError::InvalidParameter(format!(
                "pointer amplitudes have squared norm {norm}, expected 1"
            )));
        }
        let db = bath_hamiltonian.dim();
        if bath_state.dim() != db || couplings.iter().any(|b| b.dim() != db) {
            return Err(OfsError::DimensionMismatch {
                expected: db,
                got: bath_state.dim(),
            });
        }
        Ok(Self {
            system_energies,
            amplitudes,
            bath_hamiltonian,
            couplings,
            bath_state,
        })
    }

    /// Central qubit probing a transverse-field Ising bath: H_B is the spin
    /// chain at field λ and B_n = −δ_n Σ_l σ_l^z, so that
    /// V_n = exp[−itH(λ + δ_n)] — each pointer state shifts the bath field by
    /// its coupling strength. Bath starts thermal at β.
    pub fn ising_bath(
        n_sites: usize,
        lambda: f64,
        beta: f64,
        deltas: &[f64],
        system_energies: Vec<f64>,
        amplitudes: Vec<C64>,
    ) -> Result<Self> {
        let spec = SpinChainSpec::new(n_sites, lambda)?;
        let h_b = build_spin_tfim(&spec)?;
        let field = crate::oracle::spin_field_derivative(n_sites)?; // −Σσ_l^z
        let couplings = deltas
            .iter()
            .map(|&d| HermitianOperator::new(field.entries().mapv(|z| z * C64::from(d))))
            .collect::<Result<Vec<_>>>()?;
        let decomp = Arc::new(spectral_decompose(&h_b)?);
        let bath_state = thermal_weights(&decomp, beta)?.density()?;
        Self::new(system_energies, amplitudes, h_b, couplings, bath_state)
    }

    /// Replaces the thermal bath state by an arbitrary mixture of bath
    /// eigenstates.
    pub fn with_bath_weights(mut self, weights: &StateWeights) -> Result<Self> {
        self.bath_state = weights.density()?;
        Ok(self)
    }

    pub fn system_dim(&self) -> usize {
        self.system_energies.len()
    }

    pub fn bath_dim(&self) -> usize {
        self.bath_hamiltonian.dim()
    }

    pub fn system_energies(&self) -> &[f64] {
        &self.system_energies
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn bath_hamiltonian(&self) -> &HermitianOperator {
        &self.bath_hamiltonian
    }

    pub fn couplings(&self) -> &[HermitianOperator] {
        &self.couplings
    }

    pub fn bath_state(&self) -> &DensityState {
        &self.bath_state
    }

    /// Spectral decompositions of H_B + B_n, one per pointer state; shared by
    /// every time point of a trajectory.
    fn block_decompositions(&self) -> Result<Vec<SpectralDecomposition>> {
        self.couplings
            .iter()
            .map(|b| {
                let h = HermitianOperator::new(self.bath_hamiltonian.entries() + b.entries())?;
                spectral_decompose(&h)
            })
            .collect()
    }
}

/// Effective bath evolutions V_n(t) = exp[−it(H_B + B_n)].
pub fn effective_evolutions(model: &DephasingModel, t: f64) -> Result<Vec<UnitaryOperator>> {
    Ok(model
        .block_decompositions()?
        .iter()
        .map(|d| d.evolve(t))
        .collect())
}

fn reduced_from_evolutions(
    model: &DephasingModel,
    t: f64,
    evolutions: &[UnitaryOperator],
) -> Result<DensityState> {
    let k = model.system_dim();
    let mut rho: CMatrix = Array2::zeros((k, k));
    for n in 0..k {
        for m in 0..k {
            let overlap = inner_product(
                model.bath_state(),
                evolutions[m].entries(),
                evolutions[n].entries(),
            )?;
            let phase =
                (-C64::i() * (model.system_energies[n] - model.system_energies[m]) * t).exp();
            rho[[n, m]] = model.amplitudes[n] * model.amplitudes[m].conj() * phase * overlap;
        }
    }
    DensityState::new(rho)
}

/// Reduced system state at time t assembled from operator fidelities.
pub fn reduced_state(model: &DephasingModel, t: f64) -> Result<DensityState> {
    let evolutions = effective_evolutions(model, t)?;
    reduced_from_evolutions(model, t, &evolutions)
}

/// Reduced states over a time grid, with |ρ_S(t)_{nm}| tracked per (n, m)
/// pair (n < m).
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub matrices: Vec<DensityState>,
    /// Off-diagonal index pairs, row-major upper triangle.
    pub pairs: Vec<(usize, usize)>,
    /// offdiag_magnitudes[time_index][pair_index] = |ρ_S(t)_{nm}|.
    pub offdiag_magnitudes: Vec<Vec<f64>>,
}

/// Coherence decay along a monotone time grid.
pub fn coherence_decay_curve(model: &DephasingModel, times: &[f64]) -> Result<ReducedTrajectory> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OfsError::InvalidParameter(
            "time grid must be strictly increasing".into(),
        ));
    }
    let k = model.system_dim();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|n| ((n + 1)..k).map(move |m| (n, m)))
        .collect();
    let decomps = model.block_decompositions()?;
    let mut matrices = Vec::with_capacity(times.len());
    let mut magnitudes = Vec::with_capacity(times.len());
    for &t in times {
        let evolutions: Vec<UnitaryOperator> = decomps.iter().map(|d| d.evolve(t)).collect();
        let rho = reduced_from_evolutions(model, t, &evolutions)?;
        magnitudes.push(
            pairs
                .iter()
                .map(|&(n, m)| rho.entries()[[n, m]].norm())
                .collect(),
        );
        matrices.push(rho);
    }
    Ok(ReducedTrajectory {
        times: times.to_vec(),
        matrices,
        pairs,
        offdiag_magnitudes: magnitudes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_space::{max_dev, operator_fidelity, matrix_exponential};
    use crate::oracle::dephasing_full_evolution;
    use approx::assert_abs_diff_eq;

    fn equal_superposition() -> Vec<C64> {
        let a = C64::from(0.5f64.sqrt());
        vec![a, a]
    }

    fn qubit_ising_model(n_sites: usize, lambda: f64, beta: f64, delta: f64) -> DephasingModel {
        DephasingModel::ising_bath(
            n_sites,
            lambda,
            beta,
            &[0.0, delta],
            vec![0.0, 1.0],
            equal_superposition(),
        )
        .unwrap()
    }

    #[test]
    fn uncoupled_pointer_states_share_one_evolution() {
        let model = DephasingModel::ising_bath(
            3,
            0.7,
            1.0,
            &[0.0, 0.0],
            vec![0.0, 1.0],
            equal_superposition(),
        )
        .unwrap();
        let evs = effective_evolutions(&model, 1.3).unwrap();
        assert!(max_dev(evs[0].entries(), evs[1].entries()) < 1e-12);
        let bare = matrix_exponential(model.bath_hamiltonian(), 1.3).unwrap();
        assert!(max_dev(evs[0].entries(), bare.entries()) < 1e-10);
    }

    #[test]
    fn zero_time_evolutions_are_identities() {
        let model = qubit_ising_model(3, 0.7, 1.0, 0.1);
        for u in effective_evolutions(&model, 0.0).unwrap() {
            assert!(max_dev(u.entries(), &crate::operator_space::identity(8)) < 1e-14);
        }
    }

    #[test]
    fn ising_couplings_shift_the_field() {
        let (n, lambda, delta) = (4, 0.9, 0.17);
        let model = qubit_ising_model(n, lambda, 1.0, delta);
        let evs = effective_evolutions(&model, 0.8).unwrap();
        let shifted = build_spin_tfim(&SpinChainSpec::new(n, lambda + delta).unwrap()).unwrap();
        let expect = matrix_exponential(&shifted, 0.8).unwrap();
        assert!(max_dev(evs[1].entries(), expect.entries()) < 1e-10);
    }

    #[test]
    fn populations_are_conserved_and_coherence_is_fidelity() {
        let model = qubit_ising_model(5, 1.0, 1.0, 0.1);
        for t in [0.3, 1.0, 4.0] {
            let rho = reduced_state(&model, t).unwrap();
            assert_abs_diff_eq!(rho.entries()[[0, 0]].re, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(rho.entries()[[1, 1]].re, 0.5, epsilon = 1e-12);
            let evs = effective_evolutions(&model, t).unwrap();
            let f = operator_fidelity(
                model.bath_state(),
                evs[0].entries(),
                evs[1].entries(),
            )
            .unwrap();
            assert_abs_diff_eq!(rho.entries()[[0, 1]].norm(), 0.5 * f, epsilon = 1e-12);
            // Cauchy-Schwarz bound |ρ_nm| ≤ |c_n c_m|.
            assert!(rho.entries()[[0, 1]].norm() <= 0.25 * 1.000000000001);
        }
    }

    #[test]
    fn equal_couplings_freeze_coherences() {
        let model = DephasingModel::ising_bath(
            3,
            0.7,
            1.0,
            &[0.2, 0.2],
            vec![0.0, 1.0],
            equal_superposition(),
        )
        .unwrap();
        let traj =
            coherence_decay_curve(&model, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        for mags in &traj.offdiag_magnitudes {
            assert_abs_diff_eq!(mags[0], 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_coupling_gap_gives_flat_curve() {
        let model = qubit_ising_model(4, 0.8, 1.0, 0.0);
        let traj = coherence_decay_curve(&model, &[0.5, 1.5, 3.0]).unwrap();
        for mags in &traj.offdiag_magnitudes {
            assert_abs_diff_eq!(mags[0], 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_full_evolution_oracle() {
        let model = qubit_ising_model(5, 0.9, 1.0, 0.1);
        for t in [0.5, 1.0, 5.0] {
            let fast = reduced_state(&model, t).unwrap();
            let oracle = dephasing_full_evolution(&model, t).unwrap();
            assert!(
                max_dev(fast.entries(), oracle.entries()) < 1e-10,
                "mismatch at t={t}"
            );
        }
    }

    #[test]
    fn infinite_temperature_bath_matches_uniform_fidelity() {
        let model = qubit_ising_model(4, 0.8, 0.0, 0.13);
        let t = 1.1;
        let rho = reduced_state(&model, t).unwrap();
        let evs = effective_evolutions(&model, t).unwrap();
        let uniform = DensityState::maximally_mixed(16);
        let f = operator_fidelity(&uniform, evs[0].entries(), evs[1].entries()).unwrap();
        assert_abs_diff_eq!(rho.entries()[[0, 1]].norm() / 0.25, f, epsilon = 1e-12);
    }

    #[test]
    fn decay_curvature_peaks_near_critical_bath() {
        // Short-time decay exponent of the coherence, compared across bath
        // fields: strongest near λ = 1.
        let t = 0.5;
        let rate = |lambda: f64| {
            let model = qubit_ising_model(9, lambda, 1.0, 0.1);
            let rho = reduced_state(&model, t).unwrap();
            -(rho.entries()[[0, 1]].norm() / 0.25).ln()
        };
        let (low, mid, high) = (rate(0.5), rate(1.0), rate(1.5));
        assert!(mid > low && mid > high, "rates {low} {mid} {high}");
    }
}
