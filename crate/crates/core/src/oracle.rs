//! Brute-force validators built from first principles: the full 2^N
//! spin-basis transverse-field Ising chain, per-mode 4×4 fermionic blocks of
//! its momentum-space form, fidelity-based susceptibility estimates on
//! oracle-built matrices, the ground-state Loschmidt echo, and full
//! system+bath evolution for the dephasing model.
//!
//! The spin-basis oracle validates the decoherence module and qualitative
//! criticality claims. It is deliberately NOT asserted equal to the fermionic
//! analytic solution at small N: the Jordan-Wigner treatment of the periodic
//! boundary (parity-dependent boundary term and k-quantization) is outside
//! scope, so the 4×4 fermionic blocks are the exact referee for the analytic
//! mode formulas, while the spin oracle referees the dephasing dynamics.

use ndarray::linalg::kron;
use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::decoherence::DephasingModel;
use crate::error::{OfsError, Result};
use crate::operator_space::{
    dagger, identity, matrix_exponential, operator_fidelity, pauli_x, pauli_z, spectral_decompose,
    thermal_weights, CMatrix, DensityState, HermitianOperator,
};

/// Largest dense dimension the oracles will touch (N = 12 spins).
pub const MAX_ORACLE_DIM: usize = 4096;

/// Periodic transverse-field Ising chain on 2 ≤ N ≤ 12 sites, J = 1.
#[derive(Debug, Clone, Copy)]
pub struct SpinChainSpec {
    pub n: usize,
    pub lambda: f64,
}

impl SpinChainSpec {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if !(2..=12).contains(&n) {
            return Err(OfsError::DimensionTooLarge {
                dim: 1usize << n.max(13),
                max: MAX_ORACLE_DIM,
            });
        }
        Ok(Self { n, lambda })
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }
}

/// Single-site operator embedded at `site` of an `n`-site chain.
fn embed_site(n: usize, site: usize, op: &CMatrix) -> CMatrix {
    let mut acc = identity(1);
    for s in 0..n {
        let factor = if s == site { op.clone() } else { identity(2) };
        acc = kron(&acc, &factor);
    }
    acc
}

/// Two single-site operators embedded at `site_a` < `site_b`.
fn embed_pair(n: usize, site_a: usize, site_b: usize, op_a: &CMatrix, op_b: &CMatrix) -> CMatrix {
    let mut acc = identity(1);
    for s in 0..n {
        let factor = if s == site_a {
            op_a.clone()
        } else if s == site_b {
            op_b.clone()
        } else {
            identity(2)
        };
        acc = kron(&acc, &factor);
    }
    acc
}

/// H(λ) = −Σ_l (σ_l^x σ_{l+1}^x + λ σ_l^z) with periodic boundary, built by
/// Kronecker products in the 2^N spin basis.
///
/// For N = 2 the periodic sum visits the single bond twice (l = 0 and l = 1
/// couple the same pair), so the xx coupling is doubled; this convention is
/// kept as the literal reading of the periodic sum.
pub fn build_spin_tfim(spec: &SpinChainSpec) -> Result<HermitianOperator> {
    let n = spec.n;
    let sx = pauli_x();
    let sz = pauli_z();
    let dim = spec.dim();
    let mut h: CMatrix = Array2::zeros((dim, dim));
    for l in 0..n {
        let next = (l + 1) % n;
        let (a, b) = if l < next { (l, next) } else { (next, l) };
        h -= &embed_pair(n, a, b, &sx, &sx);
        h -= &(embed_site(n, l, &sz) * C64::from(spec.lambda));
    }
    HermitianOperator::new(h)
}

/// ∂H/∂λ of the spin chain: −Σ_l σ_l^z, independent of λ.
pub fn spin_field_derivative(n: usize) -> Result<HermitianOperator> {
    let sz = pauli_z();
    let dim = 1 << n;
    let mut h: CMatrix = Array2::zeros((dim, dim));
    for l in 0..n {
        h -= &embed_site(n, l, &sz);
    }
    HermitianOperator::new(h)
}

/// Global parity Π_l σ_l^z.
pub fn parity_operator(n: usize) -> CMatrix {
    let sz = pauli_z();
    let mut acc = identity(1);
    for _ in 0..n {
        acc = kron(&acc, &sz);
    }
    acc
}

/// One (k, −k) fermion pair of the momentum-space chain, realized as dense
/// 4×4 matrices on the Fock basis {|00⟩, |11⟩, |01⟩, |10⟩} of (d_k, d_{−k}).
#[derive(Debug, Clone)]
pub struct FermionModeBlock {
    pub k: usize,
    pub ktilde: f64,
    pub h4: HermitianOperator,
    /// Pseudo-Pauli ς_kx = d_k†d_{−k}† + d_{−k}d_k.
    pub sigma_x: CMatrix,
    /// Pseudo-Pauli ς_ky = −i(d_k†d_{−k}† − d_{−k}d_k).
    pub sigma_y: CMatrix,
    /// Pseudo-Pauli ς_kz = n_k + n_{−k} − 1.
    pub sigma_z: CMatrix,
    /// Occupation imbalance n_k − n_{−k}, conserved by the block Hamiltonian.
    pub imbalance: CMatrix,
}

/// Builds the mode block from the fermion algebra: d_k, d_{−k} as
/// Jordan-Wigner matrices on the two-mode Fock space, the (k, −k) pair of
/// Hamiltonian terms, and the pseudo-Pauli operators — everything assembled
/// by matrix products rather than from the diagonalized closed form, so this
/// block can referee the analytic mode formulas.
pub fn build_fermion_block(k: usize, n_sites: usize, lambda: f64) -> FermionModeBlock {
    let ktilde = 2.0 * std::f64::consts::PI * k as f64 / n_sites as f64;

    // Two fermion modes in the natural binary basis |n_k n_{-k}⟩ ∈
    // {00, 01, 10, 11}: d_k = σ⁻⊗1, d_{-k} = σ_z⊗σ⁻.
    let lower = ndarray::array![
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
    ];
    let d_k = kron(&lower, &identity(2));
    let d_mk = kron(&pauli_z(), &lower);
    let d_k_dag = dagger(&d_k);
    let d_mk_dag = dagger(&d_mk);

    let n_k = d_k_dag.dot(&d_k);
    let n_mk = d_mk_dag.dot(&d_mk);
    let pair_create = d_k_dag.dot(&d_mk_dag);
    let pair_destroy = d_mk.dot(&d_k);

    let number = &(&n_k + &n_mk) - &identity(4);
    // The ±k pair of terms of the momentum-space Hamiltonian; the two
    // members of the pair contribute identically, giving the factor 2.
    let h_natural = &(number.mapv(|z| z * C64::from(-2.0 * (ktilde.cos() - lambda))))
        + &((&pair_create - &pair_destroy).mapv(|z| z * C64::new(0.0, -2.0 * ktilde.sin())));

    let sx_natural = &pair_create + &pair_destroy;
    let sy_natural = (&pair_create - &pair_destroy).mapv(|z| z * C64::new(0.0, -1.0));
    let sz_natural = number;
    let imbalance_natural = &n_k - &n_mk;

    // Reorder to the even-first basis {|00⟩, |11⟩, |01⟩, |10⟩}.
    let perm = [0usize, 3, 1, 2];
    let reorder = |m: &CMatrix| -> CMatrix {
        Array2::from_shape_fn((4, 4), |(i, j)| m[[perm[i], perm[j]]])
    };

    FermionModeBlock {
        k,
        ktilde,
        h4: HermitianOperator::new(reorder(&h_natural))
            .expect("mode block construction preserves Hermiticity"),
        sigma_x: reorder(&sx_natural),
        sigma_y: reorder(&sy_natural),
        sigma_z: reorder(&sz_natural),
        imbalance: reorder(&imbalance_natural),
    }
}

/// Fidelity-based susceptibility on oracle-built matrices:
/// 2[1 − F_ρ(e^{−itH(λ−δ)}, e^{−itH(λ+δ)})]/(2δ)² with ρ thermal at
/// (β, H(λ)).
pub fn oracle_chi<F>(build: F, lambda: f64, beta: f64, t: f64, delta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    let h = build(lambda)?;
    if h.dim() > MAX_ORACLE_DIM {
        return Err(OfsError::DimensionTooLarge {
            dim: h.dim(),
            max: MAX_ORACLE_DIM,
        });
    }
    let spec = std::sync::Arc::new(spectral_decompose(&h)?);
    let rho = thermal_weights(&spec, beta)?.density()?;
    let u_minus = matrix_exponential(&build(lambda - delta)?, t)?;
    let u_plus = matrix_exponential(&build(lambda + delta)?, t)?;
    let f = operator_fidelity(&rho, u_minus.entries(), u_plus.entries())?;
    Ok(2.0 * (1.0 - f) / (2.0 * delta).powi(2))
}

/// Ground-state Loschmidt echo |⟨ψ₀(λ)| e^{+itH(λ)} e^{−itH(λ₂)} |ψ₀(λ)⟩|²
/// in the spin basis.
pub fn loschmidt_echo(spec: &SpinChainSpec, lambda2: f64, t: f64) -> Result<f64> {
    let h1 = build_spin_tfim(spec)?;
    let decomp = spectral_decompose(&h1)?;
    let gap = decomp.ground_gap();
    if gap < 1e-10 {
        return Err(OfsError::DegenerateGroundState { gap });
    }
    let psi0 = decomp.ground_state();
    let h2 = build_spin_tfim(&SpinChainSpec {
        lambda: lambda2,
        ..*spec
    })?;
    let forward = matrix_exponential(&h1, -t)?; // e^{+itH(λ)}
    let backward = matrix_exponential(&h2, t)?;
    let evolved = forward.entries().dot(&backward.entries().dot(&psi0));
    let amp: C64 = psi0
        .iter()
        .zip(evolved.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(amp.norm_sqr())
}

/// Overlap |⟨ψ₀(λ)|ψ₀(λ + δ)⟩| of spin-basis ground states.
pub fn ground_state_overlap(spec: &SpinChainSpec, delta: f64) -> Result<f64> {
    let d1 = spectral_decompose(&build_spin_tfim(spec)?)?;
    let d2 = spectral_decompose(&build_spin_tfim(&SpinChainSpec {
        lambda: spec.lambda + delta,
        ..*spec
    })?)?;
    for d in [&d1, &d2] {
        let gap = d.ground_gap();
        if gap < 1e-10 {
            return Err(OfsError::DegenerateGroundState { gap });
        }
    }
    let amp: C64 = d1
        .ground_state()
        .iter()
        .zip(d2.ground_state().iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(amp.norm())
}

/// Full system+bath oracle for the dephasing model: exponentiates the entire
/// (K·d_B)-dimensional Hamiltonian, evolves ρ(0) = |ψ⟩⟨ψ| ⊗ ρ_B and traces
/// out the bath. Cubic in K·d_B where the production path is cubic in d_B
/// only — which is exactly why it makes an independent referee.
pub fn dephasing_full_evolution(model: &DephasingModel, t: f64) -> Result<DensityState> {
    let k = model.system_dim();
    let db = model.bath_dim();
    let dim = k * db;
    if dim > MAX_ORACLE_DIM {
        return Err(OfsError::DimensionTooLarge {
            dim,
            max: MAX_ORACLE_DIM,
        });
    }

    // H = Σ_n |n⟩⟨n| ⊗ (E_n + H_B + B_n): block diagonal over pointer states.
    let mut h_full: CMatrix = Array2::zeros((dim, dim));
    for n in 0..k {
        let block = model.bath_hamiltonian().entries()
            + model.couplings()[n].entries()
            + &(identity(db) * C64::from(model.system_energies()[n]));
        for a in 0..db {
            for b in 0..db {
                h_full[[n * db + a, n * db + b]] = block[[a, b]];
            }
        }
    }
    let u = matrix_exponential(&HermitianOperator::new(h_full)?, t)?;

    // ρ(0) = |ψ⟩⟨ψ| ⊗ ρ_B.
    let amps = model.amplitudes();
    let rho_b = model.bath_state().entries();
    let mut rho0: CMatrix = Array2::zeros((dim, dim));
    for n in 0..k {
        for m in 0..k {
            let c = amps[n] * amps[m].conj();
            for a in 0..db {
                for b in 0..db {
                    rho0[[n * db + a, m * db + b]] = c * rho_b[[a, b]];
                }
            }
        }
    }

    let rho_t = u.entries().dot(&rho0).dot(&dagger(u.entries()));

    // Partial trace over the bath.
    let mut rho_s: CMatrix = Array2::zeros((k, k));
    for n in 0..k {
        for m in 0..k {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..db {
                acc += rho_t[[n * db + b, m * db + b]];
            }
            rho_s[[n, m]] = acc;
        }
    }
    DensityState::new(rho_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{chi_spectral, HamiltonianFamily};
    use crate::operator_space::{max_dev, StateWeights};
    use crate::tfim::{chi1_mode, chi2_mode, mode_params, TfimConfig};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    #[test]
    fn two_site_chain_spectrum() {
        // Periodic N = 2 double-counts the single bond: H = −2σ^xσ^x at λ=0.
        let spec = SpinChainSpec::new(2, 0.0).unwrap();
        let h = build_spin_tfim(&spec).unwrap();
        let d = spectral_decompose(&h).unwrap();
        let expect = [-2.0, -2.0, 2.0, 2.0];
        for (got, want) in d.eigenvalues().iter().zip(expect) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn strong_field_ground_state() {
        let spec = SpinChainSpec::new(4, 1e3).unwrap();
        let h = build_spin_tfim(&spec).unwrap();
        let d = spectral_decompose(&h).unwrap();
        // Energy → −Nλ + O(1) and the ground state → all-spins-up (index 0).
        assert!((d.eigenvalues()[0] + 4.0 * 1e3).abs() < 1.0);
        assert!(d.ground_state()[0].norm() > 0.999);
    }

    #[test]
    fn chain_commutes_with_parity() {
        let spec = SpinChainSpec::new(5, 0.7).unwrap();
        let h = build_spin_tfim(&spec).unwrap();
        let p = parity_operator(5);
        let comm = h.entries().dot(&p) - p.dot(h.entries());
        let dev = comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn rejects_oversized_chain() {
        assert!(SpinChainSpec::new(13, 1.0).is_err());
    }

    #[test]
    fn fermion_block_spectrum_matches_mode_params() {
        let cfg = TfimConfig::new(2, 1.0, 1.0).unwrap();
        let p = mode_params(&cfg, 1);
        let block = build_fermion_block(1, 5, 1.0);
        let d = spectral_decompose(&block.h4).unwrap();
        let w = p.omega.abs();
        assert_abs_diff_eq!(d.eigenvalues()[0], -w, epsilon = 1e-12);
        assert_abs_diff_eq!(d.eigenvalues()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.eigenvalues()[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.eigenvalues()[3], w, epsilon = 1e-12);
        assert_abs_diff_eq!(w, 2.351141, epsilon = 1e-6);
    }

    #[test]
    fn fermion_block_conserves_imbalance() {
        let block = build_fermion_block(2, 9, 0.4);
        let comm = block.h4.entries().dot(&block.imbalance) - block.imbalance.dot(block.h4.entries());
        let dev = comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn pseudo_paulis_act_as_paulis_on_even_block() {
        let block = build_fermion_block(1, 7, 0.9);
        // ς_x ς_y = i ς_z on the even subspace; all ς vanish on the odd one.
        let xy = block.sigma_x.dot(&block.sigma_y);
        let expect = block.sigma_z.mapv(|z| C64::i() * z);
        assert!(max_dev(&xy, &expect) < 1e-14);
        // ς² is the projector onto the even block (basis order puts it first).
        let sq = block.sigma_x.dot(&block.sigma_x);
        let mut proj: CMatrix = Array2::zeros((4, 4));
        proj[[0, 0]] = C64::new(1.0, 0.0);
        proj[[1, 1]] = C64::new(1.0, 0.0);
        assert!(max_dev(&sq, &proj) < 1e-14);
        for m in [&block.sigma_x, &block.sigma_y, &block.sigma_z] {
            for i in 2..4 {
                for j in 0..4 {
                    assert!(m[[i, j]].norm() < 1e-14 && m[[j, i]].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn fermion_block_thermal_trace() {
        let cfg = TfimConfig::new(3, 0.8, 1.7).unwrap();
        let p = mode_params(&cfg, 2);
        let block = build_fermion_block(2, 7, 0.8);
        let d = spectral_decompose(&block.h4).unwrap();
        let z: f64 = d.eigenvalues().iter().map(|e| (-cfg.beta * e).exp()).sum();
        assert_abs_diff_eq!(z, 2.0 * (1.0 + (cfg.beta * p.omega).cosh()), epsilon = 1e-10);
        assert_abs_diff_eq!(z, p.zk, epsilon = 1e-10);
    }

    #[test]
    fn fermion_block_evolution_is_even_block_rotation() {
        let lambda = 1.3;
        let cfg = TfimConfig::new(4, lambda, 1.0).unwrap();
        let k = 3;
        let p = mode_params(&cfg, k);
        let block = build_fermion_block(k, 9, lambda);
        let t = 0.8;
        let u = matrix_exponential(&block.h4, t).unwrap();
        // e^{−itH₄} = P_odd + cos(tΩ)P_even − i sin(tΩ) ς_n(θ).
        let sigma_n = block.sigma_y.mapv(|z| z * C64::from(p.theta.sin()))
            + block.sigma_z.mapv(|z| z * C64::from(p.theta.cos()));
        let mut expect: CMatrix = identity(4);
        let (s, c) = (t * p.omega).sin_cos();
        expect[[0, 0]] = C64::from(c);
        expect[[1, 1]] = C64::from(c);
        expect = expect + sigma_n.mapv(|z| z * C64::new(0.0, -s));
        assert!(max_dev(u.entries(), &expect) < 1e-12);
    }

    #[test]
    fn oracle_chi_matches_mode_formulas() {
        let (k, n_sites, lambda, beta, t) = (1, 5, 1.0, 1.0, 1.0);
        let cfg = TfimConfig::new(2, lambda, beta).unwrap();
        let p = mode_params(&cfg, k);
        let analytic = chi1_mode(&p, beta, t) + chi2_mode(&p, beta, t);
        let build = |l: f64| Ok(build_fermion_block(k, n_sites, l).h4);
        let coarse = oracle_chi(build, lambda, beta, t, 1e-3).unwrap();
        assert!((coarse - analytic).abs() / analytic <= 1e-4);
        // O(δ²) convergence via two steps.
        let fine = oracle_chi(build, lambda, beta, t, 5e-4).unwrap();
        let ratio = (coarse - analytic).abs() / (fine - analytic).abs();
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn oracle_chi_zero_for_constant_family() {
        let build = |_l: f64| build_spin_tfim(&SpinChainSpec::new(3, 0.5).unwrap());
        let chi = oracle_chi(build, 0.5, 1.0, 1.0, 1e-3).unwrap();
        assert!(chi.abs() < 1e-9);
    }

    #[test]
    fn oracle_chi_agrees_with_engine_on_spin_chain() {
        let n = 5;
        let build =
            move |l: f64| build_spin_tfim(&SpinChainSpec::new(n, l).unwrap()).map(|h| h);
        let fam = HamiltonianFamily::with_analytic_derivative(
            1 << n,
            move |l| build_spin_tfim(&SpinChainSpec::new(n, l).unwrap()).unwrap(),
            move |_| spin_field_derivative(n).unwrap(),
        );
        let spec = Arc::new(spectral_decompose(&fam.hamiltonian(0.5)).unwrap());
        let w = StateWeights::thermal(Arc::clone(&spec), 1.0).unwrap();
        let engine = chi_spectral(&fam, 0.5, 1.0, &w).unwrap();
        let fd = oracle_chi(build, 0.5, 1.0, 1.0, 1e-3).unwrap();
        assert!((fd - engine.chi_total).abs() / engine.chi_total <= 1e-5);
    }

    #[test]
    fn loschmidt_echo_trivial_points() {
        let spec = SpinChainSpec::new(4, 0.6).unwrap();
        assert_abs_diff_eq!(loschmidt_echo(&spec, 0.6, 1.7).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(loschmidt_echo(&spec, 1.3, 0.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn loschmidt_echo_enhanced_near_criticality() {
        let t_grid: Vec<f64> = (1..=10).map(|i| 0.5 * i as f64).collect();
        let near = SpinChainSpec::new(9, 1.0).unwrap();
        let far = SpinChainSpec::new(9, 2.0).unwrap();
        let min_near = t_grid
            .iter()
            .map(|&t| loschmidt_echo(&near, 1.1, t).unwrap())
            .fold(f64::INFINITY, f64::min);
        let min_far = t_grid
            .iter()
            .map(|&t| loschmidt_echo(&far, 2.1, t).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(
            min_near < min_far,
            "echo floor near criticality {min_near} vs away {min_far}"
        );
    }

    #[test]
    fn ground_state_overlap_is_continuous() {
        let spec = SpinChainSpec::new(5, 0.8).unwrap();
        assert_abs_diff_eq!(ground_state_overlap(&spec, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        let mut prev = 1.0;
        for delta in [1e-3, 1e-2, 1e-1] {
            let f = ground_state_overlap(&spec, delta).unwrap();
            assert!(f <= prev + 1e-12 && f > 0.9, "overlap {f} at δ={delta}");
            prev = f;
        }
    }

    #[test]
    fn spin_vs_fermion_gap_shrinks_with_n() {
        // The periodic-boundary JW bookkeeping is out of scope, so the two
        // backends are not asserted equal; the gap must only shrink with N.
        let mut prev_gap = f64::INFINITY;
        for n in [5usize, 7, 9] {
            let m = (n - 1) / 2;
            let cfg = TfimConfig::new(m, 0.5, 1.0).unwrap();
            let analytic = crate::tfim::chi_finite_n(&cfg, 1.0).chi_total;
            let build = move |l: f64| build_spin_tfim(&SpinChainSpec::new(n, l).unwrap());
            let spin = oracle_chi(build, 0.5, 1.0, 1.0, 1e-3).unwrap();
            let gap = (spin - analytic).abs() / analytic;
            assert!(
                gap < prev_gap,
                "spin-fermion gap {gap} at N={n} did not shrink (prev {prev_gap})"
            );
            prev_gap = gap;
        }
    }
}
