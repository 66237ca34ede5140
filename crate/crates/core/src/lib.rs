//! State-dependent operator fidelity and operator fidelity susceptibility (OFS)
//! for parametrized families of unitaries.
//!
//! The crate is organized around a single chain of ideas: the ρ-weighted
//! operator inner product ⟨X,Y⟩_ρ = Tr(ρX†Y) turns finite-time evolutions into
//! vectors of a Hilbert space, the fidelity |⟨U,W⟩_ρ| between two nearby
//! evolutions expands as 1 − (δλ²/2)·χ_ρ, and the susceptibility χ_ρ splits
//! into an eigenvalue-variation part (growing as t²) and an
//! eigenvector-variation part (bounded, oscillatory).
//!
//! Modules:
//!
//! - [`operator_space`]: dense Hermitian/unitary/density matrix primitives,
//!   spectral decomposition, matrix exponential, thermal weights, the
//!   ρ-weighted inner product and operator fidelity.
//! - [`engine`]: generic OFS for a parametrized Hamiltonian family — the
//!   spectral formula, the χ⁽¹⁾/χ⁽²⁾ split with its adiabatic generator, and
//!   finite-difference estimation straight from fidelities.
//! - [`tfim`]: exact closed-form OFS for the transverse-field Ising chain:
//!   per-mode formulas, finite-N sums, time averages, thermodynamic-limit
//!   quadrature, and a factorized finite-temperature echo engine.
//! - [`oracle`]: brute-force validators — full 2^N spin-basis construction,
//!   per-mode 4×4 fermionic blocks, and fidelity-based susceptibility
//!   estimates computed from first principles.
//! - [`decoherence`]: dephasing dynamics of a central system coupled to a
//!   bath, with the reduced density matrix assembled from operator fidelities.
//! - [`validate`]: the cross-backend check suites driven by the CLI.

pub mod decoherence;
pub mod engine;
pub mod error;
pub mod operator_space;
pub mod oracle;
pub mod tfim;
pub mod validate;

pub use error::{OfsError, Result};
