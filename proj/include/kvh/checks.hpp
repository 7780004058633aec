#pragma once

#include "kvh/spin2.hpp"

#include <random>
#include <string>
#include <vector>

namespace kvh {

// Seeded generators for invariant checks.
// 𝒫 = Σ_m Υ_m Υ_m† with smooth Gaussian-enveloped Υ_m, normalized to unit mass.
ClosureState random_closure_state(const Grid& g, std::mt19937_64& rng, int terms, double hbar);
// Hermitian, Gaussian-enveloped perturbation direction for 𝒫.
MatrixField random_hermitian_direction(const Grid& g, std::mt19937_64& rng);
// Haar-distributed n×n unitary.
CMatrix random_unitary(int n, std::mt19937_64& rng);

// Relative mismatch between ∫Tr(δℋ/δ𝒫 · dP) and the central difference of ℋ with step h.
double closure_gateaux_error(const HybridHamiltonian& H, const ClosureState& s, const MatrixField& dP, double h = 1e-5);
// Same for the spin form, with a perturbation (dD, ds).
double spin_gateaux_error(const SpinHamiltonian& H, const SpinState& s, const ScalarField& dD, const Vec3Field& ds,
                          double h = 1e-5);
// max |spin_rhs − Pauli-mapped closure_rhs| relative to the larger RHS magnitude.
double dual_path_error(const SpinHamiltonian& H, const ClosureState& P);

struct CheckResult {
    std::string name;
    double value = 0;
    double tolerance = 0;
    bool pass() const { return value < tolerance; }
};

// Hermiticity and trace of the closure RHS, bracket antisymmetry, Gâteaux derivatives of both
// Hamiltonian forms, the spin/matrix dual path, equivariance and KvH unitarity, on random states.
std::vector<CheckResult> invariant_suite(const SpinHamiltonian& H, const Grid& g, std::uint64_t seed);

} // namespace kvh
