#pragma once

#include "kvh/hamiltonian.hpp"
#include "kvh/kvh.hpp"

namespace kvh {

struct HybridWavefunction {
    AmplitudeField ups;
    double hbar = 1.0;
};

struct FactorizationData {
    ScalarField chi;     // ‖Υ‖, real gauge
    AmplitudeField psi;  // Υ/‖Υ‖ on the mask, zero elsewhere
    std::vector<bool> mask;
};

// 𝓛̂_Ĥ Υ = iħ(Ĥ_q Υ_p − Ĥ_p Υ_q) + (Ĥ − p Ĥ_p) Υ, matrices acting from the left
AmplitudeField hybrid_liouvillian_apply(const HybridHamiltonian& H, const HybridWavefunction& ups);
AmplitudeField wave_rhs(const HybridHamiltonian& H, const HybridWavefunction& ups);
double wave_energy(const HybridHamiltonian& H, const HybridWavefunction& ups);
double wave_norm(const HybridWavefunction& ups);

MatrixField hybrid_density_vanhove(const HybridWavefunction& ups);
CMatrix quantum_density(const MatrixField& dhat);
ScalarField classical_density(const MatrixField& dhat);
CMatrix integrate(const MatrixField& f);

FactorizationData exact_factorize(const HybridWavefunction& ups, double floor = 1e-12);

// 𝒜_B = ħ Im(ψ† dψ); ψ must be pointwise normalized (zero entries are skipped as unmasked)
CovectorField berry_connection(const AmplitudeField& psi, double hbar);
// ℬ = d𝒜_B = 2ħ Im(ψ_q† ψ_p)
ScalarField berry_curvature(const AmplitudeField& psi, double hbar);
// ℬ = −iħ Tr(ρ[ρ_q, ρ_p]) for a pure, periodic density field ρ
ScalarField berry_curvature(const MatrixField& rho, double hbar);

} // namespace kvh
