#pragma once

#include "kvh/phasespace.hpp"

namespace kvh {

struct KoopmanWavefunction {
    ComplexField psi;
    double hbar = 1.0;
};

struct MadelungData {
    ScalarField S, R, D;
    CovectorField sigma;
    std::vector<bool> defined; // false where |Ψ| <= floor; S is NaN there
};

// 𝒜·X_H for 𝒜 = (p, 0), i.e. p ∂_p H
ScalarField lagrangian_term(const ScalarJet& H);
// div(𝕁𝒜 f) = ∂_p(-p f), evaluated with the product rule because p is not periodic
ScalarField ja_divergence(const ScalarField& f);

ComplexField prequantum_apply(const ScalarJet& H, const KoopmanWavefunction& psi);
ComplexField prequantum_apply(const ScalarField& H, const KoopmanWavefunction& psi); // periodic H
ComplexField kvh_rhs(const ScalarJet& H, const KoopmanWavefunction& psi);
ComplexField kvh_rhs(const ScalarField& H, const KoopmanWavefunction& psi);

ScalarField momentum_map_J(const KoopmanWavefunction& psi);
MadelungData madelung_split(const KoopmanWavefunction& psi, double floor = 1e-12);

// {H, ρ}; the Liouville equation reads ∂_t ρ = {H, ρ}
ScalarField liouville_rhs(const ScalarJet& H, const ScalarField& rho);
ScalarField liouville_rhs(const ScalarField& H, const ScalarField& rho);

double kvh_energy(const ScalarJet& H, const KoopmanWavefunction& psi); // ∫ Re(Ψ̄ 𝓛̂_H Ψ)

} // namespace kvh
