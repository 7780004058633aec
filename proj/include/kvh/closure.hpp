#pragma once

#include "kvh/hybrid.hpp"

#include <optional>

namespace kvh {

// 𝒫(z), n×n Hermitian per point, with D = Tr𝒫. Divisions by D go through
// r(D) = D/(D² + ε²); ε is frozen when the state is built so ℋ stays one fixed functional.
struct ClosureState {
    MatrixField P;
    double hbar = 1.0;
    double d_floor = 1e-10;
    double eps = 0.0;
    bool mixed = false; // set when 𝒫₀ was not built from the rank-1 constructor
    Dealias dealias = Dealias::TwoThirds;

    ClosureState(MatrixField p, double hbar_, double d_floor_ = 1e-10);
    // 𝒫 = D ψψ† with ψ(z) a unit vector wherever D > 0
    static ClosureState pure(const ScalarField& D, const AmplitudeField& psi, double hbar, double d_floor = 1e-10);
    // 𝒫 = D ρ₀
    static ClosureState product(const ScalarField& D, const CMatrix& rho0, double hbar, double d_floor = 1e-10);

    const Grid& grid() const { return P.grid(); }
    int n() const { return P.n(); }
    ScalarField D() const { return P.trace(); }
    // same functional (ε, ħ) but another 𝒫
    ClosureState with(MatrixField p) const;
};

struct ClosureDerivatives {
    MatrixField dH_dP; // δℋ/δ𝒫
    ScalarField dh_dD; // scalar part in the (D, 𝒫) split
};

double closure_hamiltonian(const HybridHamiltonian& H, const ClosureState& s);
ScalarField closure_energy_density(const HybridHamiltonian& H, const ClosureState& s);
ClosureDerivatives closure_var_derivative(const HybridHamiltonian& H, const ClosureState& s);
PhaseVectorField closure_velocity(const HybridHamiltonian& H, const ClosureState& s);
MatrixField closure_rhs(const HybridHamiltonian& H, const ClosureState& s);

struct SplitRhs {
    ScalarField dD;
    MatrixField dP;
};
// Same dynamics written as the advection equation for D plus the matrix equation, with δh/δD
// and δh/δ𝒫 kept apart. Used as a cross-check of closure_rhs.
SplitRhs closure_rhs_split(const HybridHamiltonian& H, const ClosureState& s);

MatrixField hybrid_density_closure(const ClosureState& s);
double equivariance_check(const ClosureState& s, const CMatrix& U);
// quarter turn (q,p) -> (p,−q) instead of a unitary
double equivariance_check_rotation(const ClosureState& s);

MatrixField ehrenfest_rhs(const HybridHamiltonian& H, const ClosureState& s);
double ehrenfest_energy(const HybridHamiltonian& H, const ClosureState& s);
PhaseVectorField ehrenfest_velocity(const HybridHamiltonian& H, const ClosureState& s);

struct MeanFieldState {
    ScalarField D;
    CMatrix rho;
    double hbar = 1.0;
};
struct MeanFieldRhs {
    ScalarField dD;
    CMatrix drho;
};
MeanFieldRhs meanfield_rhs(const HybridHamiltonian& H, const MeanFieldState& s);
double meanfield_energy(const HybridHamiltonian& H, const MeanFieldState& s);

struct PhiSpec {
    enum class Kind { Power, Entropy } kind = Kind::Power;
    int k = 2;
    static PhiSpec power(int k) { return {Kind::Power, k}; }
    static PhiSpec entropy() { return {Kind::Entropy, 0}; }
};
double casimir(const ClosureState& s, PhiSpec phi);

// Functionals with closed-form derivatives: f = ∫⟨𝒫,Â⟩ or f = ∫⟨𝒫,Â⟩⟨𝒫,B̂⟩ / ∫Tr𝒫.
struct FunctionalSpec {
    enum class Kind { Linear, Quadratic } kind = Kind::Linear;
    std::vector<MatrixTerm> A, B;
    static FunctionalSpec linear(std::vector<MatrixTerm> a) { return {Kind::Linear, std::move(a), {}}; }
    static FunctionalSpec quadratic(std::vector<MatrixTerm> a, std::vector<MatrixTerm> b) {
        return {Kind::Quadratic, std::move(a), std::move(b)};
    }
};
double functional_value(const FunctionalSpec& f, const ClosureState& s);
double bracket_eval(const FunctionalSpec& f, const FunctionalSpec& g, const ClosureState& s);
// {{f, ℋ}} with ℋ the closure Hamiltonian of H
double bracket_eval(const FunctionalSpec& f, const HybridHamiltonian& H, const ClosureState& s);

// ℬ = −iħ Tr(ρ[ρ_q, ρ_p]) with ρ = 𝒫/D, by the chain rule (no spectral derivative of 𝒫/D)
ScalarField berry_curvature(const ClosureState& s);
// max over points with D > threshold·max D of ‖ρ² − ρ‖
double purity_defect(const ClosureState& s, double threshold = 1e-6);

} // namespace kvh
