#pragma once

#include "kvh/closure.hpp"

#include <array>

namespace kvh {

using Vec3Field = std::array<ScalarField, 3>;

// Two-level closure state in Bloch variables: 𝒫 = D/2 + ħ⁻¹ s̃·σ.
struct SpinState {
    ScalarField D;
    Vec3Field s;
    double hbar = 1.0;
    double d_floor = 1e-10;
    double eps = 0.0; // frozen, as in ClosureState
    Dealias dealias = Dealias::TwoThirds;

    SpinState(ScalarField d, Vec3Field s_, double hbar_, double d_floor_ = 1e-10);
    // s̃ = (ħ/2) D n̂, with n normalized pointwise
    static SpinState pure(const ScalarField& D, const Vec3Field& n, double hbar, double d_floor = 1e-10);
    const Grid& grid() const { return D.grid(); }
    SpinState with(ScalarField d, Vec3Field s_) const;
};

SpinState spin_from_density(const ClosureState& P);
ClosureState density_from_spin(const SpinState& S);

struct SpinDerivatives {
    ScalarField dh_dD;
    Vec3Field dh_ds;
};

struct SpinRhs {
    ScalarField dD;
    Vec3Field ds;
};

// h = ∫ D H0 + s̃·𝐇 − r(D) Σ_j X^j·(s̃ × ∂_j s̃), X = X_𝐇 = (𝐇_p, −𝐇_q)
double spin_hamiltonian(const SpinHamiltonian& Sh, const SpinState& S);
SpinDerivatives spin_var_derivatives(const SpinHamiltonian& Sh, const SpinState& S);
SpinRhs spin_rhs(const SpinHamiltonian& Sh, const SpinState& S);

// C = ∫ D Φ(|s̃|/D); Power k in 0..4, or the von Neumann entropy of ρ = 𝒫/D
double spin_casimir(const SpinState& S, PhiSpec phi);
// max of | |s̃|/D − ħ/2 | over D > threshold·max D
double spin_purity_defect(const SpinState& S, double threshold = 1e-6);

// f = ∫ aD + 𝐛·s̃, or the product of two such densities integrated and divided by ∫D
struct SpinFunctionalSpec {
    enum class Kind { Linear, Quadratic } kind = Kind::Linear;
    Polynomial a;
    std::array<Polynomial, 3> b;
    Polynomial a2;
    std::array<Polynomial, 3> b2;
    static SpinFunctionalSpec linear(Polynomial a, std::array<Polynomial, 3> b) {
        return {Kind::Linear, std::move(a), std::move(b), {}, {}};
    }
    static SpinFunctionalSpec quadratic(Polynomial a, std::array<Polynomial, 3> b, Polynomial a2,
                                        std::array<Polynomial, 3> b2) {
        return {Kind::Quadratic, std::move(a), std::move(b), std::move(a2), std::move(b2)};
    }
    // the same functional written on 𝒫 (Â = a Id + (ħ/2) 𝐛·σ)
    FunctionalSpec to_matrix(double hbar) const;
};
double spin_functional_value(const SpinFunctionalSpec& f, const SpinState& S);
double spin_bracket_eval(const SpinFunctionalSpec& f, const SpinFunctionalSpec& g, const SpinState& S);
double spin_bracket_eval(const SpinFunctionalSpec& f, const SpinHamiltonian& Sh, const SpinState& S);

} // namespace kvh
