#pragma once

#include "kvh/phasespace.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>

namespace kvh {

using CMatrix = Eigen::MatrixXcd;

const std::array<Eigen::Matrix2cd, 3>& pauli();

// Ĥ(z) = Σ_t c_t(z) A_t with polynomial c_t and constant Hermitian A_t.
struct MatrixTerm {
    Polynomial coeff;
    CMatrix op;
};

// Ĥ as a Hermitian matrix field carried with its first and second derivatives.
class HybridHamiltonian {
public:
    static HybridHamiltonian from_terms(const Grid& g, int n, const std::vector<MatrixTerm>& terms);
    static HybridHamiltonian constant(const Grid& g, const CMatrix& a);
    static HybridHamiltonian scalar(const Grid& g, int n, const Polynomial& h0); // h0·Id
    // periodic samples, derivatives taken spectrally
    static HybridHamiltonian from_samples(const MatrixField& value);

    const Grid& grid() const { return value.grid(); }
    int n() const { return value.n(); }

    MatrixField value, q, p, qq, qp, pp;
    std::vector<MatrixTerm> terms; // empty for sampled Hamiltonians
    bool classical = false;        // every term is a multiple of the identity

private:
    explicit HybridHamiltonian(const MatrixField& like)
        : value(like), q(like), p(like), qq(like), qp(like), pp(like) {}
};

// Two-level specialization Ĥ = H0 + (ħ/2) 𝐇·σ.
struct SpinHamiltonian {
    SpinHamiltonian(const Grid& g, const Polynomial& h0, const std::array<Polynomial, 3>& hvec, double hbar);

    const Grid& grid() const { return H0.grid(); }
    HybridHamiltonian to_matrix() const;

    Polynomial h0_poly;
    std::array<Polynomial, 3> hvec_poly;
    double hbar;
    ScalarJet H0;
    std::array<ScalarJet, 3> H;
};

namespace presets {
Polynomial harmonic();
// H0 = (p²+q²)/2, 𝐇 = (λq, 0, ω_s)
SpinHamiltonian spin_boson(const Grid& g, double lambda, double omega_s, double hbar);
} // namespace presets

} // namespace kvh
