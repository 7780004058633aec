#pragma once

// Closure-state generators shared by the closure, spin and dynamics tests.

#include "support.hpp"

#include "kvh/closure.hpp"

namespace kvh::testing {

// 96² on ±8 keeps σ ≈ 0.9 Gaussians resolved under the 2/3 truncation
inline Grid box() { return Grid(96, 8.0); }

// ∫(D − r(D)D²) ≤ ε·|box|: the most the regularization can move a trace-type Casimir
inline double reg_bound(const ClosureState& s) { return s.eps * s.grid().length(Axis::Q) * s.grid().length(Axis::P); }

// 𝒫 = Σ_m Υ_m Υ_m†, normalized; one term gives a pure state.
inline ClosureState random_state(const Grid& g, std::mt19937_64& rng, int terms = 1, double hbar = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    MatrixField P(g, 2);
    for (int m = 0; m < terms; ++m) {
        const double q0 = 0.6 * u(rng), p0 = 0.6 * u(rng);
        const ComplexField a = testing::enveloped(g, rng, q0, p0, 0.9), b = testing::enveloped(g, rng, q0, p0, 0.9);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const cplx v[2] = {a[k], b[k]};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) P(i, j, k) += v[i] * std::conj(v[j]);
        }
    }
    P *= 1.0 / integrate(P.trace());
    return ClosureState(std::move(P), hbar);
}

inline MatrixField random_direction(const Grid& g, std::mt19937_64& rng) {
    const ComplexField a = testing::enveloped(g, rng, 0.3, -0.2, 0.8), b = testing::enveloped(g, rng, -0.1, 0.4, 0.8);
    MatrixField d(g, 2);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const cplx v[2] = {a[k], b[k]}, w[2] = {b[k], cplx(0.5) * a[k]};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) d(i, j, k) = v[i] * std::conj(w[j]) + w[i] * std::conj(v[j]);
    }
    return d;
}

// D Gaussian, ψ = (cos θ/2, e^{iα} sin θ/2) with analytic θ, α; derivatives of ψ are analytic.
struct AnalyticPure {
    ScalarField D;
    AmplitudeField psi, psi_q, psi_p;
    explicit AnalyticPure(const Grid& g) : D(testing::gaussian(g, 0.5, -0.3, 0.9, 0.9)), psi(g, 2), psi_q(g, 2), psi_p(g, 2) {
        for (int i = 0; i < g.nq(); ++i)
            for (int j = 0; j < g.np(); ++j) {
                const double q = g.q(i), p = g.p(j);
                const double th = 1.0 + 0.4 * std::sin(0.5 * q) + 0.3 * std::cos(0.4 * p);
                const double thq = 0.2 * std::cos(0.5 * q), thp = -0.12 * std::sin(0.4 * p);
                const double al = 0.6 * q - 0.4 * p + 0.1 * q * p, alq = 0.6 + 0.1 * p, alp = -0.4 + 0.1 * q;
                const double c = std::cos(th / 2), s = std::sin(th / 2);
                const cplx e = std::polar(1.0, al), I(0, 1);
                const std::size_t k = g.index(i, j);
                psi.comp(0)[k] = c;
                psi.comp(1)[k] = e * s;
                psi_q.comp(0)[k] = -0.5 * s * thq;
                psi_q.comp(1)[k] = e * (I * alq * s + 0.5 * c * thq);
                psi_p.comp(0)[k] = -0.5 * s * thp;
                psi_p.comp(1)[k] = e * (I * alp * s + 0.5 * c * thp);
            }
    }
    ClosureState state(double hbar) const { return ClosureState::pure(D, psi, hbar); }
};

inline Eigen::Vector2cd vec(const AmplitudeField& f, std::size_t k) { return {f.comp(0)[k], f.comp(1)[k]}; }
inline Eigen::Matrix2cd mat(const MatrixField& f, std::size_t k) {
    Eigen::Matrix2cd m;
    m << f(0, 0, k), f(0, 1, k), f(1, 0, k), f(1, 1, k);
    return m;
}

inline HybridHamiltonian spin_boson(const Grid& g, double hbar = 1.0) {
    return presets::spin_boson(g, 0.5, 1.0, hbar).to_matrix();
}

} // namespace kvh::testing
